#include "optsample/christoffel.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <stdexcept>

#include "optsample/bounds.hpp"

namespace optsample {

ChristoffelEvaluator::ChristoffelEvaluator(OrthonormalBasis basis) : basis_(std::move(basis)) {}

double ChristoffelEvaluator::operator()(std::span<const double> x) const {
  return basis_.evaluate(x).squaredNorm();
}

Eigen::VectorXd ChristoffelEvaluator::operator()(const Points& pts) const {
  if (pts.rows() == 0) return Eigen::VectorXd(0);
  return basis_.evaluate(pts).rowwise().squaredNorm();
}

ChristoffelEvaluator ChristoffelEvaluator::prefix(int m) const {
  return ChristoffelEvaluator(basis_.prefix(m));
}

double evaluate_k(const ChristoffelEvaluator& ev, std::span<const double> x) { return ev(x); }

std::optional<double> builtin_sup_bound(BuiltinDomain domain, int n) {
  switch (domain) {
    case BuiltinDomain::Square: return bound_B(DomainClass::parallelogram_union(1.0), 2, n);
    case BuiltinDomain::CornerPolygon: return bound_B(DomainClass::parallelogram_union(0.5), 2, n);
    case BuiltinDomain::Disc: return bound_B(DomainClass::smooth_c2(1.0), 2, n);
    case BuiltinDomain::CuspDomain: return std::nullopt;
  }
  return std::nullopt;
}

SupEstimate estimate_sup(const ChristoffelEvaluator& ev, const Domain& domain, int probe_count,
                         Rng& rng, std::optional<double> bound) {
  if (probe_count < 1000) throw std::invalid_argument("estimate_sup needs at least 1000 probes");
  SupEstimate out;
  const Points probes = sample_uniform(domain, probe_count, rng);
  out.sampled_max = ev(probes).maxCoeff();
  if (auto b = domain.builtin()) {
    out.sampled_max = std::max(out.sampled_max, ev(extreme_points(*b)).maxCoeff());
  }
  out.value = kSupSafetyFactor * out.sampled_max;
  out.bound = bound;
  if (bound && *bound < out.value) {
    out.value = *bound;
    out.bound_used = true;
  }
  return out;
}

double integral_check(const ChristoffelEvaluator& ev, const Domain& domain) {
  return exact_gram(ev.basis(), domain).trace();
}

AlphaEstimate estimate_alpha(const ChristoffelEvaluator& ev, const Domain& domain,
                             std::int64_t samples, Rng& rng) {
  if (samples < 2) throw std::invalid_argument("alpha estimate needs at least two samples");
  const Eigen::VectorXd k = ev(sample_uniform(domain, samples, rng));
  const double mean = k.mean();
  const double var = (k.array() - mean).square().sum() / static_cast<double>(samples - 1);
  const double se_mean = std::sqrt(var / static_cast<double>(samples));
  AlphaEstimate out;
  out.alpha = static_cast<double>(ev.n()) / mean;
  // Delta method for n / mean.
  out.standard_error = out.alpha * se_mean / mean;
  out.samples = samples;
  return out;
}

// --- EnvelopeSampler -------------------------------------------------------

namespace {

struct PendingCell {
  std::vector<double> lower;
  std::vector<double> width;
  int depth = 0;
  double inherited = -1.0;  // max probe density of the nearest probed ancestor
  int empty_streak = 0;     // consecutive levels without interior probes
};

// Index vector of the k-th point of a (q+1)^d lattice.
void lattice_point(std::int64_t k, int q, const PendingCell& c, std::vector<double>& x) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    const int li = static_cast<int>(k % (q + 1));
    k /= (q + 1);
    x[i] = c.lower[i] + c.width[i] * static_cast<double>(li) / q;
  }
}

}  // namespace

EnvelopeSampler::EnvelopeSampler(const Domain& domain, Density density, int cells_per_axis,
                                 int probes_per_cell, double safety, int max_depth)
    : domain_(&domain), density_(std::move(density)) {
  const int d = domain.dimension();
  const auto du = static_cast<std::size_t>(d);
  if (cells_per_axis <= 0) {
    cells_per_axis = std::max(2, static_cast<int>(std::floor(std::pow(1024.0, 1.0 / d) + 1e-9)));
  }
  if (max_depth < 0) max_depth = std::max(0, 12 / d);
  if (probes_per_cell < 1) throw std::invalid_argument("probes_per_cell must be positive");
  constexpr std::size_t kMaxCells = 1 << 20;
  const int q = probes_per_cell;
  std::int64_t lattice = 1;
  for (int i = 0; i < d; ++i) lattice *= q + 1;
  const Box& box = domain.bbox();

  std::vector<PendingCell> frontier;
  std::int64_t base = 1;
  for (int i = 0; i < d; ++i) base *= cells_per_axis;
  for (std::int64_t id = 0; id < base; ++id) {
    PendingCell c;
    std::int64_t rest = id;
    for (std::size_t i = 0; i < du; ++i) {
      const double w = (box.upper[i] - box.lower[i]) / cells_per_axis;
      c.lower.push_back(box.lower[i] + static_cast<double>(rest % cells_per_axis) * w);
      c.width.push_back(w);
      rest /= cells_per_axis;
    }
    frontier.push_back(std::move(c));
  }

  std::vector<Cell> leaves;
  std::vector<double> leaf_raw;
  double mass_tol = -1.0;  // cells lighter than this are not refined further
  std::vector<double> x(du);
  while (!frontier.empty()) {
    // Probe the whole frontier with one density call.
    std::vector<double> coords;
    std::vector<std::int64_t> owner;
    std::vector<std::int64_t> inside_count(frontier.size(), 0);
    for (std::size_t c = 0; c < frontier.size(); ++c) {
      for (std::int64_t k = 0; k < lattice; ++k) {
        lattice_point(k, q, frontier[c], x);
        if (!domain.contains(x)) continue;
        coords.insert(coords.end(), x.begin(), x.end());
        owner.push_back(static_cast<std::int64_t>(c));
        ++inside_count[c];
      }
    }
    const Points probes = Eigen::Map<const Points>(coords.data(), static_cast<Eigen::Index>(owner.size()), d);
    const Eigen::VectorXd values = owner.empty() ? Eigen::VectorXd(0) : density_(probes);
    if (values.size() > 0 && values.minCoeff() < 0.0) {
      throw std::runtime_error("negative density encountered while building the envelope");
    }
    std::vector<double> hi(frontier.size(), -1.0);
    std::vector<double> lo(frontier.size(), std::numeric_limits<double>::infinity());
    for (std::size_t p = 0; p < owner.size(); ++p) {
      const auto c = static_cast<std::size_t>(owner[p]);
      hi[c] = std::max(hi[c], values[static_cast<Eigen::Index>(p)]);
      lo[c] = std::min(lo[c], values[static_cast<Eigen::Index>(p)]);
    }

    // Base cells without interior probes next to ones with probes may hold
    // slivers of the domain; treat them as straddling the boundary.
    std::vector<bool> near_domain(frontier.size(), false);
    if (frontier.front().depth == 0) {
      std::vector<int> idx(du);
      for (std::size_t c = 0; c < frontier.size(); ++c) {
        if (inside_count[c] > 0) continue;
        std::int64_t rest = static_cast<std::int64_t>(c);
        for (std::size_t i = 0; i < du; ++i) {
          idx[i] = static_cast<int>(rest % cells_per_axis);
          rest /= cells_per_axis;
        }
        std::int64_t neighbors = 1;
        for (int i = 0; i < d; ++i) neighbors *= 3;
        for (std::int64_t nb = 0; nb < neighbors && !near_domain[c]; ++nb) {
          std::int64_t r = nb;
          std::int64_t flat = 0;
          std::int64_t stride = 1;
          bool valid = true;
          for (std::size_t i = 0; i < du; ++i) {
            const int ci = idx[i] + static_cast<int>(r % 3) - 1;
            r /= 3;
            if (ci < 0 || ci >= cells_per_axis) {
              valid = false;
              break;
            }
            flat += ci * stride;
            stride *= cells_per_axis;
          }
          if (valid && inside_count[static_cast<std::size_t>(flat)] > 0) {
            near_domain[c] = true;
            frontier[c].inherited = std::max(frontier[c].inherited, hi[static_cast<std::size_t>(flat)]);
          }
        }
      }
    }

    if (mass_tol < 0.0) {
      // Reference mass: mean probe density times the probed part of the bbox.
      const double inside_fraction = static_cast<double>(owner.size()) / static_cast<double>(lattice * base);
      const double mean = owner.empty() ? 0.0 : values.mean();
      mass_tol = 2e-5 * mean * inside_fraction * box.volume();
    }
    std::vector<PendingCell> next;
    for (std::size_t c = 0; c < frontier.size(); ++c) {
      PendingCell& cell = frontier[c];
      const bool empty = inside_count[c] == 0;
      if (empty && cell.inherited < 0.0 && !near_domain[c]) continue;  // outside the domain
      // Two successive levels without interior probes: treat as outside.
      if (empty && cell.empty_streak >= 1 && cell.depth > 0) continue;
      const double top = empty ? cell.inherited : hi[c];
      const bool mixed = !empty && inside_count[c] < lattice;
      const bool varies = !empty && lo[c] * 2.0 < hi[c];
      double volume = 1.0;
      for (double w : cell.width) volume *= w;
      const bool split = cell.depth < max_depth && (mixed || varies || empty) && top * volume > mass_tol &&
                         leaves.size() + next.size() + (std::size_t{1} << du) < kMaxCells;
      if (split) {
        for (std::int64_t child = 0; child < (std::int64_t{1} << du); ++child) {
          PendingCell ch;
          ch.depth = cell.depth + 1;
          ch.inherited = top;
          ch.empty_streak = empty ? cell.empty_streak + 1 : 0;
          for (std::size_t i = 0; i < du; ++i) {
            const double w = cell.width[i] / 2.0;
            ch.width.push_back(w);
            ch.lower.push_back(cell.lower[i] + (((child >> i) & 1) != 0 ? w : 0.0));
          }
          next.push_back(std::move(ch));
        }
        continue;
      }
      Cell leaf;
      leaf.lower = cell.lower;
      leaf.width = cell.width;
      leaf.volume = 1.0;
      for (double w : cell.width) leaf.volume *= w;
      leaves.push_back(std::move(leaf));
      leaf_raw.push_back(top);
    }
    frontier = std::move(next);
  }

  if (leaves.empty()) throw std::runtime_error("density vanishes on every probe; cannot build an envelope");
  // Floor for cells whose probes all have (near) zero density.
  double weighted = 0.0;
  double covered = 0.0;
  for (std::size_t c = 0; c < leaves.size(); ++c) {
    weighted += leaf_raw[c] * leaves[c].volume;
    covered += leaves[c].volume;
  }
  const double floor_value = 1e-3 * weighted / covered;
  if (!(floor_value > 0.0)) throw std::runtime_error("density vanishes on every probe; cannot build an envelope");
  for (std::size_t c = 0; c < leaves.size(); ++c) {
    leaves[c].envelope = safety * std::max(leaf_raw[c], floor_value);
  }
  cells_ = std::move(leaves);
}

double EnvelopeSampler::max_envelope() const {
  double m = 0.0;
  for (const Cell& c : cells_) m = std::max(m, c.envelope);
  return m;
}

Points EnvelopeSampler::sample(std::int64_t count, Rng& rng, Eigen::VectorXd* density_values) {
  const int d = domain_->dimension();
  const auto du = static_cast<std::size_t>(d);
  Points out(count, d);
  Eigen::VectorXd dens(count);
  std::int64_t filled = 0;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> mass(cells_.size());

  while (filled < count) {
    for (std::size_t c = 0; c < cells_.size(); ++c) mass[c] = cells_[c].envelope * cells_[c].volume;
    std::discrete_distribution<std::size_t> pick(mass.begin(), mass.end());
    bool restart = false;
    filled = 0;
    std::int64_t window_proposals = 0;
    std::int64_t window_hits = 0;
    while (filled < count && !restart) {
      // Proposals in a batch so the density is evaluated with one product.
      const std::int64_t batch = std::clamp<std::int64_t>(2 * (count - filled), 256, 16384);
      std::vector<double> coords;
      std::vector<std::size_t> owner;
      coords.reserve(static_cast<std::size_t>(batch) * du);
      std::vector<double> x(du);
      for (std::int64_t b = 0; b < batch; ++b) {
        const std::size_t c = pick(rng);
        for (std::size_t i = 0; i < du; ++i) x[i] = cells_[c].lower[i] + unit(rng) * cells_[c].width[i];
        ++stats_.proposals;
        ++window_proposals;
        if (!domain_->contains(x)) continue;
        coords.insert(coords.end(), x.begin(), x.end());
        owner.push_back(c);
      }
      const auto inside = static_cast<Eigen::Index>(owner.size());
      if (inside > 0) {
        const Points pts = Eigen::Map<const Points>(coords.data(), inside, d);
        const Eigen::VectorXd f = density_(pts);
        for (Eigen::Index i = 0; i < inside && filled < count; ++i) {
          Cell& cell = cells_[owner[static_cast<std::size_t>(i)]];
          if (f[i] < 0.0) throw std::runtime_error("negative density encountered during rejection sampling");
          if (f[i] > cell.envelope) {
            cell.envelope = 2.0 * std::max(cell.envelope, f[i]);
            ++stats_.envelope_doublings;
            ++stats_.restarts;
            restart = true;
            break;
          }
          if (unit(rng) * cell.envelope < f[i]) {
            out.row(filled) = pts.row(i);
            dens[filled] = f[i];
            ++filled;
            ++window_hits;
          }
        }
      }
      if (window_proposals > (std::int64_t{1} << 24)) {
        if (static_cast<double>(window_hits) < 1e-6 * static_cast<double>(window_proposals)) {
          throw std::runtime_error("degenerate domain/bbox: acceptance rate below 1e-6");
        }
        window_proposals = 0;
        window_hits = 0;
      }
    }
    if (restart) {
      std::clog << "optsample: envelope violated, cell envelope doubled; restarting draw\n";
      filled = 0;
    }
  }
  stats_.accepted += count;
  if (density_values != nullptr) *density_values = std::move(dens);
  return out;
}

// --- sampling measures -----------------------------------------------------

std::string to_string(MeasureKind k) {
  switch (k) {
    case MeasureKind::Mu: return "mu";
    case MeasureKind::OptimalSigma: return "sigma_star";
    case MeasureKind::PerturbedSigma: return "sigma_tilde";
  }
  return "unknown";
}

namespace {

double initial_envelope(const ChristoffelEvaluator& k) {
  const double sup = k.sup_estimate();
  return std::isfinite(sup) ? sup / k.n() : std::numeric_limits<double>::infinity();
}

}  // namespace

SamplingMeasure SamplingMeasure::mu() { return SamplingMeasure{MeasureKind::Mu, nullptr, 1.0}; }

SamplingMeasure SamplingMeasure::optimal(std::shared_ptr<const ChristoffelEvaluator> k) {
  const double env = initial_envelope(*k);
  return SamplingMeasure{MeasureKind::OptimalSigma, std::move(k), env};
}

SamplingMeasure SamplingMeasure::perturbed(std::shared_ptr<const ChristoffelEvaluator> k) {
  const double env = initial_envelope(*k);
  return SamplingMeasure{MeasureKind::PerturbedSigma, std::move(k), env};
}

MeasureSampler::MeasureSampler(SamplingMeasure m, const Domain& domain)
    : measure_(std::move(m)), domain_(&domain) {
  if (measure_.kind == MeasureKind::Mu) return;
  if (!measure_.k) throw std::invalid_argument("sigma measure needs a Christoffel evaluator");
  auto k = measure_.k;
  const double n = k->n();
  sampler_.emplace(domain, [k, n](const Points& pts) -> Eigen::VectorXd { return (*k)(pts) / n; });
}

const RejectionStats& MeasureSampler::stats() const {
  return sampler_ ? sampler_->stats() : mu_stats_;
}

WeightedSample MeasureSampler::sample(std::int64_t count, Rng& rng) {
  WeightedSample out;
  out.measure = to_string(measure_.kind);
  if (measure_.kind == MeasureKind::Mu) {
    out.points = sample_uniform(*domain_, count, rng);
    out.weights = Eigen::VectorXd::Ones(count);
    mu_stats_.accepted += count;
    return out;
  }
  Eigen::VectorXd ratio;  // k(x)/n at the accepted points
  out.points = sampler_->sample(count, rng, &ratio);
  out.weights = ratio.cwiseInverse();
  measure_.envelope = sampler_->max_envelope();
  return out;
}

WeightedSample sample_measure(const SamplingMeasure& m, const Domain& domain, std::int64_t count,
                              Rng& rng, RejectionStats* stats) {
  MeasureSampler sampler(m, domain);
  WeightedSample out = sampler.sample(count, rng);
  if (stats != nullptr) *stats = sampler.stats();
  return out;
}

}  // namespace optsample
