#include "optsample/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "optsample/polyspace.hpp"

namespace optsample {

double tropp_gamma() { return 1.0 / (1.5 * std::log(1.5) - 0.5); }

DomainClass DomainClass::parallelogram_union(double beta) {
  DomainClass c;
  c.kind = Kind::ParallelogramUnion;
  c.beta = beta;
  return c;
}

DomainClass DomainClass::smooth_c2(double beta) {
  DomainClass c;
  c.kind = Kind::SmoothC2;
  c.beta = beta;
  return c;
}

DomainClass DomainClass::r_alpha(std::vector<double> alphas, double beta, double constant) {
  DomainClass c;
  c.kind = Kind::RAlpha;
  c.alphas = std::move(alphas);
  c.beta = beta;
  c.constant = constant;
  return c;
}

DomainClass DomainClass::ball_exact() { return DomainClass{}; }

DomainClass DomainClass::custom_bound(std::function<double(int)> bn) {
  DomainClass c;
  c.kind = Kind::Custom;
  c.custom = std::move(bn);
  return c;
}

namespace {

void check_class(const DomainClass& cls) {
  if (!(cls.beta > 0.0 && cls.beta <= 1.0)) throw std::invalid_argument("beta must lie in (0, 1]");
  for (double a : cls.alphas) {
    if (!(a > 0.0 && a <= 2.0)) throw std::invalid_argument("alpha_i must lie in (0, 2]");
  }
}

std::int64_t binomial(int top, int k) {
  if (k < 0 || k > top) return 0;
  k = std::min(k, top - k);
  std::int64_t r = 1;
  for (int i = 1; i <= k; ++i) {
    const std::int64_t f = top - k + i;
    if (r > std::numeric_limits<std::int64_t>::max() / f) {
      throw std::overflow_error("binomial coefficient overflows 64-bit integers");
    }
    r = r * f / i;
  }
  return r;
}

}  // namespace

double bound_B(const DomainClass& cls, int d, int n) {
  if (n < 1 || d < 1) throw std::invalid_argument("bound_B needs n >= 1 and d >= 1");
  check_class(cls);
  const double nn = n;
  switch (cls.kind) {
    case DomainClass::Kind::ParallelogramUnion: return nn * nn / cls.beta;
    case DomainClass::Kind::SmoothC2: return 3.0 / cls.beta * std::pow(nn, (d + 1.0) / d);
    case DomainClass::Kind::RAlpha: {
      if (static_cast<int>(cls.alphas.size()) != d - 1) {
        throw std::invalid_argument("R_alpha needs d - 1 exponents");
      }
      double s = 2.0;
      for (double a : cls.alphas) s += 2.0 / a;
      return cls.constant * std::pow(nn, s / d);
    }
    case DomainClass::Kind::BallExact: {
      // Smallest total degree whose space contains the first n indices.
      int degree = 0;
      while (space_dimension(d, degree) < n) ++degree;
      return static_cast<double>(ball_boundary_k(d, degree));
    }
    case DomainClass::Kind::Custom:
      if (!cls.custom) throw std::invalid_argument("custom domain class without a bound");
      return cls.custom(n);
  }
  throw std::logic_error("unhandled domain class");
}

std::int64_t ball_boundary_k(int d, int degree) {
  if (d < 1 || degree < 0) throw std::invalid_argument("ball_boundary_k needs d >= 1, degree >= 0");
  const std::int64_t first = binomial(degree + d + 1, degree);
  const std::int64_t second = degree == 0 ? 0 : binomial(degree + d - 2, degree - 1);
  if (first > std::numeric_limits<std::int64_t>::max() - second) {
    throw std::overflow_error("ball_boundary_k overflows 64-bit integers");
  }
  return first + second;
}

PointwiseShape pointwise_bound_2d(BuiltinDomain domain, std::span<const double> x, int degree,
                                  double constant) {
  if (x.size() != 2) throw std::invalid_argument("pointwise bound is two-dimensional");
  const std::vector<double> dist = distance_to_boundary_pieces(domain, x);
  const double n = static_cast<double>(space_dimension(2, degree));
  PointwiseShape out;
  for (double dv : dist) {
    const double inv = dv > 0.0 ? 1.0 / std::sqrt(dv) : std::numeric_limits<double>::infinity();
    out.rho.push_back(std::min(static_cast<double>(degree), inv));
  }
  const auto pairs = boundary_piece_adjacency(domain);
  if (pairs.empty()) {
    out.shape = n * out.rho.front();
  } else {
    // Largest product over corners: the nearest corner dominates.
    double best = 0.0;
    for (auto [i, j] : pairs) {
      best = std::max(best, out.rho[static_cast<std::size_t>(i)] * out.rho[static_cast<std::size_t>(j)]);
    }
    out.shape = n * best;
  }
  out.lower = out.shape / constant;
  out.upper = out.shape * constant;
  return out;
}

std::pair<double, double> comparison_framing(double k_ref, double beta) {
  if (!(beta > 0.0 && beta <= 1.0)) throw std::invalid_argument("beta must lie in (0, 1]");
  return {beta * k_ref, k_ref / beta};
}

std::int64_t online_budget(int n, double c, double eps) {
  if (n < 1 || c < 1.0 || !(eps > 0.0 && eps < 1.0)) {
    throw std::invalid_argument("online_budget needs n >= 1, c >= 1, 0 < eps < 1");
  }
  return static_cast<std::int64_t>(std::ceil(c * tropp_gamma() * n * std::log(2.0 * n / eps)));
}

std::int64_t hierarchical_budget(int n, double delta, double eps) {
  if (n < 1 || !(delta > 0.0 && delta < 0.5) || !(eps > 0.0 && eps < 1.0)) {
    throw std::invalid_argument("hierarchical_budget needs n >= 1, 0 < delta < 1/2, 0 < eps < 1");
  }
  return static_cast<std::int64_t>(
      std::ceil(tropp_gamma() / (1.0 - 2.0 * delta) * n * std::log(2.0 * n / eps)));
}

double eta(std::int64_t m, int n, double c) { return 4.0 * c * n / static_cast<double>(m); }

}  // namespace optsample
