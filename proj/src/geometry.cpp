#include "optsample/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace optsample {

double Box::volume() const {
  double v = 1.0;
  for (std::size_t i = 0; i < lower.size(); ++i) v *= upper[i] - lower[i];
  return v;
}

bool Box::contains(std::span<const double> x) const {
  for (std::size_t i = 0; i < lower.size(); ++i) {
    if (x[i] < lower[i] || x[i] > upper[i]) return false;
  }
  return true;
}

std::string to_string(BuiltinDomain b) {
  switch (b) {
    case BuiltinDomain::Disc: return "disc";
    case BuiltinDomain::CornerPolygon: return "polygon";
    case BuiltinDomain::CuspDomain: return "cusp";
    case BuiltinDomain::Square: return "square";
  }
  return "unknown";
}

BuiltinDomain builtin_from_string(const std::string& name) {
  if (name == "disc") return BuiltinDomain::Disc;
  if (name == "polygon") return BuiltinDomain::CornerPolygon;
  if (name == "cusp") return BuiltinDomain::CuspDomain;
  if (name == "square") return BuiltinDomain::Square;
  throw std::invalid_argument("unknown built-in domain '" + name + "'");
}

double disc_radius() { return std::sqrt(2.0 / std::numbers::pi); }

Domain::Domain(std::string name, Box bbox, Indicator indicator, double area,
               std::optional<MomentOracle> moments, std::optional<BuiltinDomain> builtin,
               std::int64_t area_samples)
    : name_(std::move(name)),
      bbox_(std::move(bbox)),
      indicator_(std::move(indicator)),
      area_(area),
      moments_(std::move(moments)),
      builtin_(builtin),
      area_samples_(area_samples) {
  if (bbox_.lower.size() != bbox_.upper.size() || bbox_.lower.empty()) {
    throw std::invalid_argument("bbox bounds must be non-empty and of equal dimension");
  }
  if (!(bbox_.volume() > 0.0)) throw std::invalid_argument("bbox has zero volume");
  if (!(area_ > 0.0)) throw std::invalid_argument("domain area must be positive");
}

namespace {

// x2 between the lower and upper boundary graphs, |x1| <= 1.
bool in_strip(std::span<const double> x, double lower, double upper) {
  return x[0] >= -1.0 && x[0] <= 1.0 && x[1] >= lower && x[1] <= upper;
}

Indicator builtin_indicator(BuiltinDomain b) {
  switch (b) {
    case BuiltinDomain::Disc:
      return [](std::span<const double> x) {
        return x[0] * x[0] + x[1] * x[1] <= 2.0 / std::numbers::pi;
      };
    case BuiltinDomain::CornerPolygon:
      return [](std::span<const double> x) {
        const double a = std::abs(x[0]);
        return in_strip(x, a - 1.0, a);
      };
    case BuiltinDomain::CuspDomain:
      return [](std::span<const double> x) {
        const double s = std::sqrt(std::abs(x[0]));
        return in_strip(x, s - 1.0, s);
      };
    case BuiltinDomain::Square:
      return [](std::span<const double> x) {
        return x[0] >= -1.0 && x[0] <= 1.0 && x[1] >= -1.0 && x[1] <= 1.0;
      };
  }
  throw std::logic_error("unhandled built-in domain");
}

}  // namespace

Domain Domain::make_builtin(BuiltinDomain b) {
  Box bbox;
  double area = 2.0;
  if (b == BuiltinDomain::Disc) {
    const double r = disc_radius();
    bbox = Box{{-r, -r}, {r, r}};
  } else {
    bbox = Box{{-1.0, -1.0}, {1.0, 1.0}};
  }
  if (b == BuiltinDomain::Square) area = 4.0;
  MomentOracle oracle = [b](std::span<const int> nu) { return exact_moment(b, nu); };
  return Domain(to_string(b), std::move(bbox), builtin_indicator(b), area, std::move(oracle), b, 0);
}

Domain Domain::make_custom(std::string name, Box bbox, Indicator indicator,
                           std::int64_t area_samples, std::uint64_t seed) {
  if (area_samples <= 0) throw std::invalid_argument("custom domain needs area_samples > 0");
  Rng rng(seed);
  const int d = bbox.dimension();
  std::vector<double> x(static_cast<std::size_t>(d));
  std::int64_t hits = 0;
  for (std::int64_t t = 0; t < area_samples; ++t) {
    for (int i = 0; i < d; ++i) {
      std::uniform_real_distribution<double> u(bbox.lower[i], bbox.upper[i]);
      x[i] = u(rng);
    }
    if (indicator(x)) ++hits;
  }
  if (hits == 0) throw std::runtime_error("degenerate domain/bbox: no Monte-Carlo hit");
  const double area = bbox.volume() * static_cast<double>(hits) / static_cast<double>(area_samples);
  return Domain(std::move(name), std::move(bbox), std::move(indicator), area, std::nullopt,
                std::nullopt, area_samples);
}

DoubleDouble Domain::moment(std::span<const int> nu) const {
  if (!moments_) throw std::runtime_error("no moment oracle for domain '" + name_ + "'");
  return (*moments_)(nu);
}

Rng make_rng(std::uint64_t seed, std::uint64_t trial, std::uint64_t stream) {
  auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v); };
  auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
  std::seed_seq seq{lo(seed), hi(seed), lo(trial), hi(trial), lo(stream), hi(stream)};
  return Rng(seq);
}

Points sample_uniform(const Domain& domain, std::int64_t count, Rng& rng) {
  if (count < 0) throw std::invalid_argument("sample count must be non-negative");
  const int d = domain.dimension();
  const Box& box = domain.bbox();
  Points out(count, d);
  std::vector<std::uniform_real_distribution<double>> coord;
  coord.reserve(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) coord.emplace_back(box.lower[i], box.upper[i]);

  constexpr std::int64_t kWindow = std::int64_t{1} << 23;
  constexpr double kMinRate = 1e-6;
  std::int64_t window_proposals = 0;
  std::int64_t window_hits = 0;
  std::vector<double> x(static_cast<std::size_t>(d));
  std::int64_t filled = 0;
  while (filled < count) {
    for (int i = 0; i < d; ++i) x[i] = coord[i](rng);
    ++window_proposals;
    if (domain.contains(x)) {
      for (int i = 0; i < d; ++i) out(filled, i) = x[i];
      ++filled;
      ++window_hits;
    }
    if (window_proposals == kWindow) {
      if (static_cast<double>(window_hits) < kMinRate * static_cast<double>(kWindow)) {
        throw std::runtime_error("degenerate domain/bbox: acceptance rate below 1e-6");
      }
      window_proposals = 0;
      window_hits = 0;
    }
  }
  return out;
}

// --- closed-form moments ---------------------------------------------------

namespace {

// B(p, q) = (p-1)!(q-1)!/(p+q-1)! for positive integers.
DoubleDouble beta_int(int p, int q) {
  DoubleDouble b = DoubleDouble(1.0) / DoubleDouble(static_cast<double>(p));
  for (int k = 1; k < q; ++k) {
    b = b * DoubleDouble(static_cast<double>(k)) / DoubleDouble(static_cast<double>(p + k));
  }
  return b;
}

// (k-1)!! / (2^(k/2) (k/2)!) style product for the disc, built incrementally.
DoubleDouble disc_moment(int a, int b) {
  if (a % 2 != 0 || b % 2 != 0) return DoubleDouble(0.0);
  // (1/(pi r^2)) * r^(a+b+2)/(a+b+2) * 2 B((a+1)/2, (b+1)/2), with
  // B((a+1)/2,(b+1)/2) = pi (a-1)!!(b-1)!! / (2^((a+b)/2) ((a+b)/2)!).
  const int h = (a + b) / 2;
  DoubleDouble c = DoubleDouble(2.0) / DoubleDouble(static_cast<double>(a + b + 2));
  for (int k = a - 1; k > 0; k -= 2) c *= DoubleDouble(static_cast<double>(k));
  for (int k = b - 1; k > 0; k -= 2) c *= DoubleDouble(static_cast<double>(k));
  for (int k = 1; k <= h; ++k) c /= DoubleDouble(2.0 * static_cast<double>(k));
  const DoubleDouble r2 = DoubleDouble(2.0) / kDdPi;
  return c * pow(r2, h);
}

// Strip {|x1| <= 1, g(x1) - 1 <= x2 <= g(x1)}: the x2-integral gives
// (g^(b+1) - (g-1)^(b+1)) / (b+1), the x1-integral reduces to Beta functions.
DoubleDouble polygon_moment(int a, int b) {
  if (a % 2 != 0) return DoubleDouble(0.0);
  const double sign = ((b + 1) % 2 == 0) ? 1.0 : -1.0;  // (-1)^(b+1)
  const DoubleDouble first = DoubleDouble(1.0) / DoubleDouble(static_cast<double>(a + b + 2));
  const DoubleDouble second = beta_int(a + 1, b + 2) * DoubleDouble(sign);
  return (first - second) / DoubleDouble(static_cast<double>(b + 1));
}

// Same strip with g = sqrt|x1|; substitute x1 = t^2.
DoubleDouble cusp_moment(int a, int b) {
  if (a % 2 != 0) return DoubleDouble(0.0);
  const double sign = ((b + 1) % 2 == 0) ? 1.0 : -1.0;
  const DoubleDouble first = DoubleDouble(1.0) / DoubleDouble(static_cast<double>(2 * a + b + 3));
  const DoubleDouble second = beta_int(2 * a + 2, b + 2) * DoubleDouble(sign);
  return DoubleDouble(2.0) * (first - second) / DoubleDouble(static_cast<double>(b + 1));
}

DoubleDouble square_moment_1d(int a) {
  if (a % 2 != 0) return DoubleDouble(0.0);
  return DoubleDouble(1.0) / DoubleDouble(static_cast<double>(a + 1));
}

}  // namespace

DoubleDouble exact_moment(BuiltinDomain domain, std::span<const int> nu) {
  if (nu.size() != 2) throw std::invalid_argument("built-in domains are two-dimensional");
  const int a = nu[0];
  const int b = nu[1];
  if (a < 0 || b < 0) throw std::invalid_argument("multi-index must be non-negative");
  switch (domain) {
    case BuiltinDomain::Disc: return disc_moment(a, b);
    case BuiltinDomain::CornerPolygon: return polygon_moment(a, b);
    case BuiltinDomain::CuspDomain: return cusp_moment(a, b);
    case BuiltinDomain::Square: return square_moment_1d(a) * square_moment_1d(b);
  }
  throw std::runtime_error("no moment oracle");
}

// --- boundary pieces -------------------------------------------------------

namespace {

struct Vec2 {
  double x;
  double y;
};

double segment_distance(Vec2 p, Vec2 a, Vec2 b) {
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  double t = ((p.x - a.x) * dx + (p.y - a.y) * dy) / (dx * dx + dy * dy);
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(p.x - (a.x + t * dx), p.y - (a.y + t * dy));
}

// Curve s -> (side * s^2, s + offset), s in [0, 1].
struct RootCurve {
  double side;
  double offset;

  [[nodiscard]] Vec2 at(double s) const { return {side * s * s, s + offset}; }

  [[nodiscard]] double distance(Vec2 p) const {
    auto f = [&](double s) {
      const Vec2 c = at(s);
      return (c.x - p.x) * (c.x - p.x) + (c.y - p.y) * (c.y - p.y);
    };
    constexpr int kScan = 2000;
    int best = 0;
    double best_f = f(0.0);
    for (int k = 1; k <= kScan; ++k) {
      const double v = f(static_cast<double>(k) / kScan);
      if (v < best_f) {
        best_f = v;
        best = k;
      }
    }
    // Golden-section refinement inside the bracketing grid cells.
    double lo = std::max(0.0, static_cast<double>(best - 1) / kScan);
    double hi = std::min(1.0, static_cast<double>(best + 1) / kScan);
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = hi - g * (hi - lo);
    double d = lo + g * (hi - lo);
    double fc = f(c);
    double fd = f(d);
    while (hi - lo > 1e-13) {
      if (fc < fd) {
        hi = d;
        d = c;
        fd = fc;
        c = hi - g * (hi - lo);
        fc = f(c);
      } else {
        lo = c;
        c = d;
        fc = fd;
        d = lo + g * (hi - lo);
        fd = f(d);
      }
    }
    return std::sqrt(std::min({best_f, f(0.5 * (lo + hi)), f(0.0), f(1.0)}));
  }
};

// Counter-clockwise vertex rings of the polygonal built-ins.
const std::vector<Vec2>& square_ring() {
  static const std::vector<Vec2> ring{{-1, -1}, {1, -1}, {1, 1}, {-1, 1}};
  return ring;
}

const std::vector<Vec2>& polygon_ring() {
  static const std::vector<Vec2> ring{{0, -1}, {1, 0}, {1, 1}, {0, 0}, {-1, 1}, {-1, 0}};
  return ring;
}

// Cusp pieces in ring order: lower-right curve, right side, upper-right
// curve, upper-left curve, left side, lower-left curve.
const std::vector<RootCurve>& cusp_curves() {
  static const std::vector<RootCurve> curves{{1.0, -1.0}, {1.0, 0.0}, {-1.0, 0.0}, {-1.0, -1.0}};
  return curves;
}

std::vector<double> ring_distances(const std::vector<Vec2>& ring, Vec2 p) {
  std::vector<double> out;
  for (std::size_t i = 0; i < ring.size(); ++i) {
    out.push_back(segment_distance(p, ring[i], ring[(i + 1) % ring.size()]));
  }
  return out;
}

std::vector<std::pair<int, int>> ring_adjacency(int pieces) {
  std::vector<std::pair<int, int>> out;
  for (int i = 0; i + 1 < pieces; ++i) out.emplace_back(i, i + 1);
  out.emplace_back(0, pieces - 1);
  return out;
}

}  // namespace

std::vector<double> distance_to_boundary_pieces(BuiltinDomain domain, std::span<const double> x) {
  if (!Domain::make_builtin(domain).contains(x)) {
    throw std::invalid_argument("point is outside the domain");
  }
  const Vec2 p{x[0], x[1]};
  switch (domain) {
    case BuiltinDomain::Disc: return {std::abs(disc_radius() - std::hypot(p.x, p.y))};
    case BuiltinDomain::Square: return ring_distances(square_ring(), p);
    case BuiltinDomain::CornerPolygon: return ring_distances(polygon_ring(), p);
    case BuiltinDomain::CuspDomain: {
      const auto& c = cusp_curves();
      return {c[0].distance(p),
              segment_distance(p, {1, 0}, {1, 1}),
              c[1].distance(p),
              c[2].distance(p),
              segment_distance(p, {-1, 1}, {-1, 0}),
              c[3].distance(p)};
    }
  }
  throw std::logic_error("unhandled built-in domain");
}

std::vector<std::pair<int, int>> boundary_piece_adjacency(BuiltinDomain domain) {
  switch (domain) {
    case BuiltinDomain::Disc: return {};
    case BuiltinDomain::Square: return ring_adjacency(4);
    case BuiltinDomain::CornerPolygon:
    case BuiltinDomain::CuspDomain: return ring_adjacency(6);
  }
  throw std::logic_error("unhandled built-in domain");
}

Points extreme_points(BuiltinDomain domain, int boundary_points) {
  std::vector<Vec2> pts;
  auto add_ring = [&](const std::vector<Vec2>& ring) {
    const int edges = static_cast<int>(ring.size());
    const int per_edge = std::max(2, (boundary_points + edges - 1) / edges);
    for (std::size_t i = 0; i < ring.size(); ++i) {
      const Vec2 a = ring[i];
      const Vec2 b = ring[(i + 1) % ring.size()];
      for (int k = 0; k < per_edge; ++k) {
        const double t = static_cast<double>(k) / per_edge;
        pts.push_back({a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)});
      }
    }
  };
  switch (domain) {
    case BuiltinDomain::Disc: {
      const double r = disc_radius();
      for (int k = 0; k < boundary_points; ++k) {
        const double th = 2.0 * std::numbers::pi * k / boundary_points;
        pts.push_back({r * std::cos(th), r * std::sin(th)});
      }
      break;
    }
    case BuiltinDomain::Square: add_ring(square_ring()); break;
    case BuiltinDomain::CornerPolygon: add_ring(polygon_ring()); break;
    case BuiltinDomain::CuspDomain: {
      const int per_piece = std::max(2, boundary_points / 6);
      for (const RootCurve& c : cusp_curves()) {
        for (int k = 0; k <= per_piece; ++k) pts.push_back(c.at(static_cast<double>(k) / per_piece));
      }
      for (int k = 0; k <= per_piece; ++k) {
        const double t = static_cast<double>(k) / per_piece;
        pts.push_back({1.0, t});
        pts.push_back({-1.0, t});
      }
      break;
    }
  }
  Points out(static_cast<Eigen::Index>(pts.size()), 2);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    out(static_cast<Eigen::Index>(i), 0) = pts[i].x;
    out(static_cast<Eigen::Index>(i), 1) = pts[i].y;
  }
  return out;
}

}  // namespace optsample
