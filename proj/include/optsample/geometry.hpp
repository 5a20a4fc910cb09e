// Domains in R^d with the uniform probability measure, rejection sampling
// from a bounding box, and closed-form moments for the built-in test domains.

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "optsample/double_double.hpp"

namespace optsample {

using Rng = std::mt19937_64;

// Independent generator for (seed, trial, stream) triples.
Rng make_rng(std::uint64_t seed, std::uint64_t trial = 0, std::uint64_t stream = 0);

// One point per row; rows are contiguous so a point can be viewed as a span.
using Points = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline std::span<const double> row_span(const Points& pts, Eigen::Index i) {
  return {pts.row(i).data(), static_cast<std::size_t>(pts.cols())};
}

struct Box {
  std::vector<double> lower;
  std::vector<double> upper;

  [[nodiscard]] int dimension() const { return static_cast<int>(lower.size()); }
  [[nodiscard]] double volume() const;
  [[nodiscard]] bool contains(std::span<const double> x) const;
};

enum class BuiltinDomain { Disc, CornerPolygon, CuspDomain, Square };

std::string to_string(BuiltinDomain b);
BuiltinDomain builtin_from_string(const std::string& name);

// Radius of the built-in disc: r^2 = 2/pi, so the area is 2.
double disc_radius();

using Indicator = std::function<bool(std::span<const double>)>;
using MomentOracle = std::function<DoubleDouble(std::span<const int>)>;

// Immutable after construction; safe to share across threads.
class Domain {
 public:
  Domain(std::string name, Box bbox, Indicator indicator, double area,
         std::optional<MomentOracle> moments = std::nullopt,
         std::optional<BuiltinDomain> builtin = std::nullopt, std::int64_t area_samples = 0);

  static Domain make_builtin(BuiltinDomain b);

  // Area estimated by rejection from the bbox with `area_samples` trials.
  static Domain make_custom(std::string name, Box bbox, Indicator indicator,
                            std::int64_t area_samples, std::uint64_t seed);

  [[nodiscard]] const std::string& name() const { return name_; }
  [[nodiscard]] int dimension() const { return bbox_.dimension(); }
  [[nodiscard]] const Box& bbox() const { return bbox_; }
  [[nodiscard]] double area() const { return area_; }
  [[nodiscard]] bool contains(std::span<const double> x) const { return indicator_(x); }
  [[nodiscard]] bool has_moments() const { return moments_.has_value(); }
  [[nodiscard]] std::optional<BuiltinDomain> builtin() const { return builtin_; }
  // Number of Monte-Carlo trials behind area(); 0 when the area is exact.
  [[nodiscard]] std::int64_t area_samples() const { return area_samples_; }

  // (1/|D|) * integral over D of x^nu. Throws if no oracle is attached.
  [[nodiscard]] DoubleDouble moment(std::span<const int> nu) const;

 private:
  std::string name_;
  Box bbox_;
  Indicator indicator_;
  double area_;
  std::optional<MomentOracle> moments_;
  std::optional<BuiltinDomain> builtin_;
  std::int64_t area_samples_;
};

// `count` i.i.d. points of the uniform measure on the domain, drawn
// coordinate-wise in the bbox and rejected when outside. Throws if the
// acceptance rate over a window of proposals falls below 1e-6.
Points sample_uniform(const Domain& domain, std::int64_t count, Rng& rng);

// Closed-form normalized moment of a built-in domain, in double-double.
DoubleDouble exact_moment(BuiltinDomain domain, std::span<const int> nu);

// Euclidean distances from x to each smooth boundary piece of a built-in.
// Piece order is fixed per domain; see boundary_piece_adjacency().
std::vector<double> distance_to_boundary_pieces(BuiltinDomain domain, std::span<const double> x);

// Pairs (i, j), i < j, of boundary pieces that share an endpoint.
std::vector<std::pair<int, int>> boundary_piece_adjacency(BuiltinDomain domain);

// Deterministic probe set on the closure of the domain: corners, cusp tips
// and a boundary grid of roughly `boundary_points` points.
Points extreme_points(BuiltinDomain domain, int boundary_points = 1000);

}  // namespace optsample
