// Polynomial spaces, reference bases and orthonormalization.
//
// A PolynomialSpace is an ordered, downward-closed list of multi-indices in
// graded order. Inside each degree block the indices are ordered by the last
// coordinate ascending (for d = 2: x1^k, x1^(k-1) x2, ..., x2^k), so any
// prefix of the total-degree ordering is again downward closed.
//
// Orthonormal bases are stored as a lower-triangular transform applied to a
// reference basis of the same space. Two reference families exist: raw
// monomials, and tensor products of normalized Legendre polynomials in the
// coordinates affinely mapped from a box onto [-1,1]^d. Both are triangular
// with respect to the monomials in space order, so the first k orthonormal
// functions always span the first k monomials.

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "optsample/geometry.hpp"

namespace optsample {

using MultiIndex = std::vector<int>;

// C(d + degree, degree); throws std::overflow_error when it does not fit.
std::int64_t space_dimension(int d, int degree);

class PolynomialSpace {
 public:
  PolynomialSpace() = default;

  // All multi-indices with |nu| <= degree.
  static PolynomialSpace total_degree(int d, int degree);
  // The first n indices of the graded ordering (completed total degree).
  static PolynomialSpace first_n(int d, int n);

  [[nodiscard]] int dimension() const { return d_; }
  [[nodiscard]] int size() const { return static_cast<int>(indices_.size()); }
  [[nodiscard]] const std::vector<MultiIndex>& indices() const { return indices_; }
  [[nodiscard]] int max_degree() const { return max_degree_; }
  [[nodiscard]] PolynomialSpace prefix(int n) const;

  // For each index k > 0: a predecessor p(k) < k and a coordinate c(k) with
  // nu_k = nu_{p(k)} + e_{c(k)}.
  [[nodiscard]] const std::vector<int>& parent() const { return parent_; }
  [[nodiscard]] const std::vector<int>& parent_axis() const { return axis_; }

  friend bool operator==(const PolynomialSpace& a, const PolynomialSpace& b) {
    return a.d_ == b.d_ && a.indices_ == b.indices_;
  }

 private:
  PolynomialSpace(int d, std::vector<MultiIndex> indices);

  int d_ = 0;
  std::vector<MultiIndex> indices_;
  std::vector<int> parent_;
  std::vector<int> axis_;
  int max_degree_ = 0;
};

// Monomials x^nu in space order, each obtained from an earlier one times a coordinate.
Eigen::VectorXd evaluate_monomials(const PolynomialSpace& space, std::span<const double> x);

enum class ReferenceFamily { Monomial, Legendre };

std::string to_string(ReferenceFamily f);
ReferenceFamily reference_family_from_string(const std::string& s);

class ReferenceBasis {
 public:
  ReferenceBasis() = default;
  // `box` is only used by the Legendre family.
  ReferenceBasis(PolynomialSpace space, ReferenceFamily family, Box box);

  static ReferenceBasis monomial(PolynomialSpace space);
  static ReferenceBasis legendre(PolynomialSpace space, Box box);

  [[nodiscard]] const PolynomialSpace& space() const { return space_; }
  [[nodiscard]] ReferenceFamily family() const { return family_; }
  [[nodiscard]] const Box& box() const { return box_; }
  [[nodiscard]] int size() const { return space_.size(); }
  [[nodiscard]] ReferenceBasis prefix(int n) const;

  void evaluate(std::span<const double> x, std::span<double> out) const;
  [[nodiscard]] Eigen::VectorXd evaluate(std::span<const double> x) const;
  // One row per point.
  [[nodiscard]] Eigen::MatrixXd evaluate(const Points& pts) const;

  // Row k holds the monomial coefficients of reference function k
  // (lower triangular), in double-double.
  [[nodiscard]] std::vector<std::vector<DoubleDouble>> monomial_coefficients() const;

 private:
  PolynomialSpace space_;
  ReferenceFamily family_ = ReferenceFamily::Monomial;
  Box box_;
};

struct Provenance {
  enum class Kind { Exact, Discrete };
  Kind kind = Kind::Discrete;
  std::string domain;      // Exact: domain name
  std::string sample_id;   // Discrete: identifier of the point set
  std::string weights_id;  // Discrete: identifier of the weight function
};

class OrthonormalBasis {
 public:
  OrthonormalBasis() = default;
  // `transform_lo` is the optional low part of a double-double transform
  // (empty means zero); evaluation uses the high part only.
  OrthonormalBasis(ReferenceBasis reference, Eigen::MatrixXd transform, Provenance provenance,
                   double gram_residual, Eigen::MatrixXd transform_lo = {});

  [[nodiscard]] const ReferenceBasis& reference() const { return reference_; }
  [[nodiscard]] const PolynomialSpace& space() const { return reference_.space(); }
  [[nodiscard]] const Eigen::MatrixXd& transform() const { return transform_; }
  [[nodiscard]] const Eigen::MatrixXd& transform_lo() const { return transform_lo_; }
  [[nodiscard]] const Provenance& provenance() const { return provenance_; }
  [[nodiscard]] double gram_residual() const { return gram_residual_; }
  [[nodiscard]] int size() const { return reference_.size(); }

  // The first k functions; for exact bases this is the exact basis of the prefix space.
  [[nodiscard]] OrthonormalBasis prefix(int k) const;

  [[nodiscard]] Eigen::VectorXd evaluate(std::span<const double> x) const;
  // One row per point.
  [[nodiscard]] Eigen::MatrixXd evaluate(const Points& pts) const;

 private:
  ReferenceBasis reference_;
  Eigen::MatrixXd transform_;
  Eigen::MatrixXd transform_lo_;
  Provenance provenance_;
  double gram_residual_ = 0.0;
};

struct DiscreteInnerProduct {
  Points points;
  Eigen::VectorXd weights;  // w(z^i) >= 0; the 1/M factor is implicit
  std::string sample_id = "sample";
  std::string weights_id = "unit";

  [[nodiscard]] Eigen::Index count() const { return points.rows(); }
  static DiscreteInnerProduct unit(Points pts, std::string sample_id = "sample");
};

// Orthonormalization against the exact moments of the domain. Gram assembly
// and Cholesky run in double-double. Throws on a non-positive pivot.
OrthonormalBasis orthonormalize_exact(const ReferenceBasis& reference, const Domain& domain);

// Convenience: Legendre reference on the domain bbox.
OrthonormalBasis orthonormalize_exact(const PolynomialSpace& space, const Domain& domain);

// Orthonormalization for <u,v> = (1/M) sum w_i u(z_i) v(z_i) through a
// Householder QR of the weighted collocation matrix.
OrthonormalBasis orthonormalize_discrete(const ReferenceBasis& reference,
                                         const DiscreteInnerProduct& ip);

// Gram matrix of a basis under exact moments, in double-double, rounded.
Eigen::MatrixXd exact_gram(const OrthonormalBasis& basis, const Domain& domain);

}  // namespace optsample
