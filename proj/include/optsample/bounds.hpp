// Theoretical bounds on K_n = sup k_n, sampling-budget formulas and
// closed-form Christoffel values.

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "optsample/geometry.hpp"

namespace optsample {

// gamma = (3/2 ln(3/2) - 1/2)^{-1}, the matrix Chernoff constant.
double tropp_gamma();

struct DomainClass {
  enum class Kind { ParallelogramUnion, SmoothC2, RAlpha, BallExact, Custom };

  Kind kind = Kind::BallExact;
  double beta = 1.0;           // volume-ratio constant, in (0, 1]
  std::vector<double> alphas;  // RAlpha exponents alpha_1..alpha_{d-1}, each in (0, 2]
  double constant = 1.0;       // RAlpha: user-supplied C_D
  std::function<double(int)> custom;

  static DomainClass parallelogram_union(double beta);
  static DomainClass smooth_c2(double beta);
  static DomainClass r_alpha(std::vector<double> alphas, double beta, double constant);
  static DomainClass ball_exact();
  static DomainClass custom_bound(std::function<double(int)> bn);
};

// Upper bound B(n) >= K_n for the class.
double bound_B(const DomainClass& cls, int d, int n);

// k_{n,B} on the unit sphere for total degree ell:
// C(ell+d+1, ell) + C(ell+d-2, ell-1), the second term 0 when ell = 0.
std::int64_t ball_boundary_k(int d, int degree);

struct PointwiseShape {
  double lower = 0.0;  // shape / C
  double upper = 0.0;  // shape * C
  double shape = 0.0;  // n * max over adjacent pieces of rho_i rho_j
  std::vector<double> rho;
};

// Diagnostic shape n * max_{(i,j) adjacent} rho_i(x) rho_j(x), with
// rho_i = min(ell, dist(x, piece_i)^{-1/2}). A single smooth closed piece
// (the disc) uses n * rho_1. `constant` stands in for the unknown C_D.
PointwiseShape pointwise_bound_2d(BuiltinDomain domain, std::span<const double> x, int degree,
                                  double constant = 1.0);

// (beta * k_ref, k_ref / beta).
std::pair<double, double> comparison_framing(double k_ref, double beta);

// ceil(c gamma n ln(2n/eps)).
std::int64_t online_budget(int n, double c, double eps);

// ceil(gamma/(1 - 2 delta) n ln(2n/eps)).
std::int64_t hierarchical_budget(int n, double delta, double eps);

// 4 c n / m.
double eta(std::int64_t m, int n, double c);

}  // namespace optsample
