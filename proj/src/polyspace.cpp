#include "optsample/polyspace.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

namespace optsample {

std::int64_t space_dimension(int d, int degree) {
  if (d < 1 || degree < 0) throw std::invalid_argument("space_dimension needs d >= 1, degree >= 0");
  // C(d + degree, degree) = prod_{k=1..d} (degree + k) / k, exact at every step.
  std::int64_t result = 1;
  for (int k = 1; k <= d; ++k) {
    const std::int64_t factor = degree + k;
    if (result > std::numeric_limits<std::int64_t>::max() / factor) {
      throw std::overflow_error("space dimension overflows 64-bit integers");
    }
    result = result * factor / k;
  }
  return result;
}

// --- PolynomialSpace -------------------------------------------------------

namespace {

std::vector<MultiIndex> degree_block(int d, int k) {
  std::vector<MultiIndex> block;
  MultiIndex nu(static_cast<std::size_t>(d), 0);
  // Enumerate the tail (nu_2..nu_d) with sum <= k; nu_1 takes the remainder.
  auto rec = [&](auto&& self, int pos, int remaining) -> void {
    if (pos == 0) {
      nu[0] = remaining;
      block.push_back(nu);
      return;
    }
    for (int v = 0; v <= remaining; ++v) {
      nu[static_cast<std::size_t>(pos)] = v;
      self(self, pos - 1, remaining - v);
    }
  };
  rec(rec, d - 1, k);
  // Order by (nu_d, ..., nu_2) ascending.
  std::sort(block.begin(), block.end(), [](const MultiIndex& a, const MultiIndex& b) {
    return std::lexicographical_compare(a.rbegin(), a.rend(), b.rbegin(), b.rend());
  });
  return block;
}

}  // namespace

PolynomialSpace::PolynomialSpace(int d, std::vector<MultiIndex> indices)
    : d_(d), indices_(std::move(indices)) {
  std::map<MultiIndex, int> position;
  for (int k = 0; k < size(); ++k) position.emplace(indices_[static_cast<std::size_t>(k)], k);
  parent_.assign(indices_.size(), -1);
  axis_.assign(indices_.size(), -1);
  for (int k = 0; k < size(); ++k) {
    const MultiIndex& nu = indices_[static_cast<std::size_t>(k)];
    for (int c = 0; c < d_; ++c) {
      if (nu[static_cast<std::size_t>(c)] == 0) continue;
      MultiIndex lower = nu;
      --lower[static_cast<std::size_t>(c)];
      auto it = position.find(lower);
      if (it == position.end() || it->second >= k) {
        throw std::invalid_argument("index set is not downward closed in order");
      }
      parent_[static_cast<std::size_t>(k)] = it->second;
      axis_[static_cast<std::size_t>(k)] = c;
      break;
    }
    int degree = 0;
    for (int v : nu) degree += v;
    max_degree_ = std::max(max_degree_, degree);
  }
}

PolynomialSpace PolynomialSpace::total_degree(int d, int degree) {
  const std::int64_t n = space_dimension(d, degree);
  return first_n(d, static_cast<int>(n));
}

PolynomialSpace PolynomialSpace::first_n(int d, int n) {
  if (d < 1 || n < 1) throw std::invalid_argument("space needs d >= 1 and n >= 1");
  std::vector<MultiIndex> indices;
  for (int k = 0; static_cast<int>(indices.size()) < n; ++k) {
    for (auto& nu : degree_block(d, k)) {
      if (static_cast<int>(indices.size()) == n) break;
      indices.push_back(std::move(nu));
    }
  }
  return PolynomialSpace(d, std::move(indices));
}

PolynomialSpace PolynomialSpace::prefix(int n) const {
  if (n < 1 || n > size()) throw std::out_of_range("prefix length out of range");
  return PolynomialSpace(d_, std::vector<MultiIndex>(indices_.begin(), indices_.begin() + n));
}

Eigen::VectorXd evaluate_monomials(const PolynomialSpace& space, std::span<const double> x) {
  Eigen::VectorXd out(space.size());
  out[0] = 1.0;
  const auto& parent = space.parent();
  const auto& axis = space.parent_axis();
  for (int k = 1; k < space.size(); ++k) {
    out[k] = out[parent[static_cast<std::size_t>(k)]] * x[static_cast<std::size_t>(axis[static_cast<std::size_t>(k)])];
  }
  return out;
}

// --- ReferenceBasis --------------------------------------------------------

std::string to_string(ReferenceFamily f) {
  return f == ReferenceFamily::Monomial ? "monomial" : "legendre";
}

ReferenceFamily reference_family_from_string(const std::string& s) {
  if (s == "monomial") return ReferenceFamily::Monomial;
  if (s == "legendre") return ReferenceFamily::Legendre;
  throw std::invalid_argument("unknown reference family '" + s + "'");
}

ReferenceBasis::ReferenceBasis(PolynomialSpace space, ReferenceFamily family, Box box)
    : space_(std::move(space)), family_(family), box_(std::move(box)) {
  if (family_ == ReferenceFamily::Legendre && box_.dimension() != space_.dimension()) {
    throw std::invalid_argument("Legendre reference box dimension mismatch");
  }
}

ReferenceBasis ReferenceBasis::monomial(PolynomialSpace space) {
  return ReferenceBasis(std::move(space), ReferenceFamily::Monomial, Box{});
}

ReferenceBasis ReferenceBasis::legendre(PolynomialSpace space, Box box) {
  return ReferenceBasis(std::move(space), ReferenceFamily::Legendre, std::move(box));
}

ReferenceBasis ReferenceBasis::prefix(int n) const {
  return ReferenceBasis(space_.prefix(n), family_, box_);
}

void ReferenceBasis::evaluate(std::span<const double> x, std::span<double> out) const {
  const int n = size();
  const auto& parent = space_.parent();
  const auto& axis = space_.parent_axis();
  if (family_ == ReferenceFamily::Monomial) {
    out[0] = 1.0;
    for (int k = 1; k < n; ++k) {
      out[static_cast<std::size_t>(k)] =
          out[static_cast<std::size_t>(parent[static_cast<std::size_t>(k)])] *
          x[static_cast<std::size_t>(axis[static_cast<std::size_t>(k)])];
    }
    return;
  }
  // Normalized Legendre p_j = sqrt(2j+1) P_j per coordinate, then products.
  const int d = space_.dimension();
  const int deg = space_.max_degree();
  thread_local std::vector<double> table;
  table.assign(static_cast<std::size_t>(d * (deg + 1)), 0.0);
  for (int i = 0; i < d; ++i) {
    const double lo = box_.lower[static_cast<std::size_t>(i)];
    const double hi = box_.upper[static_cast<std::size_t>(i)];
    const double t = (x[static_cast<std::size_t>(i)] - 0.5 * (lo + hi)) / (0.5 * (hi - lo));
    double* p = table.data() + static_cast<std::ptrdiff_t>(i * (deg + 1));
    p[0] = 1.0;
    if (deg >= 1) p[1] = t;
    for (int j = 1; j < deg; ++j) {
      p[j + 1] = ((2.0 * j + 1.0) * t * p[j] - j * p[j - 1]) / (j + 1.0);
    }
    for (int j = 1; j <= deg; ++j) p[j] *= std::sqrt(2.0 * j + 1.0);
  }
  const auto& indices = space_.indices();
  for (int k = 0; k < n; ++k) {
    double v = 1.0;
    const MultiIndex& nu = indices[static_cast<std::size_t>(k)];
    for (int i = 0; i < d; ++i) {
      v *= table[static_cast<std::size_t>(i * (deg + 1) + nu[static_cast<std::size_t>(i)])];
    }
    out[static_cast<std::size_t>(k)] = v;
  }
}

Eigen::VectorXd ReferenceBasis::evaluate(std::span<const double> x) const {
  Eigen::VectorXd out(size());
  evaluate(x, std::span<double>(out.data(), static_cast<std::size_t>(out.size())));
  return out;
}

Eigen::MatrixXd ReferenceBasis::evaluate(const Points& pts) const {
  // Column-major result; fill a row-major scratch and convert once.
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows(pts.rows(), size());
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    evaluate(row_span(pts, i), std::span<double>(rows.row(i).data(), static_cast<std::size_t>(size())));
  }
  return rows;
}

std::vector<std::vector<DoubleDouble>> ReferenceBasis::monomial_coefficients() const {
  const int n = size();
  const auto& indices = space_.indices();
  std::map<MultiIndex, int> position;
  for (int k = 0; k < n; ++k) position.emplace(indices[static_cast<std::size_t>(k)], k);
  std::vector<std::vector<DoubleDouble>> coef(static_cast<std::size_t>(n),
                                              std::vector<DoubleDouble>(static_cast<std::size_t>(n)));
  if (family_ == ReferenceFamily::Monomial) {
    for (int k = 0; k < n; ++k) coef[static_cast<std::size_t>(k)][static_cast<std::size_t>(k)] = 1.0;
    return coef;
  }
  const int d = space_.dimension();
  const int deg = space_.max_degree();
  // univariate[i][j][t]: coefficient of x_i^t in p_j((x_i - c_i)/h_i).
  std::vector<std::vector<std::vector<DoubleDouble>>> univariate(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) {
    // Legendre P_j in powers of the mapped coordinate.
    std::vector<std::vector<DoubleDouble>> leg(static_cast<std::size_t>(deg + 1),
                                               std::vector<DoubleDouble>(static_cast<std::size_t>(deg + 1)));
    leg[0][0] = 1.0;
    if (deg >= 1) leg[1][1] = 1.0;
    for (int j = 1; j < deg; ++j) {
      for (int s = 0; s <= j + 1; ++s) {
        DoubleDouble v = 0.0;
        if (s >= 1) v += DoubleDouble(2.0 * j + 1.0) * leg[static_cast<std::size_t>(j)][static_cast<std::size_t>(s - 1)];
        v -= DoubleDouble(static_cast<double>(j)) * leg[static_cast<std::size_t>(j - 1)][static_cast<std::size_t>(s)];
        leg[static_cast<std::size_t>(j + 1)][static_cast<std::size_t>(s)] = v / DoubleDouble(j + 1.0);
      }
    }
    const DoubleDouble lo(box_.lower[static_cast<std::size_t>(i)]);
    const DoubleDouble hi(box_.upper[static_cast<std::size_t>(i)]);
    const DoubleDouble c = (lo + hi) * DoubleDouble(0.5);
    const DoubleDouble h = (hi - lo) * DoubleDouble(0.5);
    // binom_shift[s][t] = coefficient of x^t in ((x - c)/h)^s.
    std::vector<std::vector<DoubleDouble>> shift(static_cast<std::size_t>(deg + 1),
                                                 std::vector<DoubleDouble>(static_cast<std::size_t>(deg + 1)));
    shift[0][0] = 1.0;
    for (int s = 1; s <= deg; ++s) {
      for (int t = 0; t <= s; ++t) {
        DoubleDouble v = 0.0;
        if (t >= 1) v += shift[static_cast<std::size_t>(s - 1)][static_cast<std::size_t>(t - 1)];
        v -= c * shift[static_cast<std::size_t>(s - 1)][static_cast<std::size_t>(t)];
        shift[static_cast<std::size_t>(s)][static_cast<std::size_t>(t)] = v / h;
      }
    }
    auto& uni = univariate[static_cast<std::size_t>(i)];
    uni.assign(static_cast<std::size_t>(deg + 1), std::vector<DoubleDouble>(static_cast<std::size_t>(deg + 1)));
    for (int j = 0; j <= deg; ++j) {
      const DoubleDouble norm = sqrt(DoubleDouble(2.0 * j + 1.0));
      for (int t = 0; t <= j; ++t) {
        DoubleDouble v = 0.0;
        for (int s = t; s <= j; ++s) {
          v += leg[static_cast<std::size_t>(j)][static_cast<std::size_t>(s)] *
               shift[static_cast<std::size_t>(s)][static_cast<std::size_t>(t)];
        }
        uni[static_cast<std::size_t>(j)][static_cast<std::size_t>(t)] = v * norm;
      }
    }
  }
  for (int k = 0; k < n; ++k) {
    const MultiIndex& nu = indices[static_cast<std::size_t>(k)];
    // Every nu' <= nu componentwise is in the space (downward closed).
    for (int m = 0; m <= k; ++m) {
      const MultiIndex& mu = indices[static_cast<std::size_t>(m)];
      bool below = true;
      for (int i = 0; i < d && below; ++i) below = mu[static_cast<std::size_t>(i)] <= nu[static_cast<std::size_t>(i)];
      if (!below) continue;
      DoubleDouble v = 1.0;
      for (int i = 0; i < d; ++i) {
        v *= univariate[static_cast<std::size_t>(i)][static_cast<std::size_t>(nu[static_cast<std::size_t>(i)])]
                       [static_cast<std::size_t>(mu[static_cast<std::size_t>(i)])];
      }
      coef[static_cast<std::size_t>(k)][static_cast<std::size_t>(m)] = v;
    }
  }
  return coef;
}

// --- OrthonormalBasis ------------------------------------------------------

OrthonormalBasis::OrthonormalBasis(ReferenceBasis reference, Eigen::MatrixXd transform,
                                   Provenance provenance, double gram_residual,
                                   Eigen::MatrixXd transform_lo)
    : reference_(std::move(reference)),
      transform_(std::move(transform)),
      transform_lo_(std::move(transform_lo)),
      provenance_(std::move(provenance)),
      gram_residual_(gram_residual) {
  const int n = reference_.size();
  if (transform_.rows() != n || transform_.cols() != n) {
    throw std::invalid_argument("transform size does not match the space");
  }
  if (transform_lo_.size() == 0) transform_lo_ = Eigen::MatrixXd::Zero(n, n);
  if (transform_lo_.rows() != n || transform_lo_.cols() != n) {
    throw std::invalid_argument("transform low part size does not match the space");
  }
}

OrthonormalBasis OrthonormalBasis::prefix(int k) const {
  return OrthonormalBasis(reference_.prefix(k), transform_.topLeftCorner(k, k), provenance_,
                          gram_residual_, transform_lo_.topLeftCorner(k, k));
}

Eigen::VectorXd OrthonormalBasis::evaluate(std::span<const double> x) const {
  const Eigen::VectorXd ref = reference_.evaluate(x);
  return transform_.triangularView<Eigen::Lower>() * ref;
}

Eigen::MatrixXd OrthonormalBasis::evaluate(const Points& pts) const {
  const Eigen::MatrixXd ref = reference_.evaluate(pts);
  return ref * transform_.transpose();
}

DiscreteInnerProduct DiscreteInnerProduct::unit(Points pts, std::string sample_id) {
  DiscreteInnerProduct ip;
  ip.weights = Eigen::VectorXd::Ones(pts.rows());
  ip.points = std::move(pts);
  ip.sample_id = std::move(sample_id);
  return ip;
}

// --- orthonormalization ----------------------------------------------------

namespace {

using DdMatrix = std::vector<std::vector<DoubleDouble>>;

DdMatrix reference_gram_exact(const ReferenceBasis& reference, const Domain& domain) {
  const int n = reference.size();
  const int d = reference.space().dimension();
  const auto& indices = reference.space().indices();
  std::map<MultiIndex, DoubleDouble> cache;
  DdMatrix mom(static_cast<std::size_t>(n), std::vector<DoubleDouble>(static_cast<std::size_t>(n)));
  MultiIndex sum(static_cast<std::size_t>(d));
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b <= a; ++b) {
      for (int i = 0; i < d; ++i) {
        sum[static_cast<std::size_t>(i)] = indices[static_cast<std::size_t>(a)][static_cast<std::size_t>(i)] +
                                           indices[static_cast<std::size_t>(b)][static_cast<std::size_t>(i)];
      }
      auto it = cache.find(sum);
      if (it == cache.end()) it = cache.emplace(sum, domain.moment(sum)).first;
      mom[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] = it->second;
      mom[static_cast<std::size_t>(b)][static_cast<std::size_t>(a)] = it->second;
    }
  }
  if (reference.family() == ReferenceFamily::Monomial) return mom;
  const DdMatrix coef = reference.monomial_coefficients();
  // tmp = C * Mom, exploiting the lower-triangular C.
  DdMatrix tmp(static_cast<std::size_t>(n), std::vector<DoubleDouble>(static_cast<std::size_t>(n)));
  for (int a = 0; a < n; ++a) {
    for (int m = 0; m < n; ++m) {
      DoubleDouble v = 0.0;
      for (int k = 0; k <= a; ++k) {
        const DoubleDouble& ck = coef[static_cast<std::size_t>(a)][static_cast<std::size_t>(k)];
        if (ck.hi == 0.0) continue;
        v += ck * mom[static_cast<std::size_t>(k)][static_cast<std::size_t>(m)];
      }
      tmp[static_cast<std::size_t>(a)][static_cast<std::size_t>(m)] = v;
    }
  }
  DdMatrix gram(static_cast<std::size_t>(n), std::vector<DoubleDouble>(static_cast<std::size_t>(n)));
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b <= a; ++b) {
      DoubleDouble v = 0.0;
      for (int k = 0; k <= b; ++k) {
        const DoubleDouble& ck = coef[static_cast<std::size_t>(b)][static_cast<std::size_t>(k)];
        if (ck.hi == 0.0) continue;
        v += tmp[static_cast<std::size_t>(a)][static_cast<std::size_t>(k)] * ck;
      }
      gram[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] = v;
      gram[static_cast<std::size_t>(b)][static_cast<std::size_t>(a)] = v;
    }
  }
  return gram;
}

// T G T^T with T given in double, accumulated in double-double.
DdMatrix dd_congruence(const Eigen::MatrixXd& hi, const Eigen::MatrixXd& lo, const DdMatrix& gram) {
  const int n = static_cast<int>(hi.rows());
  auto t = [&](int i, int j) { return DoubleDouble(hi(i, j)) + DoubleDouble(lo(i, j)); };
  DdMatrix tg(static_cast<std::size_t>(n), std::vector<DoubleDouble>(static_cast<std::size_t>(n)));
  for (int a = 0; a < n; ++a) {
    for (int m = 0; m < n; ++m) {
      DoubleDouble v = 0.0;
      for (int k = 0; k <= a; ++k) v += t(a, k) * gram[static_cast<std::size_t>(k)][static_cast<std::size_t>(m)];
      tg[static_cast<std::size_t>(a)][static_cast<std::size_t>(m)] = v;
    }
  }
  DdMatrix out(static_cast<std::size_t>(n), std::vector<DoubleDouble>(static_cast<std::size_t>(n)));
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b <= a; ++b) {
      DoubleDouble v = 0.0;
      for (int k = 0; k <= b; ++k) v += tg[static_cast<std::size_t>(a)][static_cast<std::size_t>(k)] * t(b, k);
      out[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] = v;
      out[static_cast<std::size_t>(b)][static_cast<std::size_t>(a)] = v;
    }
  }
  return out;
}

double dd_gram_residual(const Eigen::MatrixXd& hi, const Eigen::MatrixXd& lo, const DdMatrix& gram) {
  const DdMatrix e = dd_congruence(hi, lo, gram);
  double worst = 0.0;
  for (std::size_t a = 0; a < e.size(); ++a) {
    for (std::size_t b = 0; b <= a; ++b) {
      DoubleDouble v = e[a][b];
      if (a == b) v -= DoubleDouble(1.0);
      worst = std::max(worst, std::abs(v.to_double()));
    }
  }
  return worst;
}

}  // namespace

OrthonormalBasis orthonormalize_exact(const ReferenceBasis& reference, const Domain& domain) {
  if (!domain.has_moments()) {
    throw std::runtime_error("no moment oracle for domain '" + domain.name() + "'");
  }
  const int n = reference.size();
  const DdMatrix gram = reference_gram_exact(reference, domain);
  // Cholesky gram = R R^T, R lower.
  DdMatrix r(static_cast<std::size_t>(n), std::vector<DoubleDouble>(static_cast<std::size_t>(n)));
  for (int j = 0; j < n; ++j) {
    DoubleDouble diag = gram[static_cast<std::size_t>(j)][static_cast<std::size_t>(j)];
    for (int k = 0; k < j; ++k) {
      diag -= r[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)] * r[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)];
    }
    if (!(diag.hi > 0.0)) {
      std::ostringstream msg;
      msg << "moment matrix numerically singular at index " << j;
      throw std::runtime_error(msg.str());
    }
    const DoubleDouble rjj = sqrt(diag);
    r[static_cast<std::size_t>(j)][static_cast<std::size_t>(j)] = rjj;
    for (int i = j + 1; i < n; ++i) {
      DoubleDouble v = gram[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      for (int k = 0; k < j; ++k) {
        v -= r[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] * r[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)];
      }
      r[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = v / rjj;
    }
  }
  // T = R^{-1}, lower triangular, by forward substitution column by column.
  DdMatrix inv(static_cast<std::size_t>(n), std::vector<DoubleDouble>(static_cast<std::size_t>(n)));
  for (int c = 0; c < n; ++c) {
    inv[static_cast<std::size_t>(c)][static_cast<std::size_t>(c)] =
        DoubleDouble(1.0) / r[static_cast<std::size_t>(c)][static_cast<std::size_t>(c)];
    for (int i = c + 1; i < n; ++i) {
      DoubleDouble v = 0.0;
      for (int k = c; k < i; ++k) {
        v += r[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] * inv[static_cast<std::size_t>(k)][static_cast<std::size_t>(c)];
      }
      inv[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)] = -v / r[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)];
    }
  }
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd t_lo = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      const DoubleDouble& v = inv[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      t(i, j) = v.hi;
      t_lo(i, j) = v.lo;
    }
  }
  const double residual = dd_gram_residual(t, t_lo, gram);
  Provenance prov;
  prov.kind = Provenance::Kind::Exact;
  prov.domain = domain.name();
  return OrthonormalBasis(reference, std::move(t), std::move(prov), residual, std::move(t_lo));
}

OrthonormalBasis orthonormalize_exact(const PolynomialSpace& space, const Domain& domain) {
  return orthonormalize_exact(ReferenceBasis::legendre(space, domain.bbox()), domain);
}

OrthonormalBasis orthonormalize_discrete(const ReferenceBasis& reference,
                                         const DiscreteInnerProduct& ip) {
  const int n = reference.size();
  const Eigen::Index m = ip.count();
  if (ip.weights.size() != m) throw std::invalid_argument("weights and points differ in length");
  if (!ip.weights.allFinite() || (ip.weights.array() < 0.0).any()) {
    throw std::invalid_argument("discrete inner product weights must be finite and non-negative");
  }
  if (m < n) throw std::runtime_error("sample does not determine V_n; increase M");
  Eigen::MatrixXd a = reference.evaluate(ip.points);
  const Eigen::VectorXd scale = (ip.weights / static_cast<double>(m)).array().sqrt();
  a = scale.asDiagonal() * a;
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd r = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();
  const double largest = r.diagonal().cwiseAbs().maxCoeff();
  for (int k = 0; k < n; ++k) {
    if (!(std::abs(r(k, k)) > 1e-13 * largest)) {
      throw std::runtime_error("sample does not determine V_n; increase M");
    }
    if (r(k, k) < 0.0) r.row(k) *= -1.0;
  }
  // L = R^{-T} phi, so T = (R^T)^{-1}: lower triangular with positive diagonal.
  Eigen::MatrixXd t = Eigen::MatrixXd::Identity(n, n);
  r.transpose().triangularView<Eigen::Lower>().solveInPlace(t);
  t = t.triangularView<Eigen::Lower>();

  Eigen::MatrixXd ata = Eigen::MatrixXd::Zero(n, n);
  ata.selfadjointView<Eigen::Lower>().rankUpdate(a.transpose());
  ata = ata.selfadjointView<Eigen::Lower>();
  const Eigen::MatrixXd g = t * ata * t.transpose() - Eigen::MatrixXd::Identity(n, n);
  Provenance prov;
  prov.kind = Provenance::Kind::Discrete;
  prov.sample_id = ip.sample_id;
  prov.weights_id = ip.weights_id;
  return OrthonormalBasis(reference, std::move(t), std::move(prov), g.cwiseAbs().maxCoeff());
}

Eigen::MatrixXd exact_gram(const OrthonormalBasis& basis, const Domain& domain) {
  const DdMatrix e = dd_congruence(basis.transform(), basis.transform_lo(), reference_gram_exact(basis.reference(), domain));
  const int n = basis.size();
  Eigen::MatrixXd out(n, n);
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) out(a, b) = e[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)].to_double();
  }
  return out;
}

}  // namespace optsample
