#include "optsample/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace optsample {

using nlohmann::json;

std::string to_hex(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

double from_hex(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) throw std::invalid_argument("malformed hex float '" + s + "'");
  return v;
}

namespace {

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(to_hex(m(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j, Eigen::Index n) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != n) {
    throw std::invalid_argument("transform must have one row per basis function");
  }
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n) {
      throw std::invalid_argument("transform rows must have n entries");
    }
    for (Eigen::Index k = 0; k < n; ++k) m(i, k) = from_hex(row[static_cast<std::size_t>(k)].get<std::string>());
  }
  return m;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(to_hex(v[i]));
  return out;
}

Eigen::VectorXd vector_from_json(const json& j) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = from_hex(j[i].get<std::string>());
  return v;
}

std::string kind_name(Provenance::Kind k) { return k == Provenance::Kind::Exact ? "exact" : "discrete"; }

}  // namespace

json basis_to_json(const OrthonormalBasis& basis) {
  const ReferenceBasis& ref = basis.reference();
  json j;
  j["dimension"] = ref.space().dimension();
  j["n"] = basis.size();
  j["indices"] = ref.space().indices();
  j["family"] = to_string(ref.family());
  json lower = json::array(), upper = json::array();
  for (double v : ref.box().lower) lower.push_back(to_hex(v));
  for (double v : ref.box().upper) upper.push_back(to_hex(v));
  j["box"] = {{"lower", lower}, {"upper", upper}};
  j["transform"] = matrix_to_json(basis.transform());
  if (basis.transform_lo().size() > 0) j["transform_lo"] = matrix_to_json(basis.transform_lo());
  const Provenance& p = basis.provenance();
  j["provenance"] = {{"kind", kind_name(p.kind)},
                     {"domain", p.domain},
                     {"sample_id", p.sample_id},
                     {"weights_id", p.weights_id}};
  j["gram_residual"] = to_hex(basis.gram_residual());
  return j;
}

OrthonormalBasis basis_from_json(const json& j) {
  const int d = j.at("dimension").get<int>();
  const int n = j.at("n").get<int>();
  const PolynomialSpace space = PolynomialSpace::first_n(d, n);
  if (j.at("indices").get<std::vector<MultiIndex>>() != space.indices()) {
    throw std::invalid_argument("basis indices are not in graded order");
  }
  Box box;
  for (const auto& v : j.at("box").at("lower")) box.lower.push_back(from_hex(v.get<std::string>()));
  for (const auto& v : j.at("box").at("upper")) box.upper.push_back(from_hex(v.get<std::string>()));
  const ReferenceFamily family = reference_family_from_string(j.at("family").get<std::string>());
  // Monomial references carry no box.
  const bool box_needed = family == ReferenceFamily::Legendre;
  if (box_needed && (static_cast<int>(box.lower.size()) != d || static_cast<int>(box.upper.size()) != d)) {
    throw std::invalid_argument("box does not match the dimension");
  }
  ReferenceBasis ref(space, family, box);
  Eigen::MatrixXd t = matrix_from_json(j.at("transform"), n);
  Eigen::MatrixXd lo;
  if (j.contains("transform_lo")) lo = matrix_from_json(j.at("transform_lo"), n);
  Provenance p;
  const json& pj = j.at("provenance");
  const std::string kind = pj.at("kind").get<std::string>();
  if (kind != "exact" && kind != "discrete") throw std::invalid_argument("unknown provenance '" + kind + "'");
  p.kind = kind == "exact" ? Provenance::Kind::Exact : Provenance::Kind::Discrete;
  p.domain = pj.value("domain", "");
  p.sample_id = pj.value("sample_id", "");
  p.weights_id = pj.value("weights_id", "");
  return OrthonormalBasis(std::move(ref), std::move(t), std::move(p),
                          from_hex(j.at("gram_residual").get<std::string>()), std::move(lo));
}

void save_basis(const OrthonormalBasis& basis, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << basis_to_json(basis).dump(1) << '\n';
}

OrthonormalBasis load_basis(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return basis_from_json(json::parse(in));
}

json fit_to_json(const FitResult& fit) {
  json j;
  j["basis"] = basis_to_json(fit.basis);
  j["coefficients"] = vector_to_json(fit.coefficients);
  j["conditioned_zeroed"] = fit.conditioned_zeroed;
  j["redraws_used"] = fit.redraws_used;
  if (fit.diagnostics) {
    j["diagnostics"] = {{"deviation", fit.diagnostics->deviation},
                        {"condition", fit.diagnostics->condition},
                        {"lambda_min", fit.diagnostics->lambda_min},
                        {"lambda_max", fit.diagnostics->lambda_max}};
  }
  return j;
}

FitResult fit_from_json(const json& j) {
  FitResult f;
  f.basis = basis_from_json(j.at("basis"));
  f.coefficients = vector_from_json(j.at("coefficients"));
  if (f.coefficients.size() != f.basis.size()) throw std::invalid_argument("coefficient count differs from basis size");
  f.conditioned_zeroed = j.value("conditioned_zeroed", false);
  f.redraws_used = j.value("redraws_used", 0);
  if (j.contains("diagnostics")) {
    GramianDiagnostics g;
    const json& dj = j.at("diagnostics");
    g.deviation = dj.at("deviation").get<double>();
    g.condition = dj.at("condition").is_null() ? std::numeric_limits<double>::infinity() : dj.at("condition").get<double>();
    g.lambda_min = dj.at("lambda_min").get<double>();
    g.lambda_max = dj.at("lambda_max").get<double>();
    f.diagnostics = g;
  }
  return f;
}

}  // namespace optsample
