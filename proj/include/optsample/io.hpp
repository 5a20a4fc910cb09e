// JSON export of orthonormal bases and fit results. Matrix entries are
// written as hex floats so a round trip is bit-exact.

#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "optsample/least_squares.hpp"
#include "optsample/polyspace.hpp"

namespace optsample {

std::string to_hex(double v);
double from_hex(const std::string& s);

nlohmann::json basis_to_json(const OrthonormalBasis& basis);
OrthonormalBasis basis_from_json(const nlohmann::json& j);

void save_basis(const OrthonormalBasis& basis, const std::filesystem::path& path);
OrthonormalBasis load_basis(const std::filesystem::path& path);

// Coefficients in hex, Gramian diagnostics in decimal.
nlohmann::json fit_to_json(const FitResult& fit);
FitResult fit_from_json(const nlohmann::json& j);

}  // namespace optsample
