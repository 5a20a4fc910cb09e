// Arithmetic expressions over x1..xd and the constraint lists used to
// describe custom domains, e.g. "x2 <= sqrt(abs(x1))".

#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "optsample/geometry.hpp"

namespace optsample {

using Expression = std::function<double(std::span<const double>)>;

// Grammar: + - * / ^, unary minus, parentheses, numbers, x1..xd,
// sqrt(.), abs(.). Throws std::invalid_argument with the offending column.
Expression parse_expression(const std::string& text, int dimension);

// "lhs <= rhs" or "lhs >= rhs" (also < and >).
Indicator parse_constraint(const std::string& text, int dimension);

// Conjunction of constraints.
Indicator parse_constraints(const std::vector<std::string>& constraints, int dimension);

}  // namespace optsample
