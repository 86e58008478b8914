#pragma once
#include <json.hpp>

#include "cartan_cr/forms.hpp"

namespace cartan_cr {

// {degree, terms: [{indices, symbols, coeff}]}; indices are basis positions,
// coeff is printed in the expression grammar.
nlohmann::json to_json(const Form& f);
// {dim, degree, entries: [[form, ...], ...]} row-major
nlohmann::json to_json(const MatrixForm& m);

// Inverse of to_json(Form); coefficients are parsed over `coords`.
Form form_from_json(const nlohmann::json& j, const BasisPtr& basis, const std::vector<std::string>& coords);

}  // namespace cartan_cr
