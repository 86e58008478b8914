#include "cartan_cr/serialize.hpp"

namespace cartan_cr {

nlohmann::json to_json(const Form& f) {
  nlohmann::json terms = nlohmann::json::array();
  for (const auto& [m, c] : f.terms())
    terms.push_back({{"indices", f.indices(m)}, {"symbols", f.symbols(m)}, {"coeff", to_string(c)}});
  return {{"degree", f.degree()}, {"terms", terms}};
}

nlohmann::json to_json(const MatrixForm& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t a = 0; a < m.dim(); ++a) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t b = 0; b < m.dim(); ++b) row.push_back(to_json(m(a, b)));
    rows.push_back(row);
  }
  return {{"dim", m.dim()}, {"degree", m.degree()}, {"entries", rows}};
}

Form form_from_json(const nlohmann::json& j, const BasisPtr& basis, const std::vector<std::string>& coords) {
  int degree = j.at("degree").get<int>();
  Form out(basis, degree);
  for (const auto& t : j.at("terms")) {
    auto idx = t.at("indices").get<std::vector<int>>();
    if (int(idx.size()) != degree) throw FormError("term degree disagrees with the form degree");
    std::vector<std::string> syms;
    for (int k : idx) {
      if (k < 0 || std::size_t(k) >= basis->size()) throw FormError("basis index out of range");
      syms.push_back(basis->symbol(std::size_t(k)));
    }
    out += Form::monomial(basis, syms, parse(t.at("coeff").get<std::string>(), coords));
  }
  return out;
}

}  // namespace cartan_cr
