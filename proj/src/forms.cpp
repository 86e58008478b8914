#include "cartan_cr/forms.hpp"

#include <algorithm>
#include <bit>

namespace cartan_cr {

// ---- basis -------------------------------------------------------------------

Basis::Basis(std::vector<BasisOneForm> forms, ConjugateMap function_partners) : forms_(std::move(forms)) {
  if (forms_.size() > 32) throw FormError("at most 32 basis forms are supported");
  for (std::size_t k = 0; k < forms_.size(); ++k) {
    if (!lookup_.emplace(forms_[k].symbol, int(k)).second) throw FormError("duplicate basis symbol " + forms_[k].symbol);
  }
  conj_.resize(forms_.size());
  for (std::size_t k = 0; k < forms_.size(); ++k) {
    const auto& c = forms_[k].conjugate;
    if (c.empty() || c == forms_[k].symbol) {
      conj_[k] = int(k);
      continue;
    }
    auto it = lookup_.find(c);
    if (it == lookup_.end()) throw FormError("conjugate partner " + c + " of " + forms_[k].symbol + " is not in the basis");
    const auto& back = forms_[std::size_t(it->second)].conjugate;
    if (back != forms_[k].symbol) throw FormError("conjugation pairing of " + forms_[k].symbol + " is not symmetric");
    conj_[k] = it->second;
  }
  for (const auto& [a, b] : function_partners) {
    partners_[a] = b;
    partners_[b] = a;
  }
}

int Basis::index(const std::string& symbol) const {
  auto it = lookup_.find(symbol);
  if (it == lookup_.end()) throw FormError("unknown basis symbol " + symbol);
  return it->second;
}

std::optional<int> Basis::find(const std::string& symbol) const {
  auto it = lookup_.find(symbol);
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

BasisPtr make_basis(std::vector<BasisOneForm> forms, ConjugateMap function_partners) {
  return std::make_shared<const Basis>(std::move(forms), std::move(function_partners));
}

// ---- forms -------------------------------------------------------------------

namespace {

void same_basis(const Form& a, const Form& b) {
  if (a.basis() != b.basis()) throw FormError("forms live over different coframes");
}

// sign of sorting the sequence of indices
int permutation_sign(std::vector<int>& seq) {
  int sign = 1;
  for (std::size_t i = 1; i < seq.size(); ++i)
    for (std::size_t j = i; j > 0 && seq[j - 1] > seq[j]; --j) {
      std::swap(seq[j - 1], seq[j]);
      sign = -sign;
    }
  return sign;
}

// sign of a ^ b for disjoint monomials
int wedge_sign(Monomial a, Monomial b) {
  int count = 0;
  while (b) {
    int j = std::countr_zero(b);
    b &= b - 1;
    count += std::popcount(Monomial(j + 1 >= 32 ? 0 : (a >> (j + 1))));
  }
  return (count & 1) ? -1 : 1;
}

}  // namespace

Form::Form(BasisPtr basis, int degree) : basis_(std::move(basis)), degree_(degree) {
  if (degree < 0 || degree > kMaxFormDegree) throw FormError("form degree outside 0.." + std::to_string(kMaxFormDegree));
}

Form Form::scalar(BasisPtr basis, const ScalarExpr& f) {
  Form out(std::move(basis), 0);
  out.accumulate(0, f);
  return out;
}

Form Form::basis_form(BasisPtr basis, const std::string& symbol, const ScalarExpr& coeff) {
  int k = basis->index(symbol);
  Form out(std::move(basis), 1);
  out.accumulate(Monomial(1) << k, coeff);
  return out;
}

Form Form::monomial(BasisPtr basis, const std::vector<std::string>& symbols, const ScalarExpr& coeff) {
  std::vector<int> idx;
  for (const auto& s : symbols) idx.push_back(basis->index(s));
  Form out(basis, int(idx.size()));
  int sign = permutation_sign(idx);
  Monomial m = 0;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (k && idx[k] == idx[k - 1]) return out;
    m |= Monomial(1) << idx[k];
  }
  out.accumulate(m, sign < 0 ? -coeff : coeff);
  return out;
}

std::vector<int> Form::indices(Monomial m) const {
  std::vector<int> out;
  while (m) {
    out.push_back(std::countr_zero(m));
    m &= m - 1;
  }
  return out;
}

std::vector<std::string> Form::symbols(Monomial m) const {
  std::vector<std::string> out;
  for (int k : indices(m)) out.push_back(basis_->symbol(std::size_t(k)));
  return out;
}

void Form::accumulate(Monomial m, const ScalarExpr& coeff) {
  if (std::popcount(m) != degree_) throw FormError("monomial degree does not match form degree");
  if (coeff.is_zero_literal()) return;
  auto it = terms_.find(m);
  if (it == terms_.end()) {
    terms_.emplace(m, coeff);
    return;
  }
  it->second = it->second + coeff;
  if (it->second.is_zero_literal()) terms_.erase(it);
}

Form operator+(const Form& a, const Form& b) {
  if (!a.basis()) return b;
  if (!b.basis()) return a;
  same_basis(a, b);
  if (a.degree() != b.degree()) {
    if (a.is_zero()) return b;
    if (b.is_zero()) return a;
    throw FormError("adding forms of different degree");
  }
  Form out = a;
  for (const auto& [m, c] : b.terms()) out.accumulate(m, c);
  return out;
}

Form operator-(const Form& a) { return ScalarExpr(-1) * a; }
Form operator-(const Form& a, const Form& b) { return a + (-b); }

Form operator*(const ScalarExpr& f, const Form& a) {
  Form out(a.basis(), a.degree());
  if (f.is_zero_literal()) return out;
  for (const auto& [m, c] : a.terms()) out.accumulate(m, f * c);
  return out;
}

Form wedge(const Form& a, const Form& b) {
  same_basis(a, b);
  int deg = a.degree() + b.degree();
  if (deg > kMaxFormDegree) throw FormError("wedge product exceeds the degree cap");
  Form out(a.basis(), deg);
  for (const auto& [ma, ca] : a.terms())
    for (const auto& [mb, cb] : b.terms()) {
      if (ma & mb) continue;
      ScalarExpr c = ca * cb;
      out.accumulate(ma | mb, wedge_sign(ma, mb) < 0 ? -c : c);
    }
  return out;
}

Form conjugate(const Form& a) {
  const Basis& B = *a.basis();
  Form out(a.basis(), a.degree());
  for (const auto& [m, c] : a.terms()) {
    std::vector<int> idx;
    for (int k : a.indices(m)) idx.push_back(B.conjugate_index(std::size_t(k)));
    int sign = permutation_sign(idx);
    Monomial mc = 0;
    for (int k : idx) mc |= Monomial(1) << k;
    ScalarExpr cc = conj(c, B.function_partners());
    out.accumulate(mc, sign < 0 ? -cc : cc);
  }
  return out;
}

Form reduce_mod_ideal(const Form& a, const std::vector<std::string>& generators) {
  Monomial mask = 0;
  for (const auto& g : generators) mask |= Monomial(1) << a.basis()->index(g);
  Form out(a.basis(), a.degree());
  for (const auto& [m, c] : a.terms())
    if (!(m & mask)) out.accumulate(m, c);
  return out;
}

ScalarExpr coefficient_of(const Form& a, const std::vector<std::string>& tuple) {
  if (int(tuple.size()) != a.degree()) return ScalarExpr(0);
  std::vector<int> idx;
  for (const auto& s : tuple) idx.push_back(a.basis()->index(s));
  int sign = permutation_sign(idx);
  Monomial m = 0;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (k && idx[k] == idx[k - 1]) return ScalarExpr(0);
    m |= Monomial(1) << idx[k];
  }
  auto it = a.terms().find(m);
  if (it == a.terms().end()) return ScalarExpr(0);
  return sign < 0 ? -it->second : it->second;
}

Form substitute_coframe(const Form& a, const std::map<std::string, Form>& dictionary) {
  const Basis& B = *a.basis();
  std::vector<const Form*> img(B.size(), nullptr);
  BasisPtr target;
  for (std::size_t k = 0; k < B.size(); ++k) {
    auto it = dictionary.find(B.symbol(k));
    if (it == dictionary.end()) continue;
    if (it->second.degree() != 1 && !it->second.is_zero()) throw FormError("dictionary entries must be one-forms");
    img[k] = &it->second;
    if (!target) target = it->second.basis();
    if (it->second.basis() != target) throw FormError("dictionary entries live over different coframes");
  }
  if (!target) {
    if (a.is_zero()) return a;
    throw FormError("empty substitution dictionary");
  }
  Form out(target, a.degree());
  for (const auto& [m, c] : a.terms()) {
    Form acc = Form::scalar(target, c);
    for (int k : a.indices(m)) {
      if (!img[std::size_t(k)]) throw FormError("substitution dictionary has no entry for " + B.symbol(std::size_t(k)));
      acc = wedge(acc, *img[std::size_t(k)]);
      if (acc.is_zero()) break;
    }
    if (!acc.is_zero()) out = out + acc;
  }
  return out;
}

Form substitute_functions(const Form& a, const std::map<std::string, ScalarExpr>& values) {
  return a.map_coefficients([&](const ScalarExpr& c) { return substitute(c, values); });
}

// ---- coordinate charts -------------------------------------------------------

CoordinateChart make_tube_chart(std::size_t n) {
  CoordinateChart out;
  std::vector<BasisOneForm> forms;
  for (std::size_t j = 1; j <= n; ++j) {
    std::string s = std::to_string(j);
    out.chart.coords.push_back({"z" + s, "x" + s, "y" + s});
  }
  for (std::size_t j = 1; j <= n; ++j) forms.push_back({"dz" + std::to_string(j), "dzb" + std::to_string(j)});
  for (std::size_t j = 1; j <= n; ++j) forms.push_back({"dzb" + std::to_string(j), "dz" + std::to_string(j)});
  out.basis = make_basis(std::move(forms));
  return out;
}

Form d_coordinate(const Form& a, const CoordinateChart& chart) {
  if (a.basis() != chart.basis) throw FormError("d_coordinate needs a form over the chart's coordinate differentials");
  const std::size_t n = chart.chart.coords.size();
  Form out(a.basis(), a.degree() + 1);
  for (const auto& [m, c] : a.terms()) {
    Form dc(a.basis(), 1);
    for (std::size_t j = 0; j < n; ++j) {
      const auto& z = chart.chart.coords[j].z;
      dc.accumulate(Monomial(1) << j, wirtinger(c, chart.chart, z));
      dc.accumulate(Monomial(1) << (n + j), wirtinger_bar(c, chart.chart, z));
    }
    Form mono(a.basis(), a.degree());
    mono.accumulate(m, ScalarExpr(1));
    out = out + wedge(dc, mono);
  }
  return out;
}

// ---- abstract coframes -------------------------------------------------------

AbstractCoframe::AbstractCoframe(BasisPtr basis, std::map<std::string, Form> structure,
                                 std::map<std::string, std::optional<Form>> functions)
    : basis_(std::move(basis)), functions_(std::move(functions)) {
  const Basis& B = *basis_;
  std::vector<std::optional<Form>> eq(B.size());
  for (auto& [s, f] : structure) {
    if (f.basis() != basis_) throw FormError("structure equation for " + s + " references another coframe");
    if (f.degree() != 2 && !f.is_zero()) throw FormError("structure equation for " + s + " is not a 2-form");
    eq[std::size_t(B.index(s))] = f.is_zero() ? Form(basis_, 2) : f;
  }
  for (std::size_t k = 0; k < B.size(); ++k) {
    std::size_t c = std::size_t(B.conjugate_index(k));
    if (eq[k] && eq[c]) {
      Form diff = conjugate(*eq[k]) - *eq[c];
      if (!diff.is_zero()) throw FormError("structure equations of " + B.symbol(k) + " and its conjugate disagree");
    }
  }
  for (std::size_t k = 0; k < B.size(); ++k) {
    std::size_t c = std::size_t(B.conjugate_index(k));
    if (!eq[k] && eq[c]) eq[k] = conjugate(*eq[c]);
    if (!eq[k]) throw FormError("no structure equation for " + B.symbol(k));
  }
  for (auto& e : eq) structure_.push_back(*e);

  const auto& partners = B.function_partners();
  std::vector<std::pair<std::string, std::optional<Form>>> extra;
  for (const auto& [name, df] : functions_) {
    auto it = partners.find(name);
    if (it == partners.end()) continue;
    if (functions_.count(it->second)) continue;
    extra.emplace_back(it->second, df ? std::optional<Form>(conjugate(*df)) : std::nullopt);
  }
  for (auto& e : extra) functions_.insert(std::move(e));
}

Form AbstractCoframe::d_function(const ScalarExpr& f) const {
  Form out(basis_, 1);
  if (f.is_constant()) return out;
  for (const auto& v : coordinates(f)) {
    auto it = functions_.find(v);
    if (it == functions_.end() || !it->second) throw UndeclaredDifferential(v);
    ScalarExpr p = diff(f, v);
    if (p.is_zero_literal()) continue;
    out = out + p * *it->second;
  }
  return out;
}

Form AbstractCoframe::d_monomial(Monomial m) const {
  {
    std::lock_guard<std::mutex> lock(*mutex_);
    auto it = cache_.find(m);
    if (it != cache_.end()) return it->second;
  }
  int deg = std::popcount(m);
  Form out(basis_, deg + 1);
  std::vector<int> idx;
  for (Monomial r = m; r; r &= r - 1) idx.push_back(std::countr_zero(r));
  for (std::size_t r = 0; r < idx.size(); ++r) {
    Form left = Form::scalar(basis_, ScalarExpr(1));
    for (std::size_t k = 0; k < r; ++k) left = wedge(left, Form::basis_form(basis_, basis_->symbol(std::size_t(idx[k]))));
    Form right = Form::scalar(basis_, ScalarExpr(1));
    for (std::size_t k = r + 1; k < idx.size(); ++k)
      right = wedge(right, Form::basis_form(basis_, basis_->symbol(std::size_t(idx[k]))));
    Form term = wedge(wedge(left, structure_[std::size_t(idx[r])]), right);
    out = (r % 2 == 0) ? out + term : out - term;
  }
  std::lock_guard<std::mutex> lock(*mutex_);
  cache_.emplace(m, out);
  return out;
}

Form AbstractCoframe::d(const Form& a) const {
  if (a.basis() != basis_) throw FormError("d_abstract on a form from another coframe");
  Form out(basis_, a.degree() + 1);
  for (const auto& [m, c] : a.terms()) {
    Form mono(basis_, a.degree());
    mono.accumulate(m, ScalarExpr(1));
    Form dc = d_function(c);
    if (!dc.is_zero()) out = out + wedge(dc, mono);
    if (m) out = out + c * d_monomial(m);
  }
  return out;
}

std::map<std::string, Form> d_squared_residuals(const AbstractCoframe& cf) {
  std::map<std::string, Form> out;
  for (std::size_t k = 0; k < cf.basis()->size(); ++k) out.emplace(cf.basis()->symbol(k), cf.d(cf.structure(k)));
  return out;
}

// ---- matrix-valued forms -----------------------------------------------------

MatrixForm::MatrixForm(BasisPtr basis, std::size_t n, int degree)
    : basis_(std::move(basis)), n_(n), degree_(degree), entries_(n * n, Form(basis_, degree)) {}

bool MatrixForm::is_zero() const {
  return std::all_of(entries_.begin(), entries_.end(), [](const Form& f) { return f.is_zero(); });
}

namespace {
void same_dim(const MatrixForm& a, const MatrixForm& b) {
  if (a.dim() != b.dim()) throw FormError("matrix form dimension mismatch");
}
}  // namespace

MatrixForm operator+(const MatrixForm& a, const MatrixForm& b) {
  same_dim(a, b);
  MatrixForm out = a;
  for (std::size_t i = 0; i < a.dim(); ++i)
    for (std::size_t j = 0; j < a.dim(); ++j) out(i, j) = a(i, j) + b(i, j);
  return out;
}

MatrixForm operator-(const MatrixForm& a, const MatrixForm& b) {
  same_dim(a, b);
  MatrixForm out = a;
  for (std::size_t i = 0; i < a.dim(); ++i)
    for (std::size_t j = 0; j < a.dim(); ++j) out(i, j) = a(i, j) - b(i, j);
  return out;
}

MatrixForm matrix_wedge(const MatrixForm& a, const MatrixForm& b) {
  same_dim(a, b);
  MatrixForm out(a.basis(), a.dim(), a.degree() + b.degree());
  for (std::size_t i = 0; i < a.dim(); ++i)
    for (std::size_t j = 0; j < a.dim(); ++j) {
      Form s(a.basis(), a.degree() + b.degree());
      for (std::size_t k = 0; k < a.dim(); ++k) {
        if (a(i, k).is_zero() || b(k, j).is_zero()) continue;
        s = s + wedge(a(i, k), b(k, j));
      }
      out(i, j) = s;
    }
  return out;
}

MatrixForm operator*(const EMatrix& g, const MatrixForm& a) {
  if (g.cols() != a.dim() || g.rows() != a.dim()) throw FormError("matrix form dimension mismatch");
  MatrixForm out(a.basis(), a.dim(), a.degree());
  for (std::size_t i = 0; i < a.dim(); ++i)
    for (std::size_t j = 0; j < a.dim(); ++j) {
      Form s(a.basis(), a.degree());
      for (std::size_t k = 0; k < a.dim(); ++k)
        if (!g(i, k).is_zero_literal()) s = s + g(i, k) * a(k, j);
      out(i, j) = s;
    }
  return out;
}

MatrixForm operator*(const MatrixForm& a, const EMatrix& g) {
  if (g.cols() != a.dim() || g.rows() != a.dim()) throw FormError("matrix form dimension mismatch");
  MatrixForm out(a.basis(), a.dim(), a.degree());
  for (std::size_t i = 0; i < a.dim(); ++i)
    for (std::size_t j = 0; j < a.dim(); ++j) {
      Form s(a.basis(), a.degree());
      for (std::size_t k = 0; k < a.dim(); ++k)
        if (!g(k, j).is_zero_literal()) s = s + g(k, j) * a(i, k);
      out(i, j) = s;
    }
  return out;
}

MatrixForm conjugate(const MatrixForm& a) {
  return a.map([](const Form& f) { return conjugate(f); });
}

MatrixForm transpose(const MatrixForm& a) {
  MatrixForm out = a;
  for (std::size_t i = 0; i < a.dim(); ++i)
    for (std::size_t j = 0; j < a.dim(); ++j) out(i, j) = a(j, i);
  return out;
}

}  // namespace cartan_cr
