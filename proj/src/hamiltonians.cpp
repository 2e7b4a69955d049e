#include "qctn/hamiltonians.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <map>

namespace qctn {

namespace {

using Product = std::vector<std::pair<int, Op>>;

Product concat(Product a, const Product& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

// Jordan-Wigner fermion operators on qubit p.
Product annihilate(int p) {
  Product out;
  for (int k = 0; k < p; ++k) out.emplace_back(k, Op::Z);
  out.emplace_back(p, Op::A);
  return out;
}

Product create(int p) {
  Product out;
  out.emplace_back(p, Op::Ad);
  for (int k = p - 1; k >= 0; --k) out.emplace_back(k, Op::Z);
  return out;
}

Product number(int p) { return {{p, Op::N}}; }

void add_exchange(TermList& h, double J, int a, int b) {
  h.add(make_term(0.5 * J, {{a, Op::Sp}, {b, Op::Sm}}));
  h.add(make_term(0.5 * J, {{a, Op::Sm}, {b, Op::Sp}}));
  h.add(make_term(J, {{a, Op::Sz}, {b, Op::Sz}}));
}

int up(int site) { return 2 * site; }
int down(int site) { return 2 * site + 1; }

bool is_monomial(const Eigen::Matrix2d& m) {
  for (int c = 0; c < 2; ++c) {
    if (m(0, c) != 0.0 && m(1, c) != 0.0) return false;
  }
  return true;
}

struct CompiledFactor {
  int shift;
  int row[2];
  double value[2];
};

std::vector<CompiledFactor> compile(const Term& term, int n) {
  std::vector<CompiledFactor> out;
  for (const auto& f : term.factors) {
    if (!is_monomial(f.matrix)) throw ModelError("term factor is not a monomial matrix");
    CompiledFactor c{n - 1 - f.site, {0, 0}, {0.0, 0.0}};
    for (int col = 0; col < 2; ++col) {
      c.row[col] = f.matrix(1, col) != 0.0 ? 1 : 0;
      c.value[col] = f.matrix(c.row[col], col);
    }
    out.push_back(c);
  }
  return out;
}

template <typename Visit>
void for_each_entry(const TermList& t, Visit&& visit) {
  const std::size_t dim = std::size_t{1} << t.qubit_count;
  for (const auto& term : t.terms) {
    const auto factors = compile(term, t.qubit_count);
    for (std::size_t idx = 0; idx < dim; ++idx) {
      double amp = term.coefficient;
      std::size_t out = idx;
      for (const auto& f : factors) {
        const int b = static_cast<int>((idx >> f.shift) & 1U);
        amp *= f.value[b];
        if (amp == 0.0) break;
        out ^= static_cast<std::size_t>(f.row[b] ^ b) << f.shift;
      }
      if (amp != 0.0) visit(out, idx, amp);
    }
  }
}

Eigen::MatrixXd kron_factors(const Term& term) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Constant(1, 1, term.coefficient);
  for (const auto& f : term.factors) {
    Eigen::MatrixXd k(m.rows() * 2, m.cols() * 2);
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) k.block<2, 2>(2 * r, 2 * c) = m(r, c) * f.matrix;
    m = std::move(k);
  }
  return m;
}

}  // namespace

Eigen::Matrix2d op_matrix(Op op) {
  Eigen::Matrix2d m = Eigen::Matrix2d::Zero();
  switch (op) {
    case Op::I: m << 1, 0, 0, 1; break;
    case Op::X: m << 0, 1, 1, 0; break;
    case Op::Z: m << 1, 0, 0, -1; break;
    case Op::Sx: m << 0, 0.5, 0.5, 0; break;
    case Op::iSy: m << 0, 0.5, -0.5, 0; break;
    case Op::Sz: m << 0.5, 0, 0, -0.5; break;
    case Op::Sp: m << 0, 1, 0, 0; break;
    case Op::Sm: m << 0, 0, 1, 0; break;
    case Op::N: m << 0, 0, 0, 1; break;
    case Op::A: m << 0, 1, 0, 0; break;
    case Op::Ad: m << 0, 0, 1, 0; break;
  }
  return m;
}

std::vector<int> Term::support() const {
  std::vector<int> s;
  for (const auto& f : factors) s.push_back(f.site);
  return s;
}

Term make_term(double coefficient, const std::vector<Factor>& product) {
  std::map<int, Eigen::Matrix2d> merged;
  for (const auto& f : product) {
    auto it = merged.find(f.site);
    if (it == merged.end()) merged.emplace(f.site, f.matrix);
    else it->second = it->second * f.matrix;
  }
  Term t;
  t.coefficient = coefficient;
  for (auto& [site, m] : merged) {
    if (site < 0) throw ModelError("negative site index in term");
    t.factors.push_back(Factor{site, m});
  }
  return t;
}

Term make_term(double coefficient, const std::vector<std::pair<int, Op>>& product) {
  std::vector<Factor> f;
  for (auto [site, op] : product) f.push_back(Factor{site, op_matrix(op)});
  return make_term(coefficient, f);
}

void TermList::add(Term t) {
  for (const auto& f : t.factors) {
    if (f.site >= qubit_count) throw ModelError("term acts on qubit " + std::to_string(f.site) + " of " + std::to_string(qubit_count));
  }
  terms.push_back(std::move(t));
}

void TermList::append(const TermList& other, double scale) {
  for (Term t : other.terms) {
    t.coefficient *= scale;
    add(std::move(t));
  }
}

std::string model_name(Model m) {
  switch (m) {
    case Model::heisenberg_1d: return "heisenberg-1d";
    case Model::heisenberg_2d_snake: return "heisenberg-2d-snake";
    case Model::fermi_hubbard_1d: return "fermi-hubbard-1d";
  }
  return "";
}

Model parse_model(const std::string& name) {
  for (Model m : {Model::heisenberg_1d, Model::heisenberg_2d_snake, Model::fermi_hubbard_1d}) {
    if (model_name(m) == name) return m;
  }
  throw ModelError("unknown model '" + name + "'");
}

int ModelSpec::site_count() const { return model == Model::heisenberg_2d_snake ? Lx * Ly : L; }

int ModelSpec::qubit_count() const { return model == Model::fermi_hubbard_1d ? 2 * L : site_count(); }

nlohmann::json to_json(const ModelSpec& s) {
  nlohmann::json j{{"model", model_name(s.model)}};
  switch (s.model) {
    case Model::heisenberg_1d:
      j["L"] = s.L;
      j["J"] = s.J;
      break;
    case Model::heisenberg_2d_snake:
      j["Lx"] = s.Lx;
      j["Ly"] = s.Ly;
      j["J"] = s.J;
      break;
    case Model::fermi_hubbard_1d:
      j["L"] = s.L;
      j["t"] = s.t;
      j["U"] = s.U;
      j["mu"] = s.chemical_potential();
      break;
  }
  return j;
}

ModelSpec model_from_json(const nlohmann::json& j) {
  try {
    ModelSpec s;
    s.model = parse_model(j.at("model").get<std::string>());
    s.L = j.value("L", 0);
    s.Lx = j.value("Lx", 0);
    s.Ly = j.value("Ly", 0);
    s.J = j.value("J", 1.0);
    s.t = j.value("t", 1.0);
    s.U = j.value("U", 3.0);
    if (j.contains("mu")) s.mu = j.at("mu").get<double>();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ModelError(std::string("malformed model specification: ") + e.what());
  }
}

int snake_index(int x, int y, int Lx) { return y * Lx + (y % 2 == 0 ? x : Lx - 1 - x); }

std::pair<int, int> snake_coords(int index, int Lx) {
  const int y = index / Lx;
  const int r = index % Lx;
  return {y % 2 == 0 ? r : Lx - 1 - r, y};
}

TermList build_terms(const ModelSpec& spec) {
  TermList h;
  switch (spec.model) {
    case Model::heisenberg_1d: {
      if (spec.L < 1) throw ModelError("heisenberg-1d needs L >= 1");
      h.qubit_count = spec.L;
      for (int i = 0; i + 1 < spec.L; ++i) add_exchange(h, spec.J, i, i + 1);
      break;
    }
    case Model::heisenberg_2d_snake: {
      if (spec.Lx < 1 || spec.Ly < 1) throw ModelError("heisenberg-2d-snake needs Lx, Ly >= 1");
      h.qubit_count = spec.Lx * spec.Ly;
      std::vector<std::pair<int, int>> bonds;
      for (int y = 0; y < spec.Ly; ++y) {
        for (int x = 0; x < spec.Lx; ++x) {
          const int a = snake_index(x, y, spec.Lx);
          if (x + 1 < spec.Lx) bonds.emplace_back(a, snake_index(x + 1, y, spec.Lx));
          if (y + 1 < spec.Ly) bonds.emplace_back(a, snake_index(x, y + 1, spec.Lx));
        }
      }
      for (auto& b : bonds) {
        if (b.first > b.second) std::swap(b.first, b.second);
      }
      std::sort(bonds.begin(), bonds.end());
      for (auto [a, b] : bonds) add_exchange(h, spec.J, a, b);
      break;
    }
    case Model::fermi_hubbard_1d: {
      if (spec.L < 1) throw ModelError("fermi-hubbard-1d needs L >= 1");
      h.qubit_count = 2 * spec.L;
      const double mu = spec.chemical_potential();
      for (int i = 0; i + 1 < spec.L; ++i) {
        for (int (*spin)(int) : {up, down}) {
          const int p = spin(i), r = spin(i + 1);
          h.add(make_term(-spec.t, concat(create(p), annihilate(r))));
          h.add(make_term(-spec.t, concat(create(r), annihilate(p))));
        }
      }
      for (int i = 0; i < spec.L; ++i) {
        h.add(make_term(spec.U, concat(number(up(i)), number(down(i)))));
        h.add(make_term(-mu, number(up(i))));
        h.add(make_term(-mu, number(down(i))));
      }
      break;
    }
  }
  return h;
}

TermList spin_correlation_terms(const ModelSpec& spec, int i, int j) {
  TermList out;
  out.qubit_count = spec.qubit_count();
  const int n = spec.site_count();
  if (i < 0 || j < 0 || i >= n || j >= n) throw ModelError("correlation site outside lattice");
  if (spec.model != Model::fermi_hubbard_1d) {
    out.add(make_term(0.5, {{i, Op::Sp}, {j, Op::Sm}}));
    out.add(make_term(0.5, {{i, Op::Sm}, {j, Op::Sp}}));
    out.add(make_term(1.0, {{i, Op::Sz}, {j, Op::Sz}}));
    return out;
  }
  auto splus = [](int s) { return concat(create(up(s)), annihilate(down(s))); };
  auto sminus = [](int s) { return concat(create(down(s)), annihilate(up(s))); };
  out.add(make_term(0.5, concat(splus(i), sminus(j))));
  out.add(make_term(0.5, concat(sminus(i), splus(j))));
  for (int a : {up(i), down(i)}) {
    for (int b : {up(j), down(j)}) {
      const double sign = ((a % 2) == (b % 2)) ? 1.0 : -1.0;
      out.add(make_term(0.25 * sign, concat(number(a), number(b))));
    }
  }
  return out;
}

MPO terms_to_mpo(const TermList& t, double cutoff) {
  const int L = t.qubit_count;
  if (L < 1) throw ModelError("term list has no qubits");
  const std::size_t T = std::max<std::size_t>(1, t.terms.size());
  const Eigen::Matrix2d id = Eigen::Matrix2d::Identity();
  auto factor_at = [&](const Term& term, int site) -> Eigen::Matrix2d {
    for (const auto& f : term.factors) {
      if (f.site == site) return f.matrix;
    }
    return id;
  };
  MPO h;
  for (int i = 0; i < L; ++i) {
    const std::size_t left = i == 0 ? 1 : T;
    const std::size_t right = i == L - 1 ? 1 : T;
    Tensor w({left, 2, 2, right});
    for (std::size_t k = 0; k < t.terms.size(); ++k) {
      const Term& term = t.terms[k];
      Eigen::Matrix2d m = factor_at(term, i);
      if (i == 0) m *= term.coefficient;
      const std::size_t l = i == 0 ? 0 : k;
      const std::size_t r = i == L - 1 ? 0 : k;
      for (std::size_t o = 0; o < 2; ++o)
        for (std::size_t p = 0; p < 2; ++p) w.at({l, o, p, r}) += m(static_cast<Eigen::Index>(o), static_cast<Eigen::Index>(p));
    }
    h.sites.push_back(std::move(w));
  }
  return compress_mpo(h, cutoff);
}

void apply_terms(const TermList& t, std::span<const double> x, std::span<double> y) {
  const std::size_t dim = std::size_t{1} << t.qubit_count;
  if (x.size() != dim || y.size() != dim) throw ModelError("vector length does not match 2^qubit_count");
  std::fill(y.begin(), y.end(), 0.0);
  for_each_entry(t, [&](std::size_t out, std::size_t in, double amp) { y[out] += amp * x[in]; });
}

Eigen::MatrixXd densify(const TermList& t) {
  if (t.qubit_count > kMaxDenseQubits) {
    throw ModelError("densify is limited to " + std::to_string(kMaxDenseQubits) + " qubits");
  }
  const Eigen::Index dim = Eigen::Index{1} << t.qubit_count;
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);
  for_each_entry(t, [&](std::size_t out, std::size_t in, double amp) {
    h(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(in)) += amp;
  });
  return h;
}

std::vector<LocalTerm> group_local_terms(const TermList& t) {
  std::map<std::vector<int>, Eigen::MatrixXd> groups;
  for (const auto& term : t.terms) {
    const auto sites = term.support();
    const Eigen::MatrixXd m = kron_factors(term);
    auto it = groups.find(sites);
    if (it == groups.end()) groups.emplace(sites, m);
    else it->second += m;
  }
  std::vector<LocalTerm> out;
  for (auto& [sites, m] : groups) out.push_back(LocalTerm{sites, std::move(m)});
  return out;
}

TermList concave_shift(const TermList& t) {
  TermList out = t;
  for (const auto& g : group_local_terms(t)) {
    const Eigen::MatrixXd sym = 0.5 * (g.matrix + g.matrix.transpose());
    const double top = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(sym, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
    std::vector<std::pair<int, Op>> ids;
    for (int s : g.sites) ids.emplace_back(s, Op::I);
    out.add(make_term(-top, ids));
  }
  return out;
}

}  // namespace qctn
