#include "qctn/mps.hpp"

#include "qctn/statevector.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <random>

namespace qctn {

namespace {

std::size_t bond_product(const std::vector<std::size_t>& dims) {
  return dims.empty() ? 1 : *std::max_element(dims.begin(), dims.end());
}

void check_sites(const MPS& m) {
  if (m.sites.empty()) throw ShapeError("MPS has no sites");
  for (std::size_t i = 0; i < m.sites.size(); ++i) {
    const auto& s = m.sites[i].shape();
    if (s.size() != 3) throw ShapeError("MPS site " + std::to_string(i) + " is not rank 3");
    if (i > 0 && s[0] != m.sites[i - 1].dim(2)) throw ShapeError("MPS bond mismatch at site " + std::to_string(i));
  }
  if (m.sites.front().dim(0) != 1 || m.sites.back().dim(2) != 1) throw ShapeError("MPS boundary bonds must be 1");
}

void check_pair(const MPS& a, const MPS& b) {
  check_sites(a);
  check_sites(b);
  if (a.length() != b.length()) throw ShapeError("MPS lengths differ");
  for (std::size_t i = 0; i < a.length(); ++i) {
    if (a.sites[i].dim(1) != b.sites[i].dim(1)) throw ShapeError("physical dimensions differ at site " + std::to_string(i));
  }
}

Tensor apply_site_operator(const Eigen::Matrix2d& op, const Tensor& site) {
  const Tensor o = Tensor::from_matrix(Eigen::MatrixXd(op));
  return permute(contract_pair(o, site, {{1, 1}}), {1, 0, 2});
}

// Transfer matrix step E'(ra, rb) = sum a(la,p,ra) E(la,lb) b(lb,p,rb).
Tensor transfer(const Tensor& e, const Tensor& a, const Tensor& b) {
  const Tensor x = contract_pair(e, b, {{1, 0}});
  return contract_pair(a, x, {{0, 0}, {1, 1}});
}

template <typename T>
void write_le(std::ostream& out, T value) {
  auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(value);
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  out.write(reinterpret_cast<const char*>(bytes.data()), sizeof(T));
}

template <typename T>
T read_le(std::istream& in) {
  std::array<unsigned char, sizeof(T)> bytes{};
  in.read(reinterpret_cast<char*>(bytes.data()), sizeof(T));
  if (!in) throw std::runtime_error("truncated MPS checkpoint");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  return std::bit_cast<T>(bytes);
}

constexpr char kMagic[8] = {'Q', 'C', 'T', 'N', 'M', 'P', 'S', '1'};

}  // namespace

std::vector<std::size_t> MPS::bond_dims() const {
  std::vector<std::size_t> d;
  for (std::size_t i = 0; i + 1 < sites.size(); ++i) d.push_back(sites[i].dim(2));
  return d;
}

std::size_t MPS::max_bond() const { return bond_product(bond_dims()); }

std::vector<std::size_t> MPO::bond_dims() const {
  std::vector<std::size_t> d;
  for (std::size_t i = 0; i + 1 < sites.size(); ++i) d.push_back(sites[i].dim(3));
  return d;
}

std::size_t MPO::max_bond() const { return bond_product(bond_dims()); }

MPS product_state(const std::vector<int>& bits) {
  MPS m;
  for (int b : bits) {
    Tensor t({1, 2, 1});
    t[static_cast<std::size_t>(b != 0)] = 1.0;
    m.sites.push_back(std::move(t));
  }
  m.form = CanonicalForm::right;
  return m;
}

MPS random_mps(std::size_t L, std::size_t D, std::uint64_t seed, std::size_t d) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  MPS m;
  m.phys_dim = d;
  std::size_t left = 1;
  for (std::size_t i = 0; i < L; ++i) {
    // Largest useful bond from either end.
    std::size_t cap_left = 1, cap_right = 1;
    for (std::size_t k = 0; k <= i && cap_left < D; ++k) cap_left *= d;
    for (std::size_t k = i + 1; k < L && cap_right < D; ++k) cap_right *= d;
    const std::size_t right = i + 1 == L ? 1 : std::min({D, cap_left, cap_right});
    Tensor t({left, d, right});
    for (double& x : t.storage()) x = normal(rng);
    m.sites.push_back(std::move(t));
    left = right;
  }
  return m;
}

MPS canonicalize(const MPS& in, CanonicalForm form, int center) {
  check_sites(in);
  MPS m = in;
  const int L = static_cast<int>(m.length());
  if (form == CanonicalForm::none) return m;
  int stop_left = form == CanonicalForm::left ? L - 1 : form == CanonicalForm::right ? 0 : center;
  int stop_right = form == CanonicalForm::left ? L - 1 : form == CanonicalForm::right ? 0 : center;
  if (form == CanonicalForm::mixed && (center < 0 || center >= L)) throw ShapeError("canonical center outside chain");
  for (int i = 0; i < stop_left; ++i) {
    auto f = qr_or_lq(m.sites[static_cast<std::size_t>(i)], {{0, 1}, {2}}, Side::left);
    m.sites[static_cast<std::size_t>(i)] = std::move(f.first);
    m.sites[static_cast<std::size_t>(i + 1)] = contract_pair(f.second, m.sites[static_cast<std::size_t>(i + 1)], {{1, 0}});
  }
  for (int i = L - 1; i > stop_right; --i) {
    auto f = qr_or_lq(m.sites[static_cast<std::size_t>(i)], {{0}, {1, 2}}, Side::right);
    m.sites[static_cast<std::size_t>(i)] = std::move(f.second);
    m.sites[static_cast<std::size_t>(i - 1)] = contract_pair(m.sites[static_cast<std::size_t>(i - 1)], f.first, {{2, 0}});
  }
  Tensor& c = m.sites[static_cast<std::size_t>(stop_left)];
  const double n = c.norm();
  if (n > 0.0) c *= 1.0 / n;
  m.form = form;
  m.center = form == CanonicalForm::mixed ? center : -1;
  return m;
}

double isometry_residual(const Tensor& site, Side side) {
  const RowMatrix a = side == Side::left ? site.to_matrix(2) : site.to_matrix(1);
  const RowMatrix g = side == Side::left ? RowMatrix(a.transpose() * a) : RowMatrix(a * a.transpose());
  return (g - RowMatrix::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff();
}

double overlap(const MPS& a, const MPS& b) {
  check_pair(a, b);
  Tensor e({1, 1}, {1.0});
  for (std::size_t i = 0; i < a.length(); ++i) e = transfer(e, a.sites[i], b.sites[i]);
  return e[0];
}

double norm(const MPS& m) { return std::sqrt(std::max(0.0, overlap(m, m))); }

Tensor mpo_env_left(const Tensor& env, const Tensor& a, const Tensor& w) {
  const Tensor x = contract_pair(env, a, {{2, 0}});        // (bra, m, p, r)
  const Tensor y = contract_pair(x, w, {{1, 0}, {2, 2}});  // (bra, r, po, m')
  const Tensor z = contract_pair(a, y, {{0, 0}, {1, 2}});  // (r', r, m')
  return permute(z, {0, 2, 1});
}

Tensor mpo_env_right(const Tensor& env, const Tensor& a, const Tensor& w) {
  const Tensor x = contract_pair(a, env, {{2, 2}});        // (l, p, bra, m')
  const Tensor y = contract_pair(w, x, {{2, 1}, {3, 3}});  // (m, po, l, bra)
  return contract_pair(a, y, {{1, 1}, {2, 3}});            // (l', m, l)
}

double mpo_expectation(const MPS& m, const MPO& h) {
  check_sites(m);
  if (h.length() != m.length()) throw ShapeError("MPO and MPS lengths differ");
  Tensor env({1, 1, 1}, {1.0});  // (bra, mpo, ket)
  for (std::size_t i = 0; i < m.length(); ++i) {
    const Tensor& a = m.sites[i];
    const Tensor& w = h.sites[i];
    if (w.dim(1) != a.dim(1) || w.dim(2) != a.dim(1)) throw ShapeError("MPO physical dimension mismatch at site " + std::to_string(i));
    env = mpo_env_left(env, a, w);
  }
  return env[0];
}

double product_expectation(const MPS& m, const std::vector<std::pair<int, Eigen::Matrix2d>>& ops) {
  check_sites(m);
  Tensor e({1, 1}, {1.0});
  Tensor n({1, 1}, {1.0});
  for (std::size_t i = 0; i < m.length(); ++i) {
    Tensor ket = m.sites[i];
    for (const auto& [site, op] : ops) {
      if (site < 0 || static_cast<std::size_t>(site) >= m.length()) throw ShapeError("operator site outside chain");
      if (static_cast<std::size_t>(site) == i) ket = apply_site_operator(op, ket);
    }
    e = transfer(e, m.sites[i], ket);
    n = transfer(n, m.sites[i], m.sites[i]);
  }
  return e[0] / n[0];
}

std::vector<double> to_statevector(const MPS& m) {
  check_sites(m);
  Tensor v = m.sites[0].reshaped({m.sites[0].dim(1), m.sites[0].dim(2)});
  for (std::size_t i = 1; i < m.length(); ++i) {
    const Tensor x = contract_pair(v, m.sites[i], {{1, 0}});
    v = x.reshaped({x.dim(0) * x.dim(1), x.dim(2)});
  }
  return v.storage();
}

MPS from_statevector(const std::vector<double>& psi, std::size_t L, std::size_t max_bond, double cutoff) {
  if (psi.size() != (std::size_t{1} << L)) throw ShapeError("statevector length is not 2^L");
  MPS m;
  Tensor rest({1, 2, psi.size() / 2}, psi);
  for (std::size_t i = 0; i + 1 < L; ++i) {
    auto svd = svd_truncated(rest, {{0, 1}, {2}}, max_bond, cutoff);
    const std::size_t k = svd.s.size();
    m.sites.push_back(std::move(svd.u));
    Tensor sv = svd.vt;
    for (std::size_t r = 0; r < k; ++r) {
      auto row = sv.as_matrix(k).row(static_cast<Eigen::Index>(r));
      row *= svd.s[r];
    }
    rest = sv.reshaped({k, 2, sv.size() / (2 * k)});
  }
  m.sites.push_back(rest.reshaped({rest.dim(0), 2, 1}));
  return m;
}

Eigen::MatrixXd mpo_to_dense(const MPO& h) {
  const Tensor& w0 = h.sites.at(0);
  Tensor x = w0.reshaped({w0.dim(1), w0.dim(2), w0.dim(3)});
  for (std::size_t i = 1; i < h.length(); ++i) {
    const Tensor& w = h.sites[i];
    const Tensor y = contract_pair(x, w, {{2, 0}});  // (O, I, o, i, D')
    x = permute_reshape(y, {0, 2, 1, 3, 4}, {y.dim(0) * y.dim(2), y.dim(1) * y.dim(3), y.dim(4)});
  }
  return Eigen::MatrixXd(x.to_matrix(1));
}

MPS compress(const MPS& in, std::size_t max_bond, double cutoff) {
  MPS m = canonicalize(in, CanonicalForm::left);
  for (std::size_t i = m.length() - 1; i > 0; --i) {
    auto svd = svd_truncated(m.sites[i], {{0}, {1, 2}}, max_bond, cutoff);
    Tensor us = svd.u;
    const std::size_t k = svd.s.size();
    for (std::size_t r = 0; r < us.dim(0); ++r) {
      for (std::size_t c = 0; c < k; ++c) us[r * k + c] *= svd.s[c];
    }
    m.sites[i] = std::move(svd.vt);
    m.sites[i - 1] = contract_pair(m.sites[i - 1], us, {{2, 0}});
  }
  Tensor& c = m.sites[0];
  const double n = c.norm();
  if (n > 0.0) c *= 1.0 / n;
  m.form = CanonicalForm::right;
  m.center = -1;
  return m;
}

MPO compress_mpo(const MPO& h, double cutoff) {
  const std::size_t L = h.length();
  std::vector<Tensor> s;
  std::vector<std::pair<std::size_t, std::size_t>> phys;
  for (const auto& w : h.sites) {
    phys.emplace_back(w.dim(1), w.dim(2));
    s.push_back(w.reshaped({w.dim(0), w.dim(1) * w.dim(2), w.dim(3)}));
  }
  for (std::size_t i = 0; i + 1 < L; ++i) {
    auto f = qr_or_lq(s[i], {{0, 1}, {2}}, Side::left);
    s[i] = std::move(f.first);
    s[i + 1] = contract_pair(f.second, s[i + 1], {{1, 0}});
  }
  for (std::size_t i = L - 1; i > 0; --i) {
    auto svd = svd_truncated(s[i], {{0}, {1, 2}}, s[i].dim(0), cutoff);
    Tensor us = svd.u;
    const std::size_t k = svd.s.size();
    for (std::size_t r = 0; r < us.dim(0); ++r) {
      for (std::size_t c = 0; c < k; ++c) us[r * k + c] *= svd.s[c];
    }
    s[i] = std::move(svd.vt);
    s[i - 1] = contract_pair(s[i - 1], us, {{2, 0}});
  }
  MPO out;
  for (std::size_t i = 0; i < L; ++i) {
    out.sites.push_back(s[i].reshaped({s[i].dim(0), phys[i].first, phys[i].second, s[i].dim(2)}));
  }
  return out;
}

std::vector<BlockShape> block_shapes(const std::vector<Block>& blocks, int L) {
  std::vector<BlockShape> shapes;
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    BlockShape s;
    s.lo = blocks[k].lo;
    s.hi = blocks[k].hi;
    s.n = s.hi - s.lo + 1;
    s.bond_in = k == 0 ? 0 : std::max(0, blocks[k - 1].hi - s.lo + 1);
    s.fresh = s.n - s.bond_in;
    s.emitted = (k + 1 < blocks.size() ? blocks[k + 1].lo : L) - s.lo;
    s.bond_out = s.n - s.emitted;
    shapes.push_back(s);
  }
  return shapes;
}

std::vector<double> block_columns(const AnsatzDescriptor& a, const Block& block, const BlockShape& shape) {
  const std::size_t batch = std::size_t{1} << shape.bond_in;
  std::vector<double> v((std::size_t{1} << shape.n) * batch, 0.0);
  for (std::size_t c = 0; c < batch; ++c) v[(c << shape.fresh) * batch + c] = 1.0;
  std::vector<int> local;
  for (int g : block.gates) {
    const auto& gate = a.gates[static_cast<std::size_t>(g)];
    local.clear();
    for (int w : gate.wires) local.push_back(w - shape.lo);
    sv::apply_gate(v, shape.n, local, realize_gate_matrix(gate.params), batch);
  }
  return v;
}

Tensor block_tensor(const std::vector<double>& columns, const BlockShape& shape) {
  const std::size_t cols = std::size_t{1} << shape.bond_in;
  const std::size_t rows = std::size_t{1} << shape.n;
  Tensor t({cols, std::size_t{1} << shape.emitted, std::size_t{1} << shape.bond_out});
  for (std::size_t l = 0; l < cols; ++l) {
    for (std::size_t idx = 0; idx < rows; ++idx) t[l * rows + idx] = columns[idx * cols + l];
  }
  return t;
}

MPS qmps_to_dense_mps(const AnsatzDescriptor& a) {
  if (!is_qmps(a.family)) throw AnsatzError("qmps_to_dense_mps needs a qMPS descriptor, got " + family_name(a.family));
  const auto shapes = block_shapes(a.blocks, a.L);
  MPS m;
  for (std::size_t k = 0; k < a.blocks.size(); ++k) {
    const BlockShape& s = shapes[k];
    Tensor cur = block_tensor(block_columns(a, a.blocks[k], s), s);
    std::vector<Tensor> pieces;
    for (int j = s.emitted - 1; j >= 1; --j) {
      const std::size_t left_phys = std::size_t{1} << j;
      const Tensor x = cur.reshaped({cur.dim(0), left_phys, 2, cur.dim(2)});
      auto f = qr_or_lq(x, {{0, 1}, {2, 3}}, Side::right);
      pieces.push_back(std::move(f.second));
      cur = f.first;
    }
    if (s.emitted > 0) pieces.push_back(cur);
    for (auto it = pieces.rbegin(); it != pieces.rend(); ++it) m.sites.push_back(std::move(*it));
  }
  return compress(m, std::numeric_limits<std::size_t>::max(), 1e-13);
}

MPS circuit_to_mps(const AnsatzDescriptor& a) {
  MPS m = product_state(std::vector<int>(static_cast<std::size_t>(a.L), 0));
  for (const auto& g : a.gates) {
    const int lo = *std::min_element(g.wires.begin(), g.wires.end());
    const int hi = *std::max_element(g.wires.begin(), g.wires.end());
    const int n = hi - lo + 1;
    if (n > kMaxGateSpan) {
      throw AnsatzError("gate spans " + std::to_string(n) + " wires; circuit_to_mps is limited to " +
                        std::to_string(kMaxGateSpan));
    }
    Tensor x = m.sites[static_cast<std::size_t>(lo)];
    for (int s = lo + 1; s <= hi; ++s) {
      const Tensor y = contract_pair(x, m.sites[static_cast<std::size_t>(s)], {{2, 0}});
      x = y.reshaped({y.dim(0), y.dim(1) * y.dim(2), y.dim(3)});
    }
    std::vector<int> local;
    for (int w : g.wires) local.push_back(w - lo);
    const Eigen::MatrixXd gm = realize_gate_matrix(g.params);
    const std::size_t dl = x.dim(0), slice = x.dim(1) * x.dim(2);
    for (std::size_t l = 0; l < dl; ++l) {
      sv::apply_gate(std::span<double>(x.storage().data() + l * slice, slice), n, local, gm, x.dim(2));
    }
    for (int s = lo; s < hi; ++s) {
      const std::size_t rest = x.dim(1) / 2;
      const Tensor y = x.reshaped({x.dim(0), 2, rest * x.dim(2)});
      auto svd = svd_truncated(y, {{0, 1}, {2}}, std::numeric_limits<std::size_t>::max(), 1e-14);
      const std::size_t k = svd.s.size();
      m.sites[static_cast<std::size_t>(s)] = std::move(svd.u);
      Tensor sv = std::move(svd.vt);
      const std::size_t cols = sv.size() / k;
      for (std::size_t r = 0; r < k; ++r) {
        for (std::size_t c = 0; c < cols; ++c) sv[r * cols + c] *= svd.s[r];
      }
      x = sv.reshaped({k, rest, sv.size() / (k * rest)});
    }
    m.sites[static_cast<std::size_t>(hi)] = x.reshaped({x.dim(0), 2, x.dim(2)});
  }
  m.form = CanonicalForm::none;
  return m;
}

void save_mps(const MPS& m, const std::string& path) {
  check_sites(m);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.write(kMagic, sizeof(kMagic));
  write_le<std::uint64_t>(out, m.length());
  write_le<std::uint64_t>(out, m.phys_dim);
  for (const auto& s : m.sites) {
    for (std::size_t ax = 0; ax < 3; ++ax) write_le<std::uint64_t>(out, s.dim(ax));
    for (double v : s.storage()) write_le<double>(out, v);
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

MPS load_mps(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  char magic[sizeof(kMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) throw std::runtime_error(path + " is not an MPS checkpoint");
  MPS m;
  const auto L = read_le<std::uint64_t>(in);
  m.phys_dim = read_le<std::uint64_t>(in);
  for (std::uint64_t i = 0; i < L; ++i) {
    Shape shape(3);
    for (auto& d : shape) d = read_le<std::uint64_t>(in);
    std::vector<double> data(shape_size(shape));
    for (double& v : data) v = read_le<double>(in);
    m.sites.emplace_back(shape, std::move(data));
  }
  check_sites(m);
  return m;
}

}  // namespace qctn
