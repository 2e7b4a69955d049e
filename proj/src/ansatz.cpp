#include "qctn/ansatz.hpp"

#include "qctn/statevector.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <tuple>

namespace qctn {

namespace {

struct FamilyName {
  Family family;
  const char* name;
};

constexpr FamilyName kFamilyNames[] = {
    {Family::qmps_b, "qMPS-b"},   {Family::qmps_l, "qMPS-l"}, {Family::qmps_m, "qMPS-m"},
    {Family::qmera_b, "qMERA-b"}, {Family::qc_b, "QC-b"},     {Family::qc_l, "QC-l"},
    {Family::dense_block_mera, "dense-block-MERA"},
};

void add_gate(AnsatzDescriptor& a, std::vector<int> wires, int layer, int unit) {
  GatePlacement g;
  g.params = GateParams::identity(static_cast<int>(wires.size()));
  g.wires = std::move(wires);
  g.layer = layer;
  g.unit = unit;
  a.gates.push_back(std::move(g));
}

// Brick-wall of depth tau over an ordered wire list: layer t holds the
// neighbouring pairs starting at positions of parity t.
void brickwall(AnsatzDescriptor& a, const std::vector<int>& wires, int tau, int unit) {
  const int n = static_cast<int>(wires.size());
  for (int t = 0; t < tau; ++t) {
    for (int p = t % 2; p + 1 < n; p += 2) add_gate(a, {wires[p], wires[p + 1]}, t, unit);
  }
}

// Ladder: each layer is a staircase from the bottom wire up to the top.
void ladder(AnsatzDescriptor& a, const std::vector<int>& wires, int tau, int unit) {
  const int n = static_cast<int>(wires.size());
  for (int t = 0; t < tau; ++t) {
    for (int p = n - 2; p >= 0; --p) add_gate(a, {wires[p], wires[p + 1]}, t, unit);
  }
}

// Binary MERA over n coarse sites, listed in execution order (top first).
std::vector<std::pair<int, int>> mera_pairs(int n) {
  std::vector<std::pair<int, int>> pairs;
  if (n < 2) return pairs;
  int span = 1;
  while (span * 2 < n) span *= 2;
  pairs.emplace_back(0, span);
  for (int s = span / 2; s >= 1; s /= 2) {
    for (int i = 0; i + s < n; i += 2 * s) pairs.emplace_back(i, i + s);
    for (int i = 0; i + 2 * s < n; i += 2 * s) pairs.emplace_back(i + s, i + 2 * s);
  }
  return pairs;
}

std::vector<int> concat(const std::vector<int>& x, const std::vector<int>& y) {
  std::vector<int> out = x;
  out.insert(out.end(), y.begin(), y.end());
  return out;
}

std::vector<int> range_wires(int lo, int hi) {
  std::vector<int> w;
  for (int i = lo; i <= hi; ++i) w.push_back(i);
  return w;
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw AnsatzError(msg);
}

AnsatzDescriptor build_qmps(Family family, int L, int q, int tau, int q_m) {
  require(q >= 1, "qMPS needs q >= 1");
  require(L >= q + 1, "qMPS needs L >= q + 1 (L=" + std::to_string(L) + ", q=" + std::to_string(q) + ")");
  if (family == Family::qmps_m) require(q_m >= 1 && q_m <= q, "qMPS-m needs 1 <= q_m <= q");
  AnsatzDescriptor a;
  a.family = family;
  a.L = L;
  a.q = q;
  a.tau = tau;
  a.q_m = family == Family::qmps_m ? q_m : 0;
  int unit = 0;
  for (int j = 0; j + q < L; ++j) {
    Block b{j, j + q, {}};
    const std::size_t first = a.gates.size();
    const std::vector<int> wires = range_wires(j, j + q);
    if (family == Family::qmps_b) {
      brickwall(a, wires, tau, unit++);
    } else if (family == Family::qmps_l) {
      ladder(a, wires, tau, unit++);
    } else {
      std::vector<std::vector<int>> sites;
      for (int s = 0; s <= q; s += q_m) sites.push_back(range_wires(j + s, std::min(j + s + q_m - 1, j + q)));
      const auto pairs = mera_pairs(static_cast<int>(sites.size()));
      if (pairs.empty()) brickwall(a, wires, tau, unit++);
      for (auto [x, y] : pairs) brickwall(a, concat(sites[x], sites[y]), tau, unit++);
    }
    for (std::size_t g = first; g < a.gates.size(); ++g) b.gates.push_back(static_cast<int>(g));
    a.blocks.push_back(std::move(b));
  }
  return a;
}

AnsatzDescriptor build_mera(Family family, int L, int q, int tau) {
  require(q >= 1, "MERA needs q >= 1");
  require(L % q == 0, "MERA needs q to divide L");
  const int n = L / q;
  require(n >= 2 && (n & (n - 1)) == 0, "MERA needs L / q to be a power of two >= 2");
  if (family == Family::dense_block_mera) require(q <= 3, "dense-block-MERA supports q <= 3");
  AnsatzDescriptor a;
  a.family = family;
  a.L = L;
  a.q = q;
  a.tau = tau;
  int unit = 0;
  for (auto [x, y] : mera_pairs(n)) {
    const std::vector<int> wires = concat(range_wires(x * q, x * q + q - 1), range_wires(y * q, y * q + q - 1));
    if (family == Family::dense_block_mera) {
      add_gate(a, wires, 0, unit++);
      a.gates.back().dense = true;
    } else {
      brickwall(a, wires, tau, unit++);
    }
  }
  return a;
}

AnsatzDescriptor build_qc(Family family, int L, int tau) {
  require(L >= 2, "global circuits need L >= 2");
  AnsatzDescriptor a;
  a.family = family;
  a.L = L;
  a.tau = tau;
  const std::vector<int> wires = range_wires(0, L - 1);
  if (family == Family::qc_b) {
    brickwall(a, wires, tau, 0);
  } else {
    for (int t = 0; t < tau; ++t) {
      for (int p = 0; p + 1 < L; ++p) add_gate(a, {p, p + 1}, t, 0);
    }
  }
  return a;
}

// Greedy assignment of gates to monotone windows; empty result if some gate
// cannot be placed.
std::vector<Block> assign_to_windows(const AnsatzDescriptor& a, const std::vector<std::pair<int, int>>& windows) {
  std::vector<Block> blocks;
  for (auto [lo, hi] : windows) blocks.push_back(Block{lo, hi, {}});
  std::vector<int> last(static_cast<std::size_t>(a.L), 0);
  for (std::size_t g = 0; g < a.gates.size(); ++g) {
    const auto& w = a.gates[g].wires;
    int kmin = 0;
    for (int x : w) kmin = std::max(kmin, last[static_cast<std::size_t>(x)]);
    const int wmin = *std::min_element(w.begin(), w.end());
    const int wmax = *std::max_element(w.begin(), w.end());
    std::size_t k = static_cast<std::size_t>(kmin);
    while (k < blocks.size() && blocks[k].hi < wmax) ++k;
    if (k == blocks.size() || blocks[k].lo > wmin) return {};
    blocks[k].gates.push_back(static_cast<int>(g));
    for (int x : w) last[static_cast<std::size_t>(x)] = static_cast<int>(k);
  }
  return blocks;
}

int bond_qubits(const std::vector<Block>& blocks) {
  int q = 0;
  for (std::size_t k = 1; k < blocks.size(); ++k) q = std::max(q, blocks[k - 1].hi - blocks[k].lo + 1);
  return q;
}

std::vector<std::pair<int, int>> windows_for(int L, int width, int stride, int offset) {
  std::vector<std::pair<int, int>> windows;
  for (int start = offset; start <= L - 1; start += stride) {
    const int lo = std::max(0, start);
    const int hi = std::min(L - 1, start + width - 1);
    if (hi < lo) continue;
    if (!windows.empty() && windows.back().first == lo) windows.back().second = hi;
    else windows.emplace_back(lo, hi);
    if (hi == L - 1) break;
  }
  return windows;
}

}  // namespace

std::string family_name(Family f) {
  for (const auto& fn : kFamilyNames) {
    if (fn.family == f) return fn.name;
  }
  throw AnsatzError("unknown family");
}

Family parse_family(const std::string& name) {
  for (const auto& fn : kFamilyNames) {
    if (name == fn.name) return fn.family;
  }
  throw AnsatzError("unknown ansatz family '" + name + "'");
}

bool is_qmps(Family f) { return f == Family::qmps_b || f == Family::qmps_l || f == Family::qmps_m; }
bool is_qc(Family f) { return f == Family::qc_b || f == Family::qc_l; }
bool is_mera(Family f) { return f == Family::qmera_b || f == Family::dense_block_mera; }

std::size_t AnsatzDescriptor::parameter_count() const {
  std::size_t n = 0;
  for (const auto& g : gates) n += g.params.theta.size();
  return n;
}

std::vector<double> AnsatzDescriptor::flat_parameters() const {
  std::vector<double> theta;
  theta.reserve(parameter_count());
  for (const auto& g : gates) theta.insert(theta.end(), g.params.theta.begin(), g.params.theta.end());
  return theta;
}

void AnsatzDescriptor::set_flat_parameters(const std::vector<double>& theta) {
  if (theta.size() != parameter_count()) {
    throw AnsatzError("expected " + std::to_string(parameter_count()) + " parameters, got " +
                      std::to_string(theta.size()));
  }
  std::size_t i = 0;
  for (auto& g : gates) {
    std::copy(theta.begin() + static_cast<std::ptrdiff_t>(i),
              theta.begin() + static_cast<std::ptrdiff_t>(i + g.params.theta.size()), g.params.theta.begin());
    i += g.params.theta.size();
  }
}

AnsatzDescriptor build_ansatz(Family family, int L, int q, int tau, int q_m) {
  require(tau >= 1, "tau must be >= 1");
  AnsatzDescriptor a;
  switch (family) {
    case Family::qmps_b:
    case Family::qmps_l:
    case Family::qmps_m:
      a = build_qmps(family, L, q, tau, q_m);
      break;
    case Family::qmera_b:
    case Family::dense_block_mera:
      a = build_mera(family, L, q, tau);
      break;
    case Family::qc_b:
    case Family::qc_l:
      a = build_qc(family, L, tau);
      break;
  }
  validate(a);
  return a;
}

std::size_t count_parameters(const AnsatzDescriptor& a) { return a.parameter_count(); }

long long dense_mps_parameter_count(long long L, long long D) { return L * D * (3 * D - 1) / 2; }

AnsatzDescriptor regroup_qc_as_qmps(const AnsatzDescriptor& a) {
  if (!is_qc(a.family)) throw AnsatzError("regrouping is defined for QC-b and QC-l only, got " + family_name(a.family));
  const int width = a.tau + 1;
  const int stride = a.family == Family::qc_b ? 2 : 1;
  std::vector<Block> best;
  int best_q = std::numeric_limits<int>::max();
  for (int offset = -width; offset < stride; ++offset) {
    auto blocks = assign_to_windows(a, windows_for(a.L, width, stride, offset));
    if (blocks.empty()) continue;
    const int q = bond_qubits(blocks);
    if (q < best_q) {
      best_q = q;
      best = std::move(blocks);
    }
  }
  if (best.empty()) throw AnsatzError("no block decomposition found for " + family_name(a.family));
  AnsatzDescriptor out = a;
  out.family = a.family == Family::qc_b ? Family::qmps_b : Family::qmps_l;
  out.source_family = a.family;
  out.q = best_q;
  out.blocks = std::move(best);
  validate(out);
  return out;
}

std::vector<Block> mps_blocks(const AnsatzDescriptor& a) {
  if (is_qmps(a.family)) return a.blocks;
  if (is_qc(a.family)) return regroup_qc_as_qmps(a).blocks;
  throw AnsatzError(family_name(a.family) + " has no matrix-product block structure");
}

std::vector<double> realize_statevector(const AnsatzDescriptor& a) {
  if (a.L > kMaxStatevectorQubits) {
    throw AnsatzError("statevector realization is limited to " + std::to_string(kMaxStatevectorQubits) +
                      " qubits, descriptor has " + std::to_string(a.L));
  }
  std::vector<double> psi = sv::basis_state(a.L);
  for (const auto& g : a.gates) sv::apply_gate(psi, a.L, g.wires, realize_gate_matrix(g.params));
  return psi;
}

void validate(const AnsatzDescriptor& a) {
  for (std::size_t i = 0; i < a.gates.size(); ++i) {
    const auto& g = a.gates[i];
    const std::string where = "gate " + std::to_string(i);
    require(!g.wires.empty(), where + " has no wires");
    require(static_cast<int>(g.wires.size()) == g.params.m, where + ": wire count differs from params.m");
    require(g.params.theta.size() == gate_param_count(g.params.m), where + ": wrong angle count");
    std::vector<int> w = g.wires;
    std::sort(w.begin(), w.end());
    require(std::adjacent_find(w.begin(), w.end()) == w.end(), where + " has repeated wires");
    require(w.front() >= 0 && w.back() < a.L, where + " references a wire outside [0, L)");
  }
  if (a.blocks.empty()) {
    require(!is_qmps(a.family), "qMPS descriptor without blocks");
    return;
  }
  std::vector<int> owner(a.gates.size(), -1);
  for (std::size_t k = 0; k < a.blocks.size(); ++k) {
    const Block& b = a.blocks[k];
    require(b.lo <= b.hi, "empty block window");
    if (k == 0) require(b.lo == 0, "first block must start at wire 0");
    if (k > 0) {
      require(b.lo > a.blocks[k - 1].lo && b.hi >= a.blocks[k - 1].hi, "block windows must be monotone");
      require(b.lo <= a.blocks[k - 1].hi + 1, "block windows must not leave gaps");
    }
    for (int g : b.gates) {
      require(g >= 0 && static_cast<std::size_t>(g) < a.gates.size(), "block references a missing gate");
      require(owner[static_cast<std::size_t>(g)] < 0, "gate assigned to two blocks");
      owner[static_cast<std::size_t>(g)] = static_cast<int>(k);
      for (int w : a.gates[static_cast<std::size_t>(g)].wires) require(w >= b.lo && w <= b.hi, "gate outside its block");
    }
  }
  require(a.blocks.back().hi == a.L - 1, "last block must end at wire L-1");
  std::vector<int> last(static_cast<std::size_t>(a.L), 0);
  for (std::size_t g = 0; g < a.gates.size(); ++g) {
    require(owner[g] >= 0, "gate " + std::to_string(g) + " belongs to no block");
    for (int w : a.gates[g].wires) {
      require(owner[g] >= last[static_cast<std::size_t>(w)], "block order contradicts gate order");
      last[static_cast<std::size_t>(w)] = owner[g];
    }
  }
}

void randomize_parameters(AnsatzDescriptor& a, double scale, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-scale, scale);
  for (auto& g : a.gates) {
    for (double& t : g.params.theta) t = dist(rng);
  }
}

nlohmann::json to_json(const AnsatzDescriptor& a) {
  nlohmann::json j;
  j["format"] = "qctn-ansatz";
  j["version"] = 1;
  j["family"] = family_name(a.family);
  j["L"] = a.L;
  j["q"] = a.q;
  j["tau"] = a.tau;
  j["q_m"] = a.q_m;
  if (a.source_family) j["source_family"] = family_name(*a.source_family);
  auto& gates = j["gates"] = nlohmann::json::array();
  for (const auto& g : a.gates) {
    gates.push_back({{"wires", g.wires},
                     {"m", g.params.m},
                     {"theta", g.params.theta},
                     {"layer", g.layer},
                     {"unit", g.unit},
                     {"dense", g.dense}});
  }
  auto& blocks = j["blocks"] = nlohmann::json::array();
  for (const auto& b : a.blocks) blocks.push_back({{"lo", b.lo}, {"hi", b.hi}, {"gates", b.gates}});
  return j;
}

AnsatzDescriptor descriptor_from_json(const nlohmann::json& j) {
  try {
    if (j.value("format", std::string{}) != "qctn-ansatz") throw AnsatzError("not an ansatz document");
    AnsatzDescriptor a;
    a.family = parse_family(j.at("family").get<std::string>());
    a.L = j.at("L").get<int>();
    a.q = j.at("q").get<int>();
    a.tau = j.at("tau").get<int>();
    a.q_m = j.value("q_m", 0);
    if (j.contains("source_family")) a.source_family = parse_family(j.at("source_family").get<std::string>());
    for (const auto& g : j.at("gates")) {
      GatePlacement p;
      p.wires = g.at("wires").get<std::vector<int>>();
      p.params.m = g.at("m").get<int>();
      p.params.theta = g.at("theta").get<std::vector<double>>();
      p.layer = g.value("layer", 0);
      p.unit = g.value("unit", 0);
      p.dense = g.value("dense", false);
      a.gates.push_back(std::move(p));
    }
    if (j.contains("blocks")) {
      for (const auto& b : j.at("blocks")) {
        a.blocks.push_back(Block{b.at("lo").get<int>(), b.at("hi").get<int>(), b.at("gates").get<std::vector<int>>()});
      }
    }
    validate(a);
    return a;
  } catch (const nlohmann::json::exception& e) {
    throw AnsatzError(std::string("malformed ansatz document: ") + e.what());
  }
}

void save_descriptor(const AnsatzDescriptor& a, const std::string& path, const nlohmann::json& extra) {
  nlohmann::json j = to_json(a);
  for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = it.value();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(1) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

AnsatzDescriptor load_descriptor(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw AnsatzError(path + ": " + e.what());
  }
  return descriptor_from_json(j);
}

}  // namespace qctn
