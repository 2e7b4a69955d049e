#include "qctn/objectives.hpp"

#include "qctn/statevector.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace qctn {

namespace {

std::vector<Eigen::MatrixXd> realize_all(const AnsatzDescriptor& a) {
  std::vector<Eigen::MatrixXd> mats;
  mats.reserve(a.gates.size());
  for (const auto& g : a.gates) mats.push_back(realize_gate_matrix(g.params));
  return mats;
}

std::vector<Eigen::MatrixXd> zero_derivatives(const AnsatzDescriptor& a) {
  std::vector<Eigen::MatrixXd> d;
  for (const auto& g : a.gates) {
    const Eigen::Index n = Eigen::Index{1} << g.params.m;
    d.push_back(Eigen::MatrixXd::Zero(n, n));
  }
  return d;
}

std::vector<int> local_wires(const std::vector<int>& wires, const std::vector<int>& position) {
  std::vector<int> out;
  for (int w : wires) out.push_back(position[static_cast<std::size_t>(w)]);
  return out;
}

// Forward pass over a gate subset of a register; gate wires are translated
// through `position` (global wire -> local qubit).
void forward(const AnsatzDescriptor& a, const std::vector<Eigen::MatrixXd>& mats, const std::vector<std::size_t>& gates,
             const std::vector<int>& position, int n, std::vector<double>& state, std::size_t batch) {
  for (std::size_t g : gates) sv::apply_gate(state, n, local_wires(a.gates[g].wires, position), mats[g], batch);
}

// Reverse pass: `in_side` holds the forward result and is unwound gate by
// gate; `out_side` carries the adjoint. Adds scale * dObj/dG for each gate.
void adjoint(const AnsatzDescriptor& a, const std::vector<Eigen::MatrixXd>& mats, const std::vector<std::size_t>& gates,
             const std::vector<int>& position, int n, std::vector<double> in_side, std::vector<double> out_side,
             std::size_t batch, double scale, std::vector<Eigen::MatrixXd>& d_gate) {
  for (auto it = gates.rbegin(); it != gates.rend(); ++it) {
    const std::size_t g = *it;
    const auto local = local_wires(a.gates[g].wires, position);
    sv::apply_gate_transpose(in_side, n, local, mats[g], batch);
    sv::accumulate_environment(out_side, in_side, n, local, d_gate[g], scale, batch);
    sv::apply_gate_transpose(out_side, n, local, mats[g], batch);
  }
}

Tensor group_mpo(const MPO& h, int lo, int hi_excl) {
  const Tensor& w0 = h.sites.at(static_cast<std::size_t>(lo));
  Tensor x = w0;
  for (int s = lo + 1; s < hi_excl; ++s) {
    const Tensor& w = h.sites[static_cast<std::size_t>(s)];
    const Tensor y = contract_pair(x, w, {{3, 0}});  // (ml, O, I, o, i, mr)
    x = permute_reshape(y, {0, 1, 3, 2, 4, 5}, {y.dim(0), y.dim(1) * y.dim(3), y.dim(2) * y.dim(4), y.dim(5)});
  }
  return x;
}

Tensor group_mps(const MPS& m, int lo, int hi_excl) {
  Tensor x = m.sites.at(static_cast<std::size_t>(lo));
  for (int s = lo + 1; s < hi_excl; ++s) {
    const Tensor y = contract_pair(x, m.sites[static_cast<std::size_t>(s)], {{2, 0}});
    x = y.reshaped({y.dim(0), y.dim(1) * y.dim(2), y.dim(3)});
  }
  return x;
}

Tensor ones(Shape shape) {
  Tensor t(std::move(shape));
  t[0] = 1.0;
  return t;
}

void check_size(const AnsatzDescriptor& a, const Objective& obj) {
  if (obj.qubit_count() != a.L) {
    throw ObjectiveError("objective acts on " + std::to_string(obj.qubit_count()) + " qubits, ansatz has " +
                         std::to_string(a.L));
  }
}

GateDerivatives block_path(const AnsatzDescriptor& a, const Objective& obj, bool want) {
  const std::vector<Block> blocks = mps_blocks(a);
  const auto shapes = block_shapes(blocks, a.L);
  const std::size_t K = blocks.size();
  const auto mats = realize_all(a);
  std::vector<std::vector<double>> cols(K);
  std::vector<Tensor> t(K), op(K);
  std::vector<std::vector<std::size_t>> gate_ids(K);
  for (std::size_t k = 0; k < K; ++k) {
    const BlockShape& s = shapes[k];
    const std::size_t batch = std::size_t{1} << s.bond_in;
    cols[k].assign((std::size_t{1} << s.n) * batch, 0.0);
    for (std::size_t c = 0; c < batch; ++c) cols[k][(c << s.fresh) * batch + c] = 1.0;
    std::vector<int> position(static_cast<std::size_t>(a.L), -1);
    for (int w = s.lo; w <= s.hi; ++w) position[static_cast<std::size_t>(w)] = w - s.lo;
    for (int g : blocks[k].gates) gate_ids[k].push_back(static_cast<std::size_t>(g));
    forward(a, mats, gate_ids[k], position, s.n, cols[k], batch);
    t[k] = block_tensor(cols[k], s);
    const int hi_excl = s.lo + s.emitted;
    op[k] = obj.kind == ObjectiveKind::energy ? group_mpo(obj.mpo, s.lo, hi_excl) : group_mps(obj.reference, s.lo, hi_excl);
  }

  GateDerivatives out;
  const bool energy = obj.kind == ObjectiveKind::energy;
  std::vector<Tensor> left(K + 1), right(K + 1);
  left[0] = energy ? ones({1, 1, 1}) : ones({1, 1});
  for (std::size_t k = 0; k < K; ++k) {
    if (energy) {
      left[k + 1] = mpo_env_left(left[k], t[k], op[k]);
    } else {
      const Tensor x = contract_pair(left[k], t[k], {{1, 0}});  // (ref l, e, r)
      left[k + 1] = contract_pair(op[k], x, {{0, 0}, {1, 1}});  // (ref r, r)
    }
  }
  if (energy) {
    out.value = left[K][0];
  } else {
    out.overlap = left[K][0];
    out.value = 1.0 - std::abs(out.overlap);
  }
  if (!want) return out;

  out.d_gate = zero_derivatives(a);
  right[K] = energy ? ones({1, 1, 1}) : ones({1, 1});
  for (std::size_t k = K; k-- > 0;) {
    if (energy) {
      right[k] = mpo_env_right(right[k + 1], t[k], op[k]);
    } else {
      const Tensor x = contract_pair(op[k], right[k + 1], {{2, 0}});  // (ref l, e, r)
      right[k] = contract_pair(x, t[k], {{1, 1}, {2, 2}});            // (ref l, l)
    }
  }
  for (std::size_t k = 0; k < K; ++k) {
    Tensor gamma;
    double scale = 1.0;
    if (energy) {
      const Tensor x = contract_pair(left[k], t[k], {{0, 0}});          // (m, l, e', r')
      const Tensor y = contract_pair(x, op[k], {{0, 0}, {2, 1}});       // (l, r', e, m')
      gamma = contract_pair(y, right[k + 1], {{1, 0}, {3, 1}});         // (l, e, r)
      scale = 2.0;
    } else {
      const Tensor x = contract_pair(left[k], op[k], {{0, 0}});         // (l, e, ref r)
      gamma = contract_pair(x, right[k + 1], {{2, 0}});                 // (l, e, r)
    }
    const BlockShape& s = shapes[k];
    const std::size_t batch = std::size_t{1} << s.bond_in;
    const std::size_t rows = std::size_t{1} << s.n;
    std::vector<double> out_side(rows * batch);
    for (std::size_t l = 0; l < batch; ++l)
      for (std::size_t idx = 0; idx < rows; ++idx) out_side[idx * batch + l] = gamma[l * rows + idx];
    std::vector<int> position(static_cast<std::size_t>(a.L), -1);
    for (int w = s.lo; w <= s.hi; ++w) position[static_cast<std::size_t>(w)] = w - s.lo;
    adjoint(a, mats, gate_ids[k], position, s.n, cols[k], std::move(out_side), batch, scale, out.d_gate);
  }
  return out;
}

GateDerivatives lightcone_path(const AnsatzDescriptor& a, const Objective& obj, bool want) {
  if (obj.kind != ObjectiveKind::energy) throw ObjectiveError("lightcone contraction applies to energies only");
  const auto mats = realize_all(a);
  GateDerivatives out;
  if (want) out.d_gate = zero_derivatives(a);
  for (const auto& term : obj.local_terms) {
    if (term.sites.empty()) {
      out.value += term.matrix(0, 0);
      continue;
    }
    const auto gates = lightcone_gates(a, term.sites);
    std::set<int> wire_set(term.sites.begin(), term.sites.end());
    for (std::size_t g : gates) wire_set.insert(a.gates[g].wires.begin(), a.gates[g].wires.end());
    const int n = static_cast<int>(wire_set.size());
    if (n > kMaxStatevectorQubits) throw ObjectiveError("lightcone wider than the statevector limit");
    std::vector<int> position(static_cast<std::size_t>(a.L), -1);
    int next = 0;
    for (int w : wire_set) position[static_cast<std::size_t>(w)] = next++;
    std::vector<double> psi = sv::basis_state(n);
    forward(a, mats, gates, position, n, psi, 1);
    std::vector<double> phi = psi;
    sv::apply_gate(phi, n, local_wires(term.sites, position), term.matrix);
    out.value += sv::dot(psi, phi);
    if (want) adjoint(a, mats, gates, position, n, std::move(psi), std::move(phi), 1, 2.0, out.d_gate);
  }
  return out;
}

GateDerivatives statevector_path(const AnsatzDescriptor& a, const Objective& obj, bool want) {
  if (a.L > kMaxStatevectorQubits) throw ObjectiveError("statevector path limited to " + std::to_string(kMaxStatevectorQubits) + " qubits");
  const auto mats = realize_all(a);
  std::vector<std::size_t> all(a.gates.size());
  for (std::size_t g = 0; g < all.size(); ++g) all[g] = g;
  std::vector<int> position(static_cast<std::size_t>(a.L));
  for (int w = 0; w < a.L; ++w) position[static_cast<std::size_t>(w)] = w;
  std::vector<double> psi = sv::basis_state(a.L);
  forward(a, mats, all, position, a.L, psi, 1);
  GateDerivatives out;
  std::vector<double> partner(psi.size());
  double scale = 1.0;
  if (obj.kind == ObjectiveKind::energy) {
    std::fill(partner.begin(), partner.end(), 0.0);
    for (const auto& t : obj.local_terms) sv::apply_add(psi, partner, a.L, t.sites, t.matrix);
    out.value = sv::dot(psi, partner);
    scale = 2.0;
  } else {
    partner = to_statevector(obj.reference);
    out.overlap = sv::dot(partner, psi);
    out.value = 1.0 - std::abs(out.overlap);
  }
  if (want) {
    out.d_gate = zero_derivatives(a);
    adjoint(a, mats, all, position, a.L, std::move(psi), std::move(partner), 1, scale, out.d_gate);
  }
  return out;
}

GateDerivatives compute(const AnsatzDescriptor& a, const Objective& obj, ContractionPath path, bool want) {
  check_size(a, obj);
  obj.evaluations->fetch_add(1);
  switch (path) {
    case ContractionPath::block_mps: return block_path(a, obj, want);
    case ContractionPath::lightcone: return lightcone_path(a, obj, want);
    case ContractionPath::statevector: return statevector_path(a, obj, want);
    case ContractionPath::automatic: break;
  }
  throw ObjectiveError("unresolved contraction path");
}

double sign_of(double x) { return x < 0.0 ? -1.0 : 1.0; }

}  // namespace

std::string path_name(ContractionPath p) {
  switch (p) {
    case ContractionPath::automatic: return "automatic";
    case ContractionPath::block_mps: return "mps";
    case ContractionPath::lightcone: return "lightcone";
    case ContractionPath::statevector: return "statevector";
  }
  return "";
}

ContractionPath parse_path(const std::string& name) {
  for (auto p : {ContractionPath::automatic, ContractionPath::block_mps, ContractionPath::lightcone, ContractionPath::statevector}) {
    if (path_name(p) == name) return p;
  }
  throw ObjectiveError("unknown contraction path '" + name + "'");
}

Objective Objective::energy(const TermList& h, ContractionPath path) {
  Objective o;
  o.kind = ObjectiveKind::energy;
  o.hamiltonian = h;
  o.mpo = terms_to_mpo(h);
  o.local_terms = group_local_terms(h);
  o.path = path;
  return o;
}

Objective Objective::infidelity(const MPS& reference, ContractionPath path) {
  Objective o;
  o.kind = ObjectiveKind::infidelity;
  o.reference = reference;
  o.path = path;
  return o;
}

int Objective::qubit_count() const {
  return kind == ObjectiveKind::energy ? hamiltonian.qubit_count : static_cast<int>(reference.length());
}

namespace {

// Amplitude updates of the block contraction: every gate of a block acts on
// 2^n amplitudes for each of its 2^bond_in input columns. The factor covers
// the MPO environments and splits; calibrated on Heisenberg chains L=8..16.
constexpr double kBlockOverhead = 8.0;

double block_mps_cost(const AnsatzDescriptor& a) {
  const auto blocks = mps_blocks(a);
  const auto shapes = block_shapes(blocks, a.L);
  double c = 0.0;
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    c += static_cast<double>(blocks[k].gates.size() + 1) * std::ldexp(1.0, shapes[k].n + shapes[k].bond_in);
  }
  return kBlockOverhead * c;
}

double statevector_cost(const AnsatzDescriptor& a, const Objective& obj) {
  const std::size_t ops = a.gates.size() + (obj.kind == ObjectiveKind::energy ? obj.hamiltonian.terms.size() : 1);
  return static_cast<double>(ops) * std::ldexp(1.0, a.L);
}

}  // namespace

ContractionPath resolve_path(const AnsatzDescriptor& a, const Objective& obj, bool with_gradient) {
  (void)with_gradient;
  if (obj.path != ContractionPath::automatic) return obj.path;
  if (is_qmps(a.family) || is_qc(a.family)) {
    if (a.L <= kMaxStatevectorQubits && statevector_cost(a, obj) < block_mps_cost(a)) return ContractionPath::statevector;
    return ContractionPath::block_mps;
  }
  return obj.kind == ObjectiveKind::energy ? ContractionPath::lightcone : ContractionPath::statevector;
}

GateDerivatives gate_derivatives(const AnsatzDescriptor& a, const Objective& obj, ContractionPath path) {
  if (path == ContractionPath::automatic) path = resolve_path(a, obj, true);
  return compute(a, obj, path, true);
}

ObjectiveValue evaluate(const AnsatzDescriptor& a, const Objective& obj, bool with_gradient, ContractionPath path) {
  const bool automatic = path == ContractionPath::automatic && obj.path == ContractionPath::automatic;
  if (path == ContractionPath::automatic) path = resolve_path(a, obj, with_gradient);
  ObjectiveValue v;
  if (!with_gradient && automatic && obj.kind == ObjectiveKind::infidelity && is_mera(a.family)) {
    check_size(a, obj);
    obj.evaluations->fetch_add(1);
    v.value = 1.0 - std::abs(overlap(obj.reference, circuit_to_mps(a)));
    v.evaluations = obj.evaluations->load();
    return v;
  }
  const GateDerivatives d = compute(a, obj, path, with_gradient);
  v.value = d.value;
  v.evaluations = obj.evaluations->load();
  if (!with_gradient) return v;
  std::vector<double> grad;
  grad.reserve(a.parameter_count());
  const double s = obj.kind == ObjectiveKind::energy ? 1.0 : -sign_of(d.overlap);
  for (std::size_t g = 0; g < a.gates.size(); ++g) {
    for (double x : pullback_gradient(a.gates[g].params, d.d_gate[g])) grad.push_back(s * x);
  }
  v.gradient = std::move(grad);
  return v;
}

ObjectiveValue energy(const AnsatzDescriptor& a, const ModelSpec& spec, ContractionPath path) {
  return evaluate(a, Objective::energy(build_terms(spec)), false, path);
}

ObjectiveValue infidelity(const AnsatzDescriptor& a, const MPS& reference, ContractionPath path) {
  return evaluate(a, Objective::infidelity(reference), false, path);
}

ObjectiveValue objective_gradient(const AnsatzDescriptor& a, const Objective& obj, ContractionPath path) {
  return evaluate(a, obj, true, path);
}

double GateEnvironment::predict(const Eigen::MatrixXd& w) const {
  const double lin = (w.array() * env.array()).sum();
  return kind == ObjectiveKind::energy ? lin + constant : 1.0 - std::abs(lin);
}

GateEnvironment gate_environment(const AnsatzDescriptor& a, std::size_t gate_index, const Objective& obj) {
  if (gate_index >= a.gates.size()) {
    throw ObjectiveError("gate index " + std::to_string(gate_index) + " out of range (" + std::to_string(a.gates.size()) + " gates)");
  }
  const GateDerivatives d = gate_derivatives(a, obj);
  GateEnvironment e;
  e.gate_index = gate_index;
  e.kind = obj.kind;
  const Eigen::MatrixXd g = realize_gate_matrix(a.gates[gate_index].params);
  if (obj.kind == ObjectiveKind::energy) {
    e.env = 0.5 * d.d_gate[gate_index];
    e.constant = d.value - (g.array() * e.env.array()).sum();
  } else {
    e.env = d.d_gate[gate_index];
  }
  return e;
}

std::vector<std::size_t> lightcone_gates(const AnsatzDescriptor& a, const std::vector<int>& sites) {
  std::vector<char> in_cone(static_cast<std::size_t>(a.L), 0);
  for (int s : sites) in_cone.at(static_cast<std::size_t>(s)) = 1;
  std::vector<std::size_t> gates;
  for (std::size_t g = a.gates.size(); g-- > 0;) {
    const auto& w = a.gates[g].wires;
    if (std::any_of(w.begin(), w.end(), [&](int x) { return in_cone[static_cast<std::size_t>(x)] != 0; })) {
      gates.push_back(g);
      for (int x : w) in_cone[static_cast<std::size_t>(x)] = 1;
    }
  }
  std::reverse(gates.begin(), gates.end());
  return gates;
}

double mps_expectation(const MPS& m, const TermList& t) {
  double s = 0.0;
  for (const auto& term : t.terms) {
    if (term.factors.empty()) {
      s += term.coefficient;
      continue;
    }
    std::vector<std::pair<int, Eigen::Matrix2d>> ops;
    for (const auto& f : term.factors) ops.emplace_back(f.site, f.matrix);
    s += term.coefficient * product_expectation(m, ops);
  }
  return s;
}

std::vector<std::pair<int, double>> correlation_profile(const MPS& state, const ModelSpec& spec, int r_max) {
  if (r_max < 1 || r_max >= spec.site_count()) throw ModelError("r_max must be in [1, sites - 1]");
  const double self = mps_expectation(state, spin_correlation_terms(spec, 0, 0));
  std::vector<std::pair<int, double>> out;
  for (int r = 1; r <= r_max; ++r) out.emplace_back(r, mps_expectation(state, spin_correlation_terms(spec, 0, r)) - self);
  return out;
}

std::vector<std::pair<int, double>> correlation_profile(const AnsatzDescriptor& a, const ModelSpec& spec, int r_max) {
  return correlation_profile(is_qmps(a.family) ? qmps_to_dense_mps(a) : circuit_to_mps(a), spec, r_max);
}

}  // namespace qctn
