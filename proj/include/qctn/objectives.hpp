#pragma once

#include "qctn/ansatz.hpp"
#include "qctn/hamiltonians.hpp"
#include "qctn/mps.hpp"

#include <Eigen/Dense>

#include <atomic>
#include <memory>
#include <optional>
#include <vector>

namespace qctn {

enum class ObjectiveKind { energy, infidelity };

/// automatic: for qMPS and QC families (QC through the regrouped blocks) the
/// cheaper of MPS contraction and statevector by a rough operation count;
/// lightcone for MERA energies, statevector for MERA infidelities.
enum class ContractionPath { automatic, block_mps, lightcone, statevector };

std::string path_name(ContractionPath p);
ContractionPath parse_path(const std::string& name);

class ObjectiveError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Objective {
  ObjectiveKind kind = ObjectiveKind::energy;
  TermList hamiltonian;
  MPO mpo;
  std::vector<LocalTerm> local_terms;
  MPS reference;
  ContractionPath path = ContractionPath::automatic;
  std::shared_ptr<std::atomic<long>> evaluations = std::make_shared<std::atomic<long>>(0);

  static Objective energy(const TermList& h, ContractionPath path = ContractionPath::automatic);
  static Objective infidelity(const MPS& reference, ContractionPath path = ContractionPath::automatic);
  int qubit_count() const;
};

struct ObjectiveValue {
  double value = 0.0;
  std::optional<std::vector<double>> gradient;  // flat, descriptor order
  long evaluations = 0;
};

/// Value plus d(linear quantity)/d(gate matrix) for every gate: dE/dG for
/// energies, d<ref|psi>/dG for infidelities (with `overlap` set).
struct GateDerivatives {
  double value = 0.0;
  double overlap = 0.0;
  std::vector<Eigen::MatrixXd> d_gate;
};

ContractionPath resolve_path(const AnsatzDescriptor& a, const Objective& obj, bool with_gradient);

GateDerivatives gate_derivatives(const AnsatzDescriptor& a, const Objective& obj,
                                 ContractionPath path = ContractionPath::automatic);

ObjectiveValue evaluate(const AnsatzDescriptor& a, const Objective& obj, bool with_gradient,
                        ContractionPath path = ContractionPath::automatic);

ObjectiveValue energy(const AnsatzDescriptor& a, const ModelSpec& spec,
                      ContractionPath path = ContractionPath::automatic);
ObjectiveValue infidelity(const AnsatzDescriptor& a, const MPS& reference,
                          ContractionPath path = ContractionPath::automatic);
ObjectiveValue objective_gradient(const AnsatzDescriptor& a, const Objective& obj,
                                  ContractionPath path = ContractionPath::automatic);

/// Linearized objective around one gate. For energies env = dE/dG / 2, so
/// tr(G^T env) reproduces E at the current gate; for infidelities env is
/// d<ref|psi>/dG and substituting W gives exactly 1 - |tr(W^T env)|.
struct GateEnvironment {
  std::size_t gate_index = 0;
  Eigen::MatrixXd env;
  double constant = 0.0;
  ObjectiveKind kind = ObjectiveKind::energy;

  double predict(const Eigen::MatrixXd& w) const;
};

GateEnvironment gate_environment(const AnsatzDescriptor& a, std::size_t gate_index, const Objective& obj);

/// Gates whose backward lightcone reaches `sites`, in execution order.
std::vector<std::size_t> lightcone_gates(const AnsatzDescriptor& a, const std::vector<int>& sites);

/// Spin correlation profile <S_0 . S_r> - <S_0 . S_0> for r = 1..r_max.
std::vector<std::pair<int, double>> correlation_profile(const MPS& state, const ModelSpec& spec, int r_max);
std::vector<std::pair<int, double>> correlation_profile(const AnsatzDescriptor& a, const ModelSpec& spec, int r_max);

/// Expectation of a term list in an MPS state (normalized by <m|m>).
double mps_expectation(const MPS& m, const TermList& t);

}  // namespace qctn
