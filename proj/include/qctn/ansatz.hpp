#pragma once

#include "qctn/gates.hpp"

#include "json.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace qctn {

enum class Family { qmps_b, qmps_l, qmps_m, qmera_b, qc_b, qc_l, dense_block_mera };

std::string family_name(Family f);
Family parse_family(const std::string& name);
bool is_qmps(Family f);
bool is_qc(Family f);
bool is_mera(Family f);

class AnsatzError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct GatePlacement {
  std::vector<int> wires;
  GateParams params;
  int layer = 0;  // depth index inside its unit; adaptive growth shifts it
  int unit = 0;   // qMPS block, MERA tensor, or 0 for global circuits
  bool dense = false;  // dense block unitary (dMERA) instead of a two-qubit gate
};

/// A contiguous window of wires executed as one block unitary. Wires
/// [lo, previous hi] arrive as bond, (previous hi, hi] start in |0>,
/// [lo, next lo) leave as physical sites, the rest is handed on as bond.
struct Block {
  int lo = 0;
  int hi = 0;
  std::vector<int> gates;  // indices into AnsatzDescriptor::gates, execution order
};

struct AnsatzDescriptor {
  Family family = Family::qc_b;
  int L = 0;  // qubit count
  int q = 0;
  int tau = 0;
  int q_m = 0;
  std::vector<GatePlacement> gates;  // execution order
  std::vector<Block> blocks;         // qMPS families only
  std::optional<Family> source_family;  // set by regroup_qc_as_qmps

  std::size_t parameter_count() const;
  std::vector<double> flat_parameters() const;
  void set_flat_parameters(const std::vector<double>& theta);
};

AnsatzDescriptor build_ansatz(Family family, int L, int q, int tau, int q_m = 0);

std::size_t count_parameters(const AnsatzDescriptor& a);

/// Parameter count of a dense MPS with open boundaries, L * D (3D - 1) / 2.
long long dense_mps_parameter_count(long long L, long long D);

/// Same circuit viewed as a qMPS: q = tau - 1 for QC-b and q = tau for QC-l.
AnsatzDescriptor regroup_qc_as_qmps(const AnsatzDescriptor& a);

/// The blocks used by the MPS contraction path: the descriptor's own for
/// qMPS families, the regrouped ones for QC families.
std::vector<Block> mps_blocks(const AnsatzDescriptor& a);

inline constexpr int kMaxStatevectorQubits = 26;

/// Gates applied in execution order to |0...0>.
std::vector<double> realize_statevector(const AnsatzDescriptor& a);

/// Throws if wires, parameter sizes or blocks are inconsistent.
void validate(const AnsatzDescriptor& a);

/// Uniform angles in [-scale, scale] on every gate, seeded.
void randomize_parameters(AnsatzDescriptor& a, double scale, std::uint64_t seed);

nlohmann::json to_json(const AnsatzDescriptor& a);
AnsatzDescriptor descriptor_from_json(const nlohmann::json& j);
void save_descriptor(const AnsatzDescriptor& a, const std::string& path,
                     const nlohmann::json& extra = nlohmann::json::object());
AnsatzDescriptor load_descriptor(const std::string& path);

}  // namespace qctn
