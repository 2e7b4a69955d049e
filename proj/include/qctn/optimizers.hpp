#pragma once

#include "qctn/ansatz.hpp"
#include "qctn/objectives.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace qctn {

enum class Method { local_sweep, cg, lbfgs };

std::string method_name(Method m);
Method parse_method(const std::string& name);

struct OptimizerConfig {
  Method method = Method::lbfgs;
  int max_iterations = 500;
  double rel_energy_tol = 1e-8;
  int lbfgs_memory = 20;
  std::uint64_t seed = 1;
  ContractionPath path = ContractionPath::automatic;
  bool record_updates = false;    // local sweep: objective after every single-gate update
  std::string checkpoint_prefix;  // writes <prefix>.json and <prefix>_trace.csv when set
  int checkpoint_every = 0;       // iterations between checkpoints; 0 writes only at the end
};

/// line_search_failure: the strong-Wolfe search failed twice in a row (the
/// second time along steepest descent with half the trial step).
enum class Status { converged, budget_exhausted, line_search_failure };

std::string status_name(Status s);

struct TraceEntry {
  int iteration = 0;
  double value = 0.0;
  double grad_norm = 0.0;
  double seconds = 0.0;
};

struct OptimizationTrace {
  std::vector<TraceEntry> entries;  // entry 0 is the starting point
  Status status = Status::budget_exhausted;
  std::vector<double> update_values;  // record_updates only
  int log_branch_failures = 0;
  long evaluations = 0;

  int iterations() const { return entries.empty() ? 0 : entries.back().iteration; }
  double final_value() const { return entries.back().value; }
};

struct OptimizationResult {
  AnsatzDescriptor ansatz;
  OptimizationTrace trace;
};

/// DMRG-like sweep over gates (execution order, then reverse). Each update
/// replaces a gate by the special-orthogonal minimizer of a linear bound of
/// the objective and re-extracts its angles. Energies are handled through
/// the concave shift of every local term, which makes the bound a majorizer.
OptimizationResult local_sweep_optimize(const AnsatzDescriptor& a, const Objective& obj, const OptimizerConfig& cfg);

/// L-BFGS or Polak-Ribiere CG with a strong-Wolfe line search on the flat angles.
OptimizationResult gradient_minimize(const AnsatzDescriptor& a, const Objective& obj, const OptimizerConfig& cfg);

OptimizationResult optimize(const AnsatzDescriptor& a, const Objective& obj, const OptimizerConfig& cfg);

/// f(x) with gradient written into grad.
using FlatFunction = std::function<double(const std::vector<double>& x, std::vector<double>& grad)>;
using IterationHook = std::function<void(const std::vector<double>& x, const OptimizationTrace& trace)>;

struct FlatResult {
  std::vector<double> x;
  OptimizationTrace trace;
};

FlatResult minimize_flat(const FlatFunction& f, std::vector<double> x0, const OptimizerConfig& cfg,
                         const IterationHook& hook = {});

/// Embeds an optimized descriptor into a deeper one: new layers are identity
/// (prepended inside every block for qMPS/qMERA, appended for QC), old angles
/// are copied, then every angle gets a uniform kick of size `perturbation`.
/// With no perturbation given, the size is the mean over gates of the
/// per-gate gradient max-norm at the grown point (needs `obj`).
AnsatzDescriptor adaptive_grow(const AnsatzDescriptor& optimized, int target_tau, std::optional<double> perturbation,
                               std::uint64_t seed, const Objective* obj = nullptr);

/// Mean over gates of the max-abs gradient entry of that gate.
double mean_gate_gradient_norm(const AnsatzDescriptor& a, const std::vector<double>& gradient);

void write_trace_csv(const OptimizationTrace& trace, const std::string& path);

}  // namespace qctn
