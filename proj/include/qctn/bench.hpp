#pragma once

#include "qctn/ansatz.hpp"
#include "qctn/hamiltonians.hpp"
#include "qctn/mps.hpp"
#include "qctn/objectives.hpp"
#include "qctn/optimizers.hpp"

#include "json.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace qctn {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ReferenceKind { ed, dmrg };
enum class InitPolicy { adaptive, random };

/// DMRG references above this discarded weight are reported on stderr.
inline constexpr double kMaxReferenceDiscardedWeight = 1e-10;

struct ReferencePolicy {
  ReferenceKind kind = ReferenceKind::ed;
  std::size_t bond = 256;  // DMRG only
};

struct AnsatzSweep {
  Family family = Family::qmps_b;
  int q = 0;
  int q_m = 0;
  std::vector<int> tau_schedule;  // strictly increasing
};

struct ExperimentConfig {
  std::string name = "experiment";
  ModelSpec model;
  std::vector<AnsatzSweep> ansatze;
  std::vector<std::size_t> dense_mps_bonds;  // DMRG rows reported as family "dMPS"
  OptimizerConfig optimizer;
  ObjectiveKind objective = ObjectiveKind::energy;
  ReferencePolicy reference;
  std::string output_dir = "out";
  std::vector<std::uint64_t> seeds{1};
  InitPolicy init = InitPolicy::adaptive;
  double init_scale = 0.1;                // random init: angles uniform in [-init_scale, init_scale]
  std::optional<double> perturbation;     // adaptive growth kick; automatic when absent
  bool full_scale = false;               // informational: not meant for CI
  bool record_wall_time = false;          // wall times make trace files non-reproducible
};

ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& c);
ExperimentConfig load_config(const std::string& path);

/// FNV-1a over the canonical JSON dump of the config.
std::string config_hash(const ExperimentConfig& c);

struct Reference {
  double energy = 0.0;
  MPS state;
  std::string description;
};

Reference resolve_reference(const ExperimentConfig& c);

struct ExperimentRecord {
  std::string family;
  int L = 0;  // model sites
  int q = 0;
  int tau = 0;
  long long n = 0;
  double energy = 0.0;
  double delta_e = 0.0;  // (E - E_ref) / |E_ref|
  int iterations = 0;
  std::string status;
  std::uint64_t seed = 0;
  double objective_value = 0.0;
  std::string trace_path;
  std::string checkpoint_path;
};

/// Runs every (ansatz, seed) chain of the config and writes results.csv,
/// results.json, traces/ and checkpoints/ below output_dir. Seeds run on
/// QCTN_WORKERS threads; the record order follows the config order.
std::vector<ExperimentRecord> run_experiment(const ExperimentConfig& c);

/// Worker count from the QCTN_WORKERS environment variable (default 1).
int worker_count();

/// Relative energy error (E - E_ref) / |E_ref|; non-negative for variational E.
double relative_error(double energy, double reference);

struct FitPoint {
  double n = 0.0;
  double delta_e = 0.0;
};

struct FitResult {
  double a = 0.0;
  double b = 0.0;
  double residual = 0.0;  // RMS of the log-space fit
  int points = 0;
  std::vector<std::string> warnings;
};

/// Least squares of ln(delta_e) = ln(a) - b ln(n). Non-positive points are
/// dropped with a warning; fewer than three remaining points is an error.
FitResult fit_power_law(const std::vector<FitPoint>& points);

nlohmann::json to_json(const FitResult& f);
FitResult fit_from_json(const nlohmann::json& j);

void write_records_csv(const std::vector<ExperimentRecord>& records, const std::string& path);
std::vector<ExperimentRecord> read_records_csv(const std::string& path);
nlohmann::json records_to_json(const std::vector<ExperimentRecord>& records);
std::vector<ExperimentRecord> records_from_json(const nlohmann::json& j);

/// Reads results.csv or results.json (by extension).
std::vector<ExperimentRecord> read_records(const std::string& path);

/// One fit per family, in order of first appearance. Families whose points
/// cannot be fitted get an entry with the error text instead.
nlohmann::json fit_records(const std::vector<ExperimentRecord>& records);

void write_profile_csv(const std::vector<std::pair<int, double>>& profile, const std::string& path);

/// Literature (a, b) pairs used only to annotate reports.
struct ReferenceFit {
  std::string model;
  std::string family;
  double a = 0.0;
  double b = 0.0;
};
const std::vector<ReferenceFit>& reference_fits();

/// Matched-parameter pairs: for each row of `left` the row of `right` with
/// nearest n, kept when |n_l - n_r| <= 0.1 * max(n_l, n_r).
std::vector<std::pair<std::size_t, std::size_t>> matched_pairs(const std::vector<long long>& left,
                                                               const std::vector<long long>& right);

/// Writes report.json, report.md and curve.csv (family, n, median delta_e)
/// into `dir`, which must hold a results.csv.
nlohmann::json report(const std::string& dir);

}  // namespace qctn
