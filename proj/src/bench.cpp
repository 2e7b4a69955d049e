#include "qctn/bench.hpp"

#include "qctn/dmrg.hpp"
#include "qctn/oracle.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace qctn {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::string reference_name(ReferenceKind k) { return k == ReferenceKind::ed ? "ED" : "DMRG"; }

std::string objective_name(ObjectiveKind k) { return k == ObjectiveKind::energy ? "energy" : "infidelity"; }

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

void require_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.contains(it.key())) throw ConfigError("unknown key '" + it.key() + "' in " + where);
  }
}

AnsatzSweep sweep_from_json(const json& j) {
  require_keys(j, {"family", "q", "q_m", "tau_schedule"}, "ansatz");
  AnsatzSweep s;
  s.family = parse_family(j.at("family").get<std::string>());
  s.q = get_or(j, "q", 0);
  s.q_m = get_or(j, "q_m", 0);
  s.tau_schedule = j.at("tau_schedule").get<std::vector<int>>();
  return s;
}

json sweep_to_json(const AnsatzSweep& s) {
  return json{{"family", family_name(s.family)}, {"q", s.q}, {"q_m", s.q_m}, {"tau_schedule", s.tau_schedule}};
}

OptimizerConfig optimizer_from_json(const json& j) {
  require_keys(j, {"method", "max_iterations", "rel_energy_tol", "lbfgs_memory", "seed", "path", "checkpoint_every"},
               "optimizer");
  OptimizerConfig o;
  if (j.contains("method")) o.method = parse_method(j.at("method").get<std::string>());
  o.max_iterations = get_or(j, "max_iterations", o.max_iterations);
  o.rel_energy_tol = get_or(j, "rel_energy_tol", o.rel_energy_tol);
  o.lbfgs_memory = get_or(j, "lbfgs_memory", o.lbfgs_memory);
  o.seed = get_or<std::uint64_t>(j, "seed", o.seed);
  if (j.contains("path")) o.path = parse_path(j.at("path").get<std::string>());
  o.checkpoint_every = get_or(j, "checkpoint_every", o.checkpoint_every);
  return o;
}

json optimizer_to_json(const OptimizerConfig& o) {
  return json{{"method", method_name(o.method)},         {"max_iterations", o.max_iterations},
              {"rel_energy_tol", o.rel_energy_tol},      {"lbfgs_memory", o.lbfgs_memory},
              {"seed", o.seed},                          {"path", path_name(o.path)},
              {"checkpoint_every", o.checkpoint_every}};
}

void validate_config(const ExperimentConfig& c) {
  if (c.ansatze.empty() && c.dense_mps_bonds.empty()) throw ConfigError("config has neither ansatz sweeps nor dense MPS bonds");
  if (c.seeds.empty()) throw ConfigError("seed set is empty");
  if (!(c.optimizer.rel_energy_tol > 0.0)) throw ConfigError("rel_energy_tol must be positive");
  if (c.optimizer.max_iterations < 0) throw ConfigError("max_iterations must be non-negative");
  if (c.init_scale < 0.0) throw ConfigError("init_scale must be non-negative");
  if (c.perturbation && *c.perturbation < 0.0) throw ConfigError("perturbation must be non-negative");
  const int qubits = c.model.qubit_count();
  if (c.reference.kind == ReferenceKind::ed && qubits > kMaxEdQubits) {
    throw ConfigError("ED reference needs at most " + std::to_string(kMaxEdQubits) + " qubits, model has " +
                      std::to_string(qubits) + "; use a DMRG reference");
  }
  if (c.reference.kind == ReferenceKind::dmrg && c.reference.bond < 1) throw ConfigError("DMRG reference bond must be >= 1");
  for (const auto& s : c.ansatze) {
    if (s.tau_schedule.empty()) throw ConfigError("tau schedule is empty");
    for (std::size_t i = 1; i < s.tau_schedule.size(); ++i) {
      if (s.tau_schedule[i] <= s.tau_schedule[i - 1]) throw ConfigError("tau schedule must be strictly increasing");
    }
    try {
      for (int tau : s.tau_schedule) build_ansatz(s.family, qubits, s.q, tau, s.q_m);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("invalid ansatz: ") + e.what());
    }
  }
  for (std::size_t d : c.dense_mps_bonds) {
    if (d < 1) throw ConfigError("dense MPS bond must be >= 1");
  }
}

std::string run_tag(const AnsatzSweep& s, std::uint64_t seed, int tau) {
  return family_name(s.family) + "_q" + std::to_string(s.q) + "_s" + std::to_string(seed) + "_t" + std::to_string(tau);
}

std::uint64_t run_seed(std::uint64_t seed, int tau) { return seed * 1000003ULL + static_cast<std::uint64_t>(tau); }

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<ExperimentRecord> run_chain(const ExperimentConfig& c, const AnsatzSweep& s, std::uint64_t seed,
                                        const Reference& ref, const TermList& h, const fs::path& out_dir) {
  const Objective obj = c.objective == ObjectiveKind::energy ? Objective::energy(h, c.optimizer.path)
                                                             : Objective::infidelity(ref.state, c.optimizer.path);
  const int qubits = c.model.qubit_count();
  std::vector<ExperimentRecord> records;
  std::optional<AnsatzDescriptor> prev;
  for (int tau : s.tau_schedule) {
    ExperimentRecord rec;
    rec.family = family_name(s.family);
    rec.L = c.model.site_count();
    rec.q = s.q;
    rec.tau = tau;
    rec.seed = seed;
    const std::string tag = run_tag(s, seed, tau);
    try {
      const std::uint64_t rs = run_seed(seed, tau);
      AnsatzDescriptor start;
      if (prev && c.init == InitPolicy::adaptive) {
        start = adaptive_grow(*prev, tau, c.perturbation, rs, &obj);
      } else {
        start = build_ansatz(s.family, qubits, s.q, tau, s.q_m);
        randomize_parameters(start, c.init_scale, rs);
      }
      rec.n = static_cast<long long>(count_parameters(start));
      OptimizerConfig oc = c.optimizer;
      oc.seed = rs;
      if (oc.checkpoint_every > 0) oc.checkpoint_prefix = (out_dir / "checkpoints" / (tag + "_partial")).string();
      OptimizationResult res = optimize(start, obj, oc);
      if (!c.record_wall_time) {
        for (auto& e : res.trace.entries) e.seconds = 0.0;
      }
      rec.objective_value = res.trace.final_value();
      rec.energy = c.objective == ObjectiveKind::energy ? rec.objective_value : energy(res.ansatz, c.model).value;
      rec.delta_e = relative_error(rec.energy, ref.energy);
      rec.iterations = res.trace.iterations();
      rec.status = status_name(res.trace.status);
      rec.trace_path = "traces/" + tag + ".csv";
      rec.checkpoint_path = "checkpoints/" + tag + ".json";
      write_trace_csv(res.trace, (out_dir / rec.trace_path).string());
      save_descriptor(res.ansatz, (out_dir / rec.checkpoint_path).string(),
                      json{{"model", to_json(c.model)},
                           {"seed", seed},
                           {"objective", objective_name(c.objective)},
                           {"value", rec.objective_value},
                           {"energy", rec.energy}});
      prev = std::move(res.ansatz);
    } catch (const std::exception& e) {
      std::cerr << "warning: run " << tag << " failed: " << e.what() << "\n";
      rec.status = "error";
      rec.energy = std::nan("");
      rec.delta_e = std::nan("");
      prev.reset();
    }
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<ExperimentRecord> dense_rows(const ExperimentConfig& c, const MPO& mpo, const Reference& ref) {
  std::vector<ExperimentRecord> rows;
  for (std::size_t d : c.dense_mps_bonds) {
    DmrgOptions opt;
    opt.max_bond = d;
    opt.seed = c.seeds.front();
    const DmrgResult r = dmrg_ground_state(mpo, opt);
    ExperimentRecord rec;
    rec.family = "dMPS";
    rec.L = c.model.site_count();
    rec.q = static_cast<int>(std::lround(std::log2(static_cast<double>(d))));
    rec.tau = 0;
    rec.n = dense_mps_parameter_count(c.model.qubit_count(), static_cast<long long>(d));
    rec.energy = r.energy;
    rec.objective_value = r.energy;
    rec.delta_e = relative_error(r.energy, ref.energy);
    rec.iterations = static_cast<int>(r.energy_trace.size());
    rec.status = r.converged ? "converged" : "budget_exhausted";
    rows.push_back(std::move(rec));
  }
  return rows;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

const char* kCsvHeader = "family,L,q,tau,n,energy,delta_e,iterations,status";

}  // namespace

ExperimentConfig config_from_json(const json& j) {
  try {
    require_keys(j,
                 {"name", "model", "ansatz", "dense_mps_bonds", "optimizer", "objective", "reference", "output_dir",
                  "seeds", "init", "init_scale", "perturbation", "full_scale", "record_wall_time"},
                 "config");
    ExperimentConfig c;
    c.name = get_or<std::string>(j, "name", c.name);
    c.model = model_from_json(j.at("model"));
    if (j.contains("ansatz")) {
      const json& a = j.at("ansatz");
      if (a.is_array()) {
        for (const auto& x : a) c.ansatze.push_back(sweep_from_json(x));
      } else {
        c.ansatze.push_back(sweep_from_json(a));
      }
    }
    c.dense_mps_bonds = get_or(j, "dense_mps_bonds", c.dense_mps_bonds);
    if (j.contains("optimizer")) c.optimizer = optimizer_from_json(j.at("optimizer"));
    if (j.contains("objective")) {
      const auto o = j.at("objective").get<std::string>();
      if (o == "energy") c.objective = ObjectiveKind::energy;
      else if (o == "infidelity") c.objective = ObjectiveKind::infidelity;
      else throw ConfigError("objective must be 'energy' or 'infidelity'");
    }
    if (j.contains("reference")) {
      const json& r = j.at("reference");
      require_keys(r, {"policy", "D"}, "reference");
      const auto p = r.at("policy").get<std::string>();
      if (p == "ED") c.reference.kind = ReferenceKind::ed;
      else if (p == "DMRG") c.reference.kind = ReferenceKind::dmrg;
      else throw ConfigError("reference policy must be 'ED' or 'DMRG'");
      c.reference.bond = get_or<std::size_t>(r, "D", c.reference.bond);
    }
    c.output_dir = get_or<std::string>(j, "output_dir", c.output_dir);
    c.seeds = get_or(j, "seeds", c.seeds);
    if (j.contains("init")) {
      const auto i = j.at("init").get<std::string>();
      if (i == "adaptive") c.init = InitPolicy::adaptive;
      else if (i == "random") c.init = InitPolicy::random;
      else throw ConfigError("init must be 'adaptive' or 'random'");
    }
    c.init_scale = get_or(j, "init_scale", c.init_scale);
    if (j.contains("perturbation") && !(j.at("perturbation").is_string() && j.at("perturbation") == "auto")) {
      c.perturbation = j.at("perturbation").get<double>();
    }
    c.full_scale = get_or(j, "full_scale", c.full_scale);
    c.record_wall_time = get_or(j, "record_wall_time", c.record_wall_time);
    validate_config(c);
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  } catch (const ModelError& e) {
    throw ConfigError(std::string("invalid model: ") + e.what());
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

json to_json(const ExperimentConfig& c) {
  json ansatze = json::array();
  for (const auto& s : c.ansatze) ansatze.push_back(sweep_to_json(s));
  json j{{"name", c.name},
         {"model", to_json(c.model)},
         {"ansatz", ansatze},
         {"dense_mps_bonds", c.dense_mps_bonds},
         {"optimizer", optimizer_to_json(c.optimizer)},
         {"objective", objective_name(c.objective)},
         {"reference", {{"policy", reference_name(c.reference.kind)}, {"D", c.reference.bond}}},
         {"output_dir", c.output_dir},
         {"seeds", c.seeds},
         {"init", c.init == InitPolicy::adaptive ? "adaptive" : "random"},
         {"init_scale", c.init_scale},
         {"full_scale", c.full_scale},
         {"record_wall_time", c.record_wall_time}};
  j["perturbation"] = c.perturbation ? json(*c.perturbation) : json("auto");
  return j;
}

ExperimentConfig load_config(const std::string& path) {
  const std::string text = read_text(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return config_from_json(j);
}

std::string config_hash(const ExperimentConfig& c) {
  const std::string s = to_json(c).dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Reference resolve_reference(const ExperimentConfig& c) {
  const TermList h = build_terms(c.model);
  const int qubits = c.model.qubit_count();
  Reference ref;
  if (c.reference.kind == ReferenceKind::ed) {
    if (qubits > kMaxEdQubits) throw ConfigError("ED reference unavailable for " + std::to_string(qubits) + " qubits");
    const EDResult ed = ed_ground_state(h);
    ref.energy = ed.ground_energy;
    ref.state = from_statevector(ed.ground_vector, static_cast<std::size_t>(qubits), std::size_t{1} << (qubits / 2));
    ref.description = "ED";
    if (ed.degenerate) std::cerr << "warning: ED ground state is degenerate; infidelity reference is one member\n";
  } else {
    DmrgOptions opt;
    opt.max_bond = c.reference.bond;
    const DmrgResult r = dmrg_ground_state(terms_to_mpo(h), opt);
    if (!r.converged) std::cerr << "warning: DMRG reference did not reach its tolerance\n";
    if (r.max_discarded_weight > kMaxReferenceDiscardedWeight) {
      std::cerr << "warning: DMRG reference discarded weight " << r.max_discarded_weight << " exceeds "
                << kMaxReferenceDiscardedWeight << "\n";
    }
    ref.energy = r.energy;
    ref.state = r.state;
    ref.description = "DMRG D=" + std::to_string(c.reference.bond);
  }
  if (ref.energy == 0.0) throw ConfigError("reference energy is zero; relative errors are undefined");
  return ref;
}

int worker_count() {
  const char* v = std::getenv("QCTN_WORKERS");
  if (v == nullptr || *v == '\0') return 1;
  char* end = nullptr;
  const long n = std::strtol(v, &end, 10);
  if (*end != '\0' || n < 1) throw ConfigError(std::string("QCTN_WORKERS must be a positive integer, got '") + v + "'");
  return static_cast<int>(n);
}

double relative_error(double energy, double reference) { return (energy - reference) / std::abs(reference); }

std::vector<ExperimentRecord> run_experiment(const ExperimentConfig& c) {
  validate_config(c);
  const fs::path out_dir(c.output_dir);
  try {
    fs::create_directories(out_dir / "traces");
    fs::create_directories(out_dir / "checkpoints");
  } catch (const fs::filesystem_error& e) {
    throw IoError(e.what());
  }
  if (c.full_scale) std::cerr << "note: full-scale config, expect long runtimes\n";
  const Reference ref = resolve_reference(c);
  const TermList h = build_terms(c.model);

  struct Task {
    std::size_t sweep;
    std::size_t seed;
  };
  std::vector<Task> tasks;
  for (std::size_t s = 0; s < c.ansatze.size(); ++s) {
    for (std::size_t k = 0; k < c.seeds.size(); ++k) tasks.push_back({s, k});
  }
  std::vector<std::vector<ExperimentRecord>> results(tasks.size());
  std::atomic<std::size_t> next{0};
  std::mutex err_mutex;
  std::exception_ptr failure;
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      try {
        results[i] = run_chain(c, c.ansatze[tasks[i].sweep], c.seeds[tasks[i].seed], ref, h, out_dir);
      } catch (...) {
        std::lock_guard lock(err_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int workers = std::min<int>(worker_count(), static_cast<int>(std::max<std::size_t>(tasks.size(), 1)));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<ExperimentRecord> records;
  for (auto& r : results) records.insert(records.end(), r.begin(), r.end());
  if (!c.dense_mps_bonds.empty()) {
    auto rows = dense_rows(c, terms_to_mpo(h), ref);
    records.insert(records.end(), rows.begin(), rows.end());
  }

  write_records_csv(records, (out_dir / "results.csv").string());
  json j{{"config", to_json(c)},
         {"config_hash", config_hash(c)},
         {"seeds", c.seeds},
         {"reference", {{"energy", ref.energy}, {"description", ref.description}}},
         {"records", records_to_json(records)}};
  write_text(out_dir / "results.json", j.dump(2) + "\n");
  return records;
}

FitResult fit_power_law(const std::vector<FitPoint>& points) {
  FitResult f;
  std::vector<double> xs, ys;
  for (const auto& p : points) {
    if (!(p.n > 0.0) || !(p.delta_e > 0.0) || !std::isfinite(p.n) || !std::isfinite(p.delta_e)) {
      f.warnings.push_back("dropped point (n=" + format_double(p.n) + ", delta_e=" + format_double(p.delta_e) + ")");
      continue;
    }
    xs.push_back(std::log(p.n));
    ys.push_back(std::log(p.delta_e));
  }
  for (const auto& w : f.warnings) std::cerr << "warning: " << w << "\n";
  if (xs.size() < 3) throw FitError("power-law fit needs at least 3 positive points, got " + std::to_string(xs.size()));
  const double k = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= k;
  my /= k;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (sxx == 0.0) throw FitError("power-law fit needs at least two distinct n");
  const double slope = sxy / sxx;
  const double intercept = my - slope * mx;
  f.a = std::exp(intercept);
  f.b = -slope;
  double ss = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - (intercept + slope * xs[i]);
    ss += r * r;
  }
  f.residual = std::sqrt(ss / k);
  f.points = static_cast<int>(xs.size());
  return f;
}

json to_json(const FitResult& f) {
  return json{{"a", f.a}, {"b", f.b}, {"residual", f.residual}, {"points", f.points}, {"warnings", f.warnings}};
}

FitResult fit_from_json(const json& j) {
  FitResult f;
  f.a = j.at("a").get<double>();
  f.b = j.at("b").get<double>();
  f.residual = j.at("residual").get<double>();
  f.points = j.at("points").get<int>();
  f.warnings = get_or(j, "warnings", f.warnings);
  return f;
}

void write_records_csv(const std::vector<ExperimentRecord>& records, const std::string& path) {
  std::string text = std::string(kCsvHeader) + "\n";
  for (const auto& r : records) {
    text += r.family + "," + std::to_string(r.L) + "," + std::to_string(r.q) + "," + std::to_string(r.tau) + "," +
            std::to_string(r.n) + "," + format_double(r.energy) + "," + format_double(r.delta_e) + "," +
            std::to_string(r.iterations) + "," + r.status + "\n";
  }
  write_text(path, text);
}

std::vector<ExperimentRecord> read_records_csv(const std::string& path) {
  std::istringstream in(read_text(path));
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) throw IoError(path + ": missing or unexpected CSV header");
  std::vector<ExperimentRecord> out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != 9) throw IoError(path + ":" + std::to_string(lineno) + ": expected 9 columns");
    try {
      ExperimentRecord r;
      r.family = cells[0];
      r.L = std::stoi(cells[1]);
      r.q = std::stoi(cells[2]);
      r.tau = std::stoi(cells[3]);
      r.n = std::stoll(cells[4]);
      r.energy = std::strtod(cells[5].c_str(), nullptr);
      r.delta_e = std::strtod(cells[6].c_str(), nullptr);
      r.iterations = std::stoi(cells[7]);
      r.status = cells[8];
      out.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw IoError(path + ":" + std::to_string(lineno) + ": malformed row");
    }
  }
  return out;
}

json records_to_json(const std::vector<ExperimentRecord>& records) {
  json arr = json::array();
  for (const auto& r : records) {
    json x{{"family", r.family},         {"L", r.L},
           {"q", r.q},                   {"tau", r.tau},
           {"n", r.n},                   {"iterations", r.iterations},
           {"status", r.status},         {"seed", r.seed},
           {"trace", r.trace_path},      {"checkpoint", r.checkpoint_path}};
    // JSON has no NaN; failed runs carry null values.
    x["energy"] = std::isfinite(r.energy) ? json(r.energy) : json(nullptr);
    x["delta_e"] = std::isfinite(r.delta_e) ? json(r.delta_e) : json(nullptr);
    x["objective_value"] = std::isfinite(r.objective_value) ? json(r.objective_value) : json(nullptr);
    arr.push_back(std::move(x));
  }
  return arr;
}

std::vector<ExperimentRecord> records_from_json(const json& j) {
  const json& arr = j.is_object() ? j.at("records") : j;
  std::vector<ExperimentRecord> out;
  auto num = [](const json& x, const char* key) {
    return x.contains(key) && !x.at(key).is_null() ? x.at(key).get<double>() : std::nan("");
  };
  for (const auto& x : arr) {
    ExperimentRecord r;
    r.family = x.at("family").get<std::string>();
    r.L = x.at("L").get<int>();
    r.q = x.at("q").get<int>();
    r.tau = x.at("tau").get<int>();
    r.n = x.at("n").get<long long>();
    r.energy = num(x, "energy");
    r.delta_e = num(x, "delta_e");
    r.objective_value = num(x, "objective_value");
    r.iterations = x.at("iterations").get<int>();
    r.status = x.at("status").get<std::string>();
    r.seed = get_or<std::uint64_t>(x, "seed", 0);
    r.trace_path = get_or<std::string>(x, "trace", "");
    r.checkpoint_path = get_or<std::string>(x, "checkpoint", "");
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<ExperimentRecord> read_records(const std::string& path) {
  if (fs::path(path).extension() == ".json") {
    try {
      return records_from_json(json::parse(read_text(path)));
    } catch (const json::exception& e) {
      throw IoError(path + ": " + e.what());
    }
  }
  return read_records_csv(path);
}

json fit_records(const std::vector<ExperimentRecord>& records) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<FitPoint>> points;
  for (const auto& r : records) {
    if (!points.contains(r.family)) order.push_back(r.family);
    points[r.family].push_back({static_cast<double>(r.n), r.delta_e});
  }
  json out = json::array();
  for (const auto& fam : order) {
    json entry{{"family", fam}};
    try {
      entry["fit"] = to_json(fit_power_law(points[fam]));
    } catch (const FitError& e) {
      entry["error"] = e.what();
    }
    out.push_back(std::move(entry));
  }
  return out;
}

void write_profile_csv(const std::vector<std::pair<int, double>>& profile, const std::string& path) {
  std::string text = "r,value\n";
  for (const auto& [r, v] : profile) text += std::to_string(r) + "," + format_double(v) + "\n";
  write_text(path, text);
}

const std::vector<ReferenceFit>& reference_fits() {
  static const std::vector<ReferenceFit> fits{
      {"heisenberg-1d", "qMPS-b", 20.0, 4.0},          {"heisenberg-1d", "qMPS-l", 14.0, 3.1},
      {"heisenberg-1d", "QC-b", 4.0, 1.4},             {"heisenberg-1d", "QC-l", 8.0, 2.2},
      {"heisenberg-1d", "qMERA-b", 15.0, 3.1},         {"heisenberg-1d", "dMPS", 15.0, 2.9},
      {"heisenberg-1d", "dense-block-MERA", 3.5, 1.2}, {"fermi-hubbard-1d", "qMPS-b", 9.0, 1.9},
      {"fermi-hubbard-1d", "qMPS-l", 10.0, 1.9},       {"fermi-hubbard-1d", "QC-b", 4.4, 1.0},
      {"fermi-hubbard-1d", "QC-l", 0.4, 0.5},          {"fermi-hubbard-1d", "qMERA-b", 6.0, 1.4},
      {"fermi-hubbard-1d", "dMPS", 8.0, 1.5},          {"fermi-hubbard-1d", "dense-block-MERA", 0.8, 0.6},
      {"heisenberg-2d-snake", "qMPS-b", 4.7, 1.1},     {"heisenberg-2d-snake", "dMPS", 1.4, 0.48},
  };
  return fits;
}

std::vector<std::pair<std::size_t, std::size_t>> matched_pairs(const std::vector<long long>& left,
                                                               const std::vector<long long>& right) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i < left.size(); ++i) {
    std::optional<std::size_t> best;
    for (std::size_t j = 0; j < right.size(); ++j) {
      if (!best || std::llabs(right[j] - left[i]) < std::llabs(right[*best] - left[i])) best = j;
    }
    if (!best) continue;
    const double gap = static_cast<double>(std::llabs(right[*best] - left[i]));
    if (gap <= 0.1 * static_cast<double>(std::max(left[i], right[*best]))) out.emplace_back(i, *best);
  }
  return out;
}

json report(const std::string& dir) {
  const fs::path d(dir);
  const auto records = read_records_csv((d / "results.csv").string());
  std::string model;
  if (fs::exists(d / "results.json")) {
    try {
      const json j = json::parse(read_text((d / "results.json").string()));
      model = j.at("config").at("model").at("model").get<std::string>();
    } catch (const json::exception& e) {
      throw IoError((d / "results.json").string() + ": " + e.what());
    }
  }

  // Median over seeds for every (family, n).
  std::vector<std::string> families;
  std::map<std::string, std::map<long long, std::vector<double>>> cells;
  for (const auto& r : records) {
    if (!std::isfinite(r.delta_e)) continue;
    if (!cells.contains(r.family)) families.push_back(r.family);
    cells[r.family][r.n].push_back(r.delta_e);
  }
  std::string curve = "family,n,median_delta_e\n";
  std::map<std::string, std::vector<long long>> ns;
  std::map<std::string, std::vector<double>> medians;
  for (const auto& fam : families) {
    for (const auto& [n, v] : cells[fam]) {
      const double m = median(v);
      curve += fam + "," + std::to_string(n) + "," + format_double(m) + "\n";
      ns[fam].push_back(n);
      medians[fam].push_back(m);
    }
  }
  write_text(d / "curve.csv", curve);

  json rep{{"model", model}, {"fits", fit_records(records)}};
  json refs = json::array();
  for (const auto& f : reference_fits()) {
    if (f.model == model && cells.contains(f.family)) refs.push_back({{"family", f.family}, {"a", f.a}, {"b", f.b}});
  }
  rep["literature_fits"] = refs;

  json pairs = json::array();
  if (ns.contains("qMPS-b") && ns.contains("QC-b")) {
    for (auto [i, j] : matched_pairs(ns["qMPS-b"], ns["QC-b"])) {
      pairs.push_back({{"n_qmps_b", ns["qMPS-b"][i]},
                       {"n_qc_b", ns["QC-b"][j]},
                       {"median_qmps_b", medians["qMPS-b"][i]},
                       {"median_qc_b", medians["QC-b"][j]},
                       {"qmps_b_not_worse", medians["qMPS-b"][i] <= medians["QC-b"][j]}});
    }
  }
  rep["matched_pairs"] = pairs;
  write_text(d / "report.json", rep.dump(2) + "\n");

  std::string md = "# Report: " + (model.empty() ? std::string("unknown model") : model) + "\n\n";
  md += "| family | a | b | rms residual | points |\n|---|---|---|---|---|\n";
  for (const auto& e : rep["fits"]) {
    if (e.contains("fit")) {
      const FitResult f = fit_from_json(e["fit"]);
      char buf[256];
      std::snprintf(buf, sizeof(buf), "| %s | %.4g | %.4g | %.3g | %d |\n", e["family"].get<std::string>().c_str(), f.a,
                    f.b, f.residual, f.points);
      md += buf;
    } else {
      md += "| " + e["family"].get<std::string>() + " | - | - | " + e["error"].get<std::string>() + " | - |\n";
    }
  }
  if (!refs.empty()) {
    md += "\nLiterature values (L = 32, long runs; for orientation only):\n\n| family | a | b |\n|---|---|---|\n";
    for (const auto& r : refs) {
      char buf[128];
      std::snprintf(buf, sizeof(buf), "| %s | %.3g | %.3g |\n", r["family"].get<std::string>().c_str(),
                    r["a"].get<double>(), r["b"].get<double>());
      md += buf;
    }
  }
  if (!pairs.empty()) {
    md += "\nMatched parameter counts (qMPS-b vs QC-b, median delta E):\n\n| n qMPS-b | n QC-b | qMPS-b | QC-b |\n|---|---|---|---|\n";
    for (const auto& p : pairs) {
      char buf[160];
      std::snprintf(buf, sizeof(buf), "| %lld | %lld | %.3e | %.3e |\n", p["n_qmps_b"].get<long long>(),
                    p["n_qc_b"].get<long long>(), p["median_qmps_b"].get<double>(), p["median_qc_b"].get<double>());
      md += buf;
    }
  }
  write_text(d / "report.md", md);
  return rep;
}

}  // namespace qctn
