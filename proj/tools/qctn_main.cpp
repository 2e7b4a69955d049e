#include "qctn/bench.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>

namespace {

enum ExitCode { kOk = 0, kUsage = 2, kIo = 3, kNumerical = 4, kRun = 5 };

int run_cmd(const std::string& config_path) {
  const qctn::ExperimentConfig cfg = qctn::load_config(config_path);
  const auto records = qctn::run_experiment(cfg);
  int failed = 0;
  for (const auto& r : records) {
    std::cout << r.family << " tau=" << r.tau << " n=" << r.n << " seed=" << r.seed << " delta_e=" << r.delta_e
              << " status=" << r.status << "\n";
    if (r.status == "error") ++failed;
  }
  std::cout << "wrote " << (std::filesystem::path(cfg.output_dir) / "results.csv").string() << "\n";
  return failed > 0 ? kRun : kOk;
}

int fit_cmd(const std::string& path, const std::string& out) {
  const nlohmann::json fits = qctn::fit_records(qctn::read_records(path));
  const std::string text = fits.dump(2) + "\n";
  if (out.empty()) {
    std::cout << text;
  } else {
    std::ofstream f(out);
    if (!(f << text)) throw qctn::IoError("cannot write " + out);
  }
  for (const auto& e : fits) {
    if (e.contains("error")) return kNumerical;
  }
  return kOk;
}

int correlate_cmd(const std::string& checkpoint, int r_max, const std::string& out) {
  std::ifstream in(checkpoint);
  if (!in) throw qctn::IoError("cannot open " + checkpoint);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw qctn::IoError(checkpoint + ": " + e.what());
  }
  if (!j.contains("model")) throw qctn::ConfigError(checkpoint + " has no embedded model");
  const qctn::ModelSpec spec = qctn::model_from_json(j.at("model"));
  const qctn::AnsatzDescriptor a = qctn::descriptor_from_json(j);
  if (r_max <= 0) r_max = spec.site_count() - 1;
  const auto profile = qctn::correlation_profile(a, spec, r_max);
  if (out.empty()) {
    std::cout << "r,value\n";
    for (const auto& [r, v] : profile) std::cout << r << "," << v << "\n";
  } else {
    qctn::write_profile_csv(profile, out);
  }
  return kOk;
}

int report_cmd(const std::string& dir) {
  const nlohmann::json rep = qctn::report(dir);
  std::cout << "wrote report.json, report.md and curve.csv in " << dir << "\n";
  for (const auto& e : rep.at("fits")) {
    if (e.contains("fit")) {
      std::cout << e.at("family").get<std::string>() << ": a=" << e.at("fit").at("a") << " b=" << e.at("fit").at("b")
                << "\n";
    }
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantum-circuit tensor network benchmarks"};
  app.require_subcommand(1);

  std::string config_path;
  auto* run = app.add_subcommand("run", "Run an experiment config (JSON)");
  run->add_option("config", config_path, "Experiment config file")->required();

  std::string fit_path, fit_out;
  auto* fit = app.add_subcommand("fit", "Fit delta_e = a n^-b per family from results.csv or results.json");
  fit->add_option("results", fit_path, "results.csv or results.json")->required();
  fit->add_option("-o,--output", fit_out, "Write fits as JSON to this file");

  std::string checkpoint, corr_out;
  int r_max = 0;
  auto* corr = app.add_subcommand("correlate", "Spin correlation profile of a checkpoint");
  corr->add_option("checkpoint", checkpoint, "Checkpoint JSON written by run")->required();
  corr->add_option("--r-max", r_max, "Largest distance (default: sites - 1)");
  corr->add_option("-o,--output", corr_out, "Write the profile as CSV to this file");

  std::string report_dir;
  auto* rep = app.add_subcommand("report", "Fits, medians and annotations for a results directory");
  rep->add_option("dir", report_dir, "Directory holding results.csv")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*run) return run_cmd(config_path);
    if (*fit) return fit_cmd(fit_path, fit_out);
    if (*corr) return correlate_cmd(checkpoint, r_max, corr_out);
    if (*rep) return report_cmd(report_dir);
  } catch (const qctn::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const qctn::IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kIo;
  } catch (const qctn::FitError& e) {
    std::cerr << "fit error: " << e.what() << "\n";
    return kNumerical;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "run failed: " << e.what() << "\n";
    return kRun;
  }
  return kUsage;
}
