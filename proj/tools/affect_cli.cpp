#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "affect/affect.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kRuntimeError = 3;

bool is_config_error(affect::Errc c) {
  return c == affect::Errc::bad_config || c == affect::Errc::alpha_out_of_range;
}

int run_command(const std::string& config_file, std::optional<int> runs, std::optional<std::uint64_t> seed,
                std::optional<int> threads, const std::string& out_dir, const std::string& dump_dir) {
  affect::ExperimentConfig cfg;
  try {
    cfg = affect::config::load(config_file);
    if (runs) cfg.runs = *runs;
    if (seed) cfg.seed = *seed;
    if (threads) cfg.threads = *threads;
    affect::validate_config(cfg);
  } catch (const affect::Error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  }

  try {
    if (!dump_dir.empty()) {
      for (int r = 0; r < cfg.runs; ++r) {
        char name[32];
        std::snprintf(name, sizeof name, "run_%04d", r);
        affect::io::dump(std::filesystem::path(dump_dir) / name,
                         affect::make_sequence(cfg.scenario, affect::scenario_seed(cfg.seed, r)));
      }
    }
    const affect::ExperimentResult res = affect::run_experiment(cfg);
    affect::write_outputs(out_dir, res);
    for (std::size_t m = 0; m < res.method_names.size(); ++m) {
      const auto s = res.summary(m);
      std::printf("%-16s rand %.4f +- %.4f\n", res.method_names[m].c_str(), s.mean, s.stderr_);
    }
  } catch (const affect::Error& e) {
    std::cerr << "error [" << affect::to_string(e.code()) << "]: " << e.what() << '\n';
    return is_config_error(e.code()) ? kConfigError : kRuntimeError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return kOk;
}

int ingest_command(const std::string& dir, const std::string& kind_name) {
  const auto kind =
      kind_name == "similarity" ? affect::ProximityKind::similarity : affect::ProximityKind::dissimilarity;
  try {
    const auto seq = affect::io::ingest(dir, kind);
    affect::ObjectRegistry registry;
    std::cout << "t,n,added,removed,truth\n";
    for (std::size_t t = 0; t < seq.size(); ++t) {
      const auto change = registry.observe(seq[t].w.ids());
      std::cout << t << ',' << seq[t].w.size() << ',' << change.added.size() << ',' << change.removed.size() << ','
                << (seq[t].truth ? "yes" : "no") << '\n';
    }
  } catch (const affect::Error& e) {
    std::cerr << "error [" << affect::to_string(e.code()) << "]: " << e.what() << '\n';
    return kRuntimeError;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive evolutionary clustering experiments"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run a configured experiment and write metrics.csv, alpha.csv, summary.csv");
  std::string config_file, out_dir = "out", dump_dir;
  std::optional<int> runs, threads;
  std::optional<std::uint64_t> seed;
  run->add_option("--config", config_file, "Experiment config file")->required();
  run->add_option("--runs", runs, "Number of replications")->check(CLI::PositiveNumber);
  run->add_option("--seed", seed, "Master seed");
  run->add_option("--threads", threads, "Worker threads (0: all cores)")->check(CLI::NonNegativeNumber);
  run->add_option("--out", out_dir, "Output directory");
  run->add_option("--dump", dump_dir, "Also write each run's proximity sequence here for replay");

  auto* ingest = app.add_subcommand("ingest", "Validate a directory of step_NNNN.csv matrices");
  std::string dir, kind;
  ingest->add_option("--dir", dir, "Sequence directory")->required();
  ingest->add_option("--kind", kind, "similarity or dissimilarity")
      ->required()
      ->check(CLI::IsMember({"similarity", "dissimilarity"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  if (*run) return run_command(config_file, runs, seed, threads, out_dir, dump_dir);
  return ingest_command(dir, kind);
}
