#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "affect/baselines.hpp"
#include "affect/clusterer.hpp"
#include "affect/evaluation.hpp"
#include "affect/generators/boids.hpp"
#include "affect/generators/gmm.hpp"
#include "affect/io.hpp"

namespace affect {

enum class ClustererKind { kmeans, hierarchical, spectral };

struct ClustererSpec {
  ClustererKind kind = ClustererKind::kmeans;
  Linkage linkage = Linkage::complete;
  SpectralVariant variant = SpectralVariant::normalized_cut;
  int k = 2;
  // Spectral only: choose k per step by modularity over [k_min, k_max].
  bool modularity = false;
  int k_min = 2;
  int k_max = 8;
};

inline Clusterer make_clusterer(const ClustererSpec& s) {
  if (s.modularity) {
    if (s.kind != ClustererKind::spectral) throw Error(Errc::bad_config, "modularity k selection needs spectral");
    if (s.k_min < 1 || s.k_max < s.k_min) throw Error(Errc::bad_config, "bad modularity k range");
    return spectral_modularity_clusterer(s.variant, s.k_min, s.k_max);
  }
  if (s.k < 1) throw Error(Errc::bad_config, "k must be >= 1");
  switch (s.kind) {
    case ClustererKind::kmeans: return kmeans_clusterer(s.k);
    case ClustererKind::hierarchical: return hierarchical_clusterer(s.linkage, s.k);
    case ClustererKind::spectral: return spectral_clusterer(s.variant, s.k);
  }
  throw Error(Errc::bad_config, "unknown clusterer");
}

enum class BoidsProximity { distance, gaussian, dot };

struct GmmScenario {
  gen::DynamicGmmConfig config;
};

struct BoidsScenario {
  gen::BoidsConfig config;
  BoidsProximity proximity = BoidsProximity::distance;
  double rho = 20.0;
};

struct CsvScenario {
  std::filesystem::path dir;
  ProximityKind kind = ProximityKind::similarity;
};

using Scenario = std::variant<GmmScenario, BoidsScenario, CsvScenario>;

/// Observations of one replication. Generated scenarios draw from `seed`; CSV scenarios ignore it.
inline std::vector<SequenceStep> make_sequence(const Scenario& scenario, std::uint64_t seed) {
  if (const auto* g = std::get_if<GmmScenario>(&scenario)) {
    gen::DynamicGmmConfig c = g->config;
    c.seed = seed;
    std::vector<SequenceStep> out;
    for (auto& s : gen::gmm_run(c))
      out.push_back({std::move(s.similarity), std::move(s.memberships), std::move(s.oracle_psi), std::move(s.oracle_var)});
    return out;
  }
  if (const auto* b = std::get_if<BoidsScenario>(&scenario)) {
    gen::BoidsConfig c = b->config;
    c.seed = seed;
    std::vector<SequenceStep> out;
    for (auto& s : gen::boids_run(c)) {
      ProximityMatrix w = b->proximity == BoidsProximity::distance   ? gen::distance_matrix(s.positions)
                          : b->proximity == BoidsProximity::gaussian ? gen::gaussian_similarity(s.positions, b->rho)
                                                                     : gen::dot_similarity(s.positions);
      out.push_back({std::move(w), std::move(s.memberships), std::nullopt, std::nullopt});
    }
    return out;
  }
  const auto& csv = std::get<CsvScenario>(scenario);
  return io::ingest(csv.dir, csv.kind);
}

struct ExperimentConfig {
  Scenario scenario;
  ClustererSpec clusterer;
  std::vector<MethodSpec> methods;
  int runs = 1;
  std::uint64_t seed = 0;
  int threads = 1;  // 0: hardware concurrency
};

/// Run r draws its scenario from derive_seed(seed, {r, 0}) and clusters with derive_seed(seed, {r, 1}),
/// so every method sees the same data and the same per-step seeds.
inline std::uint64_t scenario_seed(std::uint64_t seed, int run) {
  return derive_seed(seed, {static_cast<std::uint64_t>(run), 0});
}
inline std::uint64_t clustering_seed(std::uint64_t seed, int run) {
  return derive_seed(seed, {static_cast<std::uint64_t>(run), 1});
}

struct ExperimentResult {
  std::vector<std::string> method_names;
  std::vector<std::uint64_t> run_seeds;
  std::vector<std::vector<MethodRun>> runs;  // [run][method]

  /// Mean over runs of each run's mean Rand index for one method, with the standard error across runs.
  MeanStderr summary(std::size_t method) const {
    std::vector<RunMetrics> per_run;
    for (const auto& r : runs) per_run.push_back(r[method].metrics);
    return summarize_runs(per_run);
  }
};

inline void validate_config(const ExperimentConfig& c) {
  if (c.runs < 1) throw Error(Errc::bad_config, "runs must be >= 1");
  if (c.methods.empty()) throw Error(Errc::bad_config, "no methods to run");
  if (c.threads < 0) throw Error(Errc::bad_config, "threads must be >= 0");
}

inline ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& opts = {}) {
  validate_config(config);
  const Clusterer clusterer = make_clusterer(config.clusterer);
  ExperimentResult result;
  for (const auto& m : config.methods) result.method_names.push_back(m.name());
  result.runs.resize(static_cast<std::size_t>(config.runs));
  for (int r = 0; r < config.runs; ++r) result.run_seeds.push_back(scenario_seed(config.seed, r));

  const bool replay = std::holds_alternative<CsvScenario>(config.scenario);
  std::optional<std::vector<SequenceStep>> shared;
  if (replay) shared = make_sequence(config.scenario, 0);

  auto one_run = [&](int r) {
    std::optional<std::vector<SequenceStep>> own;
    if (!replay) own = make_sequence(config.scenario, result.run_seeds[static_cast<std::size_t>(r)]);
    const auto& seq = replay ? *shared : *own;
    auto& slot = result.runs[static_cast<std::size_t>(r)];
    for (const auto& m : config.methods) slot.push_back(run_method(m, seq, clusterer, clustering_seed(config.seed, r), opts));
  };

  int threads = config.threads == 0 ? static_cast<int>(std::max(1u, std::thread::hardware_concurrency())) : config.threads;
  threads = std::min(threads, config.runs);
  if (threads <= 1) {
    for (int r = 0; r < config.runs; ++r) one_run(r);
    return result;
  }
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (int w = 0; w < threads; ++w)
    pool.emplace_back([&] {
      for (int r = next++; r < config.runs; r = next++) {
        try {
          one_run(r);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next = config.runs;
        }
      }
    });
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return result;
}

// ---------------------------------------------------------------------------
// Output

inline void write_metrics_csv(std::ostream& out, const ExperimentResult& res) {
  out << "run,seed,t,method,alpha,k,rand,mse\n";
  for (std::size_t r = 0; r < res.runs.size(); ++r)
    for (std::size_t m = 0; m < res.runs[r].size(); ++m)
      for (const auto& s : res.runs[r][m].metrics.per_step) {
        out << r << ',' << res.run_seeds[r] << ',' << s.t << ',' << res.method_names[m] << ',';
        if (s.alpha) out << io::format_double(*s.alpha);
        out << ',' << s.k << ',';
        if (!std::isnan(s.rand)) out << io::format_double(s.rand);
        out << ',';
        if (s.mse) out << io::format_double(*s.mse);
        out << '\n';
      }
}

inline void write_alpha_csv(std::ostream& out, const ExperimentResult& res) {
  out << "run,t,iteration,alpha\n";
  for (std::size_t r = 0; r < res.runs.size(); ++r)
    for (std::size_t m = 0; m < res.runs[r].size(); ++m) {
      if (res.method_names[m].rfind("affect", 0) != 0 && res.method_names[m] != "oracle") continue;
      const auto& alphas = res.runs[r][m].alpha_iterations;
      for (std::size_t t = 0; t < alphas.size(); ++t)
        for (std::size_t it = 0; it < alphas[t].size(); ++it)
          out << r << ',' << t << ',' << it + 1 << ',' << io::format_double(alphas[t][it]) << '\n';
    }
}

inline void write_summary_csv(std::ostream& out, const ExperimentResult& res) {
  out << "method,mean_rand,stderr\n";
  for (std::size_t m = 0; m < res.method_names.size(); ++m) {
    const MeanStderr s = res.summary(m);
    out << res.method_names[m] << ',' << io::format_double(s.mean) << ',' << io::format_double(s.stderr_) << '\n';
  }
}

inline void write_outputs(const std::filesystem::path& dir, const ExperimentResult& res) {
  std::filesystem::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream f(dir / name);
    if (!f) throw Error(Errc::parse_error, (dir / name).string() + ": cannot write");
    return f;
  };
  {
    auto f = open("metrics.csv");
    write_metrics_csv(f, res);
  }
  {
    auto f = open("alpha.csv");
    write_alpha_csv(f, res);
  }
  {
    auto f = open("summary.csv");
    write_summary_csv(f, res);
  }
}

// ---------------------------------------------------------------------------
// Presets

/// Two 2-D components at (4,0) and (-4,0), covariance 0.1 I, 40 samples split evenly; each mean takes an
/// independent +-0.1 step along the first axis every step; covariances become 0.3 I at t = 19. k-means, k = 2.
inline ExperimentConfig well_separated_preset() {
  gen::DynamicGmmConfig g;
  g.n = 40;
  g.means = {Eigen::Vector2d(4, 0), Eigen::Vector2d(-4, 0)};
  g.covariances = {0.1 * Eigen::Matrix2d::Identity(), 0.1 * Eigen::Matrix2d::Identity()};
  g.weights = {0.5, 0.5};
  g.walk = {0, 0.1};
  g.covariance_events = {{19, -1, 0.3 * Eigen::Matrix2d::Identity()}};
  g.steps = 40;
  ExperimentConfig c{GmmScenario{g}, {}, {}, 1, 0, 1};
  c.clusterer.kind = ClustererKind::kmeans;
  c.clusterer.k = 2;
  c.methods = {MethodSpec::affect(1), MethodSpec::oracle(), MethodSpec::constant(0.0), MethodSpec::constant(0.25),
               MethodSpec::constant(0.5), MethodSpec::constant(0.75)};
  return c;
}

/// Stationary component at (3,3) and a mover starting at (-3,-3) that steps by (0.4,0.4) at t = 1..9, identity
/// covariances, 40 samples. The share of the mover drops to 3/8 at t = 10 and 1/4 at t = 11. k-means, k = 2.
inline ExperimentConfig colliding_preset() {
  gen::DynamicGmmConfig g;
  g.n = 40;
  g.means = {Eigen::Vector2d(3, 3), Eigen::Vector2d(-3, -3)};
  g.covariances = {Eigen::Matrix2d::Identity(), Eigen::Matrix2d::Identity()};
  g.weights = {0.5, 0.5};
  g.drifts = {{1, Eigen::Vector2d(0.4, 0.4), 1, 9}};
  g.proportion_events = {{10, {5.0 / 8.0, 3.0 / 8.0}}, {11, {3.0 / 4.0, 1.0 / 4.0}}};
  g.steps = 40;
  ExperimentConfig c{GmmScenario{g}, {}, {}, 1, 0, 1};
  c.clusterer.kind = ClustererKind::kmeans;
  c.clusterer.k = 2;
  c.methods = {MethodSpec::static_clustering(), MethodSpec::affect(3), MethodSpec::affect(1),
               MethodSpec::constant(0.5), MethodSpec::oracle()};
  return c;
}

/// Four flocks of 25 boids in separate 60-unit cubes, five moves per step, one boid changes flock per step.
/// Complete linkage on Euclidean distances, k = 4.
inline ExperimentConfig boids_fixed_preset() {
  BoidsScenario b;
  b.config.steps = 40;
  b.proximity = BoidsProximity::distance;
  ExperimentConfig c{b, {}, {}, 1, 0, 1};
  c.clusterer.kind = ClustererKind::hierarchical;
  c.clusterer.linkage = Linkage::complete;
  c.clusterer.k = 4;
  c.methods = {MethodSpec::static_clustering(), MethodSpec::affect(3), MethodSpec::affect(1),
               MethodSpec::constant(0.5)};
  return c;
}

/// The fixed-flock setup, scattered at t = 17 (no cohesion, repulsion radius 20) and regrouped into two
/// flocks at t = 19. Normalized-cut spectral clustering of Gaussian similarities with k chosen by modularity.
inline ExperimentConfig boids_variable_preset() {
  BoidsScenario b;
  b.config.steps = 40;
  b.config.scatter_at = 17;
  b.config.scatter_radius = 20.0;
  b.config.regroup_at = 19;
  b.config.regroup_flocks = 2;
  b.proximity = BoidsProximity::gaussian;
  b.rho = 15.0;
  ExperimentConfig c{b, {}, {}, 1, 0, 1};
  c.clusterer.kind = ClustererKind::spectral;
  c.clusterer.variant = SpectralVariant::normalized_cut;
  c.clusterer.modularity = true;
  c.clusterer.k_min = 2;
  c.clusterer.k_max = 8;
  c.methods = {MethodSpec::static_clustering(), MethodSpec::affect(3), MethodSpec::affect(1),
               MethodSpec::constant(0.5), MethodSpec::pcq(0.5)};
  return c;
}

inline std::optional<ExperimentConfig> preset(std::string_view name) {
  if (name == "well-separated") return well_separated_preset();
  if (name == "colliding") return colliding_preset();
  if (name == "boids-fixed") return boids_fixed_preset();
  if (name == "boids-variable") return boids_variable_preset();
  return std::nullopt;
}

}  // namespace affect
