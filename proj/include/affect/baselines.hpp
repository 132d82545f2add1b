#pragma once

#include <Eigen/Dense>

#include <charconv>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "affect/clusterer.hpp"
#include "affect/core_model.hpp"
#include "affect/evaluation.hpp"
#include "affect/random.hpp"
#include "affect/tracking.hpp"

namespace affect {

enum class MethodKind { static_clustering, constant_alpha, pcq, affect, oracle };

/// A tracking method: static clustering, fixed-alpha smoothing, PCQ blending, AFFECT with estimated alpha,
/// or smoothing with the oracle alpha (needs the true moments of every step).
struct MethodSpec {
  MethodKind kind = MethodKind::affect;
  double alpha = 0.0;
  int iterations = 3;
  InitPolicy init = InitPolicy::previous;

  static MethodSpec static_clustering() { return {MethodKind::static_clustering}; }
  static MethodSpec constant(double a) { return {MethodKind::constant_alpha, a}; }
  static MethodSpec pcq(double a) { return {MethodKind::pcq, a}; }
  static MethodSpec affect(int iterations = 3, InitPolicy init = InitPolicy::previous) {
    return {MethodKind::affect, 0.0, iterations, init};
  }
  static MethodSpec oracle() { return {MethodKind::oracle}; }

  std::string name() const {
    auto num = [](double a) {
      char buf[32];
      auto r = std::to_chars(buf, buf + sizeof buf, a);
      return std::string(buf, r.ptr);
    };
    switch (kind) {
      case MethodKind::static_clustering: return "static";
      case MethodKind::constant_alpha: return "constant:" + num(alpha);
      case MethodKind::pcq: return "pcq:" + num(alpha);
      case MethodKind::affect: return iterations == 3 ? "affect" : "affect:" + std::to_string(iterations);
      case MethodKind::oracle: return "oracle";
    }
    return "?";
  }
};

/// Parses static | constant:A | pcq:A | affect | affect:ITERATIONS | oracle.
inline MethodSpec parse_method(std::string_view s) {
  auto bad = [&] { return Error(Errc::bad_config, "unknown method '" + std::string(s) + "'"); };
  const auto colon = s.find(':');
  const std::string_view head = s.substr(0, colon);
  const std::string_view arg = colon == std::string_view::npos ? std::string_view{} : s.substr(colon + 1);
  auto number = [&]() {
    double v = 0.0;
    auto r = std::from_chars(arg.data(), arg.data() + arg.size(), v);
    if (arg.empty() || r.ec != std::errc{} || r.ptr != arg.data() + arg.size()) throw bad();
    if (!(v >= 0.0 && v <= 1.0)) throw Error(Errc::alpha_out_of_range, "method alpha outside [0,1]");
    return v;
  };
  if (head == "static" && arg.empty()) return MethodSpec::static_clustering();
  if (head == "oracle" && arg.empty()) return MethodSpec::oracle();
  if (head == "constant") return MethodSpec::constant(number());
  if (head == "pcq") return MethodSpec::pcq(number());
  if (head == "affect") {
    if (arg.empty()) return MethodSpec::affect();
    int it = 0;
    auto r = std::from_chars(arg.data(), arg.data() + arg.size(), it);
    if (r.ec != std::errc{} || r.ptr != arg.data() + arg.size() || it < 1) throw bad();
    return MethodSpec::affect(it);
  }
  throw bad();
}

/// One observation of a proximity sequence. Ground truth, the true proximity matrix and the noise variance are
/// optional and only feed metrics and the oracle method.
struct SequenceStep {
  ProximityMatrix w;
  std::optional<ClusterAssignment> truth;
  std::optional<ProximityMatrix> psi;
  std::optional<Eigen::MatrixXd> var;
};

struct MethodRun {
  RunMetrics metrics;
  std::vector<ClusterAssignment> assignments;  // labels matched to the previous step
  std::vector<std::vector<double>> alpha_iterations;
  std::vector<ProximityMatrix> smoothed;  // filled when keep_smoothed
};

struct RunOptions {
  bool keep_smoothed = false;
  bool match_labels = true;
};

inline std::uint64_t step_seed(std::uint64_t run_seed, int t) {
  return derive_seed(run_seed, {static_cast<std::uint64_t>(t)});
}

namespace detail {

/// alpha W^{t-1} + (1 - alpha) W^t over the objects present at both steps; new objects keep their raw rows.
inline ProximityMatrix pcq_blend(const ProximityMatrix& previous, const ProximityMatrix& current, double alpha) {
  std::optional<Alignment> a;
  try {
    a = align_state(previous, current);
  } catch (const Error& e) {
    if (e.code() == Errc::empty_intersection) return current;
    throw;
  }
  const ProximityMatrix& prev = a->prev_restricted;
  const ProximityMatrix shared = prev.ids() == current.ids() ? current : restrict_to(current, prev.ids());
  return embed_smoothed(current, smooth_update(prev, shared, alpha));
}

inline void record(MethodRun& run, const SequenceStep& step, int t, const ClusterAssignment& raw,
                   const ProximityMatrix& smoothed, std::vector<double> alphas, const RunOptions& opts) {
  ClusterAssignment labels = raw;
  if (opts.match_labels && !run.assignments.empty() && run.assignments.back().ids() == raw.ids())
    labels = match_clusters(raw, run.assignments.back());
  StepMetrics m;
  m.t = t;
  m.k = labels.k();
  if (step.truth && labels.size() >= 2) m.rand = rand_index(labels, *step.truth);
  if (step.psi) m.mse = affect::mse(smoothed, *step.psi);
  if (!alphas.empty()) m.alpha = alphas.back();
  run.metrics.per_step.push_back(m);
  run.assignments.push_back(std::move(labels));
  run.alpha_iterations.push_back(std::move(alphas));
  if (opts.keep_smoothed) run.smoothed.push_back(smoothed);
}

}  // namespace detail

/// Runs one method over a proximity sequence. Step t uses seed step_seed(run_seed, t).
/// static and constant:A cluster each smoothed matrix from scratch, affect warm-starts from the previous partition,
/// and pcq:A clusters alpha W^{t-1} + (1 - alpha) W^t (W^0 alone at t = 0).
inline MethodRun run_method(const MethodSpec& spec, const std::vector<SequenceStep>& sequence,
                            const Clusterer& clusterer, std::uint64_t run_seed, const RunOptions& opts = {}) {
  MethodRun run;
  if (spec.kind == MethodKind::pcq) {
    check_alpha(spec.alpha);
    for (std::size_t t = 0; t < sequence.size(); ++t) {
      const auto& s = sequence[t];
      const ProximityMatrix blended = t == 0 ? s.w : detail::pcq_blend(sequence[t - 1].w, s.w, spec.alpha);
      const ClusterAssignment c =
          clusterer(blended, std::nullopt, detail::iteration_seed(step_seed(run_seed, static_cast<int>(t)), 0));
      detail::record(run, s, static_cast<int>(t), c, blended, t == 0 ? std::vector<double>{} : std::vector{spec.alpha},
                     opts);
    }
    return run;
  }

  StepOptions so;
  so.iterations = spec.iterations;
  so.init = spec.init;
  switch (spec.kind) {
    case MethodKind::static_clustering:
      so.fixed_alpha = 0.0;
      so.warm_start = false;
      break;
    case MethodKind::constant_alpha:
      check_alpha(spec.alpha);
      so.fixed_alpha = spec.alpha;
      so.warm_start = false;
      break;
    default:
      break;
  }

  SmoothedState state;
  std::optional<ClusterAssignment> previous;
  for (std::size_t t = 0; t < sequence.size(); ++t) {
    const auto& s = sequence[t];
    StepOptions o = so;
    o.seed = step_seed(run_seed, static_cast<int>(t));
    if (spec.kind == MethodKind::oracle) {
      if (!s.psi || !s.var) throw Error(Errc::bad_config, "the oracle method needs true moments at every step");
      o.alpha_provider = [&s](const ProximityMatrix& prev) {
        if (prev.ids() != s.psi->ids()) throw Error(Errc::id_mismatch, "oracle moments need a fixed object set");
        return forgetting_factor(prev.values(), s.psi->values(), *s.var).alpha;
      };
    }
    StepResult r = affect_step(state, s.w, clusterer, previous, o);
    detail::record(run, s, static_cast<int>(t), r.assignment, *r.state.psi_hat, r.alpha_per_iteration, opts);
    previous = r.assignment;
    state = std::move(r.state);
  }
  return run;
}

}  // namespace affect
