#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "affect/clusterer.hpp"
#include "affect/core_model.hpp"
#include "affect/random.hpp"

namespace affect {

// ---------------------------------------------------------------------------
// Recursive smoothing

inline void check_alpha(double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw Error(Errc::alpha_out_of_range, "forgetting factor " + std::to_string(alpha) + " outside [0,1]");
}

/// alpha * prev + (1 - alpha) * current, elementwise. Both matrices must list the same ids in the same order.
inline ProximityMatrix smooth_update(const ProximityMatrix& prev, const ProximityMatrix& current, double alpha) {
  check_alpha(alpha);
  if (prev.ids() != current.ids()) throw Error(Errc::id_mismatch, "smoothing needs aligned matrices");
  if (alpha == 0.0) return current;
  if (alpha == 1.0) return current.with_values(prev.values());
  return current.with_values(alpha * prev.values() + (1.0 - alpha) * current.values());
}

/// Coefficients on W^0..W^t of the smoothed matrix after applying alpha^1..alpha^t:
/// beta^t = 1 - alpha^t, beta^s = (1 - alpha^s) prod_{r>s} alpha^r, beta^0 = prod_r alpha^r.
inline std::vector<double> expanded_weights(const std::vector<double>& alpha_history) {
  for (double a : alpha_history) check_alpha(a);
  const std::size_t t = alpha_history.size();
  std::vector<double> beta(t + 1, 0.0);
  double tail = 1.0;  // prod_{r>s} alpha^r
  for (std::size_t s = t; s >= 1; --s) {
    const double a = alpha_history[s - 1];
    beta[s] = (1.0 - a) * tail;
    tail *= a;
  }
  beta[0] = tail;
  return beta;
}

// ---------------------------------------------------------------------------
// Block moments

/// Sample means and unbiased variances of proximities per block of a partition.
/// Within-cluster off-diagonal blocks are sampled over unordered pairs l < m.
struct BlockMoments {
  int k = 0;
  std::vector<double> diag_mean, diag_var;
  std::vector<std::size_t> diag_count;
  std::vector<double> within_mean, within_var;
  std::vector<std::size_t> within_count;
  Eigen::MatrixXd between_mean, between_var;  // symmetric; diagonal unused (zero)
  Eigen::MatrixXd between_count;

  /// Estimated E[w_ij] for objects in clusters c, d (i == j marks a diagonal entry).
  double mean(int c, int d, bool diagonal) const {
    if (diagonal) return diag_mean[static_cast<std::size_t>(c)];
    if (c == d) return within_mean[static_cast<std::size_t>(c)];
    return between_mean(c, d);
  }
  double variance(int c, int d, bool diagonal) const {
    if (diagonal) return diag_var[static_cast<std::size_t>(c)];
    if (c == d) return within_var[static_cast<std::size_t>(c)];
    return between_var(c, d);
  }
};

inline BlockMoments estimate_block_moments(const ProximityMatrix& current, const ClusterAssignment& clusters) {
  if (clusters.ids() != current.ids()) throw Error(Errc::id_mismatch, "partition does not cover the matrix ids");
  const int k = clusters.k();
  const Eigen::Index n = current.size();
  const Eigen::MatrixXd& w = current.values();
  const auto& lab = clusters.labels();
  const auto ks = static_cast<std::size_t>(k);

  BlockMoments m;
  m.k = k;
  m.diag_mean.assign(ks, 0.0);
  m.diag_var.assign(ks, 0.0);
  m.diag_count.assign(ks, 0);
  m.within_mean.assign(ks, 0.0);
  m.within_var.assign(ks, 0.0);
  m.within_count.assign(ks, 0);
  m.between_mean = Eigen::MatrixXd::Zero(k, k);
  m.between_var = Eigen::MatrixXd::Zero(k, k);
  m.between_count = Eigen::MatrixXd::Zero(k, k);

  // Pass 1: sums.
  double offdiag_sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto c = static_cast<std::size_t>(lab[static_cast<std::size_t>(i)]);
    m.diag_mean[c] += w(i, i);
    ++m.diag_count[c];
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const int d = lab[static_cast<std::size_t>(j)];
      offdiag_sum += w(i, j);
      if (static_cast<std::size_t>(d) == c) {
        m.within_mean[c] += w(i, j);
        ++m.within_count[c];
      } else {
        const int lo = std::min<int>(static_cast<int>(c), d), hi = std::max<int>(static_cast<int>(c), d);
        m.between_mean(lo, hi) += w(i, j);
        m.between_count(lo, hi) += 1.0;
      }
    }
  }
  const double pairs = static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
  const double global_offdiag = pairs > 0.0 ? offdiag_sum / pairs : 0.0;
  for (std::size_t c = 0; c < ks; ++c) {
    m.diag_mean[c] /= static_cast<double>(m.diag_count[c]);
    m.within_mean[c] = m.within_count[c] > 0 ? m.within_mean[c] / static_cast<double>(m.within_count[c])
                                             : global_offdiag;
  }
  for (int c = 0; c < k; ++c)
    for (int d = c + 1; d < k; ++d) {
      const double cnt = m.between_count(c, d);
      m.between_mean(c, d) = cnt > 0.0 ? m.between_mean(c, d) / cnt : global_offdiag;
    }

  // Pass 2: squared deviations.
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto c = static_cast<std::size_t>(lab[static_cast<std::size_t>(i)]);
    const double dd = w(i, i) - m.diag_mean[c];
    m.diag_var[c] += dd * dd;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const int d = lab[static_cast<std::size_t>(j)];
      if (static_cast<std::size_t>(d) == c) {
        const double e = w(i, j) - m.within_mean[c];
        m.within_var[c] += e * e;
      } else {
        const int lo = std::min<int>(static_cast<int>(c), d), hi = std::max<int>(static_cast<int>(c), d);
        const double e = w(i, j) - m.between_mean(lo, hi);
        m.between_var(lo, hi) += e * e;
      }
    }
  }
  auto unbiased = [](double ss, double count) { return count >= 2.0 ? ss / (count - 1.0) : 0.0; };
  for (std::size_t c = 0; c < ks; ++c) {
    m.diag_var[c] = unbiased(m.diag_var[c], static_cast<double>(m.diag_count[c]));
    m.within_var[c] = unbiased(m.within_var[c], static_cast<double>(m.within_count[c]));
  }
  for (int c = 0; c < k; ++c)
    for (int d = c + 1; d < k; ++d) {
      m.between_var(c, d) = unbiased(m.between_var(c, d), m.between_count(c, d));
      m.between_mean(d, c) = m.between_mean(c, d);
      m.between_var(d, c) = m.between_var(c, d);
      m.between_count(d, c) = m.between_count(c, d);
    }
  return m;
}

/// Block-replicated estimate of E[W] (n x n).
inline Eigen::MatrixXd expected_matrix(const BlockMoments& m, const ClusterAssignment& clusters) {
  const auto n = static_cast<Eigen::Index>(clusters.size());
  Eigen::MatrixXd out(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      out(i, j) = m.mean(clusters[static_cast<std::size_t>(i)], clusters[static_cast<std::size_t>(j)], i == j);
  return out;
}

/// Block-replicated estimate of var(W) (n x n).
inline Eigen::MatrixXd variance_matrix(const BlockMoments& m, const ClusterAssignment& clusters) {
  const auto n = static_cast<Eigen::Index>(clusters.size());
  Eigen::MatrixXd out(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      out(i, j) = m.variance(clusters[static_cast<std::size_t>(i)], clusters[static_cast<std::size_t>(j)], i == j);
  return out;
}

// ---------------------------------------------------------------------------
// Forgetting factor

struct ForgettingEstimate {
  double alpha = 0.0;
  double numerator = 0.0;    // sum of noise variances
  double denominator = 0.0;  // sum of squared bias of the previous estimate plus noise variances
  int iterations_run = 0;
};

inline ForgettingEstimate finish_estimate(double num, double den) {
  ForgettingEstimate e;
  e.numerator = num;
  e.denominator = den;
  e.alpha = den > 0.0 ? std::clamp(num / den, 0.0, 1.0) : 0.0;
  return e;
}

/// Risk-minimizing forgetting factor given full matrices of the true proximities and noise variances:
/// sum var / sum[(prev - expected)^2 + var]. Used with oracle moments.
inline ForgettingEstimate forgetting_factor(const Eigen::MatrixXd& prev_smoothed, const Eigen::MatrixXd& expected,
                                            const Eigen::MatrixXd& variance) {
  if (prev_smoothed.rows() != expected.rows() || prev_smoothed.rows() != variance.rows() ||
      prev_smoothed.cols() != expected.cols() || prev_smoothed.cols() != variance.cols())
    throw Error(Errc::dimension_mismatch, "forgetting factor inputs differ in shape");
  const double num = variance.sum();
  return finish_estimate(num, (prev_smoothed - expected).squaredNorm() + num);
}

/// Plug-in forgetting factor: block sample moments stand in for the true mean and noise variance.
inline ForgettingEstimate estimate_alpha(const ProximityMatrix& prev_smoothed, const BlockMoments& moments,
                                         const ClusterAssignment& clusters) {
  if (prev_smoothed.ids() != clusters.ids()) throw Error(Errc::id_mismatch, "partition and matrix ids differ");
  if (moments.k != clusters.k()) throw Error(Errc::dimension_mismatch, "moments were computed for another k");
  const Eigen::Index n = prev_smoothed.size();
  const auto& lab = clusters.labels();
  const Eigen::MatrixXd& prev = prev_smoothed.values();
  double num = 0.0, bias = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    const int cj = lab[static_cast<std::size_t>(j)];
    for (Eigen::Index i = 0; i < n; ++i) {
      const int ci = lab[static_cast<std::size_t>(i)];
      const double e = prev(i, j) - moments.mean(ci, cj, i == j);
      bias += e * e;
      num += moments.variance(ci, cj, i == j);
    }
  }
  return finish_estimate(num, bias + num);
}

// ---------------------------------------------------------------------------
// Evolutionary step

struct SmoothedState {
  std::optional<ProximityMatrix> psi_hat;  // empty before the first step
  std::vector<double> alpha_history;       // alpha^1..alpha^t
  int t = -1;

  bool started() const noexcept { return psi_hat.has_value(); }
};

enum class InitPolicy { previous, static_clustering };

/// Supplies alpha^t given the previous smoothed matrix restricted to (and ordered like) the surviving objects.
using AlphaProvider = std::function<double(const ProximityMatrix& prev_restricted)>;

struct StepOptions {
  int iterations = 3;
  InitPolicy init = InitPolicy::previous;
  std::uint64_t seed = 0;
  // When set, alpha is not estimated: one smoothing pass with this value, then one clustering.
  std::optional<double> fixed_alpha;
  AlphaProvider alpha_provider;
  // Pass the running assignment to the clusterer as a warm start (evolutionary k-means).
  bool warm_start = true;
};

struct StepResult {
  SmoothedState state;
  ClusterAssignment assignment;
  ForgettingEstimate estimate;
  std::vector<double> alpha_per_iteration;
  bool restarted = false;  // smoothing reset because no object survived from the previous step
};

namespace detail {

inline std::uint64_t iteration_seed(std::uint64_t seed, int iteration) {
  return derive_seed(seed, {static_cast<std::uint64_t>(iteration)});
}

/// Extends a partition of some objects to `target`'s ids: objects it does not cover join the cluster with
/// the highest mean similarity (lowest mean dissimilarity) in `target`.
inline ClusterAssignment extend_assignment(const ClusterAssignment& known, const ProximityMatrix& target) {
  const auto where = index_of(known.ids());
  const Eigen::Index n = target.size();
  std::vector<int> labels(static_cast<std::size_t>(n), -1);
  std::vector<Eigen::Index> members;
  for (Eigen::Index i = 0; i < n; ++i) {
    auto it = where.find(target.ids()[static_cast<std::size_t>(i)]);
    if (it != where.end()) labels[static_cast<std::size_t>(i)] = known[static_cast<std::size_t>(it->second)];
  }
  const int k = known.k();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (labels[static_cast<std::size_t>(i)] >= 0) continue;
    std::vector<double> sum(static_cast<std::size_t>(k), 0.0), cnt(static_cast<std::size_t>(k), 0.0);
    for (Eigen::Index j = 0; j < n; ++j) {
      const int l = labels[static_cast<std::size_t>(j)];
      if (j == i || l < 0) continue;
      sum[static_cast<std::size_t>(l)] += target(i, j);
      cnt[static_cast<std::size_t>(l)] += 1.0;
    }
    int best = 0;
    double best_v = 0.0;
    bool have = false;
    for (int c = 0; c < k; ++c) {
      if (cnt[static_cast<std::size_t>(c)] == 0.0) continue;
      double v = sum[static_cast<std::size_t>(c)] / cnt[static_cast<std::size_t>(c)];
      if (target.kind() == ProximityKind::dissimilarity) v = -v;
      if (!have || v > best_v) {
        best = c;
        best_v = v;
        have = true;
      }
    }
    labels[static_cast<std::size_t>(i)] = best;
  }
  for (int& l : labels)
    if (l < 0) l = 0;
  return ClusterAssignment::compacted(labels, target.ids());
}

/// Current matrix with the entries among `shared` objects replaced by `smoothed_shared`.
inline ProximityMatrix embed_smoothed(const ProximityMatrix& current, const ProximityMatrix& smoothed_shared) {
  if (smoothed_shared.ids() == current.ids()) return smoothed_shared;
  const auto where = index_of(current.ids());
  std::vector<Eigen::Index> idx;
  for (const auto& id : smoothed_shared.ids()) idx.push_back(where.at(id));
  Eigen::MatrixXd out = current.values();
  const auto m = static_cast<Eigen::Index>(idx.size());
  for (Eigen::Index a = 0; a < m; ++a)
    for (Eigen::Index b = 0; b < m; ++b) out(idx[a], idx[b]) = smoothed_shared(a, b);
  return current.with_values(std::move(out));
}

}  // namespace detail

/// One time step of adaptive evolutionary clustering:
///   C <- initial partition; repeat: block moments of W^t under C, alpha from them,
///   Psi^t = alpha Psi^{t-1} + (1 - alpha) W^t, C <- cluster(Psi^t).
/// The first step sets Psi^0 = W^0 and clusters it. Objects that are new at this step enter Psi^t with their raw
/// proximities and do not influence alpha.
inline StepResult affect_step(const SmoothedState& state, const ProximityMatrix& current, const Clusterer& clusterer,
                              const std::optional<ClusterAssignment>& init, const StepOptions& opts = {}) {
  if (opts.iterations < 1) throw Error(Errc::bad_config, "iterations must be >= 1");
  if (opts.fixed_alpha) check_alpha(*opts.fixed_alpha);

  StepResult out;
  out.state.alpha_history = state.alpha_history;
  out.state.t = state.t + 1;

  std::optional<Alignment> aligned;
  if (state.started()) {
    try {
      aligned = align_state(*state.psi_hat, current);
    } catch (const Error& e) {
      if (e.code() != Errc::empty_intersection) throw;
      out.restarted = true;
    }
  }

  auto warm = [&](const ClusterAssignment& c) {
    return opts.warm_start ? std::optional<ClusterAssignment>(c) : std::nullopt;
  };

  if (!aligned) {
    // Psi^t = W^t: the first step, or a restart after every object was replaced.
    out.state.psi_hat = current;
    std::optional<ClusterAssignment> start;
    if (init && opts.init == InitPolicy::previous && init->ids() == current.ids()) start = warm(*init);
    out.assignment = clusterer(current, start, detail::iteration_seed(opts.seed, 0));
    if (out.restarted) out.state.alpha_history.push_back(0.0);
    return out;
  }

  const ProximityMatrix& prev = aligned->prev_restricted;
  const ProximityMatrix current_shared =
      aligned->new_ids.empty() && prev.ids() == current.ids() ? current : restrict_to(current, prev.ids());

  auto smooth_with = [&](double alpha) {
    return detail::embed_smoothed(current, smooth_update(prev, current_shared, alpha));
  };

  std::optional<double> given;
  if (opts.fixed_alpha) given = opts.fixed_alpha;
  if (opts.alpha_provider) given = std::clamp(opts.alpha_provider(prev), 0.0, 1.0);

  // Initial partition.
  ClusterAssignment clusters;
  const bool have_previous = init && opts.init == InitPolicy::previous;
  if (have_previous) {
    clusters = detail::extend_assignment(*init, current);
  } else if (!given) {
    clusters = clusterer(current, std::nullopt, detail::iteration_seed(opts.seed, 0));
  }

  if (given) {
    out.estimate.alpha = *given;
    const ProximityMatrix psi = smooth_with(*given);
    std::optional<ClusterAssignment> start;
    if (have_previous) start = warm(clusters);
    out.assignment = clusterer(psi, start, detail::iteration_seed(opts.seed, 0));
    out.alpha_per_iteration.push_back(*given);
    out.state.psi_hat = psi;
    out.state.alpha_history.push_back(*given);
    return out;
  }

  std::optional<ProximityMatrix> psi;
  for (int it = 1; it <= opts.iterations; ++it) {
    const ClusterAssignment shared_clusters = restrict_to(clusters, prev.ids());
    const BlockMoments moments = estimate_block_moments(current_shared, shared_clusters);
    out.estimate = estimate_alpha(prev, moments, shared_clusters);
    out.estimate.iterations_run = it;
    out.alpha_per_iteration.push_back(out.estimate.alpha);
    psi = smooth_with(out.estimate.alpha);
    clusters = clusterer(*psi, warm(clusters), detail::iteration_seed(opts.seed, it));
  }
  out.assignment = clusters;
  out.state.psi_hat = std::move(psi);
  out.state.alpha_history.push_back(out.estimate.alpha);
  return out;
}

/// Streaming wrapper: carries the smoothed state and the previous partition from step to step.
class Tracker {
 public:
  Tracker(Clusterer clusterer, StepOptions opts) : clusterer_(std::move(clusterer)), opts_(std::move(opts)) {}

  const StepResult& step(const ProximityMatrix& current, std::uint64_t seed) {
    StepOptions o = opts_;
    o.seed = seed;
    std::optional<ClusterAssignment> init;
    if (last_) init = last_->assignment;
    last_ = affect_step(last_ ? last_->state : SmoothedState{}, current, clusterer_, init, o);
    return *last_;
  }

  const std::optional<StepResult>& last() const noexcept { return last_; }

 private:
  Clusterer clusterer_;
  StepOptions opts_;
  std::optional<StepResult> last_;
};

}  // namespace affect
