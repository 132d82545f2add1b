#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "affect/core_model.hpp"

namespace affect {

/// Fraction of object pairs on which two partitions agree (both together or both apart).
inline double rand_index(const ClusterAssignment& a, const ClusterAssignment& b) {
  if (a.ids() != b.ids()) throw Error(Errc::id_mismatch, "rand index needs partitions of the same objects");
  const std::size_t n = a.size();
  if (n < 2) throw Error(Errc::too_few_objects, "rand index needs at least two objects");

  // Pair counts from the contingency table: agreements = C(n,2) - (pairs together in a only) - (in b only).
  Eigen::MatrixXd table = Eigen::MatrixXd::Zero(a.k(), b.k());
  for (std::size_t i = 0; i < n; ++i) table(a[i], b[i]) += 1.0;
  auto choose2 = [](double x) { return x * (x - 1.0) / 2.0; };
  double both = 0.0, in_a = 0.0, in_b = 0.0;
  for (Eigen::Index r = 0; r < table.rows(); ++r)
    for (Eigen::Index c = 0; c < table.cols(); ++c) both += choose2(table(r, c));
  for (Eigen::Index r = 0; r < table.rows(); ++r) in_a += choose2(table.row(r).sum());
  for (Eigen::Index c = 0; c < table.cols(); ++c) in_b += choose2(table.col(c).sum());
  const double total = choose2(static_cast<double>(n));
  return (total - (in_a - both) - (in_b - both)) / total;
}

/// Squared Frobenius distance between two matrices over the same objects.
inline double mse(const ProximityMatrix& estimate, const ProximityMatrix& truth) {
  if (estimate.ids() != truth.ids()) throw Error(Errc::id_mismatch, "mse needs matrices over the same objects");
  return (estimate.values() - truth.values()).squaredNorm();
}

/// Maximum-weight perfect matching on a square matrix (Kuhn-Munkres with potentials, O(k^3)).
/// Returns perm with row i matched to column perm[i].
inline std::vector<int> hungarian(const Eigen::MatrixXd& weights) {
  if (weights.rows() != weights.cols()) throw Error(Errc::non_square, "hungarian needs a square weight matrix");
  const int n = static_cast<int>(weights.rows());
  if (n == 0) return {};
  const double inf = std::numeric_limits<double>::infinity();
  // Minimize -weights; 1-based arrays with a virtual column 0.
  std::vector<double> u(static_cast<std::size_t>(n + 1), 0.0), v(static_cast<std::size_t>(n + 1), 0.0);
  std::vector<int> p(static_cast<std::size_t>(n + 1), 0), way(static_cast<std::size_t>(n + 1), 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(n + 1), inf);
    std::vector<char> used(static_cast<std::size_t>(n + 1), 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const int i0 = p[static_cast<std::size_t>(j0)];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cur = -weights(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> perm(static_cast<std::size_t>(n), 0);
  for (int j = 1; j <= n; ++j) perm[static_cast<std::size_t>(p[static_cast<std::size_t>(j)] - 1)] = j - 1;
  return perm;
}

/// Relabeled `current` so that each cluster takes the label of the previous cluster it shares the most objects
/// with under a one-to-one matching. Clusters left without a partner get fresh labels after the previous ones.
/// The result may skip labels when current has fewer clusters than previous.
inline std::vector<int> match_labels(const ClusterAssignment& current, const ClusterAssignment& previous) {
  if (current.ids() != previous.ids()) throw Error(Errc::id_mismatch, "cluster matching needs the same objects");
  const int kc = current.k(), kp = previous.k();
  const int size = std::max(kc, kp);
  Eigen::MatrixXd overlap = Eigen::MatrixXd::Zero(size, size);
  for (std::size_t i = 0; i < current.size(); ++i) overlap(current[i], previous[i]) += 1.0;
  const std::vector<int> perm = hungarian(overlap);
  std::vector<int> relabel(static_cast<std::size_t>(kc));
  int fresh = kp;
  for (int c = 0; c < kc; ++c) {
    const int p = perm[static_cast<std::size_t>(c)];
    relabel[static_cast<std::size_t>(c)] = p < kp ? p : fresh++;
  }
  std::vector<int> labels(current.size());
  for (std::size_t i = 0; i < current.size(); ++i) labels[i] = relabel[static_cast<std::size_t>(current[i])];
  return labels;
}

/// match_labels, packaged as an assignment (labels compacted if the matching left gaps).
inline ClusterAssignment match_clusters(const ClusterAssignment& current, const ClusterAssignment& previous) {
  return ClusterAssignment::compacted(match_labels(current, previous), current.ids());
}

struct StepMetrics {
  int t = 0;
  double rand = std::numeric_limits<double>::quiet_NaN();
  std::optional<double> mse;
  std::optional<double> alpha;
  int k = 0;
};

struct MeanStderr {
  double mean = 0.0;
  double stderr_ = 0.0;
  std::size_t count = 0;
};

inline MeanStderr mean_stderr(const std::vector<double>& xs) {
  MeanStderr out;
  out.count = xs.size();
  if (xs.empty()) return out;
  double s = 0.0;
  for (double x : xs) s += x;
  out.mean = s / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - out.mean) * (x - out.mean);
    out.stderr_ = std::sqrt(ss / static_cast<double>(xs.size() - 1) / static_cast<double>(xs.size()));
  }
  return out;
}

/// Per-step metrics of one run plus the mean Rand index over its steps.
struct RunMetrics {
  std::vector<StepMetrics> per_step;

  double mean_rand() const {
    std::vector<double> r;
    for (const auto& s : per_step)
      if (!std::isnan(s.rand)) r.push_back(s.rand);
    return mean_stderr(r).mean;
  }
};

/// Scenario summary: mean of per-run mean Rand indices, with the standard error across runs.
inline MeanStderr summarize_runs(const std::vector<RunMetrics>& runs) {
  std::vector<double> per_run;
  per_run.reserve(runs.size());
  for (const auto& r : runs) per_run.push_back(r.mean_rand());
  return mean_stderr(per_run);
}

}  // namespace affect
