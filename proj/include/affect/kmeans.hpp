#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <variant>
#include <vector>

#include "affect/core_model.hpp"
#include "affect/linalg.hpp"
#include "affect/random.hpp"

namespace affect {

struct KMeansOptions {
  int max_iterations = 1000;
  // Reject W when its smallest eigenvalue is below -psd_tolerance * ||W||_F.
  double psd_tolerance = 1e-6;
  bool check_psd = true;
};

struct KMeansResult {
  std::vector<int> labels;
  double cost = 0.0;
  int iterations = 0;
  std::vector<double> cost_history;  // cost of the assignment entering each iteration, then the final one
};

namespace detail {

/// Squared distances of every object to every centroid using only dot products:
/// ||x_i - m_c||^2 = w_ii - 2 sum_{j in c} w_ij / |c| + sum_{j,l in c} w_jl / |c|^2.
inline Eigen::MatrixXd gram_distances(const Eigen::MatrixXd& w, const std::vector<int>& labels, int k,
                                      std::vector<double>& sizes) {
  const Eigen::Index n = w.rows();
  Eigen::MatrixXd indicator = Eigen::MatrixXd::Zero(n, k);
  sizes.assign(static_cast<std::size_t>(k), 0.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    indicator(i, labels[static_cast<std::size_t>(i)]) = 1.0;
    sizes[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])] += 1.0;
  }
  const Eigen::MatrixXd s = w * indicator;                        // s(i,c) = sum_{j in c} w_ij
  const Eigen::VectorXd within = (indicator.transpose() * s).diagonal();  // sum_{j,l in c} w_jl
  Eigen::MatrixXd dist(n, k);
  for (int c = 0; c < k; ++c) {
    const double sz = sizes[static_cast<std::size_t>(c)];
    if (sz == 0.0) {
      dist.col(c).setConstant(std::numeric_limits<double>::infinity());
      continue;
    }
    dist.col(c) = w.diagonal() - (2.0 / sz) * s.col(c) + Eigen::VectorXd::Constant(n, within(c) / (sz * sz));
  }
  return dist;
}

inline double assignment_cost(const Eigen::MatrixXd& dist, const std::vector<int>& labels) {
  double cost = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) cost += dist(static_cast<Eigen::Index>(i), labels[i]);
  return cost;
}

/// Moves the object farthest from its own centroid into each empty cluster; near-ties go to the lowest index.
inline void repair_empty(const Eigen::MatrixXd& w, std::vector<int>& labels, int k) {
  for (;;) {
    std::vector<double> sizes(static_cast<std::size_t>(k), 0.0);
    for (int l : labels) sizes[static_cast<std::size_t>(l)] += 1.0;
    if (std::find(sizes.begin(), sizes.end(), 0.0) == sizes.end()) return;
    const Eigen::MatrixXd dist = gram_distances(w, labels, k, sizes);
    int empty = -1;
    for (int c = 0; c < k; ++c)
      if (sizes[static_cast<std::size_t>(c)] == 0.0) {
        empty = c;
        break;
      }
    if (empty < 0) return;
    Eigen::Index far = -1;
    double best = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      const int l = labels[static_cast<std::size_t>(i)];
      if (sizes[static_cast<std::size_t>(l)] < 2.0) continue;
      if (far < 0 || dist(i, l) > best + 1e-9 * (1.0 + std::abs(best))) {
        best = dist(i, l);
        far = i;
      }
    }
    labels[static_cast<std::size_t>(far)] = empty;
  }
}

}  // namespace detail

inline void check_kmeans_input(const ProximityMatrix& w, int k, const KMeansOptions& opts) {
  if (w.kind() != ProximityKind::similarity)
    throw Error(Errc::wrong_kind, "k-means needs a dot-product similarity matrix");
  if (k < 1 || k > w.size()) throw Error(Errc::k_out_of_range, "k-means needs 1 <= k <= n");
  if (opts.check_psd) {
    const double lmin = smallest_eigenvalue(w.values());
    if (lmin < -opts.psd_tolerance * w.values().norm())
      throw Error(Errc::not_psd, "smallest eigenvalue " + std::to_string(lmin));
  }
}

/// Lloyd iterations on a Gram matrix from the given initial labels (values in [0, k)).
/// An object keeps its label unless another centroid is strictly closer; ties otherwise go to the
/// lowest cluster index.
inline KMeansResult kmeans_similarity_from(const ProximityMatrix& w, int k, std::vector<int> labels,
                                           const KMeansOptions& opts = {}) {
  check_kmeans_input(w, k, opts);
  if (static_cast<Eigen::Index>(labels.size()) != w.size())
    throw Error(Errc::dimension_mismatch, "initial labels do not cover the matrix");
  for (int l : labels)
    if (l < 0 || l >= k) throw Error(Errc::k_out_of_range, "initial label outside [0, k)");

  const Eigen::MatrixXd& values = w.values();
  KMeansResult out;
  std::vector<double> sizes;
  for (;;) {
    detail::repair_empty(values, labels, k);
    const Eigen::MatrixXd dist = detail::gram_distances(values, labels, k, sizes);
    out.cost_history.push_back(detail::assignment_cost(dist, labels));
    if (out.iterations >= opts.max_iterations) break;
    ++out.iterations;

    bool changed = false;
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
      int& l = labels[static_cast<std::size_t>(i)];
      int best = l;
      for (int c = 0; c < k; ++c)
        if (dist(i, c) < dist(i, best)) best = c;
      if (best != l) {
        l = best;
        changed = true;
      }
    }
    if (!changed) break;
  }
  out.cost = out.cost_history.back();
  out.labels = std::move(labels);
  return out;
}

inline std::vector<int> random_labels(Eigen::Index n, int k, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  std::uniform_int_distribution<int> pick(0, k - 1);
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (auto& l : labels) l = pick(rng);
  return labels;
}

using KMeansInit = std::variant<ClusterAssignment, std::uint64_t>;

/// k-means on a similarity (Gram) matrix, started from an assignment or from random labels drawn with a seed.
inline ClusterAssignment kmeans_similarity(const ProximityMatrix& w, int k, const KMeansInit& init,
                                           const KMeansOptions& opts = {}) {
  std::vector<int> labels;
  if (const auto* a = std::get_if<ClusterAssignment>(&init)) {
    if (a->ids() != w.ids()) throw Error(Errc::id_mismatch, "initial assignment ids differ from the matrix");
    if (a->k() > k) throw Error(Errc::k_out_of_range, "initial assignment has more than k clusters");
    labels = a->labels();
  } else {
    labels = random_labels(w.size(), k, std::get<std::uint64_t>(init));
  }
  auto result = kmeans_similarity_from(w, k, std::move(labels), opts);
  return ClusterAssignment::compacted(result.labels, w.ids());
}

/// Euclidean k-means on the rows of `x` with k-means++ seeding; best of `restarts` by sum of squares.
inline std::vector<int> kmeans_rows(const Eigen::MatrixXd& x, int k, std::uint64_t seed, int restarts = 10,
                                    int max_iterations = 300) {
  const Eigen::Index n = x.rows();
  if (k < 1 || k > n) throw Error(Errc::k_out_of_range, "k-means needs 1 <= k <= n");
  std::vector<int> best_labels(static_cast<std::size_t>(n), 0);
  double best_cost = std::numeric_limits<double>::infinity();

  for (int r = 0; r < restarts; ++r) {
    Rng rng = make_rng(derive_seed(seed, {static_cast<std::uint64_t>(r)}));
    Eigen::MatrixXd centers(k, x.cols());
    std::uniform_int_distribution<Eigen::Index> first(0, n - 1);
    centers.row(0) = x.row(first(rng));
    Eigen::VectorXd d2 = (x.rowwise() - centers.row(0)).rowwise().squaredNorm();
    for (int c = 1; c < k; ++c) {
      const double total = d2.sum();
      Eigen::Index pick = 0;
      if (total > 0.0) {
        double u = std::uniform_real_distribution<double>(0.0, total)(rng);
        for (pick = 0; pick < n - 1; ++pick) {
          u -= d2(pick);
          if (u < 0.0) break;
        }
      } else {
        pick = first(rng);
      }
      centers.row(c) = x.row(pick);
      d2 = d2.cwiseMin((x.rowwise() - centers.row(c)).rowwise().squaredNorm());
    }

    std::vector<int> labels(static_cast<std::size_t>(n), -1);
    double cost = 0.0;
    for (int it = 0; it < max_iterations; ++it) {
      bool changed = false;
      cost = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        int arg = 0;
        double dmin = std::numeric_limits<double>::infinity();
        for (int c = 0; c < k; ++c) {
          const double d = (x.row(i) - centers.row(c)).squaredNorm();
          if (d < dmin) {
            dmin = d;
            arg = c;
          }
        }
        cost += dmin;
        if (labels[static_cast<std::size_t>(i)] != arg) {
          labels[static_cast<std::size_t>(i)] = arg;
          changed = true;
        }
      }
      if (!changed) break;
      Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, x.cols());
      std::vector<int> counts(static_cast<std::size_t>(k), 0);
      for (Eigen::Index i = 0; i < n; ++i) {
        sums.row(labels[static_cast<std::size_t>(i)]) += x.row(i);
        ++counts[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])];
      }
      for (int c = 0; c < k; ++c) {
        if (counts[static_cast<std::size_t>(c)] > 0) {
          centers.row(c) = sums.row(c) / counts[static_cast<std::size_t>(c)];
          continue;
        }
        // Empty: re-seed at the point farthest from its current center.
        Eigen::Index far = 0;
        double dmax = -1.0;
        for (Eigen::Index i = 0; i < n; ++i) {
          const double d = (x.row(i) - centers.row(labels[static_cast<std::size_t>(i)])).squaredNorm();
          if (d > dmax) {
            dmax = d;
            far = i;
          }
        }
        centers.row(c) = x.row(far);
      }
    }
    if (cost < best_cost) {
      best_cost = cost;
      best_labels = labels;
    }
  }
  return best_labels;
}

}  // namespace affect
