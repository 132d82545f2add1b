#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <numeric>
#include <vector>

#include "affect/core_model.hpp"

namespace affect {

enum class Linkage { single, complete, average };

struct Merge {
  int a;  // cluster ids: leaves are 0..n-1, the cluster formed by merge m is n+m
  int b;
  double height;
};

struct Dendrogram {
  std::vector<Merge> merges;
  int n = 0;
  Ids ids;
};

/// Agglomerative clustering with Lance-Williams updates, O(n^3).
/// Ties go to the pair whose (smallest leaf, smallest leaf) indices are lexicographically least.
inline Dendrogram hierarchical(const ProximityMatrix& dissim, Linkage linkage) {
  if (dissim.kind() != ProximityKind::dissimilarity)
    throw Error(Errc::wrong_kind, "hierarchical clustering needs a dissimilarity matrix");
  const int n = static_cast<int>(dissim.size());
  Dendrogram out{{}, n, dissim.ids()};
  out.merges.reserve(static_cast<std::size_t>(std::max(n - 1, 0)));

  // Slot i holds the cluster whose smallest leaf is i.
  Eigen::MatrixXd d = dissim.values();
  std::vector<int> cluster_id(static_cast<std::size_t>(n));
  std::iota(cluster_id.begin(), cluster_id.end(), 0);
  std::vector<double> size(static_cast<std::size_t>(n), 1.0);
  std::vector<int> active(static_cast<std::size_t>(n));
  std::iota(active.begin(), active.end(), 0);

  for (int m = 0; m + 1 < n; ++m) {
    int bi = -1, bj = -1;
    double best = 0.0;
    for (std::size_t p = 0; p < active.size(); ++p)
      for (std::size_t q = p + 1; q < active.size(); ++q) {
        const double v = d(active[p], active[q]);
        if (bi < 0 || v < best) {
          best = v;
          bi = active[p];
          bj = active[q];
        }
      }

    const auto si = static_cast<std::size_t>(bi), sj = static_cast<std::size_t>(bj);
    out.merges.push_back({std::min(cluster_id[si], cluster_id[sj]), std::max(cluster_id[si], cluster_id[sj]), best});

    for (int o : active) {
      if (o == bi || o == bj) continue;
      double v = 0.0;
      switch (linkage) {
        case Linkage::single: v = std::min(d(bi, o), d(bj, o)); break;
        case Linkage::complete: v = std::max(d(bi, o), d(bj, o)); break;
        case Linkage::average: v = (size[si] * d(bi, o) + size[sj] * d(bj, o)) / (size[si] + size[sj]); break;
      }
      d(bi, o) = d(o, bi) = v;
    }
    size[si] += size[sj];
    cluster_id[si] = n + m;
    active.erase(std::find(active.begin(), active.end(), bj));
  }
  return out;
}

/// Flat clustering with exactly k clusters: replays the first n-k merges.
/// Labels are numbered in order of each cluster's smallest leaf.
inline ClusterAssignment cut(const Dendrogram& tree, int k) {
  const int n = tree.n;
  if (k < 1 || k > n) throw Error(Errc::k_out_of_range, "cut needs 1 <= k <= n");

  std::vector<int> parent(static_cast<std::size_t>(2 * n));
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
      x = parent[static_cast<std::size_t>(x)];
    }
    return x;
  };
  for (int m = 0; m < n - k; ++m) {
    const auto& mg = tree.merges[static_cast<std::size_t>(m)];
    parent[static_cast<std::size_t>(find(mg.a))] = n + m;
    parent[static_cast<std::size_t>(find(mg.b))] = n + m;
  }

  std::vector<int> label_of_root(static_cast<std::size_t>(2 * n), -1);
  std::vector<int> labels(static_cast<std::size_t>(n));
  int next = 0;
  for (int i = 0; i < n; ++i) {
    int& l = label_of_root[static_cast<std::size_t>(find(i))];
    if (l < 0) l = next++;
    labels[static_cast<std::size_t>(i)] = l;
  }
  return ClusterAssignment(std::move(labels), tree.ids);
}

}  // namespace affect
