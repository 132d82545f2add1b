#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <vector>

#include "affect/core_model.hpp"
#include "affect/kmeans.hpp"
#include "affect/linalg.hpp"

namespace affect {

enum class SpectralVariant { average_association, ratio_cut, normalized_cut };

struct SpectralOptions {
  int restarts = 10;
  double isolated_epsilon = 1e-12;  // added to zero degrees under normalized cut
};

/// Eigendecomposition of the matrix a variant relaxes over: W (AA), D - W (RC), or I - D^-1/2 W D^-1/2 (NC).
struct SpectralBasis {
  SpectralVariant variant;
  EigenDecomposition eig;
};

inline SpectralBasis spectral_basis(const ProximityMatrix& w, SpectralVariant variant,
                                    const SpectralOptions& opts = {}) {
  if (w.kind() != ProximityKind::similarity)
    throw Error(Errc::wrong_kind, "spectral clustering needs a similarity matrix");
  const Eigen::MatrixXd& a = w.values();
  if (variant == SpectralVariant::average_association) return {variant, eigh(a)};
  if (a.minCoeff() < 0.0) throw Error(Errc::wrong_kind, "graph Laplacians need nonnegative similarities");

  const Eigen::VectorXd degree = a.rowwise().sum();
  const Eigen::Index n = a.rows();
  if (variant == SpectralVariant::ratio_cut) {
    Eigen::MatrixXd lap = -a;
    lap.diagonal() += degree;
    return {variant, eigh(lap)};
  }
  Eigen::VectorXd inv_sqrt(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double d = degree(i) > 0.0 ? degree(i) : degree(i) + opts.isolated_epsilon;
    inv_sqrt(i) = 1.0 / std::sqrt(d);
  }
  Eigen::MatrixXd lap = -(inv_sqrt.asDiagonal() * a * inv_sqrt.asDiagonal());
  lap.diagonal().array() += 1.0;
  lap = 0.5 * (lap + lap.transpose());
  return {variant, eigh(lap)};
}

/// Rows of Z: the top-k eigenvectors (AA) or bottom-k (RC, NC); NC rows scaled to unit norm.
inline Eigen::MatrixXd spectral_embedding(const SpectralBasis& basis, int k) {
  const Eigen::Index n = basis.eig.values.size();
  if (k < 1 || k > n) throw Error(Errc::k_out_of_range, "spectral clustering needs 1 <= k <= n");
  Eigen::MatrixXd z(n, k);
  if (basis.variant == SpectralVariant::average_association) {
    for (int c = 0; c < k; ++c) z.col(c) = basis.eig.vectors.col(n - 1 - c);
  } else {
    z = basis.eig.vectors.leftCols(k);
  }
  if (basis.variant == SpectralVariant::normalized_cut) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double norm = z.row(i).norm();
      if (norm > 0.0) z.row(i) /= norm;
    }
  }
  return z;
}

inline ClusterAssignment spectral_from_basis(const SpectralBasis& basis, const Ids& ids, int k, std::uint64_t seed,
                                             const SpectralOptions& opts = {}) {
  const auto n = static_cast<Eigen::Index>(ids.size());
  if (k < 1 || k > n) throw Error(Errc::k_out_of_range, "spectral clustering needs 1 <= k <= n");
  if (k == 1) return ClusterAssignment(std::vector<int>(ids.size(), 0), ids);
  const Eigen::MatrixXd z = spectral_embedding(basis, k);
  return ClusterAssignment::compacted(kmeans_rows(z, k, seed, opts.restarts), ids);
}

inline ClusterAssignment spectral(const ProximityMatrix& w, int k, SpectralVariant variant, std::uint64_t seed,
                                  const SpectralOptions& opts = {}) {
  if (k < 1 || k > w.size()) throw Error(Errc::k_out_of_range, "spectral clustering needs 1 <= k <= n");
  if (k == 1) return ClusterAssignment(std::vector<int>(static_cast<std::size_t>(w.size()), 0), w.ids());
  return spectral_from_basis(spectral_basis(w, variant, opts), w.ids(), k, seed, opts);
}

/// Newman weighted modularity; self-loops (diagonal) count toward both edge weight and degree.
inline double modularity(const Eigen::MatrixXd& w, const std::vector<int>& labels) {
  const Eigen::Index n = w.rows();
  const double two_m = w.sum();
  if (two_m <= 0.0) return 0.0;
  int k = 0;
  for (int l : labels) k = std::max(k, l + 1);
  std::vector<double> within(static_cast<std::size_t>(k), 0.0), degree(static_cast<std::size_t>(k), 0.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto ci = static_cast<std::size_t>(labels[static_cast<std::size_t>(i)]);
    degree[ci] += w.row(i).sum();
    for (Eigen::Index j = 0; j < n; ++j)
      if (labels[static_cast<std::size_t>(j)] == labels[static_cast<std::size_t>(i)]) within[ci] += w(i, j);
  }
  double q = 0.0;
  for (std::size_t c = 0; c < within.size(); ++c) {
    const double frac = degree[c] / two_m;
    q += within[c] / two_m - frac * frac;
  }
  return q;
}

struct ModularitySelection {
  int k = 0;
  ClusterAssignment assignment;
  std::vector<double> scores;  // modularity for k_min, k_min+1, ..., k_max
};

/// Spectral clustering at every k in [k_min, k_max] (clipped to n); keeps the highest modularity, ties to smaller k.
inline ModularitySelection select_k_modularity(const ProximityMatrix& w, int k_min, int k_max,
                                               SpectralVariant variant, std::uint64_t seed,
                                               const SpectralOptions& opts = {}) {
  if (w.kind() != ProximityKind::similarity)
    throw Error(Errc::wrong_kind, "modularity selection needs a similarity matrix");
  k_min = std::max(k_min, 1);
  k_max = std::min<int>(k_max, static_cast<int>(w.size()));
  if (k_min > k_max) throw Error(Errc::empty_range, "no admissible k in the requested range");
  if (w.values().minCoeff() < 0.0) throw Error(Errc::wrong_kind, "modularity needs nonnegative similarities");

  std::optional<SpectralBasis> basis;
  ModularitySelection best;
  double best_q = -std::numeric_limits<double>::infinity();
  for (int k = k_min; k <= k_max; ++k) {
    ClusterAssignment a;
    if (k == 1) {
      a = ClusterAssignment(std::vector<int>(static_cast<std::size_t>(w.size()), 0), w.ids());
    } else {
      if (!basis) basis = spectral_basis(w, variant, opts);
      a = spectral_from_basis(*basis, w.ids(), k, seed, opts);
    }
    const double q = modularity(w.values(), a.labels());
    best.scores.push_back(q);
    if (q > best_q + 1e-12) {
      best_q = q;
      best.k = k;
      best.assignment = std::move(a);
    }
  }
  return best;
}

}  // namespace affect
