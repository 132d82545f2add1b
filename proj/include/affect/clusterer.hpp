#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "affect/core_model.hpp"
#include "affect/hierarchical.hpp"
#include "affect/kmeans.hpp"
#include "affect/spectral.hpp"

namespace affect {

/// Any static clusterer: proximity matrix in, flat partition out. `warm_start` is a hint that
/// iterative methods may use (k-means does); `seed` drives any randomness.
using Clusterer = std::function<ClusterAssignment(const ProximityMatrix&,
                                                  const std::optional<ClusterAssignment>& warm_start,
                                                  std::uint64_t seed)>;

inline Clusterer hierarchical_clusterer(Linkage linkage, int k) {
  return [linkage, k](const ProximityMatrix& m, const std::optional<ClusterAssignment>&, std::uint64_t) {
    return cut(hierarchical(m, linkage), std::min<int>(k, static_cast<int>(m.size())));
  };
}

/// Warm start is honored when it covers the same ids with at most k clusters; otherwise random labels.
inline Clusterer kmeans_clusterer(int k, KMeansOptions opts = {}) {
  return [k, opts](const ProximityMatrix& m, const std::optional<ClusterAssignment>& warm, std::uint64_t seed) {
    const int kk = std::min<int>(k, static_cast<int>(m.size()));
    if (warm && warm->ids() == m.ids() && warm->k() <= kk) return kmeans_similarity(m, kk, *warm, opts);
    return kmeans_similarity(m, kk, KMeansInit{seed}, opts);
  };
}

inline Clusterer spectral_clusterer(SpectralVariant variant, int k, SpectralOptions opts = {}) {
  return [variant, k, opts](const ProximityMatrix& m, const std::optional<ClusterAssignment>&, std::uint64_t seed) {
    return spectral(m, std::min<int>(k, static_cast<int>(m.size())), variant, seed, opts);
  };
}

/// Spectral clustering with k chosen per call by modularity over [k_min, k_max].
inline Clusterer spectral_modularity_clusterer(SpectralVariant variant, int k_min, int k_max,
                                               SpectralOptions opts = {}) {
  return [=](const ProximityMatrix& m, const std::optional<ClusterAssignment>&, std::uint64_t seed) {
    return select_k_modularity(m, k_min, k_max, variant, seed, opts).assignment;
  };
}

}  // namespace affect
