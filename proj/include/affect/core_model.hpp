#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "affect/error.hpp"

namespace affect {

using Ids = std::vector<std::string>;

enum class ProximityKind { similarity, dissimilarity };

inline constexpr double kSymmetryTolerance = 1e-9;

inline Ids sequential_ids(Eigen::Index n) {
  Ids ids;
  ids.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) ids.push_back(std::to_string(i));
  return ids;
}

inline std::unordered_map<std::string, Eigen::Index> index_of(const Ids& ids) {
  std::unordered_map<std::string, Eigen::Index> out;
  out.reserve(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) out.emplace(ids[i], static_cast<Eigen::Index>(i));
  return out;
}

/// Throws on the first violated proximity-matrix invariant. Checks only; nothing is modified.
inline void validate(ProximityKind kind, const Eigen::MatrixXd& values, const Ids& ids) {
  const Eigen::Index n = values.rows();
  if (n < 1 || values.cols() != n)
    throw Error(Errc::dimension_mismatch, "proximity matrix must be square with n >= 1");
  if (static_cast<Eigen::Index>(ids.size()) != n)
    throw Error(Errc::dimension_mismatch,
                "expected " + std::to_string(n) + " ids, got " + std::to_string(ids.size()));
  if (index_of(ids).size() != ids.size())
    throw Error(Errc::id_mismatch, "object ids must be unique");
  if (!values.allFinite()) throw Error(Errc::dimension_mismatch, "non-finite entry");

  const double asym = (values - values.transpose()).cwiseAbs().maxCoeff();
  if (asym > kSymmetryTolerance)
    throw Error(Errc::asymmetric_matrix, "max |w_ij - w_ji| = " + std::to_string(asym));

  if (kind == ProximityKind::dissimilarity) {
    if (values.minCoeff() < 0.0)
      throw Error(Errc::negative_dissimilarity, "dissimilarities must be >= 0");
    if (values.diagonal().cwiseAbs().maxCoeff() > kSymmetryTolerance)
      throw Error(Errc::negative_dissimilarity, "dissimilarity diagonal must be 0");
  }
}

/// Square symmetric proximity matrix over a named object set. Immutable once built.
class ProximityMatrix {
 public:
  /// Validates, then symmetrizes by averaging w_ij and w_ji.
  static ProximityMatrix make(ProximityKind kind, Eigen::MatrixXd values, Ids ids) {
    validate(kind, values, ids);
    Eigen::MatrixXd sym = 0.5 * (values + values.transpose());
    if (kind == ProximityKind::dissimilarity) sym.diagonal().setZero();
    return ProximityMatrix(kind, std::move(sym), std::move(ids));
  }

  static ProximityMatrix make(ProximityKind kind, Eigen::MatrixXd values) {
    Ids ids = sequential_ids(values.rows());
    return make(kind, std::move(values), std::move(ids));
  }

  ProximityKind kind() const noexcept { return kind_; }
  const Eigen::MatrixXd& values() const noexcept { return values_; }
  const Ids& ids() const noexcept { return ids_; }
  Eigen::Index size() const noexcept { return values_.rows(); }
  double operator()(Eigen::Index i, Eigen::Index j) const { return values_(i, j); }

  /// Same kind and ids, new values. Values must already be symmetric.
  ProximityMatrix with_values(Eigen::MatrixXd values) const {
    if (values.rows() != size() || values.cols() != size())
      throw Error(Errc::dimension_mismatch, "replacement values have the wrong shape");
    return ProximityMatrix(kind_, std::move(values), ids_);
  }

 private:
  ProximityMatrix(ProximityKind kind, Eigen::MatrixXd values, Ids ids)
      : kind_(kind), values_(std::move(values)), ids_(std::move(ids)) {}

  ProximityKind kind_;
  Eigen::MatrixXd values_;
  Ids ids_;
};

inline void validate(const ProximityMatrix& m) { validate(m.kind(), m.values(), m.ids()); }

/// Flat partition of an object set into k labeled, non-empty clusters.
class ClusterAssignment {
 public:
  ClusterAssignment() = default;

  /// k is taken as max label + 1; every cluster in [0, k) must be non-empty.
  ClusterAssignment(std::vector<int> labels, Ids ids) : labels_(std::move(labels)), ids_(std::move(ids)) {
    if (labels_.size() != ids_.size())
      throw Error(Errc::dimension_mismatch, "labels and ids differ in length");
    k_ = 0;
    for (int l : labels_) {
      if (l < 0) throw Error(Errc::k_out_of_range, "negative cluster label");
      k_ = std::max(k_, l + 1);
    }
    std::vector<char> seen(static_cast<std::size_t>(k_), 0);
    for (int l : labels_) seen[static_cast<std::size_t>(l)] = 1;
    if (std::find(seen.begin(), seen.end(), 0) != seen.end())
      throw Error(Errc::k_out_of_range, "cluster labels leave an empty cluster");
  }

  ClusterAssignment(std::vector<int> labels, Eigen::Index n)
      : ClusterAssignment(std::move(labels), sequential_ids(n)) {}

  /// Renumbers labels to 0..k-1, preserving the relative order of the original label values.
  static ClusterAssignment compacted(const std::vector<int>& labels, Ids ids) {
    std::vector<int> values(labels);
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    std::vector<int> out(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i)
      out[i] = static_cast<int>(std::lower_bound(values.begin(), values.end(), labels[i]) - values.begin());
    return ClusterAssignment(std::move(out), std::move(ids));
  }

  const std::vector<int>& labels() const noexcept { return labels_; }
  const Ids& ids() const noexcept { return ids_; }
  int k() const noexcept { return k_; }
  std::size_t size() const noexcept { return labels_.size(); }
  int operator[](std::size_t i) const { return labels_[i]; }

  std::vector<std::size_t> cluster_sizes() const {
    std::vector<std::size_t> sizes(static_cast<std::size_t>(k_), 0);
    for (int l : labels_) ++sizes[static_cast<std::size_t>(l)];
    return sizes;
  }

  friend bool operator==(const ClusterAssignment&, const ClusterAssignment&) = default;

 private:
  std::vector<int> labels_;
  Ids ids_;
  int k_ = 0;
};

/// Submatrix over `keep`, in the order given. Every id in `keep` must be present.
inline ProximityMatrix restrict_to(const ProximityMatrix& m, const Ids& keep) {
  const auto where = index_of(m.ids());
  std::vector<Eigen::Index> idx;
  idx.reserve(keep.size());
  for (const auto& id : keep) {
    auto it = where.find(id);
    if (it == where.end()) throw Error(Errc::id_mismatch, "unknown object id '" + id + "'");
    idx.push_back(it->second);
  }
  const auto n = static_cast<Eigen::Index>(idx.size());
  Eigen::MatrixXd out(n, n);
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = 0; b < n; ++b) out(a, b) = m(idx[a], idx[b]);
  return ProximityMatrix::make(m.kind(), std::move(out), keep);
}

/// Assignment restricted to `keep` (in that order), with labels compacted.
inline ClusterAssignment restrict_to(const ClusterAssignment& c, const Ids& keep) {
  const auto where = index_of(c.ids());
  std::vector<int> labels;
  labels.reserve(keep.size());
  for (const auto& id : keep) {
    auto it = where.find(id);
    if (it == where.end()) throw Error(Errc::id_mismatch, "unknown object id '" + id + "'");
    labels.push_back(c[static_cast<std::size_t>(it->second)]);
  }
  return ClusterAssignment::compacted(labels, keep);
}

struct Alignment {
  ProximityMatrix prev_restricted;  // rows/cols of the previous matrix shared with current, in current's order
  Ids new_ids;                      // ids of current absent from the previous matrix, in current's order
};

/// Drops departed objects from the previous smoothed matrix and lists arrivals.
/// Throws EmptyIntersection when no object survives; callers restart smoothing from the current matrix.
inline Alignment align_state(const ProximityMatrix& prev_smoothed, const ProximityMatrix& current) {
  const auto prev_index = index_of(prev_smoothed.ids());
  Ids shared, fresh;
  for (const auto& id : current.ids()) (prev_index.count(id) ? shared : fresh).push_back(id);
  if (shared.empty()) throw Error(Errc::empty_intersection, "no object id is shared between steps");
  return Alignment{restrict_to(prev_smoothed, shared), std::move(fresh)};
}

/// Tracks which objects are active at the current step. An object that leaves and later returns
/// is re-activated but carries no history; the smoothing state dropped it when it left.
class ObjectRegistry {
 public:
  struct Entry {
    std::string id;
    bool active;
  };

  struct Change {
    Ids added;
    Ids removed;
  };

  Change observe(const Ids& current) {
    std::unordered_set<std::string> now(current.begin(), current.end());
    if (now.size() != current.size()) throw Error(Errc::id_mismatch, "duplicate ids in one step");
    Change change;
    for (auto& e : entries_) {
      const bool present = now.count(e.id) > 0;
      if (e.active && !present) change.removed.push_back(e.id);
      if (!e.active && present) change.added.push_back(e.id);
      e.active = present;
    }
    for (const auto& id : current) {
      if (slot_.count(id)) continue;
      slot_.emplace(id, entries_.size());
      entries_.push_back({id, true});
      change.added.push_back(id);
    }
    order_ = current;
    if (!change.added.empty() || !change.removed.empty()) ++generation_;
    return change;
  }

  const std::vector<Entry>& entries() const noexcept { return entries_; }
  /// Active ids in the row/column order of the most recent step.
  const Ids& active() const noexcept { return order_; }
  std::uint64_t generation() const noexcept { return generation_; }

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> slot_;
  Ids order_;
  std::uint64_t generation_ = 0;
};

}  // namespace affect
