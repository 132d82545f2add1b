#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "affect/core_model.hpp"
#include "affect/random.hpp"

namespace affect::gen {

/// Flocking simulation with velocity updates. Each micro-step a boid's velocity gains `cohesion` times the offset
/// to its flock mates' centroid, half the offset away from every boid within the repulsion radius (so one move
/// doubles the separation of a pair), `alignment` times the gap to its mates' mean velocity,
/// and `goal_pull` times the offset to its flock's goal point; speed is capped at `max_speed` and the boid moves
/// by its velocity. Goal points advance along parallel lanes in +x at `goal_speed` per micro-step.
struct BoidsConfig {
  std::vector<int> flock_sizes{25, 25, 25, 25};
  double cube = 60.0;  // initial placement: one cube per flock, tiled in the y-z plane
  double cohesion = 1.0 / 100.0;
  double repulsion_radius = 10.0;
  double alignment = 1.0 / 8.0;
  int moves_per_step = 5;
  int switches_per_step = 1;
  double max_speed = 8.0;
  double goal_speed = 1.0;
  double goal_pull = 1.0 / 100.0;
  std::optional<int> scatter_at;      // cohesion off, radius -> scatter_radius
  double scatter_radius = 20.0;
  std::optional<int> regroup_at;      // regroup into regroup_flocks flocks, cohesion and radius restored
  int regroup_flocks = 2;
  bool regroup_shuffle = false;       // false: neighbouring flocks merge; true: boids dealt out at random
  int steps = 40;
  std::uint64_t seed = 0;

  int n() const {
    int s = 0;
    for (int f : flock_sizes) s += f;
    return s;
  }
};

struct BoidsStep {
  Eigen::MatrixXd positions;  // n x 3
  ClusterAssignment memberships;
};

inline void validate_config(const BoidsConfig& c) {
  auto bad = [](const std::string& what) { throw Error(Errc::bad_config, what); };
  if (c.flock_sizes.empty()) bad("need at least one flock");
  for (int s : c.flock_sizes)
    if (s < 2) bad("each flock needs at least two boids");
  if (!(c.cube > 0 && c.cohesion >= 0 && c.repulsion_radius >= 0 && c.alignment >= 0 && c.alignment <= 1 &&
        c.max_speed > 0 && c.goal_pull >= 0 && c.goal_pull <= 1 && c.cohesion <= 1 && c.scatter_radius >= 0))
    bad("boid parameters out of range");
  if (c.moves_per_step < 1 || c.switches_per_step < 0 || c.steps < 1) bad("bad step counts");
  if (c.scatter_at && (*c.scatter_at < 1 || *c.scatter_at >= c.steps)) bad("scatter time outside the horizon");
  if (c.regroup_at && (*c.regroup_at < 1 || *c.regroup_at >= c.steps)) bad("regroup time outside the horizon");
  if (c.regroup_at && (c.regroup_flocks < 1 || 2 * c.regroup_flocks > c.n())) bad("bad regroup flock count");
  if (c.switches_per_step > 0 && c.flock_sizes.size() < 2) bad("switching needs two or more flocks");
}

namespace detail {

class Flock {
 public:
  explicit Flock(const BoidsConfig& c) : c_(c), rng_(make_rng(c.seed)) {
    const int flocks = static_cast<int>(c.flock_sizes.size());
    const int cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(flocks))));
    std::uniform_real_distribution<double> u(0.0, c.cube);
    for (int f = 0; f < flocks; ++f) {
      const Eigen::Vector3d offset(0.0, (f % cols) * c.cube, (f / cols) * c.cube);
      lanes_.push_back(offset + Eigen::Vector3d::Constant(c.cube / 2.0));
      for (int b = 0; b < c.flock_sizes[static_cast<std::size_t>(f)]; ++b) {
        pos_.push_back(offset + Eigen::Vector3d(u(rng_), u(rng_), u(rng_)));
        vel_.push_back(Eigen::Vector3d(c.goal_speed, 0.0, 0.0));
        flock_.push_back(f);
      }
    }
    flocks_ = flocks;
    radius_ = c.repulsion_radius;
    cohesion_ = c.cohesion;
  }

  BoidsStep observe() const {
    const auto n = static_cast<Eigen::Index>(pos_.size());
    Eigen::MatrixXd x(n, 3);
    for (Eigen::Index i = 0; i < n; ++i) x.row(i) = pos_[static_cast<std::size_t>(i)].transpose();
    return {std::move(x), ClusterAssignment::compacted(flock_, sequential_ids(n))};
  }

  void advance(int t) {
    if (c_.scatter_at && t == *c_.scatter_at) {
      cohesion_ = 0.0;
      radius_ = c_.scatter_radius;
    }
    if (c_.regroup_at && t == *c_.regroup_at) regroup();
    for (int s = 0; s < c_.switches_per_step; ++s) switch_one();
    for (int m = 0; m < c_.moves_per_step; ++m) micro_step();
  }

 private:
  void regroup() {
    const int target = c_.regroup_flocks;
    std::vector<Eigen::Vector3d> lanes(static_cast<std::size_t>(target), Eigen::Vector3d::Zero());
    std::vector<int> count(static_cast<std::size_t>(target), 0);
    for (int f = 0; f < flocks_; ++f) {
      const auto j = static_cast<std::size_t>(f * target / flocks_);
      lanes[j] += lanes_[static_cast<std::size_t>(f)];
      ++count[j];
    }
    for (std::size_t j = 0; j < lanes.size(); ++j)
      if (count[j] > 0) lanes[j] /= count[j];
    lanes_ = std::move(lanes);
    const int old_flocks = flocks_;
    flocks_ = target;

    if (c_.regroup_shuffle) {
      std::vector<std::size_t> order(pos_.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      std::shuffle(order.begin(), order.end(), rng_);
      for (std::size_t r = 0; r < order.size(); ++r)
        flock_[order[r]] = static_cast<int>(r * static_cast<std::size_t>(target) / order.size());
    } else {
      for (int& f : flock_) f = f * target / old_flocks;
    }
    cohesion_ = c_.cohesion;
    radius_ = c_.repulsion_radius;
  }

  void switch_one() {
    if (flocks_ < 2) return;
    std::vector<int> sizes(static_cast<std::size_t>(flocks_), 0);
    for (int f : flock_) ++sizes[static_cast<std::size_t>(f)];
    std::uniform_int_distribution<std::size_t> pick(0, pos_.size() - 1);
    std::size_t b = pick(rng_);
    for (int tries = 0; sizes[static_cast<std::size_t>(flock_[b])] <= 2 && tries < 1000; ++tries) b = pick(rng_);
    if (sizes[static_cast<std::size_t>(flock_[b])] <= 2) return;
    std::uniform_int_distribution<int> other(0, flocks_ - 2);
    int f = other(rng_);
    if (f >= flock_[b]) ++f;
    flock_[b] = f;
  }

  void micro_step() {
    const std::size_t n = pos_.size();
    const auto nf = static_cast<std::size_t>(flocks_);
    std::vector<Eigen::Vector3d> centroid(nf, Eigen::Vector3d::Zero()), mean_velocity(nf, Eigen::Vector3d::Zero());
    std::vector<double> size(nf, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto f = static_cast<std::size_t>(flock_[i]);
      centroid[f] += pos_[i];
      mean_velocity[f] += vel_[i];
      size[f] += 1.0;
    }
    ++tick_;

    const double r2 = radius_ * radius_;
    std::vector<Eigen::Vector3d> next_vel(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto f = static_cast<std::size_t>(flock_[i]);
      Eigen::Vector3d dv = Eigen::Vector3d::Zero();
      if (size[f] > 1.0) {
        const Eigen::Vector3d mates = (centroid[f] - pos_[i]) / (size[f] - 1.0);
        const Eigen::Vector3d mates_velocity = (mean_velocity[f] - vel_[i]) / (size[f] - 1.0);
        dv += cohesion_ * (mates - pos_[i]);
        dv += c_.alignment * (mates_velocity - vel_[i]);
      }
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        const Eigen::Vector3d d = pos_[i] - pos_[j];
        if (d.squaredNorm() < r2) dv += 0.5 * d;
      }
      const Eigen::Vector3d goal = lanes_[f] + Eigen::Vector3d(c_.goal_speed * static_cast<double>(tick_), 0, 0);
      dv += c_.goal_pull * (goal - pos_[i]);
      Eigen::Vector3d v = vel_[i] + dv;
      const double speed = v.norm();
      if (speed > c_.max_speed) v *= c_.max_speed / speed;
      next_vel[i] = v;
    }
    for (std::size_t i = 0; i < n; ++i) {
      vel_[i] = next_vel[i];
      pos_[i] += vel_[i];
    }
  }

  BoidsConfig c_;
  Rng rng_;
  std::vector<Eigen::Vector3d> pos_, vel_, lanes_;
  std::vector<int> flock_;
  int flocks_ = 0;
  double radius_ = 0.0;
  double cohesion_ = 0.0;
  long tick_ = 0;
};

}  // namespace detail

/// Observations at t = 0..steps-1. Step 0 is the initial placement; every later step applies that step's events,
/// the membership switches, then `moves_per_step` micro-steps.
inline std::vector<BoidsStep> boids_run(const BoidsConfig& config) {
  validate_config(config);
  detail::Flock sim(config);
  std::vector<BoidsStep> out;
  out.reserve(static_cast<std::size_t>(config.steps));
  out.push_back(sim.observe());
  for (int t = 1; t < config.steps; ++t) {
    sim.advance(t);
    out.push_back(sim.observe());
  }
  return out;
}

/// Pairwise Euclidean distances between rows.
inline ProximityMatrix distance_matrix(const Eigen::MatrixXd& x) {
  const Eigen::Index n = x.rows();
  Eigen::MatrixXd d(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    d(i, i) = 0.0;
    for (Eigen::Index j = i + 1; j < n; ++j) d(i, j) = d(j, i) = (x.row(i) - x.row(j)).norm();
  }
  return ProximityMatrix::make(ProximityKind::dissimilarity, std::move(d));
}

/// Gaussian similarity exp(-||x_i - x_j||^2 / (2 rho^2)).
inline ProximityMatrix gaussian_similarity(const Eigen::MatrixXd& x, double rho) {
  if (!(rho > 0.0)) throw Error(Errc::bad_config, "gaussian similarity needs rho > 0");
  const Eigen::Index n = x.rows();
  Eigen::MatrixXd s(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    s(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < n; ++j)
      s(i, j) = s(j, i) = std::exp(-(x.row(i) - x.row(j)).squaredNorm() / (2.0 * rho * rho));
  }
  return ProximityMatrix::make(ProximityKind::similarity, std::move(s));
}

/// Dot-product similarity X X^T.
inline ProximityMatrix dot_similarity(const Eigen::MatrixXd& x) {
  Eigen::MatrixXd g = x * x.transpose();
  g = 0.5 * (g + g.transpose());
  return ProximityMatrix::make(ProximityKind::similarity, std::move(g));
}

}  // namespace affect::gen
