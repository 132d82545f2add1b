#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "affect/core_model.hpp"
#include "affect/random.hpp"
#include "affect/tracking.hpp"

namespace affect::gen {

/// Per-cluster deterministic drift: mean += delta at every step t in [first_step, last_step].
struct MeanDrift {
  int cluster = 0;
  Eigen::VectorXd delta;
  int first_step = 1;
  int last_step = 0;
};

/// Independent +-step random walk of every cluster mean along one coordinate, applied at each t >= 1.
struct RandomWalk {
  int dimension = 0;
  double step = 0.0;  // 0 disables the walk
};

struct CovarianceEvent {
  int t = 0;
  int cluster = -1;  // -1: every cluster
  Eigen::MatrixXd covariance;
};

/// New mixture proportions from step t on; the required number of objects change component.
struct ProportionEvent {
  int t = 0;
  std::vector<double> weights;
};

struct DynamicGmmConfig {
  int n = 40;
  std::vector<Eigen::VectorXd> means;
  std::vector<Eigen::MatrixXd> covariances;
  std::vector<double> weights;
  // Component sizes are round(weight * n) rather than categorical draws.
  bool exact_proportions = true;
  RandomWalk walk;
  std::vector<MeanDrift> drifts;
  std::vector<CovarianceEvent> covariance_events;
  std::vector<ProportionEvent> proportion_events;
  int steps = 40;
  std::uint64_t seed = 0;

  int k() const { return static_cast<int>(means.size()); }
  int dim() const { return means.empty() ? 0 : static_cast<int>(means.front().size()); }
};

struct GmmStepOutput {
  Eigen::MatrixXd features;  // n x p
  ProximityMatrix similarity;
  ClusterAssignment memberships;
  ProximityMatrix oracle_psi;
  Eigen::MatrixXd oracle_var;
  std::vector<Eigen::VectorXd> means;
  std::vector<Eigen::MatrixXd> covariances;
};

inline void validate_config(const DynamicGmmConfig& c) {
  auto bad = [](const std::string& what) { throw Error(Errc::bad_config, what); };
  const int k = c.k(), p = c.dim();
  if (k < 1 || p < 1) bad("need at least one component with dimension >= 1");
  if (c.n < 2) bad("need n >= 2");
  if (c.steps < 1) bad("need at least one time step");
  if (static_cast<int>(c.covariances.size()) != k || static_cast<int>(c.weights.size()) != k)
    bad("means, covariances and weights must have one entry per component");
  auto check_weights = [&](const std::vector<double>& w) {
    if (static_cast<int>(w.size()) != k) bad("weight vector has the wrong length");
    double s = 0.0;
    for (double x : w) {
      if (x < 0.0) bad("negative mixture weight");
      s += x;
    }
    if (std::abs(s - 1.0) > 1e-9) bad("mixture weights must sum to 1");
  };
  auto check_cov = [&](const Eigen::MatrixXd& s) {
    if (s.rows() != p || s.cols() != p) bad("covariance has the wrong shape");
    if ((s - s.transpose()).cwiseAbs().maxCoeff() > 1e-9) bad("covariance must be symmetric");
    if (s.size() > 0 && smallest_eigenvalue(s) < -1e-9) bad("covariance must be positive semidefinite");
  };
  check_weights(c.weights);
  for (const auto& m : c.means)
    if (m.size() != p) bad("all means must share one dimension");
  for (const auto& s : c.covariances) check_cov(s);
  for (const auto& e : c.covariance_events) {
    check_cov(e.covariance);
    if (e.cluster >= k) bad("covariance event names an unknown component");
  }
  for (const auto& e : c.proportion_events) check_weights(e.weights);
  for (const auto& d : c.drifts)
    if (d.cluster < 0 || d.cluster >= k || d.delta.size() != p) bad("drift has the wrong cluster or dimension");
  if (c.walk.step != 0.0 && (c.walk.dimension < 0 || c.walk.dimension >= p)) bad("walk dimension out of range");
}

/// Symmetric square root of a PSD matrix (tolerates singular covariances).
inline Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& s) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
  const Eigen::VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

/// Component sizes for exact proportions: floor(w n), remainder to the largest fractional parts.
inline std::vector<int> exact_counts(const std::vector<double>& weights, int n) {
  std::vector<int> counts(weights.size());
  std::vector<std::pair<double, std::size_t>> frac;
  int used = 0;
  for (std::size_t c = 0; c < weights.size(); ++c) {
    const double x = weights[c] * n;
    counts[c] = static_cast<int>(std::floor(x + 1e-9));
    used += counts[c];
    frac.emplace_back(x - counts[c], c);
  }
  std::stable_sort(frac.begin(), frac.end(), [](auto a, auto b) { return a.first > b.first; });
  for (std::size_t i = 0; used < n; ++i, ++used) ++counts[frac[i % frac.size()].second];
  return counts;
}

/// Mean and variance of dot-product similarities under the mixture (closed form for Gaussian components):
///   off-diagonal  E = sum_k mu_ck mu_dk
///                 var = sum_kl {s_ckl s_dkl + s_ckl mu_dk mu_dl + s_dkl mu_ck mu_cl}
///   diagonal      E = sum_k (s_ckk + mu_ck^2)
///                 var = sum_kl {4 mu_ck mu_cl s_ckl + 2 s_ckl^2}
struct OracleMoments {
  ProximityMatrix psi;
  Eigen::MatrixXd var;
};

/// `component[i]` is the mixture component of object i; components may be empty.
inline OracleMoments oracle_moments(const std::vector<Eigen::VectorXd>& means,
                                    const std::vector<Eigen::MatrixXd>& covs, const std::vector<int>& component,
                                    const Ids& ids) {
  const int k = static_cast<int>(means.size());
  if (static_cast<int>(covs.size()) != k) throw Error(Errc::dimension_mismatch, "one covariance per mean");
  if (component.size() != ids.size()) throw Error(Errc::dimension_mismatch, "one component per object");
  for (int c : component)
    if (c < 0 || c >= k) throw Error(Errc::dimension_mismatch, "membership label without a component");
  const Eigen::Index p = k > 0 ? means.front().size() : 0;
  for (int c = 0; c < k; ++c)
    if (means[static_cast<std::size_t>(c)].size() != p || covs[static_cast<std::size_t>(c)].rows() != p ||
        covs[static_cast<std::size_t>(c)].cols() != p)
      throw Error(Errc::dimension_mismatch, "component parameters differ in dimension");

  Eigen::MatrixXd off_mean(k, k), off_var(k, k);
  Eigen::VectorXd diag_mean(k), diag_var(k);
  for (int c = 0; c < k; ++c) {
    const auto& mc = means[static_cast<std::size_t>(c)];
    const auto& sc = covs[static_cast<std::size_t>(c)];
    for (int d = 0; d < k; ++d) {
      const auto& md = means[static_cast<std::size_t>(d)];
      const auto& sd = covs[static_cast<std::size_t>(d)];
      double e = 0.0, v = 0.0;
      for (Eigen::Index a = 0; a < p; ++a) {
        e += mc(a) * md(a);
        for (Eigen::Index b = 0; b < p; ++b)
          v += sc(a, b) * sd(a, b) + sc(a, b) * md(a) * md(b) + sd(a, b) * mc(a) * mc(b);
      }
      off_mean(c, d) = e;
      off_var(c, d) = v;
    }
    double e = 0.0, v = 0.0;
    for (Eigen::Index a = 0; a < p; ++a) {
      e += sc(a, a) + mc(a) * mc(a);
      for (Eigen::Index b = 0; b < p; ++b) v += 4.0 * mc(a) * mc(b) * sc(a, b) + 2.0 * sc(a, b) * sc(a, b);
    }
    diag_mean(c) = e;
    diag_var(c) = v;
  }

  const auto n = static_cast<Eigen::Index>(component.size());
  Eigen::MatrixXd psi(n, n), var(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int c = component[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < n; ++j) {
      const int d = component[static_cast<std::size_t>(j)];
      psi(i, j) = i == j ? diag_mean(c) : off_mean(c, d);
      var(i, j) = i == j ? diag_var(c) : off_var(c, d);
    }
  }
  return {ProximityMatrix::make(ProximityKind::similarity, std::move(psi), ids), std::move(var)};
}

inline OracleMoments oracle_moments(const std::vector<Eigen::VectorXd>& means,
                                    const std::vector<Eigen::MatrixXd>& covs, const ClusterAssignment& memberships) {
  return oracle_moments(means, covs, memberships.labels(), memberships.ids());
}

/// Samples the dynamic mixture for config.steps steps. Memberships are drawn once and only change through
/// proportion events (objects moved between components uniformly at random).
inline std::vector<GmmStepOutput> gmm_run(const DynamicGmmConfig& config) {
  validate_config(config);
  Rng rng = make_rng(config.seed);
  const int k = config.k(), p = config.dim(), n = config.n;
  const Ids ids = sequential_ids(n);

  std::vector<int> z(static_cast<std::size_t>(n));
  if (config.exact_proportions) {
    const auto counts = exact_counts(config.weights, n);
    std::size_t pos = 0;
    for (int c = 0; c < k; ++c)
      for (int i = 0; i < counts[static_cast<std::size_t>(c)]; ++i) z[pos++] = c;
    std::shuffle(z.begin(), z.end(), rng);
  } else {
    std::discrete_distribution<int> cat(config.weights.begin(), config.weights.end());
    for (auto& zi : z) zi = cat(rng);
  }

  std::vector<Eigen::VectorXd> means = config.means;
  std::vector<Eigen::MatrixXd> covs = config.covariances;
  std::uniform_int_distribution<int> coin(0, 1);
  std::normal_distribution<double> normal(0.0, 1.0);

  std::vector<GmmStepOutput> out;
  out.reserve(static_cast<std::size_t>(config.steps));
  for (int t = 0; t < config.steps; ++t) {
    if (t >= 1 && config.walk.step != 0.0)
      for (auto& m : means) m(config.walk.dimension) += coin(rng) ? config.walk.step : -config.walk.step;
    for (const auto& d : config.drifts)
      if (t >= d.first_step && t <= d.last_step) means[static_cast<std::size_t>(d.cluster)] += d.delta;
    for (const auto& e : config.covariance_events) {
      if (e.t != t) continue;
      if (e.cluster < 0)
        for (auto& s : covs) s = e.covariance;
      else
        covs[static_cast<std::size_t>(e.cluster)] = e.covariance;
    }
    for (const auto& e : config.proportion_events) {
      if (e.t != t) continue;
      const auto target = exact_counts(e.weights, n);
      std::vector<std::vector<int>> members(static_cast<std::size_t>(k));
      for (int i = 0; i < n; ++i) members[static_cast<std::size_t>(z[static_cast<std::size_t>(i)])].push_back(i);
      std::vector<int> movers;
      for (int c = 0; c < k; ++c) {
        auto& m = members[static_cast<std::size_t>(c)];
        std::shuffle(m.begin(), m.end(), rng);
        while (static_cast<int>(m.size()) > target[static_cast<std::size_t>(c)]) {
          movers.push_back(m.back());
          m.pop_back();
        }
      }
      std::size_t next = 0;
      for (int c = 0; c < k; ++c)
        for (auto have = members[static_cast<std::size_t>(c)].size();
             static_cast<int>(have) < target[static_cast<std::size_t>(c)] && next < movers.size(); ++have)
          z[static_cast<std::size_t>(movers[next++])] = c;
    }

    std::vector<Eigen::MatrixXd> roots;
    for (const auto& s : covs) roots.push_back(psd_sqrt(s));
    Eigen::MatrixXd x(n, p);
    for (int i = 0; i < n; ++i) {
      Eigen::VectorXd e(p);
      for (int a = 0; a < p; ++a) e(a) = normal(rng);
      const auto c = static_cast<std::size_t>(z[static_cast<std::size_t>(i)]);
      x.row(i) = (means[c] + roots[c] * e).transpose();
    }

    ClusterAssignment truth = ClusterAssignment::compacted(z, ids);
    OracleMoments om = oracle_moments(means, covs, z, ids);

    Eigen::MatrixXd gram = x * x.transpose();
    gram = 0.5 * (gram + gram.transpose());
    out.push_back(GmmStepOutput{x, ProximityMatrix::make(ProximityKind::similarity, std::move(gram), ids),
                                std::move(truth), std::move(om.psi), std::move(om.var), means, covs});
  }
  return out;
}

/// Forgetting factors of the oracle smoother: at each t >= 1, alpha* from the true mean and noise variance and the
/// oracle-smoothed matrix of the previous step. Entry 0 is 0 (Psi^0 = W^0).
struct OracleTrack {
  std::vector<double> alpha;
  std::vector<double> mse;  // ||Psi_hat^t - Psi^t||_F^2
};

inline OracleTrack oracle_alpha_run(const std::vector<GmmStepOutput>& steps) {
  OracleTrack out;
  if (steps.empty()) return out;
  Eigen::MatrixXd psi_hat = steps.front().similarity.values();
  out.alpha.push_back(0.0);
  out.mse.push_back((psi_hat - steps.front().oracle_psi.values()).squaredNorm());
  for (std::size_t t = 1; t < steps.size(); ++t) {
    const auto& s = steps[t];
    const double a = forgetting_factor(psi_hat, s.oracle_psi.values(), s.oracle_var).alpha;
    psi_hat = a * psi_hat + (1.0 - a) * s.similarity.values();
    out.alpha.push_back(a);
    out.mse.push_back((psi_hat - s.oracle_psi.values()).squaredNorm());
  }
  return out;
}

}  // namespace affect::gen
