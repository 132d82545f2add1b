#include <gtest/gtest.h>

#include <map>
#include <random>

#include "affect/clusterer.hpp"
#include "affect/tracking.hpp"

using namespace affect;

namespace {

ProximityMatrix sim(Eigen::MatrixXd w, Ids ids = {}) {
  if (ids.empty()) return ProximityMatrix::make(ProximityKind::similarity, std::move(w));
  return ProximityMatrix::make(ProximityKind::similarity, std::move(w), std::move(ids));
}

Eigen::MatrixXd random_sym(int n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) a(i, j) = a(j, i) = g(rng);
  return a;
}

std::vector<int> random_partition(int n, int k, std::mt19937_64& rng) {
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) labels[static_cast<std::size_t>(i)] = i < k ? i : static_cast<int>(rng() % static_cast<unsigned>(k));
  return labels;
}

// Block statistics by grouping entries under a key: (c, c, diag), (min, max, offdiag).
struct BlockOracle {
  std::map<std::tuple<int, int, bool>, std::vector<double>> samples;
  double global = 0.0;

  BlockOracle(const Eigen::MatrixXd& w, const std::vector<int>& lab) {
    double s = 0.0;
    int cnt = 0;
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      for (Eigen::Index j = i; j < w.rows(); ++j) {
        const int a = lab[static_cast<std::size_t>(i)], b = lab[static_cast<std::size_t>(j)];
        samples[{std::min(a, b), std::max(a, b), i == j}].push_back(w(i, j));
        if (i != j) {
          s += w(i, j);
          ++cnt;
        }
      }
    global = cnt ? s / cnt : 0.0;
  }

  std::pair<double, double> moments(int a, int b, bool diag) const {
    auto it = samples.find({std::min(a, b), std::max(a, b), diag});
    if (it == samples.end()) return {global, 0.0};
    const auto& v = it->second;
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    if (v.size() < 2) return {m, 0.0};
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return {m, ss / static_cast<double>(v.size() - 1)};
  }
};

double alpha_oracle(const Eigen::MatrixXd& prev, const Eigen::MatrixXd& w, const std::vector<int>& lab) {
  const BlockOracle o(w, lab);
  double num = 0.0, den = 0.0;
  for (Eigen::Index i = 0; i < w.rows(); ++i)
    for (Eigen::Index j = 0; j < w.rows(); ++j) {
      const auto [m, v] = o.moments(lab[static_cast<std::size_t>(i)], lab[static_cast<std::size_t>(j)], i == j);
      num += v;
      den += (prev(i, j) - m) * (prev(i, j) - m) + v;
    }
  return den > 0.0 ? std::clamp(num / den, 0.0, 1.0) : 0.0;
}

Eigen::MatrixXd two_blob_gram(int n, double noise, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, noise);
  Eigen::MatrixXd x(n, 2);
  for (int i = 0; i < n; ++i) {
    x(i, 0) = (i < n / 2 ? 5.0 : -5.0) + g(rng);
    x(i, 1) = g(rng);
  }
  return x * x.transpose();
}

}  // namespace

TEST(SmoothUpdate, Examples) {
  Eigen::MatrixXd p(2, 2), c(2, 2), want(2, 2);
  p << 1, 0, 0, 1;
  c << 3, 2, 2, 3;
  want << 2, 1, 1, 2;
  EXPECT_EQ(smooth_update(sim(p), sim(c), 0.0).values(), c);
  EXPECT_EQ(smooth_update(sim(p), sim(c), 1.0).values(), p);
  EXPECT_EQ(smooth_update(sim(p), sim(c), 0.5).values(), want);
}

TEST(SmoothUpdate, Errors) {
  const auto a = sim(Eigen::MatrixXd::Identity(2, 2));
  EXPECT_THROW(smooth_update(a, a, 1.5), Error);
  EXPECT_THROW(smooth_update(a, a, -0.1), Error);
  EXPECT_THROW(smooth_update(a, sim(Eigen::MatrixXd::Identity(2, 2), {"x", "y"}), 0.5), Error);
}

TEST(SmoothUpdate, KeepsSymmetryAndPsd) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::MatrixXd x = random_sym(6, rng), y = random_sym(6, rng);
    const auto s = smooth_update(sim(x * x), sim(y * y), 0.37);
    EXPECT_EQ((s.values() - s.values().transpose()).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_GE(smallest_eigenvalue(s.values()), -1e-10);
  }
}

TEST(ExpandedWeights, Examples) {
  EXPECT_EQ(expanded_weights({0.0}), (std::vector<double>{0.0, 1.0}));
  EXPECT_EQ(expanded_weights({1.0}), (std::vector<double>{1.0, 0.0}));
  const auto w = expanded_weights({0.5, 0.5});
  ASSERT_EQ(w.size(), 3u);
  EXPECT_DOUBLE_EQ(w[0], 0.25);
  EXPECT_DOUBLE_EQ(w[1], 0.25);
  EXPECT_DOUBLE_EQ(w[2], 0.5);
  EXPECT_EQ(expanded_weights({}), (std::vector<double>{1.0}));
  EXPECT_THROW(expanded_weights({0.2, 1.2}), Error);
}

TEST(ExpandedWeights, SumToOne) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> h(1 + rng() % 40);
    for (auto& a : h) a = u(rng);
    double s = 0.0;
    for (double b : expanded_weights(h)) s += b;
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(ExpandedWeights, SequentialSmoothingEqualsWeightedSum) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const int t = 1 + trial % 10;
    std::vector<Eigen::MatrixXd> w;
    for (int s = 0; s <= t; ++s) w.push_back(random_sym(5, rng, 3.0));
    std::vector<double> h;
    auto psi = sim(w[0]);
    for (int s = 1; s <= t; ++s) {
      h.push_back(u(rng));
      psi = smooth_update(psi, sim(w[static_cast<std::size_t>(s)]), h.back());
    }
    const auto beta = expanded_weights(h);
    Eigen::MatrixXd direct = Eigen::MatrixXd::Zero(5, 5);
    for (int s = 0; s <= t; ++s) direct += beta[static_cast<std::size_t>(s)] * w[static_cast<std::size_t>(s)];
    EXPECT_LE((psi.values() - direct).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(BlockMoments, BlockConstant) {
  Eigen::MatrixXd w(4, 4);
  w << 7, 5, 1, 1, 5, 7, 1, 1, 1, 1, 7, 5, 1, 1, 5, 7;
  const auto m = estimate_block_moments(sim(w), ClusterAssignment({0, 0, 1, 1}, 4));
  for (int c = 0; c < 2; ++c) {
    EXPECT_EQ(m.within_mean[static_cast<std::size_t>(c)], 5.0);
    EXPECT_EQ(m.diag_mean[static_cast<std::size_t>(c)], 7.0);
    EXPECT_EQ(m.within_var[static_cast<std::size_t>(c)], 0.0);
    EXPECT_EQ(m.diag_var[static_cast<std::size_t>(c)], 0.0);
  }
  EXPECT_EQ(m.between_mean(0, 1), 1.0);
  EXPECT_EQ(m.between_mean(1, 0), 1.0);
  EXPECT_EQ(m.between_var(0, 1), 0.0);
}

TEST(BlockMoments, TwoEntryBlock) {
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(4, 4);
  w(0, 1) = w(1, 0) = 2.0;
  w(0, 2) = w(2, 0) = 4.0;
  const auto m = estimate_block_moments(sim(w), ClusterAssignment({0, 1, 1, 2}, 4));
  EXPECT_DOUBLE_EQ(m.between_mean(0, 1), 3.0);
  EXPECT_DOUBLE_EQ(m.between_var(0, 1), 2.0);
  EXPECT_EQ(m.between_count(0, 1), 2.0);
}

TEST(BlockMoments, SingletonFallsBackToGlobalMean) {
  Eigen::MatrixXd w(3, 3);
  w << 1, 2, 3, 2, 1, 4, 3, 4, 1;
  const auto m = estimate_block_moments(sim(w), ClusterAssignment({0, 0, 1}, 3));
  EXPECT_EQ(m.within_count[1], 0u);
  EXPECT_DOUBLE_EQ(m.within_mean[1], 3.0);
  EXPECT_EQ(m.within_var[1], 0.0);
  EXPECT_EQ(m.within_var[0], 0.0);
  EXPECT_EQ(m.diag_var[1], 0.0);
}

TEST(BlockMoments, MatchesGroupedOracle) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 5 + trial % 6, k = 1 + trial % 4;
    const Eigen::MatrixXd w = random_sym(n, rng);
    const auto lab = random_partition(n, k, rng);
    const auto m = estimate_block_moments(sim(w), ClusterAssignment(lab, n));
    const BlockOracle o(w, lab);
    for (int c = 0; c < k; ++c)
      for (int d = 0; d < k; ++d) {
        for (bool diag : {false, true}) {
          if (diag && c != d) continue;
          const auto [mean, var] = o.moments(c, d, diag);
          EXPECT_NEAR(m.mean(c, d, diag), mean, 1e-12);
          EXPECT_NEAR(m.variance(c, d, diag), var, 1e-12);
        }
      }
  }
}

TEST(BlockMoments, PermutationInvariant) {
  std::mt19937_64 rng(5);
  const int n = 9;
  const Eigen::MatrixXd w = random_sym(n, rng);
  const auto lab = random_partition(n, 3, rng);
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  Eigen::MatrixXd pw(n, n);
  std::vector<int> plab(n);
  for (int i = 0; i < n; ++i) {
    plab[static_cast<std::size_t>(i)] = lab[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
    for (int j = 0; j < n; ++j) pw(i, j) = w(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
  }
  const auto a = estimate_block_moments(sim(w), ClusterAssignment(lab, n));
  const auto b = estimate_block_moments(sim(pw), ClusterAssignment(plab, n));
  for (int c = 0; c < 3; ++c)
    for (int d = 0; d < 3; ++d) {
      EXPECT_NEAR(a.mean(c, d, false), b.mean(c, d, false), 1e-12);
      EXPECT_NEAR(a.variance(c, d, false), b.variance(c, d, false), 1e-12);
    }
}

TEST(EstimateAlpha, ZeroVarianceGivesZero) {
  Eigen::MatrixXd w(4, 4);
  w << 7, 5, 1, 1, 5, 7, 1, 1, 1, 1, 7, 5, 1, 1, 5, 7;
  const ClusterAssignment c({0, 0, 1, 1}, 4);
  const auto m = estimate_block_moments(sim(w), c);
  const auto e = estimate_alpha(sim(Eigen::MatrixXd::Identity(4, 4)), m, c);
  EXPECT_EQ(e.alpha, 0.0);
  EXPECT_EQ(e.numerator, 0.0);
}

TEST(EstimateAlpha, ZeroBiasGivesOne) {
  std::mt19937_64 rng(6);
  const Eigen::MatrixXd w = random_sym(6, rng);
  const ClusterAssignment c({0, 0, 0, 1, 1, 1}, 6);
  const auto m = estimate_block_moments(sim(w), c);
  const auto e = estimate_alpha(sim(expected_matrix(m, c)), m, c);
  EXPECT_GT(e.numerator, 0.0);
  EXPECT_DOUBLE_EQ(e.alpha, 1.0);
}

TEST(EstimateAlpha, FourObjectBruteForce) {
  std::mt19937_64 rng(7);
  const std::vector<int> lab{0, 1, 0, 1};
  const Eigen::MatrixXd w = random_sym(4, rng), prev = random_sym(4, rng);
  const ClusterAssignment c(lab, 4);
  const auto e = estimate_alpha(sim(prev), estimate_block_moments(sim(w), c), c);
  EXPECT_NEAR(e.alpha, alpha_oracle(prev, w, lab), 1e-12);
}

TEST(EstimateAlpha, FuzzedStaysInUnitInterval) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> scale(0.01, 100.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 12), k = 1 + static_cast<int>(rng() % static_cast<unsigned>(std::min(n, 4)));
    const Eigen::MatrixXd w = random_sym(n, rng, scale(rng)), prev = random_sym(n, rng, scale(rng));
    const auto lab = random_partition(n, k, rng);
    const ClusterAssignment c(lab, n);
    const auto e = estimate_alpha(sim(prev), estimate_block_moments(sim(w), c), c);
    ASSERT_GE(e.alpha, 0.0);
    ASSERT_LE(e.alpha, 1.0);
    EXPECT_NEAR(e.alpha, alpha_oracle(prev, w, lab), 1e-9);
  }
}

TEST(EstimateAlpha, IdMismatch) {
  const ClusterAssignment c({0, 1}, 2);
  const auto m = estimate_block_moments(sim(Eigen::MatrixXd::Identity(2, 2)), c);
  EXPECT_THROW(estimate_alpha(sim(Eigen::MatrixXd::Identity(2, 2), {"p", "q"}), m, c), Error);
}

TEST(AffectStep, FirstStepCopiesInput) {
  std::mt19937_64 rng(9);
  const auto w = sim(two_blob_gram(10, 0.5, rng));
  const auto r = affect_step(SmoothedState{}, w, kmeans_clusterer(2), std::nullopt);
  EXPECT_EQ(r.state.psi_hat->values(), w.values());
  EXPECT_TRUE(r.state.alpha_history.empty());
  EXPECT_EQ(r.state.t, 0);
  EXPECT_EQ(r.assignment.k(), 2);
}

TEST(AffectStep, IterationsAgreeWhenClusteringIsStable) {
  std::mt19937_64 rng(10);
  const auto w0 = sim(two_blob_gram(20, 0.3, rng));
  const auto w1 = sim(two_blob_gram(20, 0.3, rng));
  const auto clusterer = kmeans_clusterer(2);
  const auto first = affect_step(SmoothedState{}, w0, clusterer, std::nullopt);
  StepOptions one, three;
  one.iterations = 1;
  three.iterations = 3;
  const auto a = affect_step(first.state, w1, clusterer, first.assignment, one);
  const auto b = affect_step(first.state, w1, clusterer, first.assignment, three);
  EXPECT_GT(a.estimate.alpha, 0.0);
  EXPECT_NEAR(a.estimate.alpha, b.estimate.alpha, 1e-12);
  EXPECT_EQ(b.alpha_per_iteration.size(), 3u);
  EXPECT_EQ(b.estimate.iterations_run, 3);
}

TEST(AffectStep, SmoothedMatrixUsesEstimatedAlpha) {
  std::mt19937_64 rng(11);
  const auto w0 = sim(two_blob_gram(12, 1.0, rng));
  const auto w1 = sim(two_blob_gram(12, 1.0, rng));
  const auto clusterer = kmeans_clusterer(2);
  const auto first = affect_step(SmoothedState{}, w0, clusterer, std::nullopt);
  const auto r = affect_step(first.state, w1, clusterer, first.assignment);
  const double a = r.state.alpha_history.back();
  EXPECT_LE((r.state.psi_hat->values() - (a * w0.values() + (1 - a) * w1.values())).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(r.state.alpha_history.size(), 1u);
}

TEST(AffectStep, FixedAlphaSkipsEstimation) {
  std::mt19937_64 rng(12);
  const auto w0 = sim(two_blob_gram(8, 1.0, rng));
  const auto w1 = sim(two_blob_gram(8, 1.0, rng));
  const auto clusterer = kmeans_clusterer(2);
  const auto first = affect_step(SmoothedState{}, w0, clusterer, std::nullopt);
  StepOptions o;
  o.fixed_alpha = 0.25;
  const auto r = affect_step(first.state, w1, clusterer, first.assignment, o);
  EXPECT_EQ(r.state.alpha_history, (std::vector<double>{0.25}));
  EXPECT_LE((r.state.psi_hat->values() - (0.25 * w0.values() + 0.75 * w1.values())).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(AffectStep, ObjectsEnterAndLeave) {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> noise(0.0, 0.5);
  // Objects a, b, x sit near (5, 0); c, d, e, f near (-5, 0).
  auto features = [&](const Ids& ids) {
    Eigen::MatrixXd x(static_cast<Eigen::Index>(ids.size()), 2);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const bool left = ids[i] == "c" || ids[i] == "d" || ids[i] == "e" || ids[i] == "f";
      x(static_cast<Eigen::Index>(i), 0) = (left ? -5.0 : 5.0) + noise(rng);
      x(static_cast<Eigen::Index>(i), 1) = noise(rng);
    }
    return x;
  };
  const Ids ids0{"a", "b", "c", "d", "e", "f"}, ids1{"b", "c", "x", "d", "e", "f"};
  const Eigen::MatrixXd x0 = features(ids0), x1 = features(ids1);
  const Eigen::MatrixXd g0 = x0 * x0.transpose(), g1 = x1 * x1.transpose();
  const auto w0 = sim(g0, ids0);
  const auto w1 = sim(g1, ids1);
  const auto clusterer = spectral_clusterer(SpectralVariant::average_association, 2);
  const auto first = affect_step(SmoothedState{}, w0, clusterer, std::nullopt);
  const auto r = affect_step(first.state, w1, clusterer, first.assignment);
  const auto& psi = *r.state.psi_hat;
  EXPECT_EQ(psi.ids(), w1.ids());
  for (Eigen::Index j = 0; j < 6; ++j) {
    EXPECT_EQ(psi(2, j), g1(2, j));
    EXPECT_EQ(psi(j, 2), g1(j, 2));
  }
  const Ids shared{"b", "c", "d", "e", "f"};
  const auto prev = restrict_to(w0, shared);
  const auto cur = restrict_to(w1, shared);
  const ClusterAssignment c0 = restrict_to(first.assignment, shared);
  const auto e = estimate_alpha(prev, estimate_block_moments(cur, c0), c0);
  const auto r1 = [&] {
    StepOptions o;
    o.iterations = 1;
    return affect_step(first.state, w1, clusterer, first.assignment, o);
  }();
  EXPECT_NEAR(r1.estimate.alpha, e.alpha, 1e-12);
  const auto smoothed = restrict_to(psi, shared);
  const double a = r.estimate.alpha;
  EXPECT_LE((smoothed.values() - (a * prev.values() + (1 - a) * cur.values())).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(AffectStep, DisjointStepRestartsSmoothing) {
  std::mt19937_64 rng(14);
  const auto w0 = sim(two_blob_gram(4, 0.5, rng), {"a", "b", "c", "d"});
  const auto w1 = sim(two_blob_gram(4, 0.5, rng), {"p", "q", "r", "s"});
  const auto clusterer = kmeans_clusterer(2);
  const auto first = affect_step(SmoothedState{}, w0, clusterer, std::nullopt);
  const auto r = affect_step(first.state, w1, clusterer, first.assignment);
  EXPECT_TRUE(r.restarted);
  EXPECT_EQ(r.state.psi_hat->values(), w1.values());
  EXPECT_EQ(r.state.alpha_history, (std::vector<double>{0.0}));
}

TEST(AffectStep, RejectsZeroIterations) {
  StepOptions o;
  o.iterations = 0;
  EXPECT_THROW(affect_step(SmoothedState{}, sim(Eigen::MatrixXd::Identity(2, 2)), kmeans_clusterer(1), std::nullopt, o),
               Error);
}

TEST(Tracker, MatchesManualSteps) {
  std::mt19937_64 rng(15);
  std::vector<ProximityMatrix> seq;
  for (int t = 0; t < 4; ++t) seq.push_back(sim(two_blob_gram(10, 1.5, rng)));
  Tracker tracker(kmeans_clusterer(2), StepOptions{});
  SmoothedState state;
  std::optional<ClusterAssignment> prev;
  for (int t = 0; t < 4; ++t) {
    const auto& got = tracker.step(seq[static_cast<std::size_t>(t)], static_cast<std::uint64_t>(t));
    StepOptions o;
    o.seed = static_cast<std::uint64_t>(t);
    const auto want = affect_step(state, seq[static_cast<std::size_t>(t)], kmeans_clusterer(2), prev, o);
    EXPECT_EQ(got.assignment, want.assignment);
    EXPECT_EQ(got.state.alpha_history, want.state.alpha_history);
    state = want.state;
    prev = want.assignment;
  }
}
