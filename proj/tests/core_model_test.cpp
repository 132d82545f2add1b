#include <gtest/gtest.h>

#include <random>

#include "affect/core_model.hpp"

using namespace affect;

namespace {

Errc code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return Errc::bad_config;
}

ProximityMatrix sim(Eigen::MatrixXd v, Ids ids) {
  return ProximityMatrix::make(ProximityKind::similarity, std::move(v), std::move(ids));
}

Eigen::MatrixXd mat(std::initializer_list<std::initializer_list<double>> rows) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index i = 0;
  for (auto r : rows) {
    Eigen::Index j = 0;
    for (double v : r) m(i, j++) = v;
    ++i;
  }
  return m;
}

}  // namespace

TEST(Validate, IdentityIsValidSimilarity) {
  EXPECT_NO_THROW(validate(ProximityKind::similarity, Eigen::MatrixXd::Identity(2, 2), sequential_ids(2)));
}

TEST(Validate, AsymmetricDissimilarity) {
  EXPECT_EQ(code_of([] { validate(ProximityKind::dissimilarity, mat({{0, 1}, {2, 0}}), sequential_ids(2)); }),
            Errc::asymmetric_matrix);
}

TEST(Validate, NegativeDissimilarity) {
  EXPECT_EQ(code_of([] { validate(ProximityKind::dissimilarity, mat({{0, -1}, {-1, 0}}), sequential_ids(2)); }),
            Errc::negative_dissimilarity);
}

TEST(Validate, DimensionMismatch) {
  EXPECT_EQ(code_of([] { validate(ProximityKind::similarity, Eigen::MatrixXd::Identity(3, 3), sequential_ids(2)); }),
            Errc::dimension_mismatch);
  EXPECT_EQ(code_of([] { validate(ProximityKind::similarity, Eigen::MatrixXd(2, 3), sequential_ids(2)); }),
            Errc::dimension_mismatch);
}

TEST(Validate, NonzeroDissimilarityDiagonal) {
  EXPECT_EQ(code_of([] { validate(ProximityKind::dissimilarity, mat({{1, 1}, {1, 0}}), sequential_ids(2)); }),
            Errc::negative_dissimilarity);
}

TEST(Validate, DuplicateIds) {
  EXPECT_EQ(code_of([] { validate(ProximityKind::similarity, Eigen::MatrixXd::Identity(2, 2), {"a", "a"}); }),
            Errc::id_mismatch);
}

TEST(ProximityMatrix, SymmetrizesWithinTolerance) {
  Eigen::MatrixXd v = mat({{1, 0.5}, {0.5 + 4e-10, 1}});
  const auto m = sim(v, {"a", "b"});
  EXPECT_EQ(m(0, 1), m(1, 0));
  EXPECT_NEAR(m(0, 1), 0.5 + 2e-10, 1e-15);
}

TEST(ClusterAssignment, RejectsEmptyCluster) {
  EXPECT_EQ(code_of([] { ClusterAssignment({0, 2, 2}, 3); }), Errc::k_out_of_range);
  EXPECT_EQ(code_of([] { ClusterAssignment({0, -1}, 2); }), Errc::k_out_of_range);
  EXPECT_EQ(code_of([] { ClusterAssignment({0, 1}, 3); }), Errc::dimension_mismatch);
}

TEST(ClusterAssignment, CompactedKeepsLabelOrder) {
  const auto c = ClusterAssignment::compacted({7, 3, 7, 9}, sequential_ids(4));
  EXPECT_EQ(c.labels(), (std::vector<int>{1, 0, 1, 2}));
  EXPECT_EQ(c.k(), 3);
  EXPECT_EQ(c.cluster_sizes(), (std::vector<std::size_t>{1, 2, 1}));
}

TEST(AlignState, IdenticalIdsIsIdentity) {
  const auto m = sim(mat({{2, 1, 0}, {1, 3, 1}, {0, 1, 4}}), {"a", "b", "c"});
  const auto a = align_state(m, m);
  EXPECT_EQ(a.prev_restricted.values(), m.values());
  EXPECT_EQ(a.prev_restricted.ids(), m.ids());
  EXPECT_TRUE(a.new_ids.empty());
}

TEST(AlignState, DepartureGivesSubmatrix) {
  const auto prev = sim(mat({{2, 1, 5}, {1, 3, 1}, {5, 1, 4}}), {"a", "b", "c"});
  const auto cur = sim(Eigen::MatrixXd::Identity(2, 2), {"a", "c"});
  const auto a = align_state(prev, cur);
  EXPECT_EQ(a.prev_restricted.ids(), (Ids{"a", "c"}));
  EXPECT_EQ(a.prev_restricted.values(), mat({{2, 5}, {5, 4}}));
  EXPECT_TRUE(a.new_ids.empty());
}

TEST(AlignState, ArrivalsAndDepartures) {
  const auto prev = sim(mat({{2, 1}, {1, 3}}), {"a", "b"});
  const auto cur = sim(Eigen::MatrixXd::Identity(3, 3), {"b", "c", "d"});
  const auto a = align_state(prev, cur);
  EXPECT_EQ(a.prev_restricted.ids(), (Ids{"b"}));
  EXPECT_EQ(a.prev_restricted.values(), mat({{3}}));
  EXPECT_EQ(a.new_ids, (Ids{"c", "d"}));
}

TEST(AlignState, FollowsCurrentOrder) {
  const auto prev = sim(mat({{1, 2, 3}, {2, 4, 5}, {3, 5, 6}}), {"a", "b", "c"});
  const auto cur = sim(Eigen::MatrixXd::Identity(3, 3), {"c", "x", "a"});
  const auto a = align_state(prev, cur);
  EXPECT_EQ(a.prev_restricted.ids(), (Ids{"c", "a"}));
  EXPECT_EQ(a.prev_restricted.values(), mat({{6, 3}, {3, 1}}));
  EXPECT_EQ(a.new_ids, (Ids{"x"}));
}

TEST(AlignState, DisjointIdsThrow) {
  const auto prev = sim(Eigen::MatrixXd::Identity(1, 1), {"a"});
  const auto cur = sim(Eigen::MatrixXd::Identity(1, 1), {"b"});
  EXPECT_EQ(code_of([&] { align_state(prev, cur); }), Errc::empty_intersection);
}

TEST(AlignState, Idempotent) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  Eigen::MatrixXd v(5, 5);
  for (Eigen::Index i = 0; i < 5; ++i)
    for (Eigen::Index j = 0; j <= i; ++j) v(i, j) = v(j, i) = g(rng);
  const auto prev = sim(v, {"a", "b", "c", "d", "e"});
  const auto cur = sim(Eigen::MatrixXd::Identity(4, 4), {"e", "q", "b", "c"});
  const auto once = align_state(prev, cur);
  const auto twice = align_state(once.prev_restricted, cur);
  EXPECT_EQ(twice.prev_restricted.values(), once.prev_restricted.values());
  EXPECT_EQ(twice.prev_restricted.ids(), once.prev_restricted.ids());
}

TEST(AlignState, PermutationEquivariant) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  Eigen::MatrixXd v(4, 4);
  for (Eigen::Index i = 0; i < 4; ++i)
    for (Eigen::Index j = 0; j <= i; ++j) v(i, j) = v(j, i) = g(rng);
  const auto prev = sim(v, {"a", "b", "c", "d"});
  const auto a = align_state(prev, sim(Eigen::MatrixXd::Identity(3, 3), {"a", "c", "d"}));
  const auto b = align_state(prev, sim(Eigen::MatrixXd::Identity(3, 3), {"d", "a", "c"}));
  const std::vector<Eigen::Index> perm{2, 0, 1};
  for (Eigen::Index i = 0; i < 3; ++i)
    for (Eigen::Index j = 0; j < 3; ++j) EXPECT_EQ(b.prev_restricted(i, j), a.prev_restricted(perm[i], perm[j]));
}

TEST(ObjectRegistry, TracksAddsAndRemovals) {
  ObjectRegistry reg;
  auto c0 = reg.observe({"a", "b"});
  EXPECT_EQ(c0.added, (Ids{"a", "b"}));
  EXPECT_EQ(reg.generation(), 1u);

  auto c1 = reg.observe({"b", "a"});
  EXPECT_TRUE(c1.added.empty());
  EXPECT_TRUE(c1.removed.empty());
  EXPECT_EQ(reg.generation(), 1u);
  EXPECT_EQ(reg.active(), (Ids{"b", "a"}));

  auto c2 = reg.observe({"b", "c"});
  EXPECT_EQ(c2.added, (Ids{"c"}));
  EXPECT_EQ(c2.removed, (Ids{"a"}));
  EXPECT_EQ(reg.generation(), 2u);

  auto c3 = reg.observe({"a", "b", "c"});
  EXPECT_EQ(c3.added, (Ids{"a"}));
  EXPECT_EQ(reg.entries().size(), 3u);
}

TEST(ObjectRegistry, DuplicateIdsRejected) {
  ObjectRegistry reg;
  EXPECT_EQ(code_of([&] { reg.observe({"a", "a"}); }), Errc::id_mismatch);
}

TEST(RestrictTo, UnknownIdThrows) {
  const auto m = sim(Eigen::MatrixXd::Identity(2, 2), {"a", "b"});
  EXPECT_EQ(code_of([&] { restrict_to(m, {"z"}); }), Errc::id_mismatch);
  const ClusterAssignment c({0, 1, 1}, Ids{"a", "b", "c"});
  const auto r = restrict_to(c, {"c", "b"});
  EXPECT_EQ(r.labels(), (std::vector<int>{0, 0}));
}
