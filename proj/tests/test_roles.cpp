#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "dbmm/roles.hpp"

using namespace dbmm;

namespace {

// Two communities whose members come and go over four snapshots.
SnapshotSeries churn_series() {
  std::mt19937_64 rng(12);
  std::uniform_int_distribution<int> pick(0, 39);
  std::ostringstream os;
  for (int t = 0; t < 4; ++t) {
    for (int e = 0; e < 70; ++e) {
      int a = pick(rng), b = pick(rng);
      if (t % 2 == 1 && (a < 5 || b < 5)) continue;  // nodes 0..4 vanish at odd t
      os << 'v' << a << " v" << b << " 1 " << t << '\n';
    }
    for (int k = 1; k < 8; ++k) os << "hub" << t % 2 << " v" << 10 + k << " 1 " << t << '\n';
  }
  return build_snapshots(parse_edge_list(os.str()), {1.0, true});
}

}  // namespace

TEST(MembershipSeries, RowInvariants) {
  auto series = churn_series();
  auto fs = discover_features(series);
  auto model = build_membership_series(series, fs);
  const auto& ms = model.memberships;
  ASSERT_EQ(ms.size(), series.size());
  ASSERT_GE(ms.r, 1u);
  EXPECT_EQ(model.basis.values.rows(), static_cast<Eigen::Index>(ms.r));
  for (Eigen::Index k = 0; k < model.basis.values.rows(); ++k) EXPECT_GT(model.basis.values.row(k).maxCoeff(), 0.0);
  EXPECT_GE(model.basis.values.minCoeff(), 0.0);
  const auto r = static_cast<Eigen::Index>(ms.r);
  for (std::size_t t = 0; t < ms.size(); ++t) {
    const Matrix& G = ms[t];
    ASSERT_EQ(G.rows(), static_cast<Eigen::Index>(series.num_nodes()));
    ASSERT_EQ(G.cols(), r + 1);
    EXPECT_GE(G.minCoeff(), 0.0);
    for (Eigen::Index i = 0; i < G.rows(); ++i) {
      EXPECT_NEAR(G.row(i).sum(), 1.0, 1e-9);
      bool active = series[t].local_index(static_cast<NodeId>(i)) != Snapshot::npos;
      EXPECT_EQ(ms.matrices[t].active[static_cast<std::size_t>(i)], active);
      if (active) {
        EXPECT_EQ(G(i, r), 0.0);
      } else {
        EXPECT_EQ(G(i, r), 1.0);
        EXPECT_EQ(G.row(i).head(r).sum(), 0.0);
      }
    }
  }
  // nodes 0..4 are absent at odd t
  auto v0 = static_cast<Eigen::Index>(series.universe.id("v0"));
  EXPECT_EQ(ms[1](v0, r), 1.0);
}

TEST(MembershipSeries, ReconstructionNoWorseThanZero) {
  auto series = churn_series();
  auto fs = discover_features(series);
  RoleOptions o;
  o.normalize_rows = false;
  auto model = build_membership_series(series, fs, o);
  for (std::size_t t = 0; t < series.size(); ++t) {
    Matrix G = active_memberships(model.memberships, series[t]);
    const Matrix& V = fs.matrices[t].values;
    EXPECT_LE((V - G * model.basis.values).norm(), V.norm() + 1e-9);
  }
}

TEST(MembershipSeries, OneSnapshotHasNoInactiveMass) {
  ParseOptions po;
  po.static_graph = true;
  auto series = build_snapshots(parse_edge_list("a b\nb c\nc a\nc d\nd e\ne f\nf d\n", po), {1.0, true});
  auto fs = discover_features(series);
  RoleOptions o;
  o.rank = 2;
  auto model = build_membership_series(series, fs, o);
  ASSERT_EQ(model.memberships.size(), 1u);
  EXPECT_EQ(model.memberships[0].col(2).sum(), 0.0);
}

TEST(MembershipSeries, FixedRankSkipsSelection) {
  auto series = churn_series();
  auto fs = discover_features(series);
  RoleOptions o;
  o.rank = 3;
  auto model = build_membership_series(series, fs, o);
  EXPECT_TRUE(model.report.selection.curve.empty());
  EXPECT_EQ(model.memberships.r + model.report.dropped_roles, 3u);
}

TEST(EmbedMemberships, ZeroRowBecomesUniformAndIsCounted) {
  ParseOptions po;
  po.static_graph = true;
  auto series = build_snapshots(parse_edge_list("a b\n", po), {1.0, false});
  Matrix rows(2, 2);
  rows << 0, 0, 3, 1;
  std::size_t uniform = 0;
  auto m = embed_memberships(rows, series[0], 3, true, &uniform);
  EXPECT_EQ(uniform, 1u);
  EXPECT_DOUBLE_EQ(m.values(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(m.values(1, 0), 0.75);
  EXPECT_DOUBLE_EQ(m.activity(1), 4.0);
  EXPECT_DOUBLE_EQ(m.values(2, 2), 1.0);  // node outside the snapshot
}
