#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "dbmm/anomaly.hpp"
#include "oracles.hpp"

using namespace dbmm;

namespace {

// Active flags follow the inactive (last) column.
MembershipSeries series_of(const std::vector<Matrix>& gs) {
  MembershipSeries ms;
  ms.r = static_cast<std::size_t>(gs.front().cols() - 1);
  const auto r = static_cast<Eigen::Index>(ms.r);
  for (std::size_t t = 0; t < gs.size(); ++t) {
    MembershipMatrix m;
    m.snapshot_index = t;
    m.values = gs[t];
    m.activity = Vector::Ones(gs[t].rows());
    for (Eigen::Index i = 0; i < gs[t].rows(); ++i) m.active.push_back(gs[t](i, r) < 1.0);
    ms.matrices.push_back(m);
  }
  return ms;
}

// n nodes in pure active roles 0..k-2 (column k-1 is inactive), constant over time.
std::vector<Matrix> stationary(Eigen::Index n, Eigen::Index k, std::size_t steps) {
  Matrix G = Matrix::Zero(n, k);
  for (Eigen::Index i = 0; i < n; ++i) G(i, i % (k - 1)) = 1.0;
  return std::vector<Matrix>(steps, G);
}

}  // namespace

TEST(NodeModel, StationaryRowIsUnitVector) {
  auto ms = series_of(stationary(6, 4, 5));
  auto T = node_transition_model(ms, 1, 0, 4);
  EXPECT_NEAR(T.values(1, 1), 1.0, 1e-3);
  EXPECT_LT(T.values.row(1).sum() - T.values(1, 1), 1e-3);
  EXPECT_EQ(T.node, 1u);
  EXPECT_EQ(T.scope, TransitionScope::node);
}

TEST(NodeModel, AlternatingNodeSwapsRoles) {
  auto gs = stationary(4, 3, 6);
  for (std::size_t t = 1; t < gs.size(); t += 2) gs[t].row(0) << 0, 1, 0;
  auto T = node_transition_model(series_of(gs), 0, 0, 5);
  EXPECT_NEAR(T.values(0, 1), 1.0, 1e-2);
  EXPECT_NEAR(T.values(1, 0), 1.0, 1e-2);
  EXPECT_LT(T.values(0, 0), 1e-2);
}

TEST(NodeModel, MatchesPenalizedOracle) {
  std::mt19937_64 rng(3);
  std::vector<Matrix> gs;
  for (int t = 0; t < 7; ++t) gs.push_back(oracle::random_row_stochastic(3, 4, rng));
  auto ms = series_of(gs);
  TransitionOptions o = node_model_defaults();
  o.max_iter = 200000;
  o.tol = 1e-15;
  auto T = node_transition_model(ms, 2, 0, 6, o);
  Matrix X(6, 4), Y(6, 4);
  for (int t = 0; t < 6; ++t) {
    X.row(t) = gs[static_cast<std::size_t>(t)].row(2);
    Y.row(t) = gs[static_cast<std::size_t>(t) + 1].row(2);
  }
  const double lambda = o.ridge * (X.transpose() * X).trace() / 4.0;
  Matrix I = Matrix::Identity(4, 4);
  auto penalized = [&](const Matrix& M) {
    return oracle::transition_objective(X, Y, M) + 0.5 * lambda * (M - I).squaredNorm();
  };
  EXPECT_LE(penalized(T.values), penalized(oracle::projected_gradient_transition(X, Y, lambda)) * (1 + 1e-4));
}

TEST(NodeModel, UndefinedWithoutHistory) {
  auto gs = stationary(3, 3, 4);
  for (auto& g : gs) g.row(2) << 0, 0, 1;
  auto ms = series_of(gs);
  EXPECT_THROW(node_transition_model(ms, 2, 0, 3), UndefinedModelError);
  EXPECT_THROW(node_transition_model(ms, 0, 2, 2), UndefinedModelError);
  EXPECT_THROW(node_transition_model(ms, 7, 0, 3), ArgumentError);
}

TEST(AnomalyScores, IdenticalHistoriesScoreEqually) {
  Matrix G = Matrix::Zero(8, 3);
  G.col(0).setConstant(0.7);
  G.col(1).setConstant(0.3);
  auto ms = series_of(std::vector<Matrix>(5, G));
  auto s = anomaly_scores(ms, 3);
  for (std::size_t i = 1; i < s.size(); ++i) EXPECT_NEAR(s.scores[i], s.scores[0], 1e-12);
}

TEST(AnomalyScores, RoleFlippingNodeRanksFirst) {
  auto gs = stationary(12, 4, 8);
  // node 5 sits in role 2 but alternates with role 0
  for (std::size_t t = 0; t < gs.size(); ++t) {
    gs[t].row(5).setZero();
    gs[t](5, t % 2 == 0 ? 2 : 0) = 1.0;
  }
  auto s = anomaly_scores(series_of(gs), 6);
  EXPECT_EQ(s.ranking().front(), 5u);
  EXPECT_EQ(s.top_k(1), std::vector<NodeId>{5});
}

TEST(AnomalyScores, GlobalDynamicsGiveGlobalResidual) {
  // a role cycle: every history visits each state, so each node model is identified
  Matrix T(3, 3);
  T << 0, 1, 0, 0, 0, 1, 1, 0, 0;
  std::vector<Matrix> gs{Matrix::Zero(9, 3)};
  for (Eigen::Index i = 0; i < 9; ++i) gs[0](i, (i * 2) % 3) = 1.0;
  for (int t = 1; t < 8; ++t) gs.push_back(gs.back() * T);
  auto ms = series_of(gs);
  AnomalyOptions o;
  o.transition.ridge = 0;
  o.transition.max_iter = 200000;
  o.transition.tol = 1e-15;
  auto s = anomaly_scores(ms, 6, o);
  const double global = (gs[6] * T - gs[7]).norm();
  for (std::size_t i = 0; i < s.size(); ++i) {
    ASSERT_TRUE(s.defined[i]);
    EXPECT_NEAR(s.scores[i], global, 1e-6);
  }
}

TEST(AnomalyScores, PermutationEquivariant) {
  std::mt19937_64 rng(4);
  std::vector<Matrix> gs;
  for (int t = 0; t < 5; ++t) gs.push_back(oracle::random_row_stochastic(7, 3, rng));
  std::vector<int> perm{3, 0, 6, 1, 5, 2, 4};
  Eigen::PermutationMatrix<Eigen::Dynamic> P(7);
  for (int i = 0; i < 7; ++i) P.indices()[i] = perm[static_cast<std::size_t>(i)];
  std::vector<Matrix> permuted;
  for (const auto& g : gs) permuted.push_back(P * g);
  auto a = anomaly_scores(series_of(gs), 3);
  auto b = anomaly_scores(series_of(permuted), 3);
  for (std::size_t i = 0; i < 7; ++i) EXPECT_NEAR(b.scores[static_cast<std::size_t>(perm[i])], a.scores[i], 1e-9);
}

TEST(AnomalyScores, AlwaysInactiveNodesChangeNothing) {
  std::mt19937_64 rng(5);
  std::vector<Matrix> gs, padded;
  for (int t = 0; t < 5; ++t) {
    Matrix g = oracle::random_row_stochastic(6, 3, rng);
    g.col(2).setZero();
    for (Eigen::Index i = 0; i < 6; ++i) g.row(i) /= g.row(i).sum();
    Matrix p = Matrix::Zero(8, 3);
    p.topRows(6) = g;
    p(6, 2) = p(7, 2) = 1.0;
    gs.push_back(g);
    padded.push_back(p);
  }
  auto a = anomaly_scores(series_of(gs), 3);
  auto b = anomaly_scores(series_of(padded), 3);
  for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(a.scores[i], b.scores[i], 1e-12);
  EXPECT_FALSE(b.defined[6]);
  EXPECT_FALSE(b.defined[7]);
  EXPECT_TRUE(std::isnan(b.scores[6]));
  EXPECT_EQ(b.ranking().size(), 6u);
}

TEST(AnomalyScores, GramRouteMatchesDirect) {
  std::mt19937_64 rng(6);
  std::vector<Matrix> gs;
  for (int t = 0; t < 5; ++t) gs.push_back(oracle::random_row_stochastic(20, 4, rng));
  auto ms = series_of(gs);
  AnomalyOptions d, g;
  d.route = ScoreRoute::direct;
  g.route = ScoreRoute::gram;
  auto a = anomaly_scores(ms, 3, d), b = anomaly_scores(ms, 3, g);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a.scores[i], b.scores[i], 1e-8 * (1 + a.scores[i]));
}

TEST(AnomalyScores, OwnRowTarget) {
  auto gs = stationary(5, 3, 5);
  AnomalyOptions o;
  o.target = ScoreTarget::own_row;
  auto s = anomaly_scores(series_of(gs), 3, o);
  for (std::size_t i = 0; i < s.size(); ++i) EXPECT_LT(s.scores[i], 1e-2);
}

TEST(AnomalyScores, LastSnapshotIsError) {
  auto ms = series_of(stationary(3, 3, 3));
  EXPECT_THROW(anomaly_scores(ms, 2), ArgumentError);
}

TEST(AnomalyTimeseries, StationaryIsFlatWithUndefinedEnds) {
  auto ms = series_of(stationary(9, 4, 8));
  auto ts = anomaly_timeseries(ms, 3);
  auto mean = ts.network_mean();
  ASSERT_EQ(mean.size(), 8u);
  EXPECT_TRUE(std::isnan(mean.front()));
  EXPECT_TRUE(std::isnan(mean.back()));
  for (std::size_t t = 1; t + 1 < mean.size(); ++t) EXPECT_NEAR(mean[t], mean[1], 1e-9);
  EXPECT_LT(mean[1], 1e-2);
  auto curve = ts.node_curve(0);
  EXPECT_TRUE(std::isnan(curve[0]));
  EXPECT_FALSE(std::isnan(curve[3]));
  EXPECT_THROW(anomaly_timeseries(ms, 1), ArgumentError);
}

TEST(AnomalyTimeseries, SpikeAtStructuralChange) {
  auto gs = stationary(12, 4, 10);
  // half the network swaps roles 0 and 1 from t = 6 onwards
  for (std::size_t t = 6; t < gs.size(); ++t)
    for (Eigen::Index i = 0; i < 6; ++i) gs[t].row(i).head(2).reverseInPlace();
  auto mean = anomaly_timeseries(series_of(gs), 4).network_mean();
  auto peak = std::max_element(mean.begin() + 1, mean.end() - 1) - mean.begin();
  EXPECT_EQ(peak, 5);  // x_5 predicts G_6 from G_5
}
