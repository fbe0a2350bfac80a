#include <gtest/gtest.h>

#include <random>

#include "dbmm/prediction.hpp"
#include "oracles.hpp"

using namespace dbmm;

namespace {

MembershipSeries series_of(const std::vector<Matrix>& gs) {
  MembershipSeries ms;
  ms.r = static_cast<std::size_t>(gs.front().cols() - 1);
  for (std::size_t t = 0; t < gs.size(); ++t) {
    MembershipMatrix m;
    m.snapshot_index = t;
    m.values = gs[t];
    m.activity = Vector::Ones(gs[t].rows());
    m.active.assign(static_cast<std::size_t>(gs[t].rows()), true);
    ms.matrices.push_back(m);
  }
  return ms;
}

Matrix pure_rows(Eigen::Index n, Eigen::Index k) {
  Matrix G = Matrix::Zero(n, k);
  for (Eigen::Index i = 0; i < n; ++i) G(i, i % k) = 1.0;
  return G;
}

}  // namespace

TEST(FrobeniusLoss, Examples) {
  Matrix a = Matrix::Identity(2, 2);
  EXPECT_DOUBLE_EQ(frobenius_loss(a, a), 0.0);
  EXPECT_NEAR(frobenius_loss(a, Matrix::Zero(2, 2)), std::sqrt(2.0), 1e-15);
  EXPECT_THROW(frobenius_loss(a, Matrix::Zero(2, 3)), ArgumentError);
}

TEST(FrobeniusLoss, MatchesElementwiseOracleAndIsMetric) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 30; ++trial) {
    Matrix x = oracle::random_row_stochastic(7, 4, rng);
    Matrix y = oracle::random_row_stochastic(7, 4, rng);
    Matrix z = oracle::random_row_stochastic(7, 4, rng);
    EXPECT_NEAR(frobenius_loss(x, y), oracle::elementwise_frobenius(x, y), 1e-12);
    EXPECT_NEAR(frobenius_loss(x, y), frobenius_loss(y, x), 1e-15);
    EXPECT_LE(frobenius_loss(x, z), frobenius_loss(x, y) + frobenius_loss(y, z) + 1e-9);
  }
}

TEST(TotalAuc, PerfectPrediction) {
  Matrix truth = pure_rows(9, 3);
  EXPECT_DOUBLE_EQ(total_auc(truth, truth), 1.0);
}

TEST(TotalAuc, ConstantScoresGiveHalf) {
  Matrix truth = pure_rows(8, 4);
  EXPECT_DOUBLE_EQ(total_auc(truth, Matrix::Constant(8, 4, 0.25)), 0.5);
}

TEST(TotalAuc, TwoClassExample) {
  Matrix truth(4, 2), pred(4, 2);
  truth << 1, 0, 1, 0, 0, 1, 0, 1;
  pred << 0.9, 0.1, 0.8, 0.2, 0.7, 0.3, 0.6, 0.4;
  EXPECT_DOUBLE_EQ(total_auc(truth, pred), 1.0);
  // swap the middle pair: one class-1 node now scores below a class-2 node
  pred << 0.9, 0.1, 0.7, 0.3, 0.8, 0.2, 0.6, 0.4;
  EXPECT_DOUBLE_EQ(total_auc(truth, pred), 0.75);
}

TEST(TotalAuc, SingleClassIsUndefined) {
  Matrix truth = Matrix::Zero(3, 2);
  truth.col(0).setOnes();
  EXPECT_THROW(total_auc(truth, truth), UndefinedMetricError);
}

TEST(TotalAuc, MatchesBruteForce) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> nodes(2, 12), classes(2, 4);
  std::uniform_real_distribution<double> u(0, 1);
  int checked = 0;
  while (checked < 50) {
    auto n = nodes(rng), c = classes(rng);
    Matrix truth(n, c), pred(n, c);
    for (Eigen::Index i = 0; i < truth.size(); ++i) truth.data()[i] = u(rng);
    for (Eigen::Index i = 0; i < pred.size(); ++i) pred.data()[i] = std::round(u(rng) * 8) / 8;  // ties
    double expected;
    try {
      total_auc(truth, pred);
    } catch (const UndefinedMetricError&) {
      continue;
    }
    expected = oracle::brute_force_total_auc(truth, pred);
    EXPECT_NEAR(total_auc(truth, pred), expected, 1e-12);
    ++checked;
  }
}

TEST(TotalAuc, InvariantUnderMonotoneTransform) {
  std::mt19937_64 rng(4);
  Matrix truth = oracle::random_row_stochastic(10, 3, rng);
  Matrix pred = oracle::random_row_stochastic(10, 3, rng);
  Matrix warped = pred.array().pow(3.0).exp().matrix();
  EXPECT_DOUBLE_EQ(total_auc(truth, pred), total_auc(truth, warped));
}

TEST(TotalAuc, AbsentClassPairsAreSkipped) {
  Matrix truth = Matrix::Zero(4, 3), pred = Matrix::Zero(4, 3);
  truth(0, 0) = truth(1, 0) = truth(2, 1) = truth(3, 1) = 1;
  pred = truth;
  auto res = total_auc_detail(truth, pred);
  EXPECT_EQ(res.classes_present, 2u);
  EXPECT_EQ(res.pairs, 1u);
  EXPECT_EQ(res.skipped_pairs, 2u);
}

TEST(TotalAuc, InactiveColumnOption) {
  Matrix truth = pure_rows(6, 3), pred = pure_rows(6, 3);
  AucOptions o;
  o.include_inactive = false;
  auto res = total_auc_detail(truth, pred, o);
  EXPECT_EQ(res.classes_present, 2u);
  EXPECT_DOUBLE_EQ(res.value, 1.0);
}

TEST(ModalRole, LowestIndexWinsTies) {
  RowVector r(4);
  r << 0.3, 0.3, 0.1, 0.3;
  EXPECT_EQ(modal_role(r), 0);
}

TEST(Predictors, PrevRoleIsBitIdentical) {
  std::mt19937_64 rng(5);
  auto ms = series_of({oracle::random_row_stochastic(5, 3, rng), oracle::random_row_stochastic(5, 3, rng)});
  EXPECT_EQ(predict_prev_role(ms, 1), ms[1]);
}

TEST(Predictors, AvgRoleRows) {
  Matrix G(2, 2);
  G << 1, 0, 0, 1;
  Matrix p = predict_avg_role(G);
  EXPECT_DOUBLE_EQ(p(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(p(1, 1), 0.5);
  std::mt19937_64 rng(6);
  Matrix h = predict_avg_role(oracle::random_row_stochastic(9, 4, rng));
  EXPECT_EQ((h.rowwise() - h.row(0)).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_THROW(predict_avg_role(Matrix(0, 3)), ArgumentError);
}

TEST(Predictors, AvgRoleEqualsPrevOnIdenticalRows) {
  Matrix G = Matrix::Zero(4, 3);
  G.col(1).setConstant(0.6);
  G.col(2).setConstant(0.4);
  EXPECT_TRUE(predict_avg_role(G).isApprox(G));
}

TEST(Predictors, AvgRoleWorseThanPrevOnHeterogeneousStationary) {
  Matrix G(4, 3);
  G << 1, 0, 0, 0, 1, 0, 0.5, 0.5, 0, 0, 0, 1;
  auto ms = series_of({G, G, G});
  double avg = frobenius_loss(ms[2], predict_avg_role(ms, 1));
  double prev = frobenius_loss(ms[2], predict_prev_role(ms, 1));
  EXPECT_EQ(prev, 0.0);
  EXPECT_GT(avg, prev);
}

TEST(Predictors, AlternatingSeriesPrevLoss) {
  Matrix a = pure_rows(4, 3), b = a;
  b.col(0).swap(b.col(1));
  auto ms = series_of({a, b, a});
  EXPECT_DOUBLE_EQ(frobenius_loss(ms[2], predict_prev_role(ms, 1)), (a - b).norm());
  EXPECT_GT((a - b).norm(), 0.0);
}

TEST(Predictors, DbmmStationaryIsExact) {
  auto ms = series_of(std::vector<Matrix>(4, pure_rows(9, 4)));
  EXPECT_LT(frobenius_loss(ms[3], predict_dbmm(ms, 2, {})), 1e-4);
}

TEST(Predictors, DbmmArgumentErrors) {
  auto one = series_of({pure_rows(3, 2)});
  EXPECT_THROW(predict_dbmm(one, 0, {}), ArgumentError);
  auto two = series_of({pure_rows(3, 2), pure_rows(3, 2)});
  EXPECT_THROW(predict_dbmm(two, 0, {}), ArgumentError);
}

TEST(EvaluateSeries, StationaryLossesVanish) {
  auto ms = series_of(std::vector<Matrix>(3, pure_rows(6, 3)));
  auto rows = evaluate_series(ms);
  ASSERT_EQ(rows.size(), 3u);
  for (const auto& r : rows) {
    EXPECT_EQ(r.t, 1u);
    if (r.predictor != Predictor::avg_role) {
      EXPECT_LT(r.frobenius_loss, 1e-4);
    }
    EXPECT_NEAR(r.loss_per_sqrt_n, r.frobenius_loss / std::sqrt(6.0), 1e-12);
  }
}

TEST(EvaluateSeries, StoredLossMatchesPrediction) {
  auto ms = oracle::planted_series(oracle::persistent_chain(), 50, 6, 0.2, 8);
  EvaluationOptions o;
  o.keep_predictions = true;
  for (const auto& r : evaluate_series(ms, o)) {
    EXPECT_EQ(r.frobenius_loss, frobenius_loss(ms[r.t + 1], r.predicted));
  }
}

TEST(EvaluateSeries, PlantedChainBeatsAvgRole) {
  auto ms = oracle::planted_series(oracle::persistent_chain(), 300, 30, 0.2, 9);
  double dbmm = 0, avg = 0;
  int wins = 0, steps = 0;
  for (const auto& r : evaluate_series(ms)) {
    if (r.predictor == Predictor::dbmm) dbmm += r.frobenius_loss;
    if (r.predictor == Predictor::avg_role) avg += r.frobenius_loss;
  }
  for (std::size_t t = 1; t + 1 < ms.size(); ++t) {
    ++steps;
    wins += frobenius_loss(ms[t + 1], predict_dbmm(ms, t, {})) < frobenius_loss(ms[t + 1], predict_avg_role(ms, t));
  }
  EXPECT_LT(dbmm, avg);
  EXPECT_GE(wins, static_cast<int>(0.8 * steps));
}
