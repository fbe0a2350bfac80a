#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "dbmm/parallel.hpp"
#include "dbmm/roles.hpp"
#include "dbmm/transitions.hpp"
#include "dbmm/types.hpp"

namespace dbmm {

inline double frobenius_loss(const Matrix& truth, const Matrix& predicted) {
  require(truth.rows() == predicted.rows() && truth.cols() == predicted.cols(),
          "frobenius_loss: shape mismatch");
  return (truth - predicted).norm();
}

// Index of the largest entry; ties resolve to the lowest index.
template <typename Row>
Eigen::Index modal_role(const Row& row) {
  Eigen::Index best = 0;
  for (Eigen::Index j = 1; j < row.size(); ++j)
    if (row(j) > row(best)) best = j;
  return best;
}

struct AucOptions {
  // When false the last (inactive) column is dropped and nodes whose true
  // modal state is inactive are ignored.
  bool include_inactive = true;
};

struct AucResult {
  double value = 0.0;
  std::size_t classes_present = 0;
  std::size_t pairs = 0;
  std::size_t skipped_pairs = 0;  // pairs involving classes absent from the truth
};

namespace detail {

// P(score of a random positive > score of a random negative), ties count 1/2.
inline double mann_whitney(std::vector<double> pos, std::vector<double> neg) {
  std::sort(pos.begin(), pos.end());
  std::sort(neg.begin(), neg.end());
  double wins = 0.0;
  std::size_t lo = 0, hi = 0;
  for (double s : pos) {
    while (lo < neg.size() && neg[lo] < s) ++lo;
    hi = std::max(hi, lo);
    while (hi < neg.size() && neg[hi] == s) ++hi;
    wins += static_cast<double>(lo) + 0.5 * static_cast<double>(hi - lo);
  }
  return wins / (static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
}

}  // namespace detail

// Multi-class (Hand & Till) AUC: mean over present class pairs (i, j) of
// (A(i|j) + A(j|i)) / 2, where A(i|j) ranks class-i against class-j nodes by
// the predicted column-i score. True labels are modal roles of G_true.
inline AucResult total_auc_detail(const Matrix& truth, const Matrix& predicted, const AucOptions& opts = {}) {
  require(truth.rows() == predicted.rows() && truth.cols() == predicted.cols(),
          "total_auc: shape mismatch");
  const Eigen::Index classes = opts.include_inactive ? truth.cols() : truth.cols() - 1;
  require(classes >= 1, "total_auc: no classes");
  std::vector<std::vector<Eigen::Index>> members(static_cast<std::size_t>(classes));
  for (Eigen::Index i = 0; i < truth.rows(); ++i) {
    auto label = modal_role(truth.row(i));
    if (label >= classes) continue;
    members[static_cast<std::size_t>(label)].push_back(i);
  }
  std::vector<Eigen::Index> present;
  for (Eigen::Index c = 0; c < classes; ++c)
    if (!members[static_cast<std::size_t>(c)].empty()) present.push_back(c);
  if (present.size() < 2) throw UndefinedMetricError("total_auc: fewer than 2 classes present");

  auto scores = [&](Eigen::Index cls, Eigen::Index column) {
    std::vector<double> s;
    for (auto i : members[static_cast<std::size_t>(cls)]) s.push_back(predicted(i, column));
    return s;
  };
  AucResult res;
  res.classes_present = present.size();
  double total = 0.0;
  for (std::size_t a = 0; a < present.size(); ++a) {
    for (std::size_t b = a + 1; b < present.size(); ++b) {
      auto i = present[a], j = present[b];
      double a_ij = detail::mann_whitney(scores(i, i), scores(j, i));
      double a_ji = detail::mann_whitney(scores(j, j), scores(i, j));
      total += 0.5 * (a_ij + a_ji);
      ++res.pairs;
    }
  }
  auto all_pairs = static_cast<std::size_t>(classes * (classes - 1) / 2);
  res.skipped_pairs = all_pairs - res.pairs;
  res.value = total / static_cast<double>(res.pairs);
  return res;
}

inline double total_auc(const Matrix& truth, const Matrix& predicted, const AucOptions& opts = {}) {
  return total_auc_detail(truth, predicted, opts).value;
}

// Ĝ_{t+1} = G_t T with T the summary transition model ending at t.
inline Matrix predict_dbmm(const MembershipSeries& ms, std::size_t t, const KernelSpec& kernel,
                           const TransitionOptions& opts = {}) {
  require(ms.size() >= 2, "predict_dbmm: series shorter than 2");
  require(t >= 1 && t < ms.size(), "predict_dbmm: t must lie in [1, length-1]");
  auto T = summary_transition(ms, t, kernel, opts);
  return ms[t] * T.values;
}

inline Matrix predict_prev_role(const MembershipSeries& ms, std::size_t t) {
  require(t < ms.size(), "predict_prev_role: t beyond series");
  return ms[t];
}

// Every row is the column mean of G_t.
inline Matrix predict_avg_role(const Matrix& G) {
  require(G.rows() > 0, "predict_avg_role: empty membership matrix");
  RowVector mean = G.colwise().mean();
  return mean.replicate(G.rows(), 1);
}

inline Matrix predict_avg_role(const MembershipSeries& ms, std::size_t t) {
  require(t < ms.size(), "predict_avg_role: t beyond series");
  return predict_avg_role(ms[t]);
}

enum class Predictor { dbmm, prev_role, avg_role };

inline const char* to_string(Predictor p) {
  switch (p) {
    case Predictor::dbmm: return "dbmm";
    case Predictor::prev_role: return "prev_role";
    case Predictor::avg_role: return "avg_role";
  }
  return "?";
}

struct PredictionResult {
  std::size_t t = 0;  // prediction made at t for t+1
  Predictor predictor = Predictor::dbmm;
  Matrix predicted;
  double frobenius_loss = 0.0;
  double loss_per_sqrt_n = 0.0;
  double total_auc = std::numeric_limits<double>::quiet_NaN();  // NaN when undefined
};

struct EvaluationOptions {
  KernelSpec kernel;
  TransitionOptions transition;
  AucOptions auc;
  std::vector<Predictor> predictors = {Predictor::dbmm, Predictor::prev_role, Predictor::avg_role};
  bool keep_predictions = false;
};

inline Matrix predict(Predictor p, const MembershipSeries& ms, std::size_t t, const EvaluationOptions& opts) {
  switch (p) {
    case Predictor::dbmm: return predict_dbmm(ms, t, opts.kernel, opts.transition);
    case Predictor::prev_role: return predict_prev_role(ms, t);
    case Predictor::avg_role: return predict_avg_role(ms, t);
  }
  throw ArgumentError("unknown predictor");
}

// Runs every predictor at t = 1 .. length-2 (predicting t+1) with both metrics.
inline std::vector<PredictionResult> evaluate_series(const MembershipSeries& ms,
                                                     const EvaluationOptions& opts = {}) {
  if (ms.size() < 3) return {};
  const std::size_t steps = ms.size() - 2;
  const std::size_t P = opts.predictors.size();
  std::vector<PredictionResult> out(steps * P);
  parallel_for(steps, [&](std::size_t s) {
    const std::size_t t = s + 1;
    const Matrix& truth = ms[t + 1];
    for (std::size_t k = 0; k < P; ++k) {
      PredictionResult& r = out[s * P + k];
      r.t = t;
      r.predictor = opts.predictors[k];
      Matrix pred = predict(r.predictor, ms, t, opts);
      r.frobenius_loss = frobenius_loss(truth, pred);
      r.loss_per_sqrt_n = r.frobenius_loss / std::sqrt(static_cast<double>(std::max<Eigen::Index>(1, truth.rows())));
      try {
        r.total_auc = total_auc(truth, pred, opts.auc);
      } catch (const UndefinedMetricError&) {
        r.total_auc = std::numeric_limits<double>::quiet_NaN();
      }
      if (opts.keep_predictions) r.predicted = std::move(pred);
    }
  });
  return out;
}

}  // namespace dbmm
