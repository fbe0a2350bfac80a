#pragma once

#include <numeric>
#include <vector>

#include "dbmm/features.hpp"
#include "dbmm/nmf.hpp"
#include "dbmm/parallel.hpp"
#include "dbmm/temporal_graph.hpp"
#include "dbmm/types.hpp"

namespace dbmm {

// Global role x feature basis F shared by every snapshot.
struct RoleBasis {
  Matrix values;  // r x f
  std::size_t rank() const noexcept { return static_cast<std::size_t>(values.rows()); }
};

// G_t over the whole universe: columns 0..r-1 are roles, column r is the
// inactive state. Inactive nodes have the row (0,...,0,1).
struct MembershipMatrix {
  std::size_t snapshot_index = 0;
  Matrix values;    // n x (r+1)
  Vector activity;  // row sums before normalization (0 for inactive nodes)
  std::vector<bool> active;
};

struct MembershipSeries {
  std::vector<MembershipMatrix> matrices;
  std::size_t r = 0;

  std::size_t size() const noexcept { return matrices.size(); }
  std::size_t num_nodes() const noexcept {
    return matrices.empty() ? 0 : static_cast<std::size_t>(matrices.front().values.rows());
  }
  std::size_t states() const noexcept { return r + 1; }
  const Matrix& operator[](std::size_t t) const { return matrices.at(t).values; }
};

struct RoleOptions {
  int rank = 0;  // 0 = choose by MDL over [min_rank, max_rank]
  int min_rank = 1;
  int max_rank = 8;
  RankOptions mdl;
  NmfOptions nmf;
  NnlsOptions nnls;
  bool normalize_rows = true;
};

struct RoleReport {
  RankSelection selection;
  double objective = 0.0;
  std::size_t dropped_roles = 0;    // all-zero rows removed from F
  std::size_t uniform_rows = 0;     // active rows with zero membership mass
};

struct RoleModel {
  RoleBasis basis;
  MembershipSeries memberships;
  RoleReport report;
};

// Embeds active-node memberships into the global universe with the inactive
// column appended. Rows are normalized to sum to 1 when requested.
inline MembershipMatrix embed_memberships(const Matrix& active_rows, const Snapshot& snap,
                                          std::size_t num_nodes, bool normalize,
                                          std::size_t* uniform_rows = nullptr) {
  const auto r = active_rows.cols();
  MembershipMatrix m;
  m.snapshot_index = snap.index();
  m.values = Matrix::Zero(static_cast<Eigen::Index>(num_nodes), r + 1);
  m.activity = Vector::Zero(static_cast<Eigen::Index>(num_nodes));
  m.active.assign(num_nodes, false);
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(num_nodes); ++i) m.values(i, r) = 1.0;
  const auto& nodes = snap.active_nodes();
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    auto i = static_cast<Eigen::Index>(nodes[k]);
    RowVector g = active_rows.row(static_cast<Eigen::Index>(k));
    double mass = g.sum();
    m.activity(i) = mass;
    m.active[nodes[k]] = true;
    m.values(i, r) = 0.0;
    if (!normalize) {
      m.values.row(i).head(r) = g;
    } else if (mass > 0) {
      m.values.row(i).head(r) = g / mass;
    } else {
      m.values.row(i).head(r).setConstant(1.0 / static_cast<double>(r));
      if (uniform_rows) ++*uniform_rows;
    }
  }
  return m;
}

// Learns F once from all stacked V_t, then fits and embeds per-snapshot memberships.
inline RoleModel build_membership_series(const SnapshotSeries& series,
                                         const FeatureMatrixSeries& features,
                                         const RoleOptions& opts = {}) {
  require(!features.matrices.empty(), "build_membership_series: no feature matrices");
  require(features.matrices.size() == series.size(),
          "build_membership_series: feature series does not match snapshots");
  for (const auto& m : features.matrices) {
    require(static_cast<std::size_t>(m.values.cols()) == features.num_features(),
            "build_membership_series: inconsistent feature columns");
  }
  RoleModel model;
  Matrix stacked = stack_features(features);
  const auto limit = std::min(stacked.rows(), stacked.cols());
  require(limit >= 2, "build_membership_series: need at least 2 rows and 2 features");

  int rank = opts.rank;
  if (rank <= 0) {
    std::vector<int> ranks;
    for (int r = std::max(1, opts.min_rank); r <= opts.max_rank && r < limit; ++r) ranks.push_back(r);
    RankOptions mdl = opts.mdl;
    mdl.nmf = opts.nmf;
    model.report.selection = select_rank(stacked, ranks, mdl);
    rank = model.report.selection.rank;
  }
  NmfResult fit = nmf_factorize(stacked, rank, opts.nmf);
  model.report.objective = fit.objective;

  std::vector<Eigen::Index> used;
  for (Eigen::Index k = 0; k < fit.F.rows(); ++k) {
    if (fit.F.row(k).maxCoeff() > 0.0) used.push_back(k);
  }
  model.report.dropped_roles = static_cast<std::size_t>(fit.F.rows()) - used.size();
  require(!used.empty(), "build_membership_series: every role is empty");
  model.basis.values.resize(static_cast<Eigen::Index>(used.size()), fit.F.cols());
  for (std::size_t k = 0; k < used.size(); ++k)
    model.basis.values.row(static_cast<Eigen::Index>(k)) = fit.F.row(used[k]);

  const std::size_t T = series.size();
  auto& ms = model.memberships;
  ms.r = model.basis.rank();
  ms.matrices.resize(T);
  std::vector<std::size_t> uniform(T, 0);
  parallel_for(T, [&](std::size_t t) {
    const auto& V = features.matrices[t].values;
    Matrix G = V.rows() > 0 ? nnls_fit(V, model.basis.values, opts.nnls)
                            : Matrix(0, static_cast<Eigen::Index>(ms.r));
    ms.matrices[t] = embed_memberships(G, series[t], series.num_nodes(), opts.normalize_rows, &uniform[t]);
  });
  model.report.uniform_rows = std::accumulate(uniform.begin(), uniform.end(), std::size_t{0});
  return model;
}

// Active-node rows of G_t (role columns only), in snapshot active order.
inline Matrix active_memberships(const MembershipSeries& ms, const Snapshot& snap) {
  const auto r = static_cast<Eigen::Index>(ms.r);
  const auto& nodes = snap.active_nodes();
  Matrix out(static_cast<Eigen::Index>(nodes.size()), r);
  const Matrix& G = ms[snap.index()];
  for (std::size_t k = 0; k < nodes.size(); ++k)
    out.row(static_cast<Eigen::Index>(k)) = G.row(static_cast<Eigen::Index>(nodes[k])).head(r);
  return out;
}

}  // namespace dbmm
