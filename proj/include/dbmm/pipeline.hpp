#pragma once

#include <chrono>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dbmm/analysis.hpp"
#include "dbmm/anomaly.hpp"
#include "dbmm/config.hpp"
#include "dbmm/features.hpp"
#include "dbmm/io.hpp"
#include "dbmm/prediction.hpp"
#include "dbmm/roles.hpp"
#include "dbmm/synthetic.hpp"
#include "dbmm/temporal_graph.hpp"
#include "dbmm/transitions.hpp"

namespace dbmm {

// Failure inside a pipeline stage that is not caused by bad input.
class StageError : public std::runtime_error {
 public:
  StageError(const std::string& stage, const std::string& what)
      : std::runtime_error(stage + ": " + what), stage_(stage) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

struct StageTiming {
  std::string stage;
  double seconds = 0.0;
};

struct PipelineState {
  EdgeList edges;  // kept for generated inputs only
  SnapshotSeries series;
  std::optional<PatternLabels> labels;
  std::vector<NodeId> injected;
  std::optional<std::size_t> injection_time;

  FeatureMatrixSeries features;
  FeatureReport feature_report;
  std::optional<RoleModel> roles;
  std::optional<TransitionMatrix> stacked;
  std::optional<TransitionMatrix> summary;
  std::vector<PredictionResult> predictions;
  std::optional<AnomalyScores> scores;
  std::optional<AnomalyTimeSeries> timeseries;
  std::optional<RoleExplanation> explanation;
  std::optional<TransitionClustering> clustering;

  std::vector<StageTiming> timings;
  std::vector<std::string> warnings;
};

class Pipeline {
 public:
  explicit Pipeline(RunConfig cfg) : cfg_(std::move(cfg)), hash_(config_hash(cfg_)) {
    worker_limit() = cfg_.workers;
  }

  const RunConfig& config() const noexcept { return cfg_; }
  const std::string& hash() const noexcept { return hash_; }
  const PipelineState& state() const noexcept { return st_; }
  PipelineState& state() noexcept { return st_; }

  void load() {
    stage("ingest", [&] {
      if (cfg_.input_path.empty()) {
        auto g = generate(cfg_.resolved_generator());
        st_.edges = std::move(g.edges);
        st_.series = std::move(g.series);
        st_.labels = std::move(g.labels);
        st_.injected = std::move(g.injected);
        st_.injection_time = g.injection_time;
        return;
      }
      if (!std::filesystem::exists(cfg_.input_path))
        throw ArgumentError("input file not found: " + cfg_.input_path);
      ParseOptions po;
      po.static_graph = cfg_.static_graph;
      po.weight_column = cfg_.weight_column;
      auto el = parse_edge_list(read_file(cfg_.input_path), po);
      SnapshotOptions so;
      so.interval_length = cfg_.interval_length;
      so.symmetrize = cfg_.symmetrize;
      st_.series = build_snapshots(std::move(el), so);
    });
  }

  void features() {
    if (st_.series.size() == 0) load();
    stage("features", [&] { st_.features = discover_features(st_.series, cfg_.features, &st_.feature_report); });
    if (st_.feature_report.generation_cap_hit)
      st_.warnings.push_back("features: generation cap of " + std::to_string(cfg_.features.max_generations) +
                             " reached");
  }

  void roles() {
    if (st_.features.matrices.empty()) features();
    stage("roles", [&] { st_.roles = build_membership_series(st_.series, st_.features, cfg_.roles); });
    if (st_.roles->report.dropped_roles > 0)
      st_.warnings.push_back("roles: dropped " + std::to_string(st_.roles->report.dropped_roles) + " empty roles");
  }

  const MembershipSeries& memberships() {
    if (!st_.roles) roles();
    return st_.roles->memberships;
  }

  void transitions() {
    const auto& ms = memberships();
    if (ms.size() < 2) {
      st_.warnings.push_back("transitions: fewer than 2 snapshots, no transition model");
      return;
    }
    stage("transitions", [&] {
      const std::size_t t = ms.size() - 1;
      st_.stacked = stacked_transition(ms, t, cfg_.kernel.window, cfg_.transition);
      st_.summary = summary_transition(ms, t, cfg_.kernel, cfg_.transition);
    });
  }

  void predict() {
    const auto& ms = memberships();
    if (ms.size() < 3) {
      st_.warnings.push_back("predict: fewer than 3 snapshots, nothing to evaluate");
      return;
    }
    stage("predict", [&] {
      EvaluationOptions eo;
      eo.kernel = cfg_.kernel;
      eo.transition = cfg_.transition;
      st_.predictions = evaluate_series(ms, eo);
    });
  }

  TransitionOptions node_options() const {
    TransitionOptions o = cfg_.transition;
    o.ridge = cfg_.node_ridge;
    return o;
  }

  AnomalyOptions anomaly_options() const {
    AnomalyOptions ao;
    ao.window = cfg_.anomaly_window;
    ao.transition = node_options();
    ao.target = cfg_.anomaly_target;
    return ao;
  }

  void anomalies() {
    const auto& ms = memberships();
    if (ms.size() < 3) {
      st_.warnings.push_back("anomalies: fewer than 3 snapshots, no node models");
      return;
    }
    stage("anomalies", [&] {
      auto ao = anomaly_options();
      st_.scores = anomaly_scores(ms, ms.size() - 2, ao);
      st_.timeseries = anomaly_timeseries(ms, cfg_.window_a, ao);
    });
  }

  void analyze() {
    const auto& ms = memberships();
    stage("analysis", [&] {
      auto which = cfg_.measures;
      std::size_t largest = 0;
      for (const auto& s : st_.series.snapshots) largest = std::max(largest, s.num_active());
      if (largest > cfg_.betweenness_cap) {
        auto it = std::find(which.begin(), which.end(), Measure::betweenness);
        if (it != which.end()) {
          which.erase(it);
          st_.warnings.push_back("analysis: betweenness skipped, snapshot with " + std::to_string(largest) +
                                 " nodes exceeds the cap");
        }
      }
      if (!which.empty()) {
        MeasureOptions mo;
        mo.betweenness_node_cap = cfg_.betweenness_cap;
        std::vector<MeasureMatrix> measures(st_.series.size());
        parallel_for(st_.series.size(), [&](std::size_t t) {
          if (st_.series[t].num_active() == 0) {
            measures[t].columns = which;
            measures[t].values = Matrix(0, static_cast<Eigen::Index>(which.size()));
            return;
          }
          measures[t] = node_measures(st_.series[t], which, mo);
        });
        st_.explanation = explain_roles(ms, st_.series, measures);
      }
      if (ms.size() >= 2) {
        std::vector<std::optional<TransitionMatrix>> fitted(ms.num_nodes());
        parallel_for(ms.num_nodes(), [&](std::size_t i) {
          try {
            fitted[i] = node_transition_model(ms, static_cast<NodeId>(i), 0, ms.size() - 1, node_options());
          } catch (const UndefinedModelError&) {
          }
        });
        std::vector<TransitionMatrix> models;
        for (auto& m : fitted)
          if (m) models.push_back(std::move(*m));
        if (models.size() >= static_cast<std::size_t>(std::max(2, cfg_.clusters))) {
          ClusterOptions co;
          co.k = cfg_.clusters;
          co.dims = cfg_.embedding_dims;
          co.kmeans = cfg_.kmeans;
          st_.clustering = cluster_transitions(models, co, &ms);
        } else {
          st_.warnings.push_back("analysis: too few node models for clustering");
        }
      }
    });
  }

  void run_all() {
    load();
    features();
    roles();
    transitions();
    predict();
    anomalies();
    if (cfg_.analysis) analyze();
  }

  double total_seconds() const {
    double s = 0;
    for (const auto& t : st_.timings) s += t.seconds;
    return s;
  }

  // ---- outputs ----

  std::filesystem::path out(const std::string& rel) const { return std::filesystem::path(cfg_.output_dir) / rel; }

  void write_config() const {
    auto os = open_output(out("config.ini"));
    os << "# config_hash=" << hash_ << '\n' << to_ini(cfg_);
  }

  void write_generated() const {
    {
      auto os = open_output(out("edges.txt"));
      write_edge_list(os, st_.edges, hash_);
    }
    if (st_.labels) {
      auto os = open_output(out("labels.csv"));
      os << "# config_hash=" << hash_ << '\n';
      write_labels_csv(os, *st_.labels);
    }
    nlohmann::json j = ingestion_summary(st_.series);
    j["injected"] = st_.injected;
    if (st_.injection_time) j["injection_time"] = *st_.injection_time;
    write_json(out("generator.json"), hash_, j);
  }

  void write_ingest() const { write_json(out("ingest.json"), hash_, ingestion_summary(st_.series)); }

  std::vector<std::string> node_labels(const Snapshot& snap) const {
    std::vector<std::string> names;
    for (auto v : snap.active_nodes()) names.push_back(st_.series.universe.label(v));
    return names;
  }

  void write_features() const {
    CsvWriter defs(out("features/definitions.csv"), hash_, {"id", "name", "generation"});
    std::vector<std::string> names;
    for (const auto& d : st_.features.definitions) {
      defs.row({std::to_string(d.id), d.name, std::to_string(d.generation)});
      names.push_back(d.name);
    }
    for (std::size_t t = 0; t < st_.features.matrices.size(); ++t)
      write_matrix_csv(out("features/V_" + std::to_string(t) + ".csv"), hash_, names,
                       st_.features.matrices[t].values, "node", node_labels(st_.series[t]));
    nlohmann::json j = {{"num_features", st_.features.num_features()},
                        {"generations", st_.feature_report.generations},
                        {"generation_cap_hit", st_.feature_report.generation_cap_hit},
                        {"candidates_considered", st_.feature_report.candidates_considered}};
    write_json(out("features/summary.json"), hash_, j);
  }

  std::vector<std::string> state_names() const {
    std::vector<std::string> names;
    for (std::size_t k = 0; k < st_.roles->memberships.r; ++k) names.push_back("role_" + std::to_string(k));
    names.emplace_back("inactive");
    return names;
  }

  void write_roles() const {
    const auto& model = *st_.roles;
    std::vector<std::string> feature_names;
    for (const auto& d : st_.features.definitions) feature_names.push_back(d.name);
    std::vector<std::string> role_names(model.memberships.r);
    for (std::size_t k = 0; k < role_names.size(); ++k) role_names[k] = "role_" + std::to_string(k);
    write_matrix_csv(out("roles/F.csv"), hash_, feature_names, model.basis.values, "role", role_names);
    for (std::size_t t = 0; t < model.memberships.size(); ++t)
      write_matrix_csv(out("roles/G_" + std::to_string(t) + ".csv"), hash_, state_names(), model.memberships[t],
                       "node", st_.series.universe.labels());
    CsvWriter curve(out("roles/mdl_curve.csv"), hash_, {"rank", "model_bits", "error_bits", "total_bits", "objective"});
    for (const auto& p : model.report.selection.curve)
      curve.row({std::to_string(p.rank), format_number(p.model_bits), format_number(p.error_bits),
                 format_number(p.total_bits), format_number(p.objective)});
    nlohmann::json j = {{"rank", model.memberships.r},
                        {"selected_by_mdl", !model.report.selection.curve.empty()},
                        {"objective", model.report.objective},
                        {"dropped_roles", model.report.dropped_roles},
                        {"uniform_rows", model.report.uniform_rows}};
    write_json(out("roles/summary.json"), hash_, j);
  }

  void write_transitions() const {
    if (!st_.stacked) return;
    const auto names = state_names();
    auto heatmap = [&](const Matrix& m) {
      nlohmann::json rows = nlohmann::json::array();
      for (Eigen::Index i = 0; i < m.rows(); ++i) {
        std::vector<double> r(static_cast<std::size_t>(m.cols()));
        for (Eigen::Index j = 0; j < m.cols(); ++j) r[static_cast<std::size_t>(j)] = m(i, j);
        rows.push_back(r);
      }
      return nlohmann::json{{"rows", names}, {"cols", names}, {"values", rows}};
    };
    for (const auto& [name, model] : {std::pair{"stacked", &*st_.stacked}, std::pair{"summary", &*st_.summary}}) {
      const std::string base = std::string("transitions/") + name;
      const Matrix shown = row_normalized(model->values);
      write_matrix_csv(out(base + ".csv"), hash_, names, shown, "from", names);
      write_matrix_csv(out(base + "_raw.csv"), hash_, names, model->values, "from", names);
      write_json(out(base + ".json"), hash_, heatmap(shown));
    }
  }

  void write_predictions() const {
    CsvWriter w(out("predictions/metrics.csv"), hash_,
                {"t", "predictor", "frobenius_loss", "loss_per_sqrt_n", "total_auc"});
    for (const auto& r : st_.predictions)
      w.row({std::to_string(r.t), to_string(r.predictor), format_number(r.frobenius_loss),
             format_number(r.loss_per_sqrt_n), format_number(r.total_auc)});
  }

  void write_anomalies() const {
    if (!st_.scores) return;
    const auto& u = st_.series.universe;
    {
      CsvWriter w(out("anomalies/scores.csv"), hash_, {"node", "t", "score", "defined"});
      for (std::size_t i = 0; i < st_.scores->size(); ++i)
        w.row({u.label(static_cast<NodeId>(i)), std::to_string(st_.scores->t), format_number(st_.scores->scores[i]),
               st_.scores->defined[i] ? "1" : "0"});
    }
    nlohmann::json top = nlohmann::json::array();
    for (auto v : st_.scores->top_k(cfg_.top_k)) top.push_back({{"node", u.label(v)}, {"score", st_.scores->scores[v]}});
    write_json(out("anomalies/top_k.json"), hash_, {{"t", st_.scores->t}, {"top_k", top}});
    CsvWriter ts(out("anomalies/timeseries.csv"), hash_, {"node", "t", "score", "defined"});
    for (const auto& step : st_.timeseries->steps)
      for (std::size_t i = 0; i < step.size(); ++i)
        ts.row({u.label(static_cast<NodeId>(i)), std::to_string(step.t), format_number(step.scores[i]),
                step.defined[i] ? "1" : "0"});
    CsvWriter nm(out("anomalies/network_mean.csv"), hash_, {"t", "mean_score"});
    auto mean = st_.timeseries->network_mean();
    for (std::size_t t = 0; t < mean.size(); ++t) nm.row({std::to_string(t), format_number(mean[t])});
  }

  void write_analysis() const {
    if (st_.explanation) {
      const auto& e = *st_.explanation;
      std::vector<std::string> header = {"role", "label", "unexplained"};
      for (auto m : e.columns) header.emplace_back(to_string(m));
      CsvWriter w(out("analysis/role_explanation.csv"), hash_, header);
      for (Eigen::Index i = 0; i < e.values.rows(); ++i) {
        std::vector<std::string> row = {std::to_string(i), e.labels[static_cast<std::size_t>(i)],
                                        e.unexplained[static_cast<std::size_t>(i)] ? "1" : "0"};
        for (Eigen::Index j = 0; j < e.values.cols(); ++j) row.push_back(format_number(e.values(i, j)));
        w.row(row);
      }
    }
    if (st_.clustering) {
      const auto& c = *st_.clustering;
      std::vector<std::string> header = {"node", "cluster"};
      const char* axes[] = {"x", "y", "z"};
      for (Eigen::Index d = 0; d < c.embedding.cols(); ++d)
        header.push_back(d < 3 ? axes[d] : "dim_" + std::to_string(d));
      CsvWriter w(out("analysis/clusters.csv"), hash_, header);
      for (std::size_t i = 0; i < c.nodes.size(); ++i) {
        std::vector<std::string> row = {st_.series.universe.label(c.nodes[i]), std::to_string(c.labels[i])};
        for (Eigen::Index d = 0; d < c.embedding.cols(); ++d)
          row.push_back(format_number(c.embedding(static_cast<Eigen::Index>(i), d)));
        w.row(row);
      }
      CsvWriter p(out("analysis/profiles.csv"), hash_, {"cluster", "t", "role", "mean_membership"});
      auto names = state_names();
      for (std::size_t k = 0; k < c.profiles.size(); ++k)
        for (Eigen::Index t = 0; t < c.profiles[k].rows(); ++t)
          for (Eigen::Index j = 0; j < c.profiles[k].cols(); ++j)
            p.row({std::to_string(k), std::to_string(t), names[static_cast<std::size_t>(j)],
                   format_number(c.profiles[k](t, j))});
    }
  }

  nlohmann::json summary() const {
    std::size_t edges = 0;
    for (const auto& s : st_.series.snapshots) edges += s.raw_edge_count();
    nlohmann::json timings = nlohmann::json::object();
    for (const auto& t : st_.timings) timings[t.stage] = t.seconds;
    nlohmann::json j = {{"nodes", st_.series.num_nodes()},
                        {"edges", edges},
                        {"snapshots", st_.series.size()},
                        {"features", st_.features.num_features()},
                        {"roles", st_.roles ? st_.roles->memberships.r : 0},
                        {"wall_seconds", total_seconds()},
                        {"stage_seconds", timings},
                        {"warnings", st_.warnings}};
    return j;
  }

  void write_all() const {
    write_config();
    if (!st_.edges.edges.empty()) write_generated();
    write_ingest();
    if (!st_.features.matrices.empty()) write_features();
    if (st_.roles) write_roles();
    write_transitions();
    if (!st_.predictions.empty()) write_predictions();
    write_anomalies();
    write_analysis();
    write_json(out("summary.json"), hash_, summary());
  }

 private:
  template <typename Fn>
  void stage(const std::string& name, Fn&& fn) {
    auto start = std::chrono::steady_clock::now();
    try {
      fn();
    } catch (const ArgumentError& e) {
      throw ArgumentError(name + ": " + e.what());
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception& e) {
      throw StageError(name, e.what());
    }
    st_.timings.push_back({name, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()});
  }

  RunConfig cfg_;
  std::string hash_;
  PipelineState st_;
};

struct BenchRow {
  std::size_t scale = 0;
  std::size_t nodes = 0;
  std::size_t edges = 0;  // summed over snapshots
  std::vector<StageTiming> timings;
  double total = 0.0;
};

// Runs the full pipeline on generated graphs whose pattern counts are
// multiplied by each scale factor.
inline std::vector<BenchRow> run_bench(const RunConfig& base, const std::vector<std::size_t>& scales) {
  std::vector<BenchRow> rows;
  for (auto s : scales) {
    require(s >= 1, "bench: scale factors must be positive");
    RunConfig cfg = base;
    cfg.input_path.clear();
    cfg.generator.n_stars = base.generator.n_stars * s;
    cfg.generator.n_cliques = base.generator.n_cliques * s;
    cfg.generator.n_bridges = base.generator.n_bridges * s;
    Pipeline p(cfg);
    p.run_all();
    BenchRow row;
    row.scale = s;
    row.nodes = p.state().series.num_nodes();
    for (const auto& snap : p.state().series.snapshots) row.edges += snap.raw_edge_count();
    row.timings = p.state().timings;
    row.total = p.total_seconds();
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace dbmm
