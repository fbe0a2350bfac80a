#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dbmm/dbmm.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string input;
  std::string out;
  double interval = 0;
  bool symmetrize = false;
  long long workers = -1;
};

void add_common(CLI::App* cmd, CommonArgs& a) {
  cmd->add_option("-c,--config", a.config_path, "INI config file");
  cmd->add_option("-s,--set", a.overrides, "Override a config value, e.g. roles.rank=4")->take_all();
  cmd->add_option("-i,--input", a.input, "Edge list (source target [weight] timestamp); omit to generate");
  cmd->add_option("-o,--out", a.out, "Output directory");
  cmd->add_option("--interval", a.interval, "Snapshot interval length");
  cmd->add_flag("--symmetrize", a.symmetrize, "Treat edges as undirected");
  cmd->add_option("-j,--workers", a.workers, "Worker thread cap (0 = all cores)");
}

dbmm::RunConfig resolve(const CommonArgs& a) {
  dbmm::RunConfig cfg = a.config_path.empty() ? dbmm::RunConfig{} : dbmm::load_config(a.config_path);
  if (!a.input.empty()) cfg.input_path = a.input;
  if (!a.out.empty()) cfg.output_dir = a.out;
  if (a.interval > 0) cfg.interval_length = a.interval;
  if (a.symmetrize) cfg.symmetrize = true;
  if (a.workers >= 0) cfg.workers = static_cast<std::size_t>(a.workers);
  for (const auto& o : a.overrides) dbmm::apply_override(cfg, o);
  if (cfg.output_dir.empty()) cfg.output_dir = "dbmm_out";
  return cfg;
}

void print_summary(const dbmm::Pipeline& p) {
  auto s = p.summary();
  std::printf("nodes=%zu edges=%zu snapshots=%zu f=%zu r=%zu wall=%.3fs config=%s\n", s["nodes"].get<std::size_t>(),
              s["edges"].get<std::size_t>(), s["snapshots"].get<std::size_t>(), s["features"].get<std::size_t>(),
              s["roles"].get<std::size_t>(), s["wall_seconds"].get<double>(), p.hash().c_str());
  for (const auto& w : p.state().warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
}

std::vector<std::size_t> parse_scales(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    out.push_back(static_cast<std::size_t>(dbmm::detail::parse_size(item, "--scales")));
  }
  if (out.empty()) throw dbmm::ArgumentError("--scales: empty list");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dynamic behavioral mixed-membership role modelling for temporal graphs"};
  app.require_subcommand(1);

  const std::vector<std::string> stages = {"generate", "ingest",    "features", "roles",   "transitions",
                                           "predict",  "anomalies", "analyze",  "pipeline"};
  const std::vector<std::string> help = {
      "Write a synthetic star/clique/bridge graph and its pattern labels",
      "Parse and window an edge list; report counts",
      "Discover recursive features and write V_t",
      "Learn roles (F, G_t, MDL curve)",
      "Fit stacked and summary transition models",
      "Evaluate DBMM, PrevRole and AvgRole predictions",
      "Score node anomalies and the anomaly time series",
      "Explain roles with node measures and cluster node transition models",
      "Run every stage and write all outputs"};
  CommonArgs args;
  std::vector<CLI::App*> cmds;
  for (std::size_t k = 0; k < stages.size(); ++k) {
    auto* cmd = app.add_subcommand(stages[k], help[k]);
    add_common(cmd, args);
    cmds.push_back(cmd);
  }
  auto* bench = app.add_subcommand("bench", "Time the full pipeline on growing synthetic graphs");
  add_common(bench, args);
  std::string scales = "1,2,4,8";
  bench->add_option("--scales", scales, "Comma-separated multipliers of the generator's pattern counts");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    dbmm::RunConfig cfg = resolve(args);
    if (bench->parsed()) {
      auto rows = dbmm::run_bench(cfg, parse_scales(scales));
      std::printf("scale,nodes,edges");
      for (const auto& t : rows.front().timings) std::printf(",%s", t.stage.c_str());
      std::printf(",total\n");
      for (const auto& r : rows) {
        std::printf("%zu,%zu,%zu", r.scale, r.nodes, r.edges);
        for (const auto& t : r.timings) std::printf(",%.4f", t.seconds);
        std::printf(",%.4f\n", r.total);
      }
      return 0;
    }

    dbmm::Pipeline p(cfg);
    std::string which;
    for (std::size_t k = 0; k < cmds.size(); ++k)
      if (cmds[k]->parsed()) which = stages[k];

    if (which == "generate") {
      if (!cfg.input_path.empty()) throw dbmm::ArgumentError("generate does not take --input");
      p.load();
      p.write_config();
      p.write_generated();
      std::printf("wrote %zu edges over %zu snapshots to %s\n", p.state().edges.edges.size(),
                  p.state().series.size(), cfg.output_dir.c_str());
      return 0;
    }
    p.load();
    p.write_config();
    p.write_ingest();
    if (which == "ingest") {
      std::cout << dbmm::ingestion_summary(p.state().series).dump() << '\n';
      return 0;
    }
    if (which == "pipeline") {
      p.run_all();
      p.write_all();
      print_summary(p);
      return 0;
    }
    p.features();
    p.write_features();
    if (which != "features") {
      p.roles();
      p.write_roles();
      if (which == "transitions") {
        p.transitions();
        p.write_transitions();
      } else if (which == "predict") {
        p.predict();
        p.write_predictions();
      } else if (which == "anomalies") {
        p.anomalies();
        p.write_anomalies();
      } else if (which == "analyze") {
        p.analyze();
        p.write_analysis();
      }
    }
    dbmm::write_json(p.out("summary.json"), p.hash(), p.summary());
    print_summary(p);
    return 0;
  } catch (const dbmm::ArgumentError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const dbmm::ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 1;
  }
}
