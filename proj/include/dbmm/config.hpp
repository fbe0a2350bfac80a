#pragma once

#include <algorithm>
#include <functional>
#include <istream>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "dbmm/analysis.hpp"
#include "dbmm/anomaly.hpp"
#include "dbmm/features.hpp"
#include "dbmm/io.hpp"
#include "dbmm/nmf.hpp"
#include "dbmm/roles.hpp"
#include "dbmm/synthetic.hpp"
#include "dbmm/transitions.hpp"
#include "dbmm/types.hpp"

namespace dbmm {

// Everything a run depends on besides the input bytes.
struct RunConfig {
  // [input]; an empty path means "generate"
  std::string input_path;
  double interval_length = 1.0;
  bool symmetrize = false;
  bool static_graph = false;
  bool weight_column = true;

  GeneratorConfig generator;
  std::string generator_anomaly = "none";  // none | pattern_switch | global_bridge_link
  std::size_t injected_nodes = 3;
  long long injection_time = -1;  // -1 = random

  FeatureOptions features;
  RoleOptions roles;
  KernelSpec kernel;
  TransitionOptions transition;

  std::size_t anomaly_window = 10;
  std::size_t window_a = 5;
  double node_ridge = 1e-3;
  std::size_t top_k = 10;
  ScoreTarget anomaly_target = ScoreTarget::network;

  bool analysis = true;
  std::vector<Measure> measures = all_measures();
  int clusters = 4;
  int embedding_dims = 2;
  KMeansOptions kmeans;
  std::size_t betweenness_cap = 20000;

  std::size_t workers = 0;  // 0 = hardware parallelism
  std::string output_dir;

  GeneratorConfig resolved_generator() const {
    GeneratorConfig g = generator;
    g.anomaly.reset();
    if (generator_anomaly != "none") {
      AnomalySpec a;
      a.kind = anomaly_kind_from_string(generator_anomaly);
      a.injected_nodes = injected_nodes;
      if (injection_time >= 0) a.injection_time = static_cast<std::size_t>(injection_time);
      g.anomaly = a;
    }
    return g;
  }
};

namespace detail {

inline bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ArgumentError("config " + key + ": expected a boolean, got '" + v + "'");
}

inline double parse_double(const std::string& v, const std::string& key) {
  try {
    std::size_t pos = 0;
    double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ArgumentError("config " + key + ": expected a number, got '" + v + "'");
  }
}

inline long long parse_int(const std::string& v, const std::string& key) {
  try {
    std::size_t pos = 0;
    long long d = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ArgumentError("config " + key + ": expected an integer, got '" + v + "'");
  }
}

inline std::size_t parse_size(const std::string& v, const std::string& key) {
  auto d = parse_int(v, key);
  if (d < 0) throw ArgumentError("config " + key + ": must be nonnegative");
  return static_cast<std::size_t>(d);
}

inline std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct Binding {
  std::string key;  // section.name
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

inline const std::vector<Binding>& bindings() {
  using C = RunConfig;
  auto b = [](const char* key, auto get, auto set) { return Binding{key, get, set}; };
  auto num = [](double v) { return format_number(v); };
  auto boolean = [](bool v) { return std::string(v ? "true" : "false"); };
  static const std::vector<Binding> table = {
      b("input.path", [](const C& c) { return c.input_path; }, [](C& c, const std::string& v) { c.input_path = v; }),
      b("input.interval_length", [=](const C& c) { return num(c.interval_length); },
        [](C& c, const std::string& v) { c.interval_length = parse_double(v, "input.interval_length"); }),
      b("input.symmetrize", [=](const C& c) { return boolean(c.symmetrize); },
        [](C& c, const std::string& v) { c.symmetrize = parse_bool(v, "input.symmetrize"); }),
      b("input.static_graph", [=](const C& c) { return boolean(c.static_graph); },
        [](C& c, const std::string& v) { c.static_graph = parse_bool(v, "input.static_graph"); }),
      b("input.weight_column", [=](const C& c) { return boolean(c.weight_column); },
        [](C& c, const std::string& v) { c.weight_column = parse_bool(v, "input.weight_column"); }),

      b("generator.n_stars", [](const C& c) { return std::to_string(c.generator.n_stars); },
        [](C& c, const std::string& v) { c.generator.n_stars = parse_size(v, "generator.n_stars"); }),
      b("generator.star_size", [](const C& c) { return std::to_string(c.generator.star_size); },
        [](C& c, const std::string& v) { c.generator.star_size = parse_size(v, "generator.star_size"); }),
      b("generator.n_cliques", [](const C& c) { return std::to_string(c.generator.n_cliques); },
        [](C& c, const std::string& v) { c.generator.n_cliques = parse_size(v, "generator.n_cliques"); }),
      b("generator.clique_size", [](const C& c) { return std::to_string(c.generator.clique_size); },
        [](C& c, const std::string& v) { c.generator.clique_size = parse_size(v, "generator.clique_size"); }),
      b("generator.n_bridges", [](const C& c) { return std::to_string(c.generator.n_bridges); },
        [](C& c, const std::string& v) { c.generator.n_bridges = parse_size(v, "generator.n_bridges"); }),
      b("generator.edge_noise_p", [=](const C& c) { return num(c.generator.edge_noise_p); },
        [](C& c, const std::string& v) { c.generator.edge_noise_p = parse_double(v, "generator.edge_noise_p"); }),
      b("generator.timesteps", [](const C& c) { return std::to_string(c.generator.timesteps); },
        [](C& c, const std::string& v) { c.generator.timesteps = parse_size(v, "generator.timesteps"); }),
      b("generator.seed", [](const C& c) { return std::to_string(c.generator.seed); },
        [](C& c, const std::string& v) { c.generator.seed = parse_size(v, "generator.seed"); }),
      b("generator.anomaly", [](const C& c) { return c.generator_anomaly; },
        [](C& c, const std::string& v) {
          if (v != "none") anomaly_kind_from_string(v);
          c.generator_anomaly = v;
        }),
      b("generator.injected_nodes", [](const C& c) { return std::to_string(c.injected_nodes); },
        [](C& c, const std::string& v) { c.injected_nodes = parse_size(v, "generator.injected_nodes"); }),
      b("generator.injection_time", [](const C& c) { return std::to_string(c.injection_time); },
        [](C& c, const std::string& v) { c.injection_time = parse_int(v, "generator.injection_time"); }),

      b("features.bin_fraction", [=](const C& c) { return num(c.features.bin_fraction); },
        [](C& c, const std::string& v) { c.features.bin_fraction = parse_double(v, "features.bin_fraction"); }),
      b("features.tolerance", [](const C& c) { return std::to_string(c.features.tolerance); },
        [](C& c, const std::string& v) { c.features.tolerance = parse_size(v, "features.tolerance"); }),
      b("features.max_generations", [](const C& c) { return std::to_string(c.features.max_generations); },
        [](C& c, const std::string& v) {
          c.features.max_generations = static_cast<int>(parse_int(v, "features.max_generations"));
        }),
      b("features.reference",
        [](const C& c) {
          return std::string(c.features.reference == ReferencePolicy::all_snapshots ? "all" : "first");
        },
        [](C& c, const std::string& v) {
          if (v == "all") c.features.reference = ReferencePolicy::all_snapshots;
          else if (v == "first") c.features.reference = ReferencePolicy::first_snapshot;
          else throw ArgumentError("config features.reference: expected all or first");
        }),
      b("features.log_transform", [=](const C& c) { return boolean(c.features.log_transform); },
        [](C& c, const std::string& v) { c.features.log_transform = parse_bool(v, "features.log_transform"); }),

      b("roles.rank", [](const C& c) { return c.roles.rank <= 0 ? std::string("auto") : std::to_string(c.roles.rank); },
        [](C& c, const std::string& v) {
          c.roles.rank = v == "auto" ? 0 : static_cast<int>(parse_int(v, "roles.rank"));
        }),
      b("roles.min_rank", [](const C& c) { return std::to_string(c.roles.min_rank); },
        [](C& c, const std::string& v) { c.roles.min_rank = static_cast<int>(parse_int(v, "roles.min_rank")); }),
      b("roles.max_rank", [](const C& c) { return std::to_string(c.roles.max_rank); },
        [](C& c, const std::string& v) { c.roles.max_rank = static_cast<int>(parse_int(v, "roles.max_rank")); }),
      b("roles.bits", [=](const C& c) { return num(c.roles.mdl.bits); },
        [](C& c, const std::string& v) { c.roles.mdl.bits = parse_double(v, "roles.bits"); }),
      b("roles.error_code",
        [](const C& c) {
          return std::string(c.roles.mdl.error_code == MdlErrorCode::residual_variance ? "residual_variance"
                                                                                       : "fixed_variance");
        },
        [](C& c, const std::string& v) {
          if (v == "residual_variance") c.roles.mdl.error_code = MdlErrorCode::residual_variance;
          else if (v == "fixed_variance") c.roles.mdl.error_code = MdlErrorCode::fixed_variance;
          else throw ArgumentError("config roles.error_code: expected residual_variance or fixed_variance");
        }),
      b("roles.resolution", [=](const C& c) { return num(c.roles.mdl.resolution); },
        [](C& c, const std::string& v) { c.roles.mdl.resolution = parse_double(v, "roles.resolution"); }),
      b("roles.mdl_max_rows", [](const C& c) { return std::to_string(c.roles.mdl.max_rows); },
        [](C& c, const std::string& v) { c.roles.mdl.max_rows = parse_size(v, "roles.mdl_max_rows"); }),
      b("roles.seed", [](const C& c) { return std::to_string(c.roles.nmf.seed); },
        [](C& c, const std::string& v) { c.roles.nmf.seed = parse_size(v, "roles.seed"); }),
      b("roles.restarts", [](const C& c) { return std::to_string(c.roles.nmf.restarts); },
        [](C& c, const std::string& v) { c.roles.nmf.restarts = static_cast<int>(parse_int(v, "roles.restarts")); }),
      b("roles.tol", [=](const C& c) { return num(c.roles.nmf.tol); },
        [](C& c, const std::string& v) { c.roles.nmf.tol = parse_double(v, "roles.tol"); }),
      b("roles.max_iter", [](const C& c) { return std::to_string(c.roles.nmf.max_iter); },
        [](C& c, const std::string& v) { c.roles.nmf.max_iter = static_cast<int>(parse_int(v, "roles.max_iter")); }),
      b("roles.nnls_max_iter", [](const C& c) { return std::to_string(c.roles.nnls.max_iter); },
        [](C& c, const std::string& v) {
          c.roles.nnls.max_iter = static_cast<int>(parse_int(v, "roles.nnls_max_iter"));
        }),
      b("roles.nnls_tol", [=](const C& c) { return num(c.roles.nnls.tol); },
        [](C& c, const std::string& v) { c.roles.nnls.tol = parse_double(v, "roles.nnls_tol"); }),

      b("transitions.kernel", [](const C& c) { return std::string(to_string(c.kernel.kind)); },
        [](C& c, const std::string& v) { c.kernel.kind = kernel_from_string(v); }),
      b("transitions.theta", [=](const C& c) { return num(c.kernel.theta); },
        [](C& c, const std::string& v) { c.kernel.theta = parse_double(v, "transitions.theta"); }),
      b("transitions.window", [](const C& c) { return std::to_string(c.kernel.window); },
        [](C& c, const std::string& v) { c.kernel.window = parse_size(v, "transitions.window"); }),
      b("transitions.max_iter", [](const C& c) { return std::to_string(c.transition.max_iter); },
        [](C& c, const std::string& v) {
          c.transition.max_iter = static_cast<int>(parse_int(v, "transitions.max_iter"));
        }),
      b("transitions.tol", [=](const C& c) { return num(c.transition.tol); },
        [](C& c, const std::string& v) { c.transition.tol = parse_double(v, "transitions.tol"); }),
      b("transitions.ridge", [=](const C& c) { return num(c.transition.ridge); },
        [](C& c, const std::string& v) { c.transition.ridge = parse_double(v, "transitions.ridge"); }),
      b("transitions.row_normalize", [=](const C& c) { return boolean(c.transition.row_normalize); },
        [](C& c, const std::string& v) { c.transition.row_normalize = parse_bool(v, "transitions.row_normalize"); }),

      b("anomaly.window", [](const C& c) { return std::to_string(c.anomaly_window); },
        [](C& c, const std::string& v) { c.anomaly_window = parse_size(v, "anomaly.window"); }),
      b("anomaly.node_ridge", [=](const C& c) { return num(c.node_ridge); },
        [](C& c, const std::string& v) { c.node_ridge = parse_double(v, "anomaly.node_ridge"); }),
      b("anomaly.window_a", [](const C& c) { return std::to_string(c.window_a); },
        [](C& c, const std::string& v) { c.window_a = parse_size(v, "anomaly.window_a"); }),
      b("anomaly.top_k", [](const C& c) { return std::to_string(c.top_k); },
        [](C& c, const std::string& v) { c.top_k = parse_size(v, "anomaly.top_k"); }),
      b("anomaly.target",
        [](const C& c) { return std::string(c.anomaly_target == ScoreTarget::network ? "network" : "own_row"); },
        [](C& c, const std::string& v) {
          if (v == "network") c.anomaly_target = ScoreTarget::network;
          else if (v == "own_row") c.anomaly_target = ScoreTarget::own_row;
          else throw ArgumentError("config anomaly.target: expected network or own_row");
        }),

      b("analysis.enabled", [=](const C& c) { return boolean(c.analysis); },
        [](C& c, const std::string& v) { c.analysis = parse_bool(v, "analysis.enabled"); }),
      b("analysis.measures",
        [](const C& c) {
          std::string s;
          for (auto m : c.measures) s += (s.empty() ? "" : ",") + std::string(to_string(m));
          return s;
        },
        [](C& c, const std::string& v) {
          c.measures.clear();
          std::stringstream ss(v);
          std::string item;
          while (std::getline(ss, item, ','))
            if (!trim(item).empty()) c.measures.push_back(measure_from_string(trim(item)));
        }),
      b("analysis.clusters", [](const C& c) { return std::to_string(c.clusters); },
        [](C& c, const std::string& v) { c.clusters = static_cast<int>(parse_int(v, "analysis.clusters")); }),
      b("analysis.embedding_dims", [](const C& c) { return std::to_string(c.embedding_dims); },
        [](C& c, const std::string& v) {
          c.embedding_dims = static_cast<int>(parse_int(v, "analysis.embedding_dims"));
        }),
      b("analysis.kmeans_restarts", [](const C& c) { return std::to_string(c.kmeans.restarts); },
        [](C& c, const std::string& v) {
          c.kmeans.restarts = static_cast<int>(parse_int(v, "analysis.kmeans_restarts"));
        }),
      b("analysis.kmeans_seed", [](const C& c) { return std::to_string(c.kmeans.seed); },
        [](C& c, const std::string& v) { c.kmeans.seed = parse_size(v, "analysis.kmeans_seed"); }),
      b("analysis.betweenness_cap", [](const C& c) { return std::to_string(c.betweenness_cap); },
        [](C& c, const std::string& v) { c.betweenness_cap = parse_size(v, "analysis.betweenness_cap"); }),

      b("run.workers", [](const C& c) { return std::to_string(c.workers); },
        [](C& c, const std::string& v) { c.workers = parse_size(v, "run.workers"); }),
      b("run.output_dir", [](const C& c) { return c.output_dir; },
        [](C& c, const std::string& v) { c.output_dir = v; }),
  };
  return table;
}

}  // namespace detail

inline void set_config_value(RunConfig& c, const std::string& key, const std::string& value) {
  for (const auto& b : detail::bindings()) {
    if (b.key == key) {
      b.set(c, value);
      return;
    }
  }
  throw ArgumentError("unknown config key '" + key + "'");
}

inline std::string get_config_value(const RunConfig& c, const std::string& key) {
  for (const auto& b : detail::bindings())
    if (b.key == key) return b.get(c);
  throw ArgumentError("unknown config key '" + key + "'");
}

// "key=value" override, as given on the command line.
inline void apply_override(RunConfig& c, const std::string& assignment) {
  auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ArgumentError("override '" + assignment + "' is not key=value");
  set_config_value(c, detail::trim(assignment.substr(0, eq)), detail::trim(assignment.substr(eq + 1)));
}

// INI text: [section] headers, key = value lines, ';' or '#' comment lines.
inline void read_config(std::istream& in, RunConfig& c) {
  // The INI reader only knows ';' comments; blank '#' lines out so line numbers stay put.
  std::ostringstream cleaned;
  std::string line;
  while (std::getline(in, line)) {
    auto t = detail::trim(line);
    cleaned << (!t.empty() && t[0] == '#' ? std::string() : line) << '\n';
  }
  std::istringstream text(cleaned.str());
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(text, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ParseError(e.line(), e.message());
  }
  for (const auto& [name, node] : tree) {
    if (node.empty()) {
      // an empty "[section]" reads the same as a root key without a value
      bool section = node.data().empty() && std::any_of(detail::bindings().begin(), detail::bindings().end(),
                                                         [&](const auto& b) { return b.key.rfind(name + ".", 0) == 0; });
      if (!section) set_config_value(c, name, node.data());
      continue;
    }
    for (const auto& [key, value] : node) set_config_value(c, name + "." + key, value.data());
  }
}

inline RunConfig load_config(const std::string& path) {
  RunConfig c;
  std::istringstream in(read_file(path));
  read_config(in, c);
  return c;
}

// Canonical text form; parsing it back yields the same config.
inline std::string to_ini(const RunConfig& c) {
  std::ostringstream os;
  std::string section;
  for (const auto& b : detail::bindings()) {
    auto dot = b.key.find('.');
    auto sec = b.key.substr(0, dot);
    if (sec != section) {
      if (!section.empty()) os << '\n';
      os << '[' << sec << "]\n";
      section = sec;
    }
    os << b.key.substr(dot + 1) << " = " << b.get(c) << '\n';
  }
  return os.str();
}

// Output and worker settings do not change results and are left out.
inline std::string config_hash(const RunConfig& c) {
  RunConfig copy = c;
  copy.output_dir.clear();
  copy.workers = 0;
  return hex64(fnv1a64(to_ini(copy)));
}

}  // namespace dbmm
