#include "ctlqr/config.hpp"

#include <algorithm>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "ctlqr/csv.hpp"
#include "ctlqr/errors.hpp"

namespace ctlqr {

using nlohmann::json;

namespace {

void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed,
                         const std::string& path) {
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    if (!allowed.count(key)) throw ConfigError(path + "." + key, "unknown key");
  }
}

double get_number(const json& v, const std::string& path) {
  if (!v.is_number()) throw ConfigError(path, "expected a number");
  return v.get<double>();
}

Matrix parse_matrix_entries(const json& v, const std::string& path) {
  if (!v.is_array() || v.empty()) throw ConfigError(path, "expected a non-empty 2d array");
  const std::size_t cols = v[0].is_array() ? v[0].size() : 0;
  if (cols == 0) throw ConfigError(path, "expected a non-empty 2d array");
  Matrix m(static_cast<Eigen::Index>(v.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < v.size(); ++r) {
    if (!v[r].is_array() || v[r].size() != cols) {
      throw ConfigError(path, "rows must all have the same length");
    }
    for (std::size_t c = 0; c < cols; ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          get_number(v[r][c], path);
    }
  }
  if (!m.allFinite()) throw ConfigError(path, "non-finite entry");
  return m;
}

MatrixSpec parse_matrix_spec(const json& v, const std::string& path) {
  MatrixSpec spec;
  if (v.is_string()) {
    const std::string rule = v.get<std::string>();
    if (rule == "uniform") {
      spec.rule = MatrixSpec::Rule::Uniform;
    } else if (rule == "stable") {
      spec.rule = MatrixSpec::Rule::Stable;
    } else if (rule == "identity") {
      spec.rule = MatrixSpec::Rule::Identity;
    } else if (rule == "zero") {
      spec.rule = MatrixSpec::Rule::Zero;
    } else {
      throw ConfigError(path, "unknown matrix rule '" + rule + "'");
    }
  } else {
    spec.rule = MatrixSpec::Rule::Explicit;
    spec.value = parse_matrix_entries(v, path);
  }
  return spec;
}

GainSpec parse_gain_spec(const json& v, const std::string& path) {
  GainSpec spec;
  if (v.is_string()) {
    const std::string rule = v.get<std::string>();
    if (rule == "auto") {
      spec.rule = GainSpec::Rule::Auto;
    } else if (rule == "zero") {
      spec.rule = GainSpec::Rule::Zero;
    } else {
      throw ConfigError(path, "unknown gain rule '" + rule + "'");
    }
  } else {
    spec.rule = GainSpec::Rule::Explicit;
    spec.value = parse_matrix_entries(v, path);
  }
  return spec;
}

template <class T>
std::vector<T> parse_grid(const json& v, const std::string& path) {
  if (!v.is_array() || v.empty()) throw ConfigError(path, "expected a non-empty array");
  std::vector<T> grid;
  grid.reserve(v.size());
  for (const auto& e : v) grid.push_back(static_cast<T>(get_number(e, path)));
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] > 0)) throw ConfigError(path, "grid values must be positive");
    if (i > 0 && !(grid[i] > grid[i - 1])) throw ConfigError(path, "grid must be increasing");
  }
  return grid;
}

json matrix_spec_json(const MatrixSpec& spec) {
  switch (spec.rule) {
    case MatrixSpec::Rule::Uniform: return "uniform";
    case MatrixSpec::Rule::Stable: return "stable";
    case MatrixSpec::Rule::Identity: return "identity";
    case MatrixSpec::Rule::Zero: return "zero";
    case MatrixSpec::Rule::Explicit: break;
  }
  json rows = json::array();
  for (Eigen::Index r = 0; r < spec.value.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < spec.value.cols(); ++c) row.push_back(spec.value(r, c));
    rows.push_back(row);
  }
  return rows;
}

json gain_spec_json(const GainSpec& spec) {
  if (spec.rule == GainSpec::Rule::Auto) return "auto";
  if (spec.rule == GainSpec::Rule::Zero) return "zero";
  MatrixSpec as_matrix{MatrixSpec::Rule::Explicit, spec.value};
  return matrix_spec_json(as_matrix);
}

void check_dims(const MatrixSpec& spec, int rows, int cols, const std::string& path) {
  if (spec.rule == MatrixSpec::Rule::Explicit &&
      (spec.value.rows() != rows || spec.value.cols() != cols)) {
    throw ConfigError(path, "expected a " + std::to_string(rows) + "x" + std::to_string(cols) +
                                " matrix");
  }
}

}  // namespace

int ExperimentConfig::effective_episodes() const {
  if (episodes > 0) return episodes;
  return experiment == ExperimentKind::OnlineRegret ? 50 : 20;
}

const char* experiment_name(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::SysidSingle: return "sysid-single";
    case ExperimentKind::SysidMulti: return "sysid-multi";
    case ExperimentKind::OnlineRegret: return "online-regret";
    case ExperimentKind::Lowerbound: return "lowerbound";
  }
  return "?";
}

ExperimentConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("$", "cannot open config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str());
}

ExperimentConfig parse_config_text(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("$", std::string("invalid JSON: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("$", "config must be a JSON object");

  reject_unknown_keys(root,
                      {"experiment", "seed", "sigma", "h", "h_mode", "system", "T_grid", "H_grid",
                       "T0", "episodes", "out_dir", "threads", "lowerbound"},
                      "$");

  ExperimentConfig cfg;
  if (!root.contains("experiment") || !root["experiment"].is_string()) {
    throw ConfigError("$.experiment", "required string field");
  }
  const std::string name = root["experiment"].get<std::string>();
  if (name == "sysid-single") {
    cfg.experiment = ExperimentKind::SysidSingle;
  } else if (name == "sysid-multi") {
    cfg.experiment = ExperimentKind::SysidMulti;
  } else if (name == "online-regret") {
    cfg.experiment = ExperimentKind::OnlineRegret;
  } else if (name == "lowerbound") {
    cfg.experiment = ExperimentKind::Lowerbound;
  } else {
    throw ConfigError("$.experiment", "unknown experiment '" + name + "'");
  }

  if (root.contains("seed")) {
    if (!root["seed"].is_number_unsigned()) throw ConfigError("$.seed", "expected unsigned");
    cfg.seed = root["seed"].get<std::uint64_t>();
  }
  if (root.contains("sigma")) cfg.sigma = get_number(root["sigma"], "$.sigma");
  if (root.contains("h")) cfg.h = get_number(root["h"], "$.h");
  if (root.contains("h_mode")) {
    const std::string mode = root["h_mode"].is_string() ? root["h_mode"].get<std::string>() : "";
    if (mode == "fixed") {
      cfg.h_mode = HMode::Fixed;
    } else if (mode == "kappa") {
      cfg.h_mode = HMode::Kappa;
    } else {
      throw ConfigError("$.h_mode", "expected \"fixed\" or \"kappa\"");
    }
  }
  if (root.contains("system")) {
    const json& sys = root["system"];
    if (!sys.is_object()) throw ConfigError("$.system", "expected an object");
    reject_unknown_keys(sys, {"d", "p", "A", "B", "Q", "R", "K"}, "$.system");
    if (sys.contains("d")) cfg.system.d = static_cast<int>(get_number(sys["d"], "$.system.d"));
    if (sys.contains("p")) cfg.system.p = static_cast<int>(get_number(sys["p"], "$.system.p"));
    if (sys.contains("A")) cfg.system.A = parse_matrix_spec(sys["A"], "$.system.A");
    if (sys.contains("B")) cfg.system.B = parse_matrix_spec(sys["B"], "$.system.B");
    if (sys.contains("Q")) cfg.system.Q = parse_matrix_spec(sys["Q"], "$.system.Q");
    if (sys.contains("R")) cfg.system.R = parse_matrix_spec(sys["R"], "$.system.R");
    if (sys.contains("K")) cfg.system.K = parse_gain_spec(sys["K"], "$.system.K");
  }
  if (root.contains("T_grid")) cfg.T_grid = parse_grid<double>(root["T_grid"], "$.T_grid");
  if (root.contains("H_grid")) cfg.H_grid = parse_grid<int>(root["H_grid"], "$.H_grid");
  if (root.contains("T0")) cfg.T0 = static_cast<int>(get_number(root["T0"], "$.T0"));
  if (root.contains("episodes")) {
    cfg.episodes = static_cast<int>(get_number(root["episodes"], "$.episodes"));
  }
  if (root.contains("out_dir")) {
    if (!root["out_dir"].is_string()) throw ConfigError("$.out_dir", "expected a string");
    cfg.out_dir = root["out_dir"].get<std::string>();
  }
  if (root.contains("threads")) {
    cfg.threads = static_cast<int>(get_number(root["threads"], "$.threads"));
  }
  if (root.contains("lowerbound")) {
    const json& lb = root["lowerbound"];
    if (!lb.is_object()) throw ConfigError("$.lowerbound", "expected an object");
    reject_unknown_keys(lb, {"T_grid", "N_grid", "mc_paths", "risk_trials", "risk_T", "risk_N"},
                        "$.lowerbound");
    if (lb.contains("T_grid")) {
      cfg.lowerbound.T_grid = parse_grid<double>(lb["T_grid"], "$.lowerbound.T_grid");
    }
    if (lb.contains("N_grid")) {
      cfg.lowerbound.N_grid = parse_grid<int>(lb["N_grid"], "$.lowerbound.N_grid");
    }
    if (lb.contains("mc_paths")) {
      cfg.lowerbound.mc_paths = static_cast<int>(get_number(lb["mc_paths"], "$.lowerbound.mc_paths"));
    }
    if (lb.contains("risk_trials")) {
      cfg.lowerbound.risk_trials =
          static_cast<int>(get_number(lb["risk_trials"], "$.lowerbound.risk_trials"));
    }
    if (lb.contains("risk_T")) cfg.lowerbound.risk_T = get_number(lb["risk_T"], "$.lowerbound.risk_T");
    if (lb.contains("risk_N")) {
      cfg.lowerbound.risk_N = static_cast<int>(get_number(lb["risk_N"], "$.lowerbound.risk_N"));
    }
  }

  validate_config(cfg);
  return cfg;
}

void validate_config(const ExperimentConfig& cfg) {
  if (cfg.system.d < 1 || cfg.system.p < 1) throw ConfigError("$.system", "d and p must be >= 1");
  if (!(cfg.h > 0.0)) throw ConfigError("$.h", "h must be positive");
  if (cfg.sigma < 0.0) throw ConfigError("$.sigma", "sigma must be nonnegative");
  if (cfg.episodes < 0) throw ConfigError("$.episodes", "episodes must be positive");
  if (cfg.T0 < 1 || cfg.T0 > 10) throw ConfigError("$.T0", "T0 must be in [1, 10]");
  if (cfg.threads < 0) throw ConfigError("$.threads", "threads must be nonnegative");

  const int d = cfg.system.d, p = cfg.system.p;
  check_dims(cfg.system.A, d, d, "$.system.A");
  check_dims(cfg.system.B, d, p, "$.system.B");
  check_dims(cfg.system.Q, d, d, "$.system.Q");
  check_dims(cfg.system.R, p, p, "$.system.R");
  if (cfg.system.K.rule == GainSpec::Rule::Explicit &&
      (cfg.system.K.value.rows() != p || cfg.system.K.value.cols() != d)) {
    throw ConfigError("$.system.K", "expected a " + std::to_string(p) + "x" + std::to_string(d) +
                                        " gain");
  }

  switch (cfg.experiment) {
    case ExperimentKind::SysidSingle:
    case ExperimentKind::OnlineRegret:
      if (cfg.T_grid.empty()) throw ConfigError("$.T_grid", "required for this experiment");
      break;
    case ExperimentKind::SysidMulti:
      if (cfg.H_grid.empty()) throw ConfigError("$.H_grid", "required for this experiment");
      break;
    case ExperimentKind::Lowerbound:
      if (cfg.lowerbound.mc_paths < 2) throw ConfigError("$.lowerbound.mc_paths", "must be >= 2");
      if (cfg.lowerbound.risk_trials < 100) {
        throw ConfigError("$.lowerbound.risk_trials", "must be >= 100");
      }
      break;
  }
  if (cfg.experiment == ExperimentKind::OnlineRegret && cfg.h_mode == HMode::Fixed) {
    const double steps = std::floor(std::sqrt(cfg.T_grid.front()) / cfg.h);
    if (steps < d + p) {
      throw ConfigError("$.T_grid", "exploration phase shorter than d + p samples");
    }
  }
}

std::string canonical_json(const ExperimentConfig& cfg) {
  json root;
  root["experiment"] = experiment_name(cfg.experiment);
  root["seed"] = cfg.seed;
  root["sigma"] = cfg.sigma;
  root["h"] = cfg.h;
  root["h_mode"] = cfg.h_mode == HMode::Fixed ? "fixed" : "kappa";
  root["system"] = {{"d", cfg.system.d},       {"p", cfg.system.p},
                    {"A", matrix_spec_json(cfg.system.A)}, {"B", matrix_spec_json(cfg.system.B)},
                    {"Q", matrix_spec_json(cfg.system.Q)}, {"R", matrix_spec_json(cfg.system.R)},
                    {"K", gain_spec_json(cfg.system.K)}};
  if (!cfg.T_grid.empty()) root["T_grid"] = cfg.T_grid;
  if (!cfg.H_grid.empty()) root["H_grid"] = cfg.H_grid;
  root["T0"] = cfg.T0;
  root["episodes"] = cfg.effective_episodes();
  // out_dir and threads are placement knobs, not experiment identity; they
  // stay out of the canonical form so the config hash is stable across
  // output locations and worker counts.
  if (cfg.experiment == ExperimentKind::Lowerbound) {
    root["lowerbound"] = {{"T_grid", cfg.lowerbound.T_grid},
                          {"N_grid", cfg.lowerbound.N_grid},
                          {"mc_paths", cfg.lowerbound.mc_paths},
                          {"risk_trials", cfg.lowerbound.risk_trials},
                          {"risk_T", cfg.lowerbound.risk_T},
                          {"risk_N", cfg.lowerbound.risk_N}};
  }
  return root.dump(2) + "\n";
}

}  // namespace ctlqr
