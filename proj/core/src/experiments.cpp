#include "lindyn/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <set>
#include <sstream>
#include <utility>

#include <json.hpp>

#include "lindyn/analytic.hpp"
#include "lindyn/io.hpp"
#include "lindyn/mnist.hpp"
#include "lindyn/rng.hpp"

namespace lindyn {

namespace {

using nlohmann::json;

constexpr const char* kFamilies[] = {"elementwise", "one-layer", "dense",
                                     "wide-scalar"};
constexpr const char* kGrids[] = {"lambda-scale", "funnel", "anti-funnel",
                                  "imbalance-ratio"};
constexpr const char* kEmergeModes[] = {"time", "data", "params"};
constexpr const char* kPresets[] = {"default", "weight-downscale",
                                    "target-upscale", "input-downscale",
                                    "output-downscale"};

template <std::size_t N>
bool one_of(const std::string& v, const char* const (&options)[N]) {
  for (const char* o : options)
    if (v == o) return true;
  return false;
}

template <std::size_t N>
std::string join_options(const char* const (&options)[N]) {
  std::string out;
  for (const char* o : options) {
    if (!out.empty()) out += " | ";
    out += o;
  }
  return out;
}

// Strict object reader: every key must be consumed, violations name the JSON
// pointer of the offending key.
class Cursor {
 public:
  Cursor(const json& node, std::string path)
      : node_(&node), path_(std::move(path)) {
    if (!node_->is_object())
      throw ConfigError("config " + (path_.empty() ? "/" : path_) +
                        ": expected an object");
  }

  bool has(const std::string& key) const { return node_->contains(key); }

  double number(const std::string& key, double def) {
    mark(key);
    if (!has(key)) return def;
    const json& v = node_->at(key);
    if (!v.is_number())
      throw ConfigError("config " + ptr(key) + ": expected a number");
    return v.get<double>();
  }

  int integer(const std::string& key, int def) {
    mark(key);
    if (!has(key)) return def;
    const json& v = node_->at(key);
    if (!v.is_number_integer())
      throw ConfigError("config " + ptr(key) + ": expected an integer");
    return v.get<int>();
  }

  long integer_long(const std::string& key, long def) {
    mark(key);
    if (!has(key)) return def;
    const json& v = node_->at(key);
    if (!v.is_number_integer())
      throw ConfigError("config " + ptr(key) + ": expected an integer");
    return v.get<long>();
  }

  std::uint64_t uinteger(const std::string& key, std::uint64_t def) {
    mark(key);
    if (!has(key)) return def;
    const json& v = node_->at(key);
    if (!(v.is_number_unsigned() ||
          (v.is_number_integer() && v.get<long long>() >= 0)))
      throw ConfigError("config " + ptr(key) +
                        ": expected a nonnegative integer");
    return v.get<std::uint64_t>();
  }

  bool boolean(const std::string& key, bool def) {
    mark(key);
    if (!has(key)) return def;
    const json& v = node_->at(key);
    if (!v.is_boolean())
      throw ConfigError("config " + ptr(key) + ": expected a boolean");
    return v.get<bool>();
  }

  std::string str(const std::string& key, const std::string& def) {
    mark(key);
    if (!has(key)) return def;
    const json& v = node_->at(key);
    if (!v.is_string())
      throw ConfigError("config " + ptr(key) + ": expected a string");
    return v.get<std::string>();
  }

  std::vector<double> numbers(const std::string& key) {
    mark(key);
    if (!has(key)) return {};
    const json& v = node_->at(key);
    if (!v.is_array())
      throw ConfigError("config " + ptr(key) + ": expected an array of numbers");
    std::vector<double> out;
    out.reserve(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number())
        throw ConfigError("config " + ptr(key) + "/" + std::to_string(i) +
                          ": expected a number");
      out.push_back(v[i].get<double>());
    }
    return out;
  }

  Cursor child(const std::string& key) {
    mark(key);
    static const json kEmpty = json::object();
    const json& node = has(key) ? node_->at(key) : kEmpty;
    return Cursor(node, ptr(key));
  }

  void finish() const {
    for (const auto& item : node_->items()) {
      if (!seen_.count(item.key()))
        throw ConfigError("config " + ptr(item.key()) + ": unknown key");
    }
  }

  const std::string& path() const { return path_; }

 private:
  std::string ptr(const std::string& key) const { return path_ + "/" + key; }
  void mark(const std::string& key) { seen_.insert(key); }

  const json* node_;
  std::string path_;
  std::set<std::string> seen_;
};

std::vector<double> linear_grid(double lo, double hi, int count) {
  std::vector<double> v(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i)
    v[static_cast<std::size_t>(i)] =
        lo + (hi - lo) * static_cast<double>(i) /
                 static_cast<double>(count > 1 ? count - 1 : 1);
  return v;
}

Eigen::VectorXd to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(
      v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

std::string command_name(Command command) {
  switch (command) {
    case Command::kSimulate: return "simulate";
    case Command::kSweep: return "sweep";
    case Command::kCollapse: return "collapse";
    case Command::kEmerge: return "emerge";
    case Command::kGrok: return "grok";
    case Command::kValidate: return "validate";
  }
  return "unknown";
}

Command parse_command(const std::string& name) {
  if (name == "simulate") return Command::kSimulate;
  if (name == "sweep") return Command::kSweep;
  if (name == "collapse") return Command::kCollapse;
  if (name == "emerge") return Command::kEmerge;
  if (name == "grok") return Command::kGrok;
  if (name == "validate") return Command::kValidate;
  throw ConfigError("config /command: unknown command '" + name +
                    "' (expected simulate | sweep | collapse | emerge | grok "
                    "| validate)");
}

namespace {

SimulateSettings parse_simulate(Cursor cur) {
  SimulateSettings s;
  s.family = cur.str("family", s.family);
  if (!one_of(s.family, kFamilies))
    throw ConfigError("config " + cur.path() + "/family: expected " +
                      join_options(kFamilies));
  s.d = cur.integer("d", s.d);
  s.p = cur.integer("p", s.p);
  s.c = cur.integer("c", s.c);
  s.z = cur.number("z", s.z);
  s.scales = cur.numbers("scales");
  s.variances = cur.numbers("variances");
  s.u0 = cur.number("u0", s.u0);
  s.lambda = cur.number("lambda", s.lambda);
  s.init_scale = cur.number("init_scale", s.init_scale);
  s.t_end = cur.number("t_end", s.t_end);
  s.rel_tol = cur.number("rel_tol", s.rel_tol);
  s.abs_tol = cur.number("abs_tol", s.abs_tol);
  s.points = cur.integer("points", s.points);
  cur.finish();

  if (s.d < 1 || s.p < 1)
    throw ConfigError("config " + cur.path() + ": dimensions must be >= 1");
  if (s.points < 2)
    throw ConfigError("config " + cur.path() + "/points: need at least 2");

  if (s.family == "one-layer") s.c = 1;
  if (s.family == "elementwise") s.c = 1;
  if (s.family == "dense") { s.p = s.d; s.c = s.d; }
  if (s.family == "wide-scalar") { s.d = 1; s.c = 1; }

  const int modes = s.family == "wide-scalar" ? 1 : s.d;
  if (s.scales.empty()) {
    s.scales.resize(static_cast<std::size_t>(modes));
    for (int i = 0; i < modes; ++i)
      s.scales[static_cast<std::size_t>(i)] =
          s.family == "dense" ? std::exp2(-i) : 1.0;
  }
  if (static_cast<int>(s.scales.size()) != modes)
    throw ConfigError("config " + cur.path() + "/scales: expected " +
                      std::to_string(modes) + " entries");

  const int var_count = s.family == "wide-scalar" ? 1 : s.d;
  if (s.variances.empty()) {
    s.variances.resize(static_cast<std::size_t>(var_count));
    for (int i = 0; i < var_count; ++i) {
      const bool flat = s.family == "dense" || s.family == "wide-scalar";
      s.variances[static_cast<std::size_t>(i)] =
          flat ? 1.0 : std::max(std::pow(10.0, -i), 1e-6);
    }
  }
  if (static_cast<int>(s.variances.size()) != var_count)
    throw ConfigError("config " + cur.path() + "/variances: expected " +
                      std::to_string(var_count) + " entries");
  for (double v : s.variances)
    if (!(v > 0.0))
      throw ConfigError("config " + cur.path() +
                        "/variances: entries must be positive");
  if (s.family == "wide-scalar" && s.variances[0] != 1.0)
    throw ConfigError("config " + cur.path() +
                      "/variances: the scalar family assumes unit input "
                      "variance");
  if (s.family == "dense") {
    for (double v : s.variances)
      if (v != 1.0)
        throw ConfigError("config " + cur.path() +
                          "/variances: the dense family is solved for "
                          "whitened inputs");
  }
  return s;
}

SweepSettings parse_sweep(Cursor cur) {
  SweepSettings w;
  w.grid = cur.str("grid", w.grid);
  if (!one_of(w.grid, kGrids))
    throw ConfigError("config " + cur.path() + "/grid: expected " +
                      join_options(kGrids));
  w.d = cur.integer("d", w.grid == "imbalance-ratio" ? 20 : w.d);
  w.p = cur.integer("p", w.grid == "imbalance-ratio" ? 20 : w.p);
  w.c = cur.integer("c", w.grid == "imbalance-ratio" ? 2 : w.c);
  w.wide = cur.integer("wide", w.wide);
  w.mid = cur.integer("mid", w.mid);
  w.narrow = cur.integer("narrow", w.narrow);
  w.base_norm = cur.number("base_norm", w.base_norm);
  w.lambdas = cur.numbers("lambdas");
  w.scales = cur.numbers("scales");
  w.imbalances = cur.numbers("imbalances");
  w.ratios = cur.numbers("ratios");
  w.train.n = cur.integer("n", w.train.n);
  w.train.input_std = cur.number("input_std", w.train.input_std);
  w.train.noise_std = cur.number("noise_std", w.train.noise_std);
  w.train.lr = cur.number("lr", w.train.lr);
  w.train.batch = cur.integer("batch", w.train.batch);
  w.train.steps = cur.integer_long("steps", w.train.steps);
  w.train.threads = cur.integer("threads", w.train.threads);
  cur.finish();
  w.train.validate();

  if (w.lambdas.empty()) w.lambdas = linear_grid(-9.0, 9.0, 13);
  if (w.scales.empty()) w.scales = linear_grid(2.0, 20.0, 10);
  if (w.imbalances.empty()) w.imbalances = linear_grid(-2.0, 2.0, 5);
  if (w.ratios.empty()) w.ratios = linear_grid(-2.0, 4.0, 8);
  return w;
}

CollapseConfig parse_collapse(Cursor cur) {
  CollapseConfig cc;
  cc.n = cur.integer("n", cc.n);
  cc.d = cur.integer("d", cc.d);
  cc.p = cur.integer("p", cc.p);
  cc.c = cur.integer("c", cc.c);
  cc.init_scale = cur.number("init_scale", cc.init_scale);
  cc.features_trainable = cur.boolean("features_trainable", cc.features_trainable);
  cc.target_loss = cur.number("target_loss", cc.target_loss);
  cc.flow.t_end = cur.number("t_end", cc.flow.t_end);
  cur.finish();
  return cc;
}

EmergeSettings parse_emerge(Cursor cur) {
  EmergeSettings e;
  e.mode = cur.str("mode", e.mode);
  if (!one_of(e.mode, kEmergeModes))
    throw ConfigError("config " + cur.path() + "/mode: expected " +
                      join_options(kEmergeModes));
  e.p_star = cur.integer("p_star", e.p_star);
  e.p = cur.integer("p", e.p);
  e.alpha = cur.number("alpha", e.alpha);
  e.s = cur.number("s", e.s);
  e.u0 = cur.number("u0", e.u0);
  e.points = cur.integer("points", e.points);
  e.trials = cur.integer("trials", e.trials);
  e.shots = cur.integer("shots", e.shots);
  e.sizes = cur.numbers("sizes");
  e.widths = cur.numbers("widths");
  cur.finish();

  if (e.points < 2)
    throw ConfigError("config " + cur.path() + "/points: need at least 2");
  if (e.trials < 1 || e.shots < 1)
    throw ConfigError("config " + cur.path() +
                      ": trials and shots must be >= 1");
  if (e.sizes.empty())
    for (int k = 4; k <= 12; ++k) e.sizes.push_back(std::exp2(k));
  if (e.widths.empty())
    for (int k = 1; k <= 9; ++k) e.widths.push_back(std::exp2(k));
  for (double v : e.sizes)
    if (!(v >= 1.0))
      throw ConfigError("config " + cur.path() + "/sizes: entries must be >= 1");
  for (double v : e.widths)
    if (!(v >= 1.0))
      throw ConfigError("config " + cur.path() +
                        "/widths: entries must be >= 1");
  return e;
}

GrokSettings parse_grok(Cursor cur) {
  GrokSettings g;
  g.preset = cur.str("preset", g.preset);
  if (!one_of(g.preset, kPresets))
    throw ConfigError("config " + cur.path() + "/preset: expected " +
                      join_options(kPresets));
  if (g.preset == "weight-downscale") g.cfg.weight_init_ratio = 1.0;
  if (g.preset == "target-upscale") g.cfg.target_scale = 30.0;
  if (g.preset == "input-downscale") g.cfg.input_scale = 0.01;
  if (g.preset == "output-downscale") g.cfg.output_scale = 0.1;

  g.cfg.width = cur.integer("width", g.cfg.width);
  g.cfg.depth = cur.integer("depth", g.cfg.depth);
  g.cfg.weight_init_ratio =
      cur.number("weight_init_ratio", g.cfg.weight_init_ratio);
  g.cfg.target_scale = cur.number("target_scale", g.cfg.target_scale);
  g.cfg.input_scale = cur.number("input_scale", g.cfg.input_scale);
  g.cfg.output_scale = cur.number("output_scale", g.cfg.output_scale);
  g.cfg.lr = cur.number("lr", g.cfg.lr);
  g.cfg.weight_decay = cur.number("weight_decay", g.cfg.weight_decay);
  g.cfg.batch = cur.integer("batch", g.cfg.batch);
  g.cfg.epochs = cur.integer("epochs", g.cfg.epochs);
  g.cfg.acc_threshold = cur.number("acc_threshold", g.cfg.acc_threshold);
  g.n_train = cur.integer("n_train", g.n_train);
  g.n_test = cur.integer("n_test", g.n_test);
  g.margin = cur.number("margin", g.margin);
  cur.finish();
  g.cfg.validate();
  if (g.n_train < 1 || g.n_test < 1)
    throw ConfigError("config " + cur.path() +
                      ": n_train and n_test must be >= 1");
  if (!(g.margin > 0.0))
    throw ConfigError("config " + cur.path() + "/margin: must be positive");
  return g;
}

json section_json(const SimulateSettings& s) {
  return json{{"family", s.family},     {"d", s.d},
              {"p", s.p},               {"c", s.c},
              {"z", s.z},               {"scales", s.scales},
              {"variances", s.variances}, {"u0", s.u0},
              {"lambda", s.lambda},     {"init_scale", s.init_scale},
              {"t_end", s.t_end},       {"rel_tol", s.rel_tol},
              {"abs_tol", s.abs_tol},   {"points", s.points}};
}

json section_json(const SweepSettings& w) {
  return json{{"grid", w.grid},
              {"d", w.d},
              {"p", w.p},
              {"c", w.c},
              {"wide", w.wide},
              {"mid", w.mid},
              {"narrow", w.narrow},
              {"base_norm", w.base_norm},
              {"lambdas", w.lambdas},
              {"scales", w.scales},
              {"imbalances", w.imbalances},
              {"ratios", w.ratios},
              {"n", w.train.n},
              {"input_std", w.train.input_std},
              {"noise_std", w.train.noise_std},
              {"lr", w.train.lr},
              {"batch", w.train.batch},
              {"steps", w.train.steps},
              {"threads", w.train.threads}};
}

json section_json(const CollapseConfig& cc) {
  return json{{"n", cc.n},
              {"d", cc.d},
              {"p", cc.p},
              {"c", cc.c},
              {"init_scale", cc.init_scale},
              {"features_trainable", cc.features_trainable},
              {"target_loss", cc.target_loss},
              {"t_end", cc.flow.t_end}};
}

json section_json(const EmergeSettings& e) {
  return json{{"mode", e.mode},     {"p_star", e.p_star},
              {"p", e.p},           {"alpha", e.alpha},
              {"s", e.s},           {"u0", e.u0},
              {"points", e.points}, {"trials", e.trials},
              {"shots", e.shots},   {"sizes", e.sizes},
              {"widths", e.widths}};
}

json section_json(const GrokSettings& g) {
  return json{{"preset", g.preset},
              {"width", g.cfg.width},
              {"depth", g.cfg.depth},
              {"weight_init_ratio", g.cfg.weight_init_ratio},
              {"target_scale", g.cfg.target_scale},
              {"input_scale", g.cfg.input_scale},
              {"output_scale", g.cfg.output_scale},
              {"lr", g.cfg.lr},
              {"weight_decay", g.cfg.weight_decay},
              {"batch", g.cfg.batch},
              {"epochs", g.cfg.epochs},
              {"acc_threshold", g.cfg.acc_threshold},
              {"n_train", g.n_train},
              {"n_test", g.n_test},
              {"margin", g.margin}};
}

json config_json(const ExperimentConfig& cfg) {
  json j;
  j["command"] = command_name(cfg.command);
  j["output_dir"] = cfg.output_dir;
  j["seed"] = cfg.seed;
  j["format"] = cfg.format == OutputFormat::kCsv ? "csv" : "csv+svg";
  switch (cfg.command) {
    case Command::kSimulate: j["simulate"] = section_json(cfg.simulate); break;
    case Command::kSweep: j["sweep"] = section_json(cfg.sweep); break;
    case Command::kCollapse: j["collapse"] = section_json(cfg.collapse); break;
    case Command::kEmerge: j["emerge"] = section_json(cfg.emerge); break;
    case Command::kGrok: j["grok"] = section_json(cfg.grok); break;
    case Command::kValidate: break;
  }
  return j;
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text,
                              const std::string& command_override) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: malformed JSON: ") + e.what());
  }
  if (!root.is_object())
    throw ConfigError("config /: top level must be a JSON object");

  Cursor cur(root, "");
  ExperimentConfig cfg;
  const std::string fallback =
      command_override.empty() ? "validate" : command_override;
  const std::string cmd = cur.str("command", fallback);
  if (!command_override.empty() && cmd != command_override)
    throw ConfigError("config /command: '" + cmd +
                      "' does not match the invoked command '" +
                      command_override + "'");
  cfg.command = parse_command(cmd);
  cfg.output_dir = cur.str("output_dir", cfg.output_dir);
  if (cfg.output_dir.empty())
    throw ConfigError("config /output_dir: must not be empty");
  cfg.seed = cur.uinteger("seed", 0);
  const std::string fmt = cur.str("format", "csv");
  if (fmt == "csv")
    cfg.format = OutputFormat::kCsv;
  else if (fmt == "csv+svg")
    cfg.format = OutputFormat::kCsvSvg;
  else
    throw ConfigError("config /format: expected csv | csv+svg");

  switch (cfg.command) {
    case Command::kSimulate:
      cfg.simulate = parse_simulate(cur.child("simulate"));
      break;
    case Command::kSweep:
      cfg.sweep = parse_sweep(cur.child("sweep"));
      break;
    case Command::kCollapse:
      cfg.collapse = parse_collapse(cur.child("collapse"));
      break;
    case Command::kEmerge:
      cfg.emerge = parse_emerge(cur.child("emerge"));
      break;
    case Command::kGrok:
      cfg.grok = parse_grok(cur.child("grok"));
      break;
    case Command::kValidate: {
      Cursor v = cur.child("validate");
      v.finish();
      break;
    }
  }
  cur.finish();
  return cfg;
}

ExperimentConfig load_config(const std::string& path,
                             const std::string& command_override) {
  return parse_config(read_text_file(path), command_override);
}

std::string resolved_config_json(const ExperimentConfig& cfg) {
  return config_json(cfg).dump(2) + "\n";
}

// --- experiment runners ---

namespace {

struct Artifact {
  std::string name;
  std::string content;
};

std::string metric_csv(
    const std::vector<std::pair<std::string, double>>& rows) {
  std::string out = "metric,value\n";
  for (const auto& [name, value] : rows)
    out += name + "," + format_double(value) + "\n";
  return out;
}

std::vector<std::vector<double>> table_from(
    const Trajectory& traj, const std::vector<std::string>& order) {
  std::vector<std::vector<double>> rows;
  rows.reserve(traj.times.size());
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    std::vector<double> row;
    row.reserve(order.size() + 1);
    row.push_back(traj.times[i]);
    for (const auto& name : order) row.push_back(traj.series_for(name)[i]);
    rows.push_back(std::move(row));
  }
  return rows;
}

// Shared-basis two-layer diagonal state: every mode starts at product
// mode_scale with layer imbalance lambda. The larger singular value is the
// cancellation-free root; dividing out the product keeps the realized
// imbalance exact even when |lambda| dwarfs the product.
ParamState aligned_square_state(int d, double lambda, double mode_scale) {
  const double big = std::sqrt(
      0.5 * (std::abs(lambda) +
             std::sqrt(lambda * lambda + 4.0 * mode_scale * mode_scale)));
  const double small = mode_scale / big;
  const double s2 = lambda >= 0.0 ? big : small;
  const double s1 = lambda >= 0.0 ? small : big;
  ParamState state;
  state.t = 0.0;
  state.layers = {s1 * Eigen::MatrixXd::Identity(d, d),
                  s2 * Eigen::MatrixXd::Identity(d, d)};
  return state;
}

double slowest_sigmoidal_end(const std::vector<double>& scales,
                             const std::vector<double>& rates, double u0) {
  double t_end = 0.0;
  for (std::size_t i = 0; i < scales.size(); ++i) {
    ModeParams mode{scales[i], rates[i], u0};
    t_end = std::max(t_end, 5.0 * sigmoidal_crossing_time(0.99, mode));
  }
  return t_end;
}

void run_simulate_cmd(const ExperimentConfig& xc, std::vector<Artifact>& out,
                      std::string& summary) {
  const SimulateSettings& s = xc.simulate;
  ModelSpec spec;
  TargetSpec target = TargetSpec::Scales(to_vector(s.scales));
  InputStatistics stats = InputStatistics::Whitened(1);
  ParamState init;
  double t_end = s.t_end;

  if (s.family == "elementwise") {
    spec.family = Family::kDiagLnn;
    spec.d = s.d;
    spec.c = 1;
    stats = InputStatistics::Population(to_vector(s.variances));
    init = diag_balanced_state(s.d, s.u0);
    if (t_end <= 0.0) t_end = slowest_sigmoidal_end(s.scales, s.variances, s.u0);
  } else if (s.family == "one-layer") {
    spec.family = Family::kLinear;
    spec.d = s.d;
    spec.c = 1;
    stats = InputStatistics::Population(to_vector(s.variances));
    init = make_linear_state(Eigen::MatrixXd::Zero(s.d, 1));
    if (t_end <= 0.0) {
      const double r_min =
          *std::min_element(s.variances.begin(), s.variances.end());
      t_end = 5.0 / r_min;
    }
  } else if (s.family == "dense") {
    spec.family = Family::kLnn;
    spec.d = s.d;
    spec.p = s.d;
    spec.c = s.d;
    Eigen::MatrixXd corr = to_vector(s.scales).asDiagonal();
    target = TargetSpec::Correlation(corr);
    stats = InputStatistics::Whitened(s.d);
    init = aligned_square_state(s.d, s.lambda, s.init_scale);
    if (t_end <= 0.0) {
      std::vector<double> unit_rates(s.scales.size(), 1.0);
      t_end = slowest_sigmoidal_end(s.scales, unit_rates, s.init_scale);
      if (std::abs(s.lambda) >= 1.0)
        t_end = std::min(t_end, 10.0 / std::abs(s.lambda));
    }
  } else {  // wide-scalar
    spec.family = Family::kWideScalar;
    spec.d = 1;
    spec.c = 1;
    spec.p = s.p;
    spec.z = s.z;
    init.t = 0.0;
    const double entry = std::sqrt(s.u0 * s.z / s.p);
    init.layers = {Eigen::MatrixXd::Constant(s.p, 1, entry),
                   Eigen::MatrixXd::Constant(s.p, 1, entry)};
    if (t_end <= 0.0) {
      const GammaSolution sol = gamma_solution(
          init.layers[0].col(0), init.layers[1].col(0), s.scales[0], s.z);
      t_end = s.z * std::log(1e8) / (2.0 * std::sqrt(sol.disc));
    }
  }
  spec.validate();

  FlowConfig flow;
  flow.t_end = t_end;
  flow.rel_tol = s.rel_tol;
  flow.abs_tol = s.abs_tol;
  flow.record_every = t_end / s.points;
  flow.seed = xc.seed;
  const auto observers = standard_observers(spec, target, stats, init);
  const Trajectory traj = integrate(spec, init, target, stats, flow, observers);

  std::vector<std::string> order;
  for (int k = 1; k <= spec.mode_count(); ++k)
    order.push_back("mode_" + std::to_string(k));
  order.push_back("loss");
  order.push_back("conservation_drift");
  std::vector<std::string> columns = {"t"};
  columns.insert(columns.end(), order.begin(), order.end());
  out.push_back({"trajectory.csv", to_csv(columns, table_from(traj, order))});

  if (xc.format == OutputFormat::kCsvSvg) {
    std::vector<std::string> mode_names(order.begin(),
                                        order.end() - 2);
    std::vector<std::vector<double>> mode_series;
    for (const auto& name : mode_names)
      mode_series.push_back(traj.series_for(name));
    out.push_back({"modes.svg",
                   svg_line_chart("mode values: " + s.family, "t", mode_names,
                                  traj.times, mode_series)});
    out.push_back({"loss.svg",
                   svg_line_chart("loss (log scale): " + s.family, "t",
                                  {"loss"}, traj.times,
                                  {traj.series_for("loss")}, /*log_y=*/true)});
  }

  const double final_loss = traj.series_for("loss").back();
  summary = "simulate " + s.family + ": t_end=" + format_double(t_end) +
            " final_loss=" + format_double(final_loss) +
            (traj.converged ? " (converged)" : "");
}

void run_sweep_cmd(const ExperimentConfig& xc, std::vector<Artifact>& out,
                   std::string& summary) {
  const SweepSettings& w = xc.sweep;
  GridTrainConfig train = w.train;
  train.seed = derive_seed(xc.seed, 0x73776565ULL);

  RegimeGrid grid;
  if (w.grid == "lambda-scale") {
    RegimeGridConfig gc;
    gc.d = w.d;
    gc.p = w.p;
    gc.c = w.c;
    gc.lambdas = to_vector(w.lambdas);
    gc.scales = to_vector(w.scales);
    gc.train = train;
    grid = regime_grid(gc);
  } else if (w.grid == "funnel" || w.grid == "anti-funnel") {
    FunnelGridConfig fc;
    fc.shape = w.grid == "funnel" ? FunnelShape::kFunnel
                                  : FunnelShape::kAntiFunnel;
    fc.wide = w.wide;
    fc.mid = w.mid;
    fc.narrow = w.narrow;
    fc.lambdas = to_vector(w.lambdas);
    fc.scales = to_vector(w.scales);
    fc.train = train;
    grid = funnel_grid(fc);
  } else {
    RatioGridConfig rc;
    rc.d = w.d;
    rc.p = w.p;
    rc.c = w.c;
    rc.imbalances = to_vector(w.imbalances);
    rc.ratios = to_vector(w.ratios);
    rc.base_norm = w.base_norm;
    rc.train = train;
    grid = ratio_grid(rc);
  }

  std::vector<std::vector<double>> rows;
  double total = 0.0;
  int finite = 0;
  for (Eigen::Index i = 0; i < grid.axis1.size(); ++i) {
    for (Eigen::Index j = 0; j < grid.axis2.size(); ++j) {
      rows.push_back({grid.axis1(i), grid.axis2(j), grid.cells(i, j)});
      if (std::isfinite(grid.cells(i, j))) {
        total += grid.cells(i, j);
        ++finite;
      }
    }
  }
  out.push_back(
      {"grid.csv",
       to_csv({grid.axis1_name, grid.axis2_name, "kernel_distance"}, rows)});

  if (xc.format == OutputFormat::kCsvSvg) {
    std::vector<double> axis1(grid.axis1.data(),
                              grid.axis1.data() + grid.axis1.size());
    std::vector<double> axis2(grid.axis2.data(),
                              grid.axis2.data() + grid.axis2.size());
    std::vector<std::vector<double>> cells;
    for (Eigen::Index i = 0; i < grid.axis1.size(); ++i) {
      std::vector<double> row;
      for (Eigen::Index j = 0; j < grid.axis2.size(); ++j)
        row.push_back(grid.cells(i, j));
      cells.push_back(std::move(row));
    }
    out.push_back({"grid.svg",
                   svg_heatmap("kernel distance: " + w.grid, axis1, axis2,
                               cells, grid.axis1_name, grid.axis2_name)});
  }

  char hash_hex[32];
  std::snprintf(hash_hex, sizeof(hash_hex), "%016llx",
                static_cast<unsigned long long>(grid.config_hash));
  summary = "sweep " + w.grid + ": " + std::to_string(grid.axis1.size()) +
            "x" + std::to_string(grid.axis2.size()) +
            " cells, mean distance " +
            format_double(finite ? total / finite : 0.0) + ", config " +
            hash_hex;
}

void run_collapse_cmd(const ExperimentConfig& xc, std::vector<Artifact>& out,
                      std::string& summary) {
  CollapseConfig cc = xc.collapse;
  cc.seed = derive_seed(xc.seed, 0x636f6cULL);
  cc.flow.seed = cc.seed;
  const CollapseResult res = train_collapse(cc);

  std::vector<std::string> columns = {"t"};
  columns.insert(columns.end(), res.trajectory.series_names.begin(),
                 res.trajectory.series_names.end());
  out.push_back({"trajectory.csv",
                 to_csv(columns, table_from(res.trajectory,
                                            res.trajectory.series_names))});
  out.push_back(
      {"report.csv",
       metric_csv({{"final_loss", res.final_loss},
                   {"nc1_ratio", res.final_report.nc1_ratio},
                   {"nc2_max_dev", res.final_report.nc2_max_dev},
                   {"nc3_max_dev", res.final_report.nc3_max_dev},
                   {"nc4_agreement", res.final_report.nc4_agreement},
                   {"effective_rank",
                    static_cast<double>(res.final_report.effective_rank)}})});

  if (xc.format == OutputFormat::kCsvSvg) {
    const std::vector<std::string> names = {"nc1_ratio", "nc2_max_dev",
                                            "nc4_agreement"};
    std::vector<std::vector<double>> series;
    for (const auto& n : names) series.push_back(res.trajectory.series_for(n));
    out.push_back({"collapse.svg",
                   svg_line_chart("collapse metrics", "t", names,
                                  res.trajectory.times, series)});
    out.push_back({"loss.svg",
                   svg_line_chart("training loss (log scale)", "t", {"loss"},
                                  res.trajectory.times,
                                  {res.trajectory.series_for("loss")},
                                  /*log_y=*/true)});
  }

  summary = "collapse: final_loss=" + format_double(res.final_loss) +
            " rank=" + std::to_string(res.final_report.effective_rank) +
            " nc1=" + format_double(res.final_report.nc1_ratio) +
            " nc2=" + format_double(res.final_report.nc2_max_dev) +
            " nc4=" + format_double(res.final_report.nc4_agreement);
}

void run_emerge_cmd(const ExperimentConfig& xc, std::vector<Artifact>& out,
                    std::string& summary) {
  const EmergeSettings& e = xc.emerge;
  SkillEnsemble ens = SkillEnsemble::PowerLaw(e.p_star, e.p, e.alpha, e.s);

  if (e.mode == "time") {
    const double slowest = ens.freq(e.p_star - 1);
    ModeParams mode{e.s, slowest, e.u0};
    const double t_end = 1.05 * sigmoidal_crossing_time(0.999, mode);
    Eigen::VectorXd t_grid(e.points);
    for (int i = 0; i < e.points; ++i)
      t_grid(i) = t_end * static_cast<double>(i) / (e.points - 1);
    const Eigen::MatrixXd curves = emergence_time_curve(ens, e.u0, t_grid);
    const ScalingCurve loss = scaling_curve(ens, Resource::kTime, t_grid, e.u0);

    std::vector<std::string> columns = {"t", "loss"};
    for (int k = 1; k <= e.p_star; ++k)
      columns.push_back("skill_" + std::to_string(k));
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < e.points; ++i) {
      std::vector<double> row = {t_grid(i), loss.loss(i)};
      for (int k = 0; k < e.p_star; ++k) row.push_back(curves(i, k));
      rows.push_back(std::move(row));
    }
    out.push_back({"emergence.csv", to_csv(columns, rows)});

    if (xc.format == OutputFormat::kCsvSvg) {
      const int shown = std::min(8, e.p_star);
      std::vector<std::string> names;
      std::vector<std::vector<double>> series;
      for (int k = 0; k < shown; ++k) {
        names.push_back("skill_" + std::to_string(k + 1));
        std::vector<double> s_k(e.points);
        for (int i = 0; i < e.points; ++i) s_k[i] = curves(i, k);
        series.push_back(std::move(s_k));
      }
      std::vector<double> ts(t_grid.data(), t_grid.data() + e.points);
      out.push_back({"emergence.svg",
                     svg_line_chart("skill strengths over time", "t", names,
                                    ts, series)});
    }
    summary = "emerge time: " + std::to_string(e.p_star) + " skills, t_end=" +
              format_double(t_grid(e.points - 1));
  } else if (e.mode == "data") {
    std::vector<long> sizes;
    for (double v : e.sizes) sizes.push_back(std::lround(v));
    const Eigen::VectorXi shots = Eigen::VectorXi::Constant(e.p_star, e.shots);
    const Eigen::MatrixXd probs = emergence_data(
        ens, sizes, shots, e.trials, derive_seed(xc.seed, 0x656d65ULL));

    std::vector<std::string> columns = {"n"};
    for (int k = 1; k <= e.p_star; ++k)
      columns.push_back("skill_" + std::to_string(k));
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < sizes.size(); ++i) {
      std::vector<double> row = {static_cast<double>(sizes[i])};
      for (int k = 0; k < e.p_star; ++k)
        row.push_back(probs(static_cast<Eigen::Index>(i), k));
      rows.push_back(std::move(row));
    }
    out.push_back({"emergence.csv", to_csv(columns, rows)});
    summary = "emerge data: " + std::to_string(sizes.size()) + " sizes x " +
              std::to_string(e.trials) + " trials";
  } else {  // params
    std::vector<int> widths;
    for (double v : e.widths) widths.push_back(static_cast<int>(std::lround(v)));
    const Eigen::MatrixXi learned = emergence_params(ens, widths);
    const ScalingCurve curve =
        scaling_curve(ens, Resource::kParams, to_vector(e.widths), e.u0);
    // Widths at or beyond the skill count drive the loss to exactly zero;
    // the power-law fit only makes sense on the positive tail.
    std::vector<double> fit_x, fit_y;
    for (Eigen::Index i = 0; i < curve.loss.size(); ++i) {
      if (curve.loss(i) > 0.0) {
        fit_x.push_back(curve.resource(i));
        fit_y.push_back(curve.loss(i));
      }
    }
    double slope = std::numeric_limits<double>::quiet_NaN();
    if (fit_x.size() >= 2) {
      ScalingCurve positive;
      positive.resource = to_vector(fit_x);
      positive.loss = to_vector(fit_y);
      slope = log_log_slope(positive);
    }

    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < widths.size(); ++i) {
      rows.push_back({static_cast<double>(widths[i]),
                      curve.loss(static_cast<Eigen::Index>(i)),
                      static_cast<double>(
                          learned.row(static_cast<Eigen::Index>(i)).sum())});
    }
    out.push_back(
        {"emergence.csv", to_csv({"width", "loss", "skills_learned"}, rows)});
    if (xc.format == OutputFormat::kCsvSvg) {
      std::vector<double> xs(e.widths.begin(), e.widths.end());
      std::vector<double> ys(curve.loss.data(),
                             curve.loss.data() + curve.loss.size());
      out.push_back({"scaling.svg",
                     svg_line_chart("loss vs width (log scale)", "width",
                                    {"loss"}, xs, {ys}, /*log_y=*/true)});
    }
    summary = "emerge params: log-log slope " + format_double(slope);
  }
}

void run_grok_cmd(const ExperimentConfig& xc, std::vector<Artifact>& out,
                  std::string& summary) {
  const GrokSettings& g = xc.grok;
  const GrokDataset data = load_grok_dataset(
      g.n_train, g.n_test, g.margin, derive_seed(xc.seed, 0x64617461ULL));
  const GrokResult res =
      run_grok(g.cfg, data, derive_seed(xc.seed, 0x67726f6bULL));

  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < res.train_loss.size(); ++i) {
    rows.push_back({static_cast<double>(i + 1), res.train_loss[i],
                    res.test_loss[i], res.train_acc[i], res.test_acc[i]});
  }
  out.push_back(
      {"epochs.csv",
       to_csv({"epoch", "train_loss", "test_loss", "train_acc", "test_acc"},
              rows)});
  out.push_back(
      {"summary.csv",
       metric_csv({{"t_train", static_cast<double>(res.t_train)},
                   {"t_test", static_cast<double>(res.t_test)},
                   {"gap", static_cast<double>(res.gap)},
                   {"train_reached", res.train_reached ? 1.0 : 0.0},
                   {"test_reached", res.test_reached ? 1.0 : 0.0},
                   {"final_train_acc", res.train_acc.back()},
                   {"final_test_acc", res.test_acc.back()}})});

  if (xc.format == OutputFormat::kCsvSvg) {
    std::vector<double> epochs(res.train_acc.size());
    for (std::size_t i = 0; i < epochs.size(); ++i)
      epochs[i] = static_cast<double>(i + 1);
    out.push_back({"accuracy.svg",
                   svg_line_chart("accuracy: " + g.preset + " (" + data.source +
                                      ")",
                                  "epoch", {"train_acc", "test_acc"}, epochs,
                                  {res.train_acc, res.test_acc})});
  }

  summary = "grok " + g.preset + " (" + data.source + "): t_train=" +
            std::to_string(res.t_train) + " t_test=" +
            std::to_string(res.t_test) + " gap=" + std::to_string(res.gap);
}

void run_validate_cmd(const ExperimentConfig& xc, std::vector<Artifact>& out,
                      std::string& summary) {
  const std::vector<ValidationRow> rows = run_validation(xc.seed);
  std::string csv = "check,max_deviation,tolerance,pass,seconds\n";
  std::string text;
  bool all_pass = true;
  for (const auto& r : rows) {
    csv += r.check + "," + format_double(r.max_deviation) + "," +
           format_double(r.tolerance) + "," + (r.pass ? "1" : "0") + "," +
           format_double(r.seconds) + "\n";
    text += r.check + ": max deviation " + format_double(r.max_deviation) +
            " (tolerance " + format_double(r.tolerance) + ") " +
            (r.pass ? "PASS" : "FAIL") + "\n";
    all_pass = all_pass && r.pass;
  }
  out.push_back({"validation.csv", std::move(csv)});
  summary = text + (all_pass ? "all closed forms confirmed"
                             : "closed-form mismatch detected");
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& cfg) {
  std::error_code ec;
  std::filesystem::create_directories(cfg.output_dir, ec);
  if (ec)
    throw Error("run: cannot create output directory " + cfg.output_dir +
                ": " + ec.message());

  std::vector<Artifact> artifacts;
  std::string summary;
  switch (cfg.command) {
    case Command::kSimulate: run_simulate_cmd(cfg, artifacts, summary); break;
    case Command::kSweep: run_sweep_cmd(cfg, artifacts, summary); break;
    case Command::kCollapse: run_collapse_cmd(cfg, artifacts, summary); break;
    case Command::kEmerge: run_emerge_cmd(cfg, artifacts, summary); break;
    case Command::kGrok: run_grok_cmd(cfg, artifacts, summary); break;
    case Command::kValidate: run_validate_cmd(cfg, artifacts, summary); break;
  }

  RunResult result;
  result.summary = summary;
  json files = json::array();
  for (const Artifact& a : artifacts) {
    write_text_file(cfg.output_dir + "/" + a.name, a.content);
    const std::uint64_t hash = fnv1a64(a.content);
    char hex[32];
    std::snprintf(hex, sizeof(hex), "%016llx",
                  static_cast<unsigned long long>(hash));
    files.push_back(json{{"path", a.name}, {"fnv1a64", hex}});
    result.artifacts.push_back({a.name, hash});
  }

  json manifest;
  manifest["command"] = command_name(cfg.command);
  manifest["config"] = config_json(cfg);
  manifest["files"] = files;
  write_text_file(cfg.output_dir + "/manifest.json", manifest.dump(2) + "\n");
  return result;
}

// --- closed-form versus integrator suite ---

namespace {

FlowConfig validation_flow(double t_end) {
  FlowConfig flow;
  flow.t_end = t_end;
  flow.rel_tol = 1e-10;
  flow.abs_tol = 1e-12;
  flow.record_every = t_end / 400.0;
  return flow;
}

}  // namespace

std::vector<ValidationRow> run_validation(std::uint64_t seed) {
  std::vector<ValidationRow> rows;
  constexpr double kTol = 1e-6;

  auto timed = [&rows](const std::string& name, double tol, auto&& body) {
    const auto t0 = std::chrono::steady_clock::now();
    const double dev = body();
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    rows.push_back({name, dev, tol, dev <= tol, secs});
  };

  timed("elementwise-sigmoidal", kTol, [&]() {
    const int d = 20;
    Rng rng(derive_seed(seed, 0x76616c31ULL));
    const double u0 = 1e-7;
    std::vector<double> scales(d), rates(d);
    for (int i = 0; i < d; ++i) {
      scales[static_cast<std::size_t>(i)] = 0.5 + 1.5 * rng.uniform();
      rates[static_cast<std::size_t>(i)] =
          std::pow(10.0, -2.0 * i / (d - 1));  // 1 down to 0.01
    }
    ModelSpec spec;
    spec.family = Family::kDiagLnn;
    spec.d = d;
    spec.c = 1;
    const TargetSpec target = TargetSpec::Scales(to_vector(scales));
    const InputStatistics stats =
        InputStatistics::Population(to_vector(rates));
    const ParamState init = diag_balanced_state(d, u0);
    const double t_end = slowest_sigmoidal_end(scales, rates, u0);
    const Trajectory traj =
        integrate(spec, init, target, stats, validation_flow(t_end),
                  standard_observers(spec, target, stats, init));
    double dev = 0.0;
    for (int i = 0; i < d; ++i) {
      const auto& series = traj.series_for("mode_" + std::to_string(i + 1));
      ModeParams mode{scales[static_cast<std::size_t>(i)],
                      rates[static_cast<std::size_t>(i)], u0};
      for (std::size_t k = 0; k < traj.times.size(); ++k)
        dev = std::max(dev,
                       std::abs(series[k] - sigmoidal_mode(traj.times[k], mode)));
    }
    return dev;
  });

  timed("one-layer-exponential", kTol, [&]() {
    const int d = 20;
    Rng rng(derive_seed(seed, 0x76616c32ULL));
    std::vector<double> scales(d), rates(d);
    for (int i = 0; i < d; ++i) {
      scales[static_cast<std::size_t>(i)] = 0.5 + 1.5 * rng.uniform();
      rates[static_cast<std::size_t>(i)] = std::pow(10.0, -2.0 * i / (d - 1));
    }
    ModelSpec spec;
    spec.family = Family::kLinear;
    spec.d = d;
    spec.c = 1;
    const TargetSpec target = TargetSpec::Scales(to_vector(scales));
    const InputStatistics stats =
        InputStatistics::Population(to_vector(rates));
    const ParamState init = make_linear_state(Eigen::MatrixXd::Zero(d, 1));
    const double t_end = 5.0 / rates[d - 1];
    const Trajectory traj =
        integrate(spec, init, target, stats, validation_flow(t_end),
                  standard_observers(spec, target, stats, init));
    double dev = 0.0;
    for (int i = 0; i < d; ++i) {
      const auto& series = traj.series_for("mode_" + std::to_string(i + 1));
      for (std::size_t k = 0; k < traj.times.size(); ++k)
        dev = std::max(
            dev, std::abs(series[k] -
                          linear_mode(traj.times[k],
                                      scales[static_cast<std::size_t>(i)],
                                      rates[static_cast<std::size_t>(i)])));
    }
    return dev;
  });

  timed("dense-singular-modes", kTol, [&]() {
    const int d = 20;
    Rng rng(derive_seed(seed, 0x76616c33ULL));
    const double a0_sq = 1e-4;
    Eigen::VectorXd rho(d);
    for (int i = 0; i < d; ++i)
      rho(i) = 3.0 * std::pow(10.0, -1.0 * i / (d - 1));  // 3 down to 0.3
    const Eigen::MatrixXd u_basis = random_orthogonal(rng, d);
    const Eigen::MatrixXd v_basis = random_orthogonal(rng, d);
    const Eigen::MatrixXd corr =
        u_basis * rho.asDiagonal() * v_basis.transpose();

    ModelSpec spec;
    spec.family = Family::kLnn;
    spec.d = d;
    spec.p = d;
    spec.c = d;
    const TargetSpec target = TargetSpec::Correlation(corr);
    const InputStatistics stats = InputStatistics::Whitened(d);
    ParamState init;
    init.t = 0.0;
    const double sigma = std::sqrt(a0_sq);
    init.layers = {sigma * u_basis, sigma * v_basis.transpose()};

    std::vector<double> rho_v(rho.data(), rho.data() + d);
    std::vector<double> unit(static_cast<std::size_t>(d), 1.0);
    const double t_end = slowest_sigmoidal_end(rho_v, unit, a0_sq);
    const Trajectory traj =
        integrate(spec, init, target, stats, validation_flow(t_end),
                  standard_observers(spec, target, stats, init));
    double dev = 0.0;
    for (int i = 0; i < d; ++i) {
      const auto& series = traj.series_for("mode_" + std::to_string(i + 1));
      for (std::size_t k = 0; k < traj.times.size(); ++k)
        dev = std::max(dev, std::abs(series[k] -
                                     saxe_mode(traj.times[k], rho(i), a0_sq)));
    }
    return dev;
  });

  timed("wide-scalar-gamma", kTol, [&]() {
    Rng rng(derive_seed(seed, 0x76616c34ULL));
    const int p = 20;
    const double z = 4.0;
    double dev = 0.0;

    auto check_instance = [&](const Eigen::VectorXd& a0,
                              const Eigen::VectorXd& b0, double s) {
      const GammaSolution sol = gamma_solution(a0, b0, s, z);
      ModelSpec spec;
      spec.family = Family::kWideScalar;
      spec.d = 1;
      spec.c = 1;
      spec.p = p;
      spec.z = z;
      Eigen::VectorXd s_target(1);
      s_target(0) = s;
      const TargetSpec target = TargetSpec::Scales(s_target);
      const InputStatistics stats = InputStatistics::Whitened(1);
      ParamState init;
      init.t = 0.0;
      init.layers = {a0, b0};

      auto observers = standard_observers(spec, target, stats, init);
      for (int idx : {0, p - 1}) {
        observers.push_back({"a_" + std::to_string(idx),
                             [idx](const ParamState& st) {
                               return st.layers[0](idx, 0);
                             }});
        observers.push_back({"b_" + std::to_string(idx),
                             [idx](const ParamState& st) {
                               return st.layers[1](idx, 0);
                             }});
      }
      const double t_end = z * std::log(1e8) / (2.0 * std::sqrt(sol.disc));
      const Trajectory traj = integrate(spec, init, target, stats,
                                        validation_flow(t_end), observers);
      const auto& output = traj.series_for("mode_1");
      for (std::size_t k = 0; k < traj.times.size(); ++k) {
        const double t = traj.times[k];
        dev = std::max(dev, std::abs(output[k] - gamma_output(sol, t)));
        const auto [a_t, b_t] = reconstruct_params(sol, t);
        for (int idx : {0, p - 1}) {
          dev = std::max(
              dev, std::abs(traj.series_for("a_" + std::to_string(idx))[k] -
                            a_t(idx)));
          dev = std::max(
              dev, std::abs(traj.series_for("b_" + std::to_string(idx))[k] -
                            b_t(idx)));
        }
      }
    };

    // Growing branch: mixed-sign random init well below the target.
    check_instance(rng.gaussian_vector(p, 0.25), rng.gaussian_vector(p, 0.25),
                   1.5);
    // Shrinking branch: initial output overshoots the target.
    const double s_small = 0.8;
    const double entry = std::sqrt(2.0 * s_small * z / p);
    check_instance(Eigen::VectorXd::Constant(p, entry),
                   Eigen::VectorXd::Constant(p, entry), s_small);
    return dev;
  });

  timed("transition-balanced", kTol, [&]() {
    const int d = 8;
    const double s0 = 1e-6;
    Eigen::VectorXd rho(d);
    for (int i = 0; i < d; ++i)
      rho(i) = 2.0 * std::pow(10.0, -0.6 * i / (d - 1));  // 2 down to ~0.5
    ModelSpec spec;
    spec.family = Family::kLnn;
    spec.d = d;
    spec.p = d;
    spec.c = d;
    const TargetSpec target =
        TargetSpec::Correlation(Eigen::MatrixXd(rho.asDiagonal()));
    const InputStatistics stats = InputStatistics::Whitened(d);
    const ParamState init = aligned_square_state(d, 0.0, s0);

    std::vector<double> rho_v(rho.data(), rho.data() + d);
    std::vector<double> unit(static_cast<std::size_t>(d), 1.0);
    const double t_end = slowest_sigmoidal_end(rho_v, unit, s0);
    const Trajectory traj =
        integrate(spec, init, target, stats, validation_flow(t_end),
                  standard_observers(spec, target, stats, init));
    double dev = 0.0;
    for (int i = 0; i < d; ++i) {
      const auto& series = traj.series_for("mode_" + std::to_string(i + 1));
      for (std::size_t k = 0; k < traj.times.size(); ++k) {
        const double gamma =
            balanced_transition(traj.times[k], 0.0, rho(i), s0, 1.0);
        const double predicted = s0 + gamma * (rho(i) - s0);
        dev = std::max(dev, std::abs(series[k] - predicted));
      }
    }
    return dev;
  });

  timed("transition-imbalanced", kTol, [&]() {
    const int d = 6;
    const double s0 = 1e-3;
    Eigen::VectorXd rho(d);
    for (int i = 0; i < d; ++i) rho(i) = 2.0 * std::pow(10.0, -0.6 * i / (d - 1));
    double dev = 0.0;
    for (double lambda : {4000.0, -4000.0}) {
      ModelSpec spec;
      spec.family = Family::kLnn;
      spec.d = d;
      spec.p = d;
      spec.c = d;
      const TargetSpec target =
          TargetSpec::Correlation(Eigen::MatrixXd(rho.asDiagonal()));
      const InputStatistics stats = InputStatistics::Whitened(d);
      const ParamState init = aligned_square_state(d, lambda, s0);
      const double t_end = 5.0 / std::abs(lambda);
      const Trajectory traj =
          integrate(spec, init, target, stats, validation_flow(t_end),
                    standard_observers(spec, target, stats, init));
      for (int i = 0; i < d; ++i) {
        const auto& series = traj.series_for("mode_" + std::to_string(i + 1));
        for (std::size_t k = 0; k < traj.times.size(); ++k) {
          const double gamma =
              balanced_transition(traj.times[k], lambda, rho(i), s0, 1.0);
          const double predicted = s0 + gamma * (rho(i) - s0);
          dev = std::max(dev, std::abs(series[k] - predicted));
        }
      }
    }
    return dev;
  });

  return rows;
}

}  // namespace lindyn
