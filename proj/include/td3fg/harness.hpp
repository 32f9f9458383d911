#pragma once

// Experiment configuration, multi-seed runs, ablations and metrics output.
//
// Config grammar (one entry per line):
//
//   # comment            ignored, as are blank lines
//   key = value          root key, or a dotted key such as agent.gamma
//   [section]            following keys are read as section.key
//
// Values are bare text; surrounding whitespace is stripped. Lists
// (seeds, agent.hidden) are comma separated. An empty value leaves an
// optional path unset. Every key is listed in config_keys().

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "td3fg/agent.hpp"
#include "td3fg/checkpoint.hpp"
#include "td3fg/demos.hpp"
#include "td3fg/error.hpp"
#include "td3fg/generator.hpp"

namespace td3fg {

inline constexpr const char* kMetricsHeader =
    "step,eval_return_mean,eval_return_std,critic_loss,actor_q_term,bc_term,epsilon,delta,alpha,"
    "beta,wall_clock_s";

struct ExperimentConfig {
  std::string env;
  Variant variant = Variant::TD3fG;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4, 5};
  /// Tmax; 0 means the env's default budget.
  std::size_t steps = 0;
  std::size_t eval_interval = 1000;
  std::size_t eval_episodes = 10;
  std::string demos;
  std::string generator;
  std::string out;
  std::string run_id;
  /// Seeds run concurrently on this many threads.
  std::size_t jobs = 1;
  double t1_frac = 0.5;
  double t2_frac = 0.5;
  AgentConfig agent;
  /// Used only when a generator must be fitted from `demos`.
  GeneratorConfig bc;
  std::uint64_t bc_seed = 0;

  bool operator==(const ExperimentConfig&) const = default;

  void validate() const {
    if (seeds.empty()) throw ConfigError("seeds must be non-empty");
    if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
      throw ConfigError("seeds must be distinct");
    }
    if (steps == 0) throw ConfigError("steps must be positive");
    if (eval_interval == 0 || eval_episodes == 0) {
      throw ConfigError("eval_interval and eval_episodes must be positive");
    }
    if (steps < eval_interval) throw ConfigError("steps must be >= eval_interval");
    if (jobs == 0) throw ConfigError("jobs must be >= 1");
    if (!(t1_frac > 0.0 && t1_frac <= 1.0) || !(t2_frac > 0.0 && t2_frac <= 1.0)) {
      throw ConfigError("schedule fractions must be in (0, 1]");
    }
    env_spec(env);
    resolved_agent().validate();
    bc.validate();
  }

  /// Agent config with the schedule bound to this run's step budget.
  AgentConfig resolved_agent() const {
    AgentConfig a = agent;
    a.variant = variant;
    a.schedule = ScheduleConfig::from_fractions(steps, t1_frac, t2_frac);
    return a;
  }

  GeneratorConfig resolved_bc() const {
    GeneratorConfig g = bc;
    g.hidden = agent.hidden;
    g.hidden_activation = agent.hidden_activation;
    return g;
  }
};

inline std::size_t default_steps(const std::string& env) {
  return env == "point-reach" ? 30000 : 60000;
}

// ---------------------------------------------------------------------------
// Value codecs

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double parse_double(const std::string& key, const std::string& text) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  auto [p, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || p != end || text.empty()) {
    throw ConfigError("key '" + key + "': expected a number, got '" + text + "'");
  }
  return v;
}

inline std::uint64_t parse_uint(const std::string& key, const std::string& text) {
  std::uint64_t v = 0;
  const auto* end = text.data() + text.size();
  auto [p, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || p != end || text.empty()) {
    throw ConfigError("key '" + key + "': expected a non-negative integer, got '" + text + "'");
  }
  return v;
}

template <class T>
std::vector<T> parse_list(const std::string& key, const std::string& text) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(T(parse_uint(key, trim(item))));
  if (out.empty()) throw ConfigError("key '" + key + "': empty list");
  return out;
}

template <class T>
std::string join(const std::vector<T>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

inline HiddenActivation parse_hidden_activation(const std::string& text) {
  if (text == "relu") return HiddenActivation::Relu;
  if (text == "tanh") return HiddenActivation::Tanh;
  throw ConfigError("key 'agent.hidden_activation': expected relu or tanh, got '" + text + "'");
}

}  // namespace detail

struct ConfigKey {
  std::string name;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

/// Every accepted key, in echo order. Parsing and echo share this table.
inline const std::vector<ConfigKey>& config_keys() {
  using C = ExperimentConfig;
  using namespace detail;
  auto str = [](std::string C::*m) {
    return std::pair{[m](C& c, const std::string& v) { c.*m = v; },
                     [m](const C& c) { return c.*m; }};
  };
  auto size = [](auto member) {
    return std::pair{
        [member](C& c, const std::string& v) { member(c) = std::size_t(parse_uint("", v)); },
        [member](const C& c) { return std::to_string(member(const_cast<C&>(c))); }};
  };
  auto dbl = [](auto member) {
    return std::pair{[member](C& c, const std::string& v) { member(c) = parse_double("", v); },
                     [member](const C& c) { return fmt_double(member(const_cast<C&>(c))); }};
  };
  static const std::vector<ConfigKey> keys = [&] {
    std::vector<ConfigKey> k;
    auto add = [&](std::string name, auto codec) {
      auto [set, get] = codec;
      // Re-label codec errors with the key name.
      k.push_back({name,
                   [name, set](C& c, const std::string& v) {
                     try {
                       set(c, v);
                     } catch (const ConfigError& e) {
                       std::string msg = e.what();
                       const std::string blank = "key '': ";
                       if (msg.rfind(blank, 0) == 0) msg = msg.substr(blank.size());
                       if (msg.rfind("key '", 0) == 0) throw;
                       throw ConfigError("key '" + name + "': " + msg);
                     }
                   },
                   get});
    };
    add("env", str(&C::env));
    add("variant", std::pair{[](C& c, const std::string& v) { c.variant = variant_from_string(v); },
                             [](const C& c) { return to_string(c.variant); }});
    add("seeds", std::pair{[](C& c, const std::string& v) {
                             c.seeds = parse_list<std::uint64_t>("seeds", v);
                           },
                           [](const C& c) { return join(c.seeds); }});
    add("steps", size([](C& c) -> std::size_t& { return c.steps; }));
    add("eval_interval", size([](C& c) -> std::size_t& { return c.eval_interval; }));
    add("eval_episodes", size([](C& c) -> std::size_t& { return c.eval_episodes; }));
    add("demos", str(&C::demos));
    add("generator", str(&C::generator));
    add("out", str(&C::out));
    add("run_id", str(&C::run_id));
    add("jobs", size([](C& c) -> std::size_t& { return c.jobs; }));

    add("agent.gamma", dbl([](C& c) -> double& { return c.agent.gamma; }));
    add("agent.tau", dbl([](C& c) -> double& { return c.agent.tau; }));
    add("agent.policy_delay", size([](C& c) -> std::size_t& { return c.agent.policy_delay; }));
    add("agent.batch_size", size([](C& c) -> std::size_t& { return c.agent.batch_size; }));
    add("agent.target_noise", dbl([](C& c) -> double& { return c.agent.target_noise; }));
    add("agent.target_noise_clip",
        dbl([](C& c) -> double& { return c.agent.target_noise_clip; }));
    add("agent.actor_lr", dbl([](C& c) -> double& { return c.agent.actor_lr; }));
    add("agent.critic_lr", dbl([](C& c) -> double& { return c.agent.critic_lr; }));
    add("agent.buffer_capacity",
        size([](C& c) -> std::size_t& { return c.agent.buffer_capacity; }));
    add("agent.warmup_steps", size([](C& c) -> std::size_t& { return c.agent.warmup_steps; }));
    add("agent.demo_transitions",
        size([](C& c) -> std::size_t& { return c.agent.demo_transitions; }));
    add("agent.hidden", std::pair{[](C& c, const std::string& v) {
                                    c.agent.hidden = parse_list<std::size_t>("agent.hidden", v);
                                  },
                                  [](const C& c) { return join(c.agent.hidden); }});
    add("agent.hidden_activation",
        std::pair{[](C& c, const std::string& v) {
                    c.agent.hidden_activation = parse_hidden_activation(v);
                  },
                  [](const C& c) {
                    return std::string(
                        c.agent.hidden_activation == HiddenActivation::Relu ? "relu" : "tanh");
                  }});

    add("noise.zeta", dbl([](C& c) -> double& { return c.agent.noise.zeta; }));
    add("noise.sigma", dbl([](C& c) -> double& { return c.agent.noise.sigma; }));
    add("noise.mu", dbl([](C& c) -> double& { return c.agent.noise.mu; }));
    add("noise.dt", dbl([](C& c) -> double& { return c.agent.noise.dt; }));

    add("schedule.t1_frac", dbl([](C& c) -> double& { return c.t1_frac; }));
    add("schedule.t2_frac", dbl([](C& c) -> double& { return c.t2_frac; }));

    add("bc.epochs", size([](C& c) -> std::size_t& { return c.bc.epochs; }));
    add("bc.batch_size", size([](C& c) -> std::size_t& { return c.bc.batch_size; }));
    add("bc.lr", dbl([](C& c) -> double& { return c.bc.lr; }));
    add("bc.validation_fraction", dbl([](C& c) -> double& { return c.bc.validation_fraction; }));
    add("bc.early_stop_patience",
        size([](C& c) -> std::size_t& { return c.bc.early_stop_patience; }));
    add("bc.seed", std::pair{[](C& c, const std::string& v) { c.bc_seed = parse_uint("", v); },
                             [](const C& c) { return std::to_string(c.bc_seed); }});
    return k;
  }();
  return keys;
}

using ConfigEntries = std::vector<std::pair<std::string, std::string>>;

/// Read key/value entries from config text; section headers are expanded.
inline ConfigEntries read_config_entries(std::istream& in) {
  ConfigEntries entries;
  std::string line, section;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']') throw ParseError("unterminated section header", lineno);
      section = detail::trim(t.substr(1, t.size() - 2));
      if (section.empty()) throw ParseError("empty section name", lineno);
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ParseError("expected key = value", lineno);
    std::string key = detail::trim(t.substr(0, eq));
    if (key.empty()) throw ParseError("missing key before '='", lineno);
    if (!section.empty()) key = section + "." + key;
    entries.emplace_back(key, detail::trim(t.substr(eq + 1)));
  }
  return entries;
}

/// Build a config from file entries, then command-line overrides (later wins).
/// Unknown keys and missing required keys are config errors.
inline ExperimentConfig parse_config(const ConfigEntries& file_entries,
                                     const ConfigEntries& overrides = {}) {
  const auto& keys = config_keys();
  ExperimentConfig cfg;
  std::set<std::string> seen;
  auto apply = [&](const std::pair<std::string, std::string>& kv) {
    const auto it = std::find_if(keys.begin(), keys.end(),
                                 [&](const ConfigKey& k) { return k.name == kv.first; });
    if (it == keys.end()) throw ConfigError("unknown config key '" + kv.first + "'");
    it->set(cfg, kv.second);
    seen.insert(kv.first);
  };
  for (const auto& kv : file_entries) apply(kv);
  for (const auto& kv : overrides) apply(kv);

  std::vector<std::string> missing;
  for (const char* req : {"env", "variant", "out"}) {
    if (!seen.count(req)) missing.emplace_back(req);
  }
  if (seen.count("env") && cfg.env.empty()) missing.emplace_back("env");
  if (seen.count("out") && cfg.out.empty()) missing.emplace_back("out");
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw ConfigError("missing required config field(s): " + list);
  }
  if (cfg.steps == 0) cfg.steps = default_steps(cfg.env);
  if (cfg.run_id.empty()) cfg.run_id = to_string(cfg.variant);
  cfg.validate();
  return cfg;
}

inline ExperimentConfig parse_config_text(const std::string& text,
                                          const ConfigEntries& overrides = {}) {
  std::istringstream in(text);
  return parse_config(read_config_entries(in), overrides);
}

inline ExperimentConfig load_config(const std::string& path, const ConfigEntries& overrides = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(read_config_entries(in), overrides);
}

/// Fully resolved config in the file grammar; parses back to an equal config.
inline std::string echo_config(const ExperimentConfig& cfg) {
  std::ostringstream out;
  std::string section;
  for (const auto& k : config_keys()) {
    const auto dot = k.name.find('.');
    std::string name = k.name;
    if (dot != std::string::npos) {
      const std::string s = k.name.substr(0, dot);
      if (s != section) {
        out << "\n[" << s << "]\n";
        section = s;
      }
      name = k.name.substr(dot + 1);
    }
    out << name << " = " << k.get(cfg) << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Metrics

/// Learning-curve area normalized by the step span: each eval return is
/// weighted by the steps since the previous eval.
inline double learning_curve_auc(const std::vector<MetricsRow>& rows) {
  if (rows.empty()) throw InputError("learning_curve_auc: no rows");
  double area = 0.0;
  std::uint64_t prev = 0;
  for (const auto& r : rows) {
    area += r.eval_return_mean * double(r.step - prev);
    prev = r.step;
  }
  return prev ? area / double(prev) : rows.back().eval_return_mean;
}

inline std::string metrics_csv_line(const MetricsRow& r) {
  using detail::fmt_double;
  char wall[32];
  std::snprintf(wall, sizeof wall, "%.3f", r.wall_clock_s);
  return std::to_string(r.step) + ',' + fmt_double(r.eval_return_mean) + ',' +
         fmt_double(r.eval_return_std) + ',' + fmt_double(r.critic_loss) + ',' +
         fmt_double(r.actor_q_term) + ',' + fmt_double(r.bc_term) + ',' +
         fmt_double(r.epsilon) + ',' + fmt_double(r.delta) + ',' + fmt_double(r.alpha) + ',' +
         fmt_double(r.beta) + ',' + wall;
}

inline std::vector<MetricsRow> read_metrics_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open metrics file '" + path + "'");
  std::string line;
  std::getline(in, line);
  if (detail::trim(line) != kMetricsHeader) throw ParseError("unexpected metrics header", 1);
  std::vector<MetricsRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 11) throw ParseError("expected 11 fields", lineno);
    try {
      MetricsRow r;
      r.step = detail::parse_uint("step", f[0]);
      double* cols[] = {&r.eval_return_mean, &r.eval_return_std, &r.critic_loss,
                        &r.actor_q_term,     &r.bc_term,         &r.epsilon,
                        &r.delta,            &r.alpha,           &r.beta,
                        &r.wall_clock_s};
      for (std::size_t i = 0; i < 10; ++i) *cols[i] = detail::parse_double("metric", f[i + 1]);
      rows.push_back(r);
    } catch (const ConfigError& e) {
      throw ParseError(e.what(), lineno);
    }
  }
  return rows;
}

/// Mean and sample (n-1) std; std is 0 for fewer than two values.
struct SeedStats {
  double mean = 0.0;
  double std = 0.0;
  double median = 0.0;
};

inline SeedStats seed_stats(std::vector<double> v) {
  SeedStats s;
  if (v.empty()) return s;
  double sum = 0.0;
  for (double x : v) sum += x;
  s.mean = sum / double(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(ss / double(v.size() - 1));
  }
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  s.median = n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  return s;
}

// ---------------------------------------------------------------------------
// Runs

struct SeedOutcome {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  std::string csv_path;
  std::string actor_path;
  double final_return = 0.0;
  double auc = 0.0;
};

struct ExperimentSummary {
  std::string run_id;
  std::string env;
  Variant variant = Variant::TD3;
  std::size_t steps = 0;
  std::vector<std::uint64_t> seeds;
  std::vector<SeedOutcome> outcomes;
  SeedStats final_return;
  SeedStats auc;
  std::string dir;

  bool all_ok() const {
    return std::all_of(outcomes.begin(), outcomes.end(), [](const auto& o) { return o.ok; });
  }
};

inline nlohmann::json summary_to_json(const ExperimentSummary& s) {
  nlohmann::json j;
  j["run_id"] = s.run_id;
  j["env"] = s.env;
  j["variant"] = to_string(s.variant);
  j["steps"] = s.steps;
  j["seeds"] = s.seeds;
  nlohmann::json final_per_seed = nlohmann::json::object(), auc_per_seed = nlohmann::json::object();
  nlohmann::json failures = nlohmann::json::array();
  std::size_t completed = 0;
  for (const auto& o : s.outcomes) {
    if (o.ok) {
      final_per_seed[std::to_string(o.seed)] = o.final_return;
      auc_per_seed[std::to_string(o.seed)] = o.auc;
      ++completed;
    } else {
      failures.push_back({{"seed", o.seed}, {"error", o.error}});
    }
  }
  j["completed"] = completed;
  j["final_return"] = {{"mean", s.final_return.mean},
                       {"std", s.final_return.std},
                       {"median", s.final_return.median},
                       {"per_seed", final_per_seed}};
  j["auc"] = {{"mean", s.auc.mean},
              {"std", s.auc.std},
              {"median", s.auc.median},
              {"per_seed", auc_per_seed}};
  j["failures"] = failures;
  return j;
}

/// Generator for the experiment: a checkpoint if given, else fitted to the demos.
inline ReferenceGenerator prepare_generator(const ExperimentConfig& cfg, const DemoSet* demos) {
  if (!cfg.generator.empty()) return ReferenceGenerator(load_mlp(cfg.generator));
  if (!demos) {
    throw ConfigError("variant '" + to_string(cfg.variant) + "' needs 'generator' or 'demos'");
  }
  return ReferenceGenerator(train_generator(*demos, cfg.resolved_bc(), cfg.bc_seed).params);
}

struct ExperimentInputs {
  std::optional<DemoSet> demos;
  ReferenceGenerator generator;
};

/// Load referenced files and fit the generator. Config errors surface here,
/// before any training step.
inline ExperimentInputs load_inputs(const ExperimentConfig& cfg) {
  namespace fs = std::filesystem;
  ExperimentInputs in;
  const auto tr = traits(cfg.variant);
  for (const auto* path : {&cfg.demos, &cfg.generator}) {
    if (!path->empty() && !fs::exists(*path)) {
      throw ConfigError("referenced file '" + *path + "' does not exist");
    }
  }
  if (!cfg.demos.empty() && (tr.needs_demos || (tr.needs_generator && cfg.generator.empty()))) {
    in.demos = load_demos(cfg.demos);
    if (in.demos->env != cfg.env) {
      throw ConfigError("demos were recorded on '" + in.demos->env + "', not '" + cfg.env + "'");
    }
  }
  if (tr.needs_generator) in.generator = prepare_generator(cfg, in.demos ? &*in.demos : nullptr);
  check_prerequisites(cfg.env, cfg.resolved_agent(), &in.generator,
                      in.demos ? &*in.demos : nullptr);
  return in;
}

namespace detail {

/// Creates `dir`; refuses an existing one unless `overwrite`.
inline void claim_directory(const std::filesystem::path& dir, bool overwrite) {
  namespace fs = std::filesystem;
  if (fs::exists(dir)) {
    if (!overwrite) {
      throw ConfigError("output directory '" + dir.string() +
                        "' already exists; pass --overwrite to replace it");
    }
    fs::remove_all(dir);
  }
  fs::create_directories(dir);
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw InputError("write failed for '" + path.string() + "'");
}

inline SeedOutcome run_seed(const ExperimentConfig& cfg, const ExperimentInputs& in,
                            std::uint64_t seed, const std::filesystem::path& dir) {
  SeedOutcome o;
  o.seed = seed;
  o.csv_path = (dir / ("seed_" + std::to_string(seed) + ".csv")).string();
  o.actor_path = (dir / ("actor_seed_" + std::to_string(seed) + ".json")).string();
  try {
    std::ofstream csv(o.csv_path);
    if (!csv) throw InputError("cannot open '" + o.csv_path + "' for writing");
    csv << kMetricsHeader << '\n';
    TrainOptions opts{cfg.steps, cfg.eval_interval, cfg.eval_episodes};
    auto res = train(cfg.env, cfg.resolved_agent(), opts,
                     in.generator.valid() ? &in.generator : nullptr,
                     in.demos ? &*in.demos : nullptr, seed,
                     [&](const MetricsRow& r) { csv << metrics_csv_line(r) << '\n' << std::flush; });
    save_mlp(res.nets.actor, o.actor_path);
    o.final_return = res.metrics.back().eval_return_mean;
    o.auc = learning_curve_auc(res.metrics);
    o.ok = true;
  } catch (const std::exception& e) {
    o.error = e.what();
  }
  return o;
}

}  // namespace detail

struct RunOptions {
  bool overwrite = false;
  /// Called as each seed finishes.
  std::function<void(const SeedOutcome&)> on_seed;
};

/// One training run per seed into <out>/<run_id>/: seed_<s>.csv,
/// actor_seed_<s>.json, config.ini (resolved echo) and summary.json.
/// Seed failures are recorded in the summary; other seeds still run.
inline ExperimentSummary run_experiment(const ExperimentConfig& cfg, const RunOptions& ro = {}) {
  namespace fs = std::filesystem;
  cfg.validate();
  const ExperimentInputs in = load_inputs(cfg);
  const fs::path dir = fs::path(cfg.out) / cfg.run_id;
  detail::claim_directory(dir, ro.overwrite);
  detail::write_text(dir / "config.ini", echo_config(cfg));
  if (in.generator.valid() && cfg.generator.empty()) {
    save_mlp(in.generator.params(), (dir / "generator.json").string());
  }

  ExperimentSummary s;
  s.run_id = cfg.run_id;
  s.env = cfg.env;
  s.variant = cfg.variant;
  s.steps = cfg.steps;
  s.seeds = cfg.seeds;
  s.dir = dir.string();
  s.outcomes.resize(cfg.seeds.size());

  std::mutex report_mu;
  auto work = [&](std::size_t i) {
    s.outcomes[i] = detail::run_seed(cfg, in, cfg.seeds[i], dir);
    if (ro.on_seed) {
      std::lock_guard lock(report_mu);
      ro.on_seed(s.outcomes[i]);
    }
  };
  if (cfg.jobs <= 1) {
    for (std::size_t i = 0; i < cfg.seeds.size(); ++i) work(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::future<void>> workers;
    for (std::size_t w = 0; w < std::min(cfg.jobs, cfg.seeds.size()); ++w) {
      workers.push_back(std::async(std::launch::async, [&] {
        for (std::size_t i; (i = next++) < cfg.seeds.size();) work(i);
      }));
    }
    for (auto& f : workers) f.get();
  }

  std::vector<double> finals, aucs;
  for (const auto& o : s.outcomes) {
    if (!o.ok) continue;
    finals.push_back(o.final_return);
    aucs.push_back(o.auc);
  }
  s.final_return = seed_stats(finals);
  s.auc = seed_stats(aucs);
  detail::write_text(dir / "summary.json", summary_to_json(s).dump(2) + "\n");
  return s;
}

struct AblationResult {
  std::vector<ExperimentSummary> rows;
  std::string table;
};

/// Fixed-width comparison table; one row per variant.
inline std::string ablation_table(const std::vector<ExperimentSummary>& rows) {
  std::ostringstream t;
  char line[256];
  std::snprintf(line, sizeof line, "%-18s %5s %12s %12s %12s %12s %12s\n", "variant", "seeds",
                "final_mean", "final_std", "final_median", "auc_mean", "auc_median");
  t << line;
  for (const auto& r : rows) {
    std::size_t ok = 0;
    for (const auto& o : r.outcomes) ok += o.ok;
    std::snprintf(line, sizeof line, "%-18s %5zu %12.4f %12.4f %12.4f %12.4f %12.4f\n",
                  to_string(r.variant).c_str(), ok, r.final_return.mean, r.final_return.std,
                  r.final_return.median, r.auc.mean, r.auc.median);
    t << line;
  }
  return t.str();
}

/// Run each variant on the base config's env, demos and seeds into
/// <out>/<run_id>/<variant>/, then write ablation.txt and ablation.json
/// beside them. The generator is fitted once and shared by all variants.
inline AblationResult run_ablation(const ExperimentConfig& base,
                                   const std::vector<Variant>& variants,
                                   const RunOptions& ro = {}) {
  namespace fs = std::filesystem;
  if (variants.empty()) throw ConfigError("ablation needs at least one variant");
  base.validate();
  const fs::path dir = fs::path(base.out) / base.run_id;
  detail::claim_directory(dir, ro.overwrite);

  ExperimentConfig shared = base;
  const bool any_generator = std::any_of(variants.begin(), variants.end(),
                                         [](Variant v) { return traits(v).needs_generator; });
  if (any_generator && shared.generator.empty()) {
    ExperimentConfig probe = base;
    probe.variant = Variant::TD3fG;
    const ExperimentInputs in = load_inputs(probe);
    const std::string path = (dir / "generator.json").string();
    save_mlp(in.generator.params(), path);
    shared.generator = path;
  }

  AblationResult res;
  nlohmann::json meta;
  meta["env"] = base.env;
  meta["steps"] = base.steps;
  meta["demos"] = base.demos;
  meta["generator"] = shared.generator;
  meta["variants"] = nlohmann::json::array();
  for (Variant v : variants) {
    ExperimentConfig c = shared;
    c.variant = v;
    c.out = dir.string();
    c.run_id = to_string(v);
    RunOptions sub = ro;
    sub.overwrite = false;
    res.rows.push_back(run_experiment(c, sub));
    auto row = summary_to_json(res.rows.back());
    meta["variants"].push_back(
        {{"variant", to_string(v)}, {"seeds", c.seeds}, {"summary", row}});
  }
  res.table = ablation_table(res.rows);
  detail::write_text(dir / "ablation.txt", res.table);
  detail::write_text(dir / "ablation.json", meta.dump(2) + "\n");
  return res;
}

}  // namespace td3fg
