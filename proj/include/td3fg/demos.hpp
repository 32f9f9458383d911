#pragma once

// Demonstration corpora: synthesis of limited, low-quality demos, summary
// statistics, and the JSON Lines file format.
//
// File layout (one JSON object per line):
//   line 1   {"kind":"manifest","env":...,"seed":...,"generator_version":...,
//             "count":N,"mix":{source: fraction}}
//   line 2.. {"kind":"trajectory","env":...,"source":...,"total_return":...,
//             "steps":[{"s":[...],"a":[...],"r":...,"s_next":[...],"done":false}]}

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "td3fg/envs.hpp"
#include "td3fg/error.hpp"
#include "td3fg/mlp.hpp"
#include "td3fg/rng.hpp"
#include "td3fg/trajectory.hpp"
#include "td3fg/transition.hpp"

namespace td3fg {

inline constexpr const char* kDemoGeneratorVersion = "td3fg-demos/1";

struct DemoSet {
  std::string env;
  std::uint64_t seed = 0;
  std::string generator_version = kDemoGeneratorVersion;
  std::map<std::string, double> mix;
  std::vector<Trajectory> trajectories;

  bool operator==(const DemoSet&) const = default;
};

struct DemoStats {
  double average = 0.0;
  double max_score = 0.0;
  double min_score = 0.0;
  double std = 0.0;
  std::size_t count = 0;
};

/// Mean, extrema and sample (n-1) standard deviation of trajectory returns.
/// A single trajectory has std 0.
inline DemoStats demo_stats(const DemoSet& set) {
  if (set.trajectories.empty()) throw InputError("demo_stats: empty demo set");
  DemoStats st;
  st.count = set.trajectories.size();
  st.max_score = -std::numeric_limits<double>::infinity();
  st.min_score = std::numeric_limits<double>::infinity();
  double sum = 0.0;
  for (const auto& t : set.trajectories) {
    sum += t.total_return;
    st.max_score = std::max(st.max_score, t.total_return);
    st.min_score = std::min(st.min_score, t.total_return);
  }
  const double n = static_cast<double>(st.count);
  st.average = sum / n;
  if (st.count > 1) {
    double ss = 0.0;
    for (const auto& t : set.trajectories) {
      const double d = t.total_return - st.average;
      ss += d * d;
    }
    st.std = std::sqrt(ss / (n - 1.0));
  }
  return st;
}

// ---------------------------------------------------------------------------
// Scripted controllers

struct ControllerGains {
  double primary = 1.0;
  double secondary = 1.0;
};

/// Reference controllers used to synthesize demonstrations. `nominal` gains
/// solve the task; demos use detuned gains.
inline ControllerGains nominal_gains(const std::string& env) {
  if (env == "point-reach") return {4.0, 3.5};
  if (env == "latch-door") return {1.0, 1.0};
  if (env == "pendulum") return {1.0, 1.0};
  throw ConfigError("no scripted controller for env '" + env + "'");
}

inline ControllerGains detuned_gains(const std::string& env) {
  if (env == "point-reach") return {1.5, 1.2};
  if (env == "latch-door") return {0.9, 0.5};
  if (env == "pendulum") return {0.5, 0.6};
  throw ConfigError("no scripted controller for env '" + env + "'");
}

inline Vector scripted_action(const std::string& env, std::span<const double> obs,
                              ControllerGains g) {
  if (env == "point-reach") {
    // PD toward the goal.
    Vector a(2);
    for (std::size_t i = 0; i < 2; ++i) {
      a[i] = g.primary * (obs[4 + i] - obs[i]) - g.secondary * obs[2 + i];
    }
    return clip_action(a, constants::point_reach::kActionBound);
  }
  if (env == "latch-door") {
    // Hold the latch open; push the door once it is free.
    const bool free = obs[0] > constants::latch_door::kLatchThreshold;
    return {g.primary, free ? g.secondary : 0.0};
  }
  if (env == "pendulum") {
    namespace c = constants::pendulum;
    const double cos_t = obs[0], sin_t = obs[1], vel = obs[2];
    const double theta = std::atan2(sin_t, cos_t);
    double u = 0.0;
    if (cos_t > 0.9) {
      u = -g.secondary * (10.0 * theta + 2.0 * vel);
    } else {
      // Energy pumping: E = vel^2 / 2 + 15 cos(theta), upright rest has E = 15.
      const double energy = 0.5 * vel * vel + 15.0 * cos_t;
      const double dir = vel >= 0.0 ? 1.0 : -1.0;
      u = g.primary * 0.5 * (15.0 - energy) * dir;
    }
    return clip_action(Vector{u}, c::kActionBound);
  }
  throw ConfigError("no scripted controller for env '" + env + "'");
}

// ---------------------------------------------------------------------------
// Synthesis

/// Source fractions; keys are scripted, partial-policy, corrupted, failed.
using QualityMix = std::map<std::string, double>;

inline QualityMix default_quality_mix() {
  return {{"scripted", 0.4}, {"corrupted", 0.3}, {"failed", 0.3}};
}

/// Parse "scripted:0.4,corrupted:0.3,failed:0.3".
inline QualityMix parse_quality_mix(const std::string& text) {
  QualityMix mix;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw ConfigError("quality mix entry '" + item + "' lacks ':'");
    const std::string key = item.substr(0, colon);
    demo_source_from_string(key);
    try {
      mix[key] = std::stod(item.substr(colon + 1));
    } catch (const std::exception&) {
      throw ConfigError("quality mix entry '" + item + "' has a bad fraction");
    }
  }
  return mix;
}

/// Per-source counts by largest remainder so they sum exactly to `count`.
inline std::vector<std::pair<DemoSource, std::size_t>> mix_counts(const QualityMix& mix,
                                                                  std::size_t count) {
  static const DemoSource order[] = {DemoSource::Scripted, DemoSource::PartialPolicy,
                                     DemoSource::Corrupted, DemoSource::Failed};
  double total = 0.0;
  for (const auto& [k, f] : mix) {
    const auto src = demo_source_from_string(k);
    if (src == DemoSource::Policy) throw ConfigError("'policy' is not a demo quality class");
    if (!(f >= 0.0)) throw ConfigError("quality mix fraction for '" + k + "' is negative");
    total += f;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ConfigError("quality mix fractions must sum to 1");

  std::vector<std::pair<DemoSource, std::size_t>> out;
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (DemoSource src : order) {
    auto it = mix.find(std::string(to_string(src)));
    const double f = it == mix.end() ? 0.0 : it->second;
    const double exact = f * static_cast<double>(count);
    const auto base = static_cast<std::size_t>(std::floor(exact + 1e-9));
    out.emplace_back(src, base);
    remainders.emplace_back(exact - static_cast<double>(base), out.size() - 1);
    assigned += base;
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; assigned < count; ++i, ++assigned) {
    ++out[remainders[i % remainders.size()].second].second;
  }
  return out;
}

struct SynthesisOptions {
  /// Action-noise std for corrupted demos.
  double corruption_sigma = 0.3;
  /// Per-trajectory multiplicative gain jitter (uniform +-).
  double gain_jitter = 0.1;
  /// Controller gains for scripted and corrupted sources; detuned if unset.
  std::optional<ControllerGains> gains;
  /// Actor used for the partial-policy class.
  const MLPParams* partial_policy = nullptr;
};

/// Roll out `count` demos with the requested source mix. Trajectory k uses
/// streams derived from (seed, k) only, so synthesis is reproducible.
inline DemoSet synthesize_demos(const std::string& env_name, std::size_t count,
                                const QualityMix& mix, std::uint64_t seed,
                                const SynthesisOptions& opts = {}) {
  if (count == 0) throw ConfigError("synthesize_demos: count must be >= 1");
  auto env = make_env(env_name);
  const auto spec = env->spec();
  const auto counts = mix_counts(mix, count);
  const ControllerGains base = opts.gains.value_or(detuned_gains(env_name));
  if (opts.partial_policy &&
      (opts.partial_policy->in_dim() != spec.obs_dim ||
       opts.partial_policy->out_dim() != spec.act_dim)) {
    throw ConfigError("partial policy dims do not match env '" + env_name + "'");
  }

  DemoSet set;
  set.env = env_name;
  set.seed = seed;
  set.mix = mix;
  std::size_t k = 0;
  for (const auto& [source, n] : counts) {
    if (n > 0 && source == DemoSource::PartialPolicy && !opts.partial_policy) {
      throw ConfigError("quality mix requests partial-policy demos but no policy was given");
    }
    for (std::size_t i = 0; i < n; ++i, ++k) {
      Rng rng = make_rng(seed, 1000 + k);
      std::uniform_real_distribution<double> jitter(1.0 - opts.gain_jitter,
                                                    1.0 + opts.gain_jitter);
      ControllerGains g = base;
      g.primary *= jitter(rng);
      g.secondary *= jitter(rng);
      const bool wrong_direction = std::bernoulli_distribution(0.5)(rng);
      std::normal_distribution<double> gauss(0.0, opts.corruption_sigma);

      PolicyFn policy;
      NoiseFn noise;
      switch (source) {
        case DemoSource::Scripted:
          policy = [&](std::span<const double> o) { return scripted_action(env_name, o, g); };
          break;
        case DemoSource::Corrupted:
          policy = [&](std::span<const double> o) { return scripted_action(env_name, o, g); };
          noise = [&](std::size_t, std::span<const double>) {
            Vector n(spec.act_dim);
            for (auto& v : n) v = gauss(rng);
            return n;
          };
          break;
        case DemoSource::Failed:
          if (wrong_direction) {
            policy = [&](std::span<const double> o) {
              Vector a = scripted_action(env_name, o, g);
              for (auto& v : a) v = -v;
              return a;
            };
          } else {
            policy = [&](std::span<const double>) { return Vector(spec.act_dim, 0.0); };
          }
          break;
        case DemoSource::PartialPolicy:
          policy = [&](std::span<const double> o) { return mlp_predict(*opts.partial_policy, o); };
          break;
        case DemoSource::Policy:
          break;
      }
      Trajectory t = rollout(*env, policy, noise ? &noise : nullptr, spec.max_episode_steps,
                             derive_seed(seed, k));
      t.source = source;
      set.trajectories.push_back(std::move(t));
    }
  }
  return set;
}

// ---------------------------------------------------------------------------
// Flattening

/// Every transition in trajectory order. With `cap` below the total, a uniform
/// subsample (without replacement, order kept) drawn from the set seed.
inline std::vector<Transition> flatten_transitions(const DemoSet& set,
                                                   std::optional<std::size_t> cap = {}) {
  if (set.trajectories.empty()) throw InputError("flatten_transitions: empty demo set");
  std::vector<Transition> all;
  for (const auto& t : set.trajectories) {
    for (const auto& st : t.steps) {
      all.push_back({st.observation, st.action, st.reward, st.next_observation, st.done, true});
    }
  }
  if (!cap || *cap >= all.size()) return all;
  std::vector<std::size_t> idx(all.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng = make_rng(set.seed, 77);
  std::vector<std::size_t> pick;
  pick.reserve(*cap);
  std::sample(idx.begin(), idx.end(), std::back_inserter(pick), *cap, rng);
  std::sort(pick.begin(), pick.end());
  std::vector<Transition> out;
  out.reserve(pick.size());
  for (auto i : pick) out.push_back(std::move(all[i]));
  return out;
}

// ---------------------------------------------------------------------------
// File format

inline nlohmann::json trajectory_to_json(const Trajectory& t) {
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& s : t.steps) {
    steps.push_back({{"s", s.observation},
                     {"a", s.action},
                     {"r", s.reward},
                     {"s_next", s.next_observation},
                     {"done", s.done}});
  }
  return {{"kind", "trajectory"},
          {"env", t.env},
          {"source", std::string(to_string(t.source))},
          {"total_return", t.total_return},
          {"steps", std::move(steps)}};
}

inline void write_demos(const DemoSet& set, std::ostream& out) {
  nlohmann::json manifest = {{"kind", "manifest"},
                             {"env", set.env},
                             {"seed", set.seed},
                             {"generator_version", set.generator_version},
                             {"count", set.trajectories.size()},
                             {"mix", set.mix}};
  out << manifest.dump() << '\n';
  for (const auto& t : set.trajectories) out << trajectory_to_json(t).dump() << '\n';
}

inline void save_demos(const DemoSet& set, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open '" + path + "' for writing");
  write_demos(set, out);
  if (!out) throw InputError("write failed for '" + path + "'");
}

/// Check the semantic invariants of a loaded or synthesized set.
inline void validate_demos(const DemoSet& set) {
  if (set.trajectories.empty()) throw ValidationError("demo set has no trajectories");
  std::optional<EnvSpec> spec;
  try {
    spec = env_spec(set.env);
  } catch (const ConfigError&) {
  }
  for (std::size_t k = 0; k < set.trajectories.size(); ++k) {
    const auto& t = set.trajectories[k];
    const std::string where = "trajectory " + std::to_string(k);
    if (t.env != set.env) {
      throw ValidationError(where + ": env '" + t.env + "' does not match manifest env '" +
                            set.env + "'");
    }
    double ret = 0.0;
    for (std::size_t i = 0; i < t.steps.size(); ++i) {
      const auto& st = t.steps[i];
      if (spec && (st.observation.size() != spec->obs_dim ||
                   st.next_observation.size() != spec->obs_dim ||
                   st.action.size() != spec->act_dim)) {
        throw ValidationError(where + " step " + std::to_string(i) + ": dims do not match env");
      }
      if (i + 1 < t.steps.size() && st.next_observation != t.steps[i + 1].observation) {
        throw ValidationError(where + " step " + std::to_string(i) +
                              ": next observation does not chain into the following step");
      }
      ret += st.reward;
    }
    if (ret != t.total_return) {
      throw ValidationError(where + ": total_return does not equal the sum of rewards");
    }
  }
}

inline DemoSet read_demos(std::istream& in) {
  DemoSet set;
  std::string line;
  std::size_t lineno = 0;
  bool have_manifest = false;
  std::size_t declared = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("malformed JSON: ") + e.what(), lineno);
    }
    try {
      const auto kind = j.at("kind").get<std::string>();
      if (!have_manifest) {
        if (kind != "manifest") throw ParseError("first line must be the manifest", lineno);
        set.env = j.at("env").get<std::string>();
        set.seed = j.at("seed").get<std::uint64_t>();
        set.generator_version = j.at("generator_version").get<std::string>();
        set.mix = j.at("mix").get<std::map<std::string, double>>();
        declared = j.at("count").get<std::size_t>();
        have_manifest = true;
        continue;
      }
      if (kind != "trajectory") throw ParseError("unexpected record kind '" + kind + "'", lineno);
      Trajectory t;
      t.env = j.at("env").get<std::string>();
      t.source = demo_source_from_string(j.at("source").get<std::string>());
      t.total_return = j.at("total_return").get<double>();
      for (const auto& sj : j.at("steps")) {
        t.steps.push_back({sj.at("s").get<Vector>(), sj.at("a").get<Vector>(),
                           sj.at("r").get<double>(), sj.at("s_next").get<Vector>(),
                           sj.at("done").get<bool>()});
      }
      set.trajectories.push_back(std::move(t));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("bad record: ") + e.what(), lineno);
    } catch (const ConfigError& e) {
      throw ParseError(e.what(), lineno);
    }
  }
  if (!have_manifest) throw ParseError("demo file has no manifest line");
  if (declared != set.trajectories.size()) {
    throw ValidationError("manifest declares " + std::to_string(declared) +
                          " trajectories but file holds " +
                          std::to_string(set.trajectories.size()));
  }
  validate_demos(set);
  return set;
}

inline DemoSet load_demos(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open demo file '" + path + "'");
  return read_demos(in);
}

}  // namespace td3fg
