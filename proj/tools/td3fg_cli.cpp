// td3fg command-line front end.
//
// Exit codes: 0 success, 1 configuration or input-file error, 2 runtime failure
// (including any seed that failed during train/ablate).

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "td3fg/checkpoint.hpp"
#include "td3fg/demos.hpp"
#include "td3fg/generator.hpp"
#include "td3fg/harness.hpp"

namespace {

using namespace td3fg;

constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

/// Turn leftover "--section.key value" / "--key=value" arguments into overrides.
ConfigEntries overrides_from(std::vector<std::string> extra) {
  ConfigEntries out;
  for (std::size_t i = 0; i < extra.size(); ++i) {
    const std::string& arg = extra[i];
    if (arg.rfind("--", 0) != 0 || arg.size() == 2) {
      throw ConfigError("unexpected argument '" + arg + "'");
    }
    std::string key = arg.substr(2);
    const auto eq = key.find('=');
    if (eq != std::string::npos) {
      out.emplace_back(key.substr(0, eq), key.substr(eq + 1));
      continue;
    }
    if (i + 1 >= extra.size()) throw ConfigError("option '--" + key + "' needs a value");
    out.emplace_back(key, extra[++i]);
  }
  return out;
}

ExperimentConfig config_from(const std::string& path, const std::vector<std::string>& extra) {
  const auto ov = overrides_from(extra);
  return path.empty() ? parse_config(ConfigEntries{}, ov) : load_config(path, ov);
}

nlohmann::json stats_json(const DemoStats& st) {
  return {{"count", st.count},
          {"average", st.average},
          {"max_score", st.max_score},
          {"min_score", st.min_score},
          {"std", st.std}};
}

void print_seed(const SeedOutcome& o) {
  if (o.ok) {
    std::fprintf(stderr, "seed %llu: final %.4f auc %.4f -> %s\n", (unsigned long long)o.seed,
                 o.final_return, o.auc, o.csv_path.c_str());
  } else {
    std::fprintf(stderr, "seed %llu FAILED: %s\n", (unsigned long long)o.seed, o.error.c_str());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"TD3 with a behavior-cloned reference action generator"};
  app.require_subcommand(1);

  // demo-gen
  auto* gen = app.add_subcommand("demo-gen", "synthesize a demonstration corpus");
  std::string gen_env, gen_mix, gen_out;
  std::size_t gen_count = 100;
  std::uint64_t gen_seed = 0;
  double gen_sigma = SynthesisOptions{}.corruption_sigma;
  gen->add_option("--env", gen_env, "environment name")->required();
  gen->add_option("--count", gen_count, "number of trajectories")->capture_default_str();
  gen->add_option("--mix", gen_mix, "source fractions, e.g. scripted:0.4,corrupted:0.3,failed:0.3");
  gen->add_option("--seed", gen_seed)->capture_default_str();
  gen->add_option("--corruption-sigma", gen_sigma)->capture_default_str();
  gen->add_option("--out", gen_out, "output .jsonl path")->required();

  // demo-stats
  auto* stats = app.add_subcommand("demo-stats", "summary statistics of a demo file");
  std::string stats_in;
  stats->add_option("--in", stats_in)->required()->check(CLI::ExistingFile);

  // train-generator
  auto* tg = app.add_subcommand("train-generator", "fit the reference generator to demos");
  std::string tg_demos, tg_out, tg_history, tg_activation = "relu";
  std::uint64_t tg_seed = 0;
  GeneratorConfig tg_cfg;
  tg->add_option("--demos", tg_demos)->required()->check(CLI::ExistingFile);
  tg->add_option("--out", tg_out, "checkpoint path")->required();
  tg->add_option("--seed", tg_seed)->capture_default_str();
  tg->add_option("--epochs", tg_cfg.epochs)->capture_default_str();
  tg->add_option("--batch-size", tg_cfg.batch_size)->capture_default_str();
  tg->add_option("--lr", tg_cfg.lr)->capture_default_str();
  tg->add_option("--validation-fraction", tg_cfg.validation_fraction)->capture_default_str();
  tg->add_option("--patience", tg_cfg.early_stop_patience)->capture_default_str();
  tg->add_option("--hidden", tg_cfg.hidden)->delimiter(',')->capture_default_str();
  tg->add_option("--hidden-activation", tg_activation)
      ->check(CLI::IsMember({"relu", "tanh"}))
      ->capture_default_str();
  tg->add_option("--history", tg_history, "write per-epoch losses to this CSV");

  // train
  auto* tr = app.add_subcommand("train", "multi-seed training run");
  std::string tr_config;
  bool tr_overwrite = false;
  tr->add_option("--config", tr_config, "config file; --section.key value flags override it")
      ->check(CLI::ExistingFile);
  tr->add_flag("--overwrite", tr_overwrite, "replace an existing run directory");
  tr->allow_extras();

  // eval
  auto* ev = app.add_subcommand("eval", "greedy evaluation of an actor checkpoint");
  std::string ev_env, ev_actor;
  std::size_t ev_episodes = 10;
  std::uint64_t ev_seed = 0;
  ev->add_option("--env", ev_env)->required();
  ev->add_option("--actor", ev_actor, "actor or generator checkpoint")
      ->required()
      ->check(CLI::ExistingFile);
  ev->add_option("--episodes", ev_episodes)->capture_default_str();
  ev->add_option("--seed", ev_seed)->capture_default_str();

  // ablate
  auto* ab = app.add_subcommand("ablate", "run several variants on shared seeds and demos");
  std::string ab_config;
  std::vector<std::string> ab_variants{"td3fg", "action_noise_only", "q_filter"};
  bool ab_overwrite = false;
  ab->add_option("--config", ab_config)->check(CLI::ExistingFile);
  ab->add_option("--variants", ab_variants)->delimiter(',')->capture_default_str();
  ab->add_flag("--overwrite", ab_overwrite);
  ab->allow_extras();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*gen) {
      SynthesisOptions opts;
      opts.corruption_sigma = gen_sigma;
      const auto mix = gen_mix.empty() ? default_quality_mix() : parse_quality_mix(gen_mix);
      const DemoSet set = synthesize_demos(gen_env, gen_count, mix, gen_seed, opts);
      save_demos(set, gen_out);
      std::cout << stats_json(demo_stats(set)).dump(2) << '\n';
    } else if (*stats) {
      std::cout << stats_json(demo_stats(load_demos(stats_in))).dump(2) << '\n';
    } else if (*tg) {
      tg_cfg.hidden_activation = detail::parse_hidden_activation(tg_activation);
      const auto res = train_generator(load_demos(tg_demos), tg_cfg, tg_seed);
      save_mlp(res.params, tg_out);
      if (!tg_history.empty()) {
        std::ofstream h(tg_history);
        if (!h) throw InputError("cannot open '" + tg_history + "' for writing");
        h << "epoch,train_loss,validation_loss\n";
        for (std::size_t i = 0; i < res.history.size(); ++i) {
          h << i + 1 << ',' << detail::fmt_double(res.history[i].train) << ','
            << (res.history[i].validation ? detail::fmt_double(*res.history[i].validation) : "")
            << '\n';
        }
      }
      nlohmann::json j{{"epochs_run", res.history.size()},
                       {"train_count", res.train_count},
                       {"validation_count", res.validation_count}};
      if (!res.history.empty()) {
        j["final_train_loss"] = res.history.back().train;
        if (res.history.back().validation) {
          double best = *res.history.front().validation;
          for (const auto& e : res.history) best = std::min(best, *e.validation);
          j["best_validation_loss"] = best;
        }
      }
      std::cout << j.dump(2) << '\n';
    } else if (*tr) {
      const ExperimentConfig cfg = config_from(tr_config, tr->remaining());
      RunOptions ro;
      ro.overwrite = tr_overwrite;
      ro.on_seed = print_seed;
      const auto s = run_experiment(cfg, ro);
      std::cout << summary_to_json(s).dump(2) << '\n';
      return s.all_ok() ? 0 : kExitRuntime;
    } else if (*ev) {
      const auto r = evaluate(ev_env, load_mlp(ev_actor), ev_episodes, ev_seed);
      std::cout << nlohmann::json{{"mean", r.mean},
                                  {"std", r.std},
                                  {"returns", r.returns},
                                  {"final_info", r.final_info}}
                       .dump(2)
                << '\n';
    } else if (*ab) {
      const ExperimentConfig cfg = config_from(ab_config, ab->remaining());
      std::vector<Variant> variants;
      for (const auto& v : ab_variants) variants.push_back(variant_from_string(v));
      RunOptions ro;
      ro.overwrite = ab_overwrite;
      ro.on_seed = print_seed;
      const auto res = run_ablation(cfg, variants, ro);
      std::cout << res.table;
      for (const auto& r : res.rows) {
        if (!r.all_ok()) return kExitRuntime;
      }
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ValidationError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
