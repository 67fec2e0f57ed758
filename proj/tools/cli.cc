#include "cli.h"

#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <set>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "lexspec/analysis.h"
#include "lexspec/encoder.h"
#include "lexspec/error.h"
#include "lexspec/evalsuite.h"
#include "lexspec/lexdata.h"
#include "lexspec/report.h"
#include "lexspec/sampler.h"
#include "lexspec/synthetic.h"
#include "lexspec/trainer.h"
#include "run_config.h"

namespace lexspec::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::vector<std::string> kMineKeys = {"seed", "out", "dump", "freq_dir", "langs", "seed_count",
                                            "frequency_cutoff", "exclusions", "stopwords", "gloss_priority"};
const std::vector<std::string> kModelKeys = {"model_in", "vocab", "vectors", "dim", "num_layers", "ffn_dim",
                                             "adapter_bottleneck", "max_len", "init_seed", "mode"};
const std::vector<std::string> kTrainKeys = {"seed", "out", "constraints", "validation", "validation_vocab",
                                             "validation_layer", "lr", "epochs", "batch_size", "sense_level",
                                             "alpha", "tau", "positives", "beta1", "beta2", "eps",
                                             "weight_decay"};
const std::vector<std::string> kEvalKeys = {"out", "checkpoint", "dataset", "layer"};
const std::vector<std::string> kSynthKeys = {"seed", "out", "concepts", "words_per_concept", "dim",
                                             "train_constraints", "noise", "shift", "theta"};

std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

std::set<std::string> to_set(const std::vector<std::string>& v) { return {v.begin(), v.end()}; }

json string_array(const std::vector<std::string>& v) {
  json arr = json::array();
  for (const auto& s : v) arr.push_back(s);
  return arr;
}

fs::path prepare_out(const RunConfig& cfg) {
  const fs::path out = cfg.require("out");
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw IoError("cannot create output directory " + out.string());
  return out;
}

// Writes `report` to <out>/report.json when out is set; always prints it.
void emit_report(const RunConfig& cfg, const std::vector<std::string>& keys, const json& report,
                 std::ostream& out) {
  if (cfg.has_value("out")) {
    const fs::path dir = prepare_out(cfg);
    write_json_file(dir / "report.json", report);
    cfg.write(dir / "run_config.txt", keys);
  }
  out << format_json(report) << '\n';
}

// --- mine -------------------------------------------------------------------

int cmd_mine(const RunConfig& cfg, std::ostream& out) {
  MiningConfig mc;
  mc.languages = to_set(cfg.get_list("langs"));
  mc.seed_count = cfg.get_size("seed_count");
  mc.frequency_cutoff = cfg.get_size("frequency_cutoff");
  mc.gloss_language_priority = cfg.get_list("gloss_priority");
  if (cfg.has_value("exclusions")) mc.exclusion_words = load_exclusions(cfg.get("exclusions"));
  if (cfg.has_value("stopwords")) mc.stopwords = load_word_set(cfg.get("stopwords"));
  mc.validate();

  std::set<std::string> freq_langs = mc.languages;
  freq_langs.insert("en");
  const FrequencyTable freqs = load_frequency_dir(cfg.require("freq_dir"), freq_langs);
  const auto dump = load_synset_dump(cfg.require("dump"));
  const auto pairs = mine_constraints(dump, freqs, mc);

  const fs::path dir = prepare_out(cfg);
  write_constraints(pairs, dir / "constraints.tsv");
  json counts = json::object();
  for (const auto& [key, n] : count_by_language_pair(pairs)) counts[key.str()] = n;
  const json stats = {{"languages", string_array({mc.languages.begin(), mc.languages.end()})},
                      {"pairs", counts},
                      {"total", pairs.size()}};
  write_json_file(dir / "stats.json", stats);
  cfg.write(dir / "run_config.txt", kMineKeys);
  out << "mined " << pairs.size() << " constraints into " << (dir / "constraints.tsv").string() << '\n';
  return 0;
}

// --- train ------------------------------------------------------------------

EncoderModel build_model(const RunConfig& cfg) {
  const FineTuneMode mode = parse_fine_tune_mode(cfg.require("mode"));
  const std::uint64_t init_seed = cfg.has_value("init_seed") ? cfg.get_u64("init_seed") : cfg.get_u64("seed");
  if (cfg.has_value("model_in")) {
    EncoderModel model = load_checkpoint(cfg.get("model_in"));
    if (model.config().mode != mode) return with_fine_tune_mode(model, mode, init_seed);
    return model;
  }
  EncoderConfig ec;
  ec.dim = cfg.get_size("dim");
  ec.num_layers = cfg.get_size("num_layers");
  ec.ffn_dim = cfg.get_size("ffn_dim");
  ec.adapter_bottleneck = cfg.get("adapter_bottleneck") == "auto" ? EncoderConfig::default_bottleneck(ec.dim)
                                                                   : cfg.get_size("adapter_bottleneck");
  ec.max_sequence_length = cfg.get_size("max_len");
  ec.mode = mode;
  ec.validate();
  EncoderModel model = init_model(ec, load_vocabulary(cfg.require("vocab")), init_seed);
  if (cfg.has_value("vectors")) load_word_vectors(cfg.get("vectors"), model);
  return model;
}

PositiveSet parse_positives(const std::string& v) {
  if (v == "all") return PositiveSet::kAllInstances;
  if (v == "cross_slot") return PositiveSet::kCrossSlot;
  throw ValidationError("positives must be 'all' or 'cross_slot', got '" + v + "'");
}

int cmd_train(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  TrainConfig tc;
  tc.learning_rate = cfg.get_double("lr");
  tc.epochs = cfg.get_size("epochs");
  tc.batch_size = cfg.get_size("batch_size");
  tc.seed = cfg.get_u64("seed");
  tc.sense_level = cfg.get_bool("sense_level");
  tc.alpha = cfg.get_double("alpha");
  tc.tau = cfg.get_double("tau");
  tc.positives = parse_positives(cfg.require("positives"));
  tc.beta1 = cfg.get_double("beta1");
  tc.beta2 = cfg.get_double("beta2");
  tc.epsilon = cfg.get_double("eps");
  tc.weight_decay = cfg.get_double("weight_decay");
  if (cfg.has_value("validation_layer")) tc.validation_layer = cfg.get_size("validation_layer");
  tc.validate();

  const auto valid_files = cfg.get_list("validation");
  const auto valid_vocabs = cfg.get_list("validation_vocab");
  if (valid_files.empty()) throw ValidationError("missing required setting 'validation'");
  if (valid_files.size() != valid_vocabs.size()) {
    throw ValidationError("'validation' and 'validation_vocab' must list the same number of files");
  }
  std::vector<BliDataset> validation;
  for (std::size_t i = 0; i < valid_files.size(); ++i) {
    validation.push_back(load_bli_dataset(valid_files[i], valid_vocabs[i]));
  }

  const auto constraints = read_constraints(cfg.require("constraints"));
  const EncoderModel model = build_model(cfg);
  const fs::path dir = prepare_out(cfg);
  cfg.write(dir / "run_config.txt", concat(kTrainKeys, kModelKeys));
  save_checkpoint(model, dir / "initial");

  std::ofstream log(dir / "train_log.jsonl");
  if (!log) throw IoError("cannot write " + (dir / "train_log.jsonl").string());
  const TrainResult result = train(constraints, model, tc, validation, json_lines_sink(log));
  log.close();
  save_checkpoint(result.best_model, dir / "best");

  json summary = {{"aborted", result.aborted},
                  {"best_metric", result.best_metric},
                  {"best_step", result.best_step},
                  {"steps", result.steps},
                  {"vanilla_mrr", result.vanilla_mrr}};
  if (result.aborted) summary["abort_reason"] = result.abort_reason;
  write_json_file(dir / "summary.json", summary);

  if (result.aborted) {
    err << "error: training aborted: " << result.abort_reason << "; best checkpoint kept at "
        << (dir / "best").string() << '\n';
    return 2;
  }
  out << "best validation metric " << format_double(result.best_metric) << " at step " << result.best_step
      << '\n';
  return 0;
}

// --- eval -------------------------------------------------------------------

template <typename Dataset>
int run_eval(const RunConfig& cfg, const std::vector<std::string>& keys, const Dataset& dataset,
             std::ostream& out) {
  const std::string ckpt = cfg.require("checkpoint");
  const EncoderModel model = load_checkpoint(ckpt);
  const std::string layer = cfg.require("layer");
  const EvalReport report =
      layer == "sweep" ? layer_sweep(model, dataset, ckpt) : evaluate_layer(model, cfg.get_size("layer"), dataset, ckpt);
  emit_report(cfg, keys, report.to_json(), out);
  out << "best layer " << report.best_layer << " score "
      << (report.best_score ? format_double(*report.best_score) : std::string("undefined")) << '\n';
  return 0;
}

// --- analyze ----------------------------------------------------------------

int cmd_diversity(const RunConfig& cfg, const std::vector<std::string>& keys, std::ostream& out) {
  const FeatureMatrix fm = load_feature_matrix(cfg.require("features"));
  const auto sample = cfg.get_list("sample");
  if (sample.empty()) throw ValidationError("missing required setting 'sample'");
  const json report = {{"sample", string_array(sample)}, {"d_typ", typological_diversity(to_set(sample), fm)}};
  emit_report(cfg, keys, report, out);
  return 0;
}

int cmd_similarity(const RunConfig& cfg, const std::vector<std::string>& keys, std::ostream& out) {
  const FeatureMatrix fm = load_feature_matrix(cfg.require("features"));
  const auto train_langs = cfg.get_list("train_langs");
  const auto test_langs = cfg.get_list("test_langs");
  const json report = {{"train", string_array(train_langs)},
                       {"test", string_array(test_langs)},
                       {"sim_train_test", train_test_similarity(to_set(train_langs), to_set(test_langs), fm)}};
  emit_report(cfg, keys, report, out);
  return 0;
}

json quota_json(const std::map<LanguagePairKey, std::size_t>& quotas) {
  json q = json::object();
  for (const auto& [key, n] : quotas) q[key.str()] = n;
  return q;
}

int cmd_subset(const RunConfig& cfg, const std::vector<std::string>& keys, std::ostream& out) {
  const auto constraints = read_constraints(cfg.require("constraints"));
  const std::size_t target = cfg.get_size("target");
  if (target == 0 || target > constraints.size()) {
    throw ValidationError("target " + std::to_string(target) + " outside 1.." + std::to_string(constraints.size()));
  }
  const auto quotas = apportion_quotas(count_by_language_pair(constraints), target);
  const auto subset = subset_constraints(constraints, target, cfg.get_u64("seed"));
  if (cfg.has_value("out")) write_constraints(subset, prepare_out(cfg) / "constraints.tsv");
  const json report = {{"target", target}, {"size", subset.size()}, {"quotas", quota_json(quotas)}};
  emit_report(cfg, keys, report, out);
  return 0;
}

int cmd_plan(const RunConfig& cfg, const std::vector<std::string>& keys, std::ostream& out) {
  const auto langs = cfg.get_list("langs");
  const auto plan = fixed_budget_mining_plan(to_set(langs), cfg.get_size("budget"));
  std::size_t total = 0;
  for (const auto& [key, n] : plan) total += n;
  json report = {{"keys", plan.size()}, {"total", total}, {"quotas", quota_json(plan)}};
  if (cfg.has_value("constraints")) {
    const auto selected = apply_quota_plan(read_constraints(cfg.get("constraints")), plan, cfg.get_u64("seed"));
    report["selected"] = selected.size();
    if (cfg.has_value("out")) write_constraints(selected, prepare_out(cfg) / "constraints.tsv");
  }
  emit_report(cfg, keys, report, out);
  return 0;
}

int cmd_distribution(const RunConfig& cfg, const std::vector<std::string>& keys, std::ostream& out) {
  const auto constraints = read_constraints(cfg.require("constraints"));
  emit_report(cfg, keys, distribution_report(count_by_language_pair(constraints), cfg.get_double("alpha")), out);
  return 0;
}

// --- synth ------------------------------------------------------------------

int cmd_synth(const RunConfig& cfg, std::ostream& out) {
  SyntheticConfig sc;
  sc.seed = cfg.get_u64("seed");
  sc.concepts = cfg.get_size("concepts");
  sc.words_per_concept = cfg.get_size("words_per_concept");
  sc.dim = cfg.get_size("dim");
  sc.train_constraints = cfg.get_size("train_constraints");
  sc.noise = cfg.get_double("noise");
  sc.shift = cfg.get_double("shift");
  sc.theta = cfg.get_double("theta");
  const auto bench = make_synthetic_benchmark(sc);
  const fs::path dir = prepare_out(cfg);
  write_synthetic_benchmark(bench, dir);
  cfg.write(dir / "run_config.txt", kSynthKeys);
  out << "wrote synthetic benchmark (" << bench.words.size() << " words, " << bench.constraints.size()
      << " constraints) to " << dir.string() << '\n';
  return 0;
}

// --- wiring -----------------------------------------------------------------

struct Command {
  CLI::App* app = nullptr;
  std::vector<std::string> keys;
  std::function<int(const RunConfig&)> action;
  std::map<std::string, CLI::Option*> options;
};

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Lexical specialization of multilingual encoders", "lexspec"};
  app.require_subcommand(1);
  std::string config_path;
  std::map<std::string, std::string> flag_values;
  std::vector<std::unique_ptr<Command>> commands;

  auto add = [&](CLI::App* parent, const std::string& name, const std::string& help, std::vector<std::string> keys,
                 std::function<int(const RunConfig&)> action) {
    auto cmd = std::make_unique<Command>();
    cmd->app = parent->add_subcommand(name, help);
    cmd->keys = keys;
    cmd->action = std::move(action);
    cmd->app->add_option("--config", config_path, "key=value configuration file");
    for (const auto& key : keys) {
      const KeySpec* spec = find_key(key);
      std::string help_text = spec->help;
      if (!spec->default_value.empty()) help_text += " [" + spec->default_value + "]";
      help_text += " (env " + env_name(key) + ")";
      cmd->options[key] = cmd->app->add_option("--" + key, flag_values[name + "/" + key], help_text);
    }
    commands.push_back(std::move(cmd));
  };

  const auto train_keys = concat(kTrainKeys, kModelKeys);
  const auto bli_keys = concat(kEvalKeys, {"target_vocab"});
  add(&app, "mine", "mine synonym constraints from a synset dump", kMineKeys,
      [&](const RunConfig& c) { return cmd_mine(c, out); });
  add(&app, "train", "specialize an encoder on constraints", train_keys,
      [&](const RunConfig& c) { return cmd_train(c, out, err); });
  add(&app, "eval-bli", "bilingual lexicon induction (MRR)", bli_keys, [&](const RunConfig& c) {
    return run_eval(c, bli_keys, load_bli_dataset(c.require("dataset"), c.require("target_vocab")), out);
  });
  add(&app, "eval-xlsim", "cross-lingual word similarity (Spearman)", kEvalKeys,
      [&](const RunConfig& c) { return run_eval(c, kEvalKeys, load_xlsim_dataset(c.require("dataset")), out); });
  add(&app, "eval-retrieval", "sentence retrieval (accuracy)", kEvalKeys, [&](const RunConfig& c) {
    return run_eval(c, kEvalKeys, load_retrieval_dataset(c.require("dataset")), out);
  });
  add(&app, "synth", "write the synthetic two-language benchmark", kSynthKeys,
      [&](const RunConfig& c) { return cmd_synth(c, out); });

  CLI::App* analyze = app.add_subcommand("analyze", "typology and constraint-set analyses");
  analyze->require_subcommand(1);
  const std::vector<std::string> div_keys = {"out", "features", "sample"};
  const std::vector<std::string> sim_keys = {"out", "features", "train_langs", "test_langs"};
  const std::vector<std::string> subset_keys = {"out", "constraints", "target", "seed"};
  const std::vector<std::string> plan_keys = {"out", "langs", "budget", "constraints", "seed"};
  const std::vector<std::string> dist_keys = {"out", "constraints", "alpha"};
  add(analyze, "diversity", "typological diversity of a language sample", div_keys,
      [&](const RunConfig& c) { return cmd_diversity(c, div_keys, out); });
  add(analyze, "similarity", "train-test language similarity", sim_keys,
      [&](const RunConfig& c) { return cmd_similarity(c, sim_keys, out); });
  add(analyze, "subset", "distribution-preserving constraint subset", subset_keys,
      [&](const RunConfig& c) { return cmd_subset(c, subset_keys, out); });
  add(analyze, "plan", "fixed per-language-pair budget", plan_keys,
      [&](const RunConfig& c) { return cmd_plan(c, plan_keys, out); });
  add(analyze, "distribution", "language-pair sampling distribution", dist_keys,
      [&](const RunConfig& c) { return cmd_distribution(c, dist_keys, out); });

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    // Subcommand help requests surface as parse errors with exit code 0.
    if (e.get_exit_code() == 0) {
      for (const auto& cmd : commands) {
        if (cmd->app->parsed()) out << cmd->app->help();
      }
      return 0;
    }
    err << "error: " << e.what() << '\n';
    return 2;
  }

  for (const auto& cmd : commands) {
    if (!cmd->app->parsed()) continue;
    try {
      RunConfig cfg;
      if (!config_path.empty()) cfg.load_file(config_path);
      cfg.apply_environment();
      for (const auto& [key, opt] : cmd->options) {
        if (opt->count() > 0) cfg.set(key, flag_values[cmd->app->get_name() + "/" + key]);
      }
      return cmd->action(cfg);
    } catch (const ValidationError& e) {
      err << "error: " << e.what() << '\n';
      return 2;
    } catch (const IoError& e) {
      err << "error: " << e.what() << '\n';
      return 1;
    } catch (const std::exception& e) {
      err << "error: " << e.what() << '\n';
      return 1;
    }
  }
  err << "error: no command given\n";
  return 2;
}

}  // namespace lexspec::cli
