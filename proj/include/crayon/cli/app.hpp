#pragma once

// Command-line front end. run() returns the process exit code:
//   0 success, 1 other failure, 2 missing input file, 3 invalid config,
//   4 training diverged, 64 usage error.

#include "crayon/attributes/annotator.hpp"
#include "crayon/corpus/dialogue.hpp"
#include "crayon/corpus/synthetic.hpp"
#include "crayon/corpus/vocabulary.hpp"
#include "crayon/evaluation/ablation.hpp"
#include "crayon/evaluation/evaluate.hpp"
#include "crayon/model/checkpoint.hpp"
#include "crayon/service/server.hpp"
#include "crayon/training/trainer.hpp"

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#ifndef CRAYON_DATA_DIR
#define CRAYON_DATA_DIR "data"
#endif

namespace crayon::cli {

namespace fs = std::filesystem;
using nlohmann::json;

enum ExitCode : int { kOk = 0, kFailure = 1, kMissingInput = 2, kBadConfig = 3, kDiverged = 4, kUsage = 64 };

// Resolved settings shared by the training and evaluation commands.
struct RunConfig {
  model::ModelConfig model;
  train::TrainingConfig training;
  train::TrainingConfig rl;
  train::RewardConfig reward = train::RewardConfig::standard();
  model::GenerateOptions generation;
  std::size_t min_count = 2;

  RunConfig() {
    rl.learning_rate = 1e-4;
    rl.warmup_steps = 0;
    rl.max_steps = 2000;
  }
};

inline json to_json(const RunConfig& c) {
  return {{"model", model::to_json(c.model)},
          {"training", train::to_json(c.training)},
          {"rl", train::to_json(c.rl)},
          {"reward", train::to_json(c.reward)},
          {"generation", {{"max_len", c.generation.max_len}}},
          {"min_count", c.min_count}};
}

inline void require_file(const fs::path& p) {
  if (!fs::is_regular_file(p)) throw InputError("missing input file: " + p.string());
}

// Reads a JSON config ({"model", "training", "rl", "reward", "generation",
// "min_count"}, every section optional) on top of the defaults.
inline RunConfig load_run_config(const std::optional<fs::path>& path) {
  RunConfig c;
  if (!path) return c;
  require_file(*path);
  json j;
  try {
    j = json::parse(read_file(*path));
  } catch (const json::exception& e) {
    throw ConfigError(path->string() + ": " + e.what());
  }
  if (!j.is_object()) throw ConfigError(path->string() + ": config must be a JSON object");
  for (const auto& [k, v] : j.items()) {
    if (k != "model" && k != "training" && k != "rl" && k != "reward" && k != "generation" && k != "min_count") {
      throw ConfigError(path->string() + ": unknown section '" + k + "'");
    }
  }
  try {
    if (j.contains("model")) model::update_from_json(c.model, j["model"]);
    if (j.contains("training")) train::update_from_json(c.training, j["training"]);
    if (j.contains("rl")) train::update_from_json(c.rl, j["rl"]);
    if (j.contains("reward")) train::update_from_json(c.reward, j["reward"]);
    if (j.contains("generation")) {
      for (const auto& [k, v] : j["generation"].items()) {
        if (k != "max_len") throw ConfigError("generation: unknown field '" + k + "'");
      }
      c.generation.max_len = j["generation"].value("max_len", c.generation.max_len);
    }
    c.min_count = j.value("min_count", c.min_count);
  } catch (const json::exception& e) {
    throw ConfigError(path->string() + ": " + e.what());
  }
  if (c.generation.max_len < 1) throw ConfigError("generation: max_len must be >= 1");
  return c;
}

inline std::optional<fs::path> config_path(const std::string& flag) {
  if (!flag.empty()) return fs::path(flag);
  if (const char* env = std::getenv("CRAYON_CONFIG"); env != nullptr && *env != '\0') return fs::path(env);
  return std::nullopt;
}

inline std::vector<corpus::AnnotatedExample> load_annotated_file(const fs::path& p) {
  require_file(p);
  return corpus::load_annotated(p);
}

class App {
 public:
  App(std::ostream& out, std::ostream& err) : out_(out), err_(err) {}

  int run(int argc, const char* const* argv) {
    CLI::App app{"Attribute-controlled dialogue generation"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all");
    define_synth(app);
    define_annotate(app);
    define_train_ml(app);
    define_train_rl(app);
    define_evaluate(app);
    define_probe(app);
    define_ablate(app);
    define_serve(app);
    try {
      app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
      out_ << app.help();
      return kOk;
    } catch (const CLI::CallForAllHelp& e) {
      out_ << app.help("", CLI::AppFormatMode::All);
      return kOk;
    } catch (const CLI::ParseError& e) {
      err_ << "error: " << e.what() << "\n";
      return kUsage;
    }
    try {
      return action_();
    } catch (const InputError& e) {
      err_ << "error: " << e.what() << "\n";
      return kMissingInput;
    } catch (const ConfigError& e) {
      err_ << "error: invalid config: " << e.what() << "\n";
      return kBadConfig;
    } catch (const train::TrainingDiverged& e) {
      err_ << "error: " << e.what() << "\n";
      return kDiverged;
    } catch (const std::exception& e) {
      err_ << "error: " << e.what() << "\n";
      return kFailure;
    }
  }

 private:
  void log_config(const std::string& command, const RunConfig& c) {
    err_ << json{{"command", command}, {"config", to_json(c)}}.dump() << "\n";
  }

  void define_synth(CLI::App& app) {
    auto* cmd = app.add_subcommand("synth", "Write the synthetic controllable corpus");
    auto opt = std::make_shared<corpus::SynthConfig>();
    auto dir = std::make_shared<std::string>();
    cmd->add_option("--out", *dir, "Output directory")->required();
    cmd->add_option("--seed", opt->seed, "Random seed");
    cmd->add_option("--train,--size", opt->train, "Training dialogues");
    cmd->add_option("--valid", opt->valid, "Validation dialogues");
    cmd->add_option("--test", opt->test, "Test dialogues");
    cmd->callback([this, opt, dir] {
      action_ = [this, opt, dir] {
        corpus::write_synthetic_corpus(corpus::make_synthetic_corpus(*opt), *dir);
        out_ << "wrote synthetic corpus to " << *dir << "\n";
        return int{kOk};
      };
    });
  }

  void define_annotate(CLI::App& app) {
    struct Args {
      std::string train, valid, test, vectors, out, schema, format = "daily_dialog";
      std::string lexicon = std::string(CRAYON_DATA_DIR) + "/lexicon";
    };
    auto a = std::make_shared<Args>();
    auto* cmd = app.add_subcommand("annotate", "Fit annotation resources on a training split and label corpora");
    cmd->add_option("--train,--in", a->train, "Training dialogues (JSONL)")->required();
    cmd->add_option("--valid", a->valid, "Validation dialogues (JSONL)");
    cmd->add_option("--test", a->test, "Test dialogues (JSONL)");
    cmd->add_option("--vectors", a->vectors, "Word vectors (word v1 v2 ...)")->required();
    cmd->add_option("--lexicon", a->lexicon, "Directory with positive.txt, negative.txt, negation.txt");
    cmd->add_option("--format", a->format, "daily_dialog or persona_chat");
    cmd->add_option("--out", a->out, "Output directory, or a .jsonl path for the annotated training split")->required();
    cmd->add_option("--schema", a->schema, "Also write the fitted attribute schema here");
    cmd->callback([this, a] {
      action_ = [this, a] {
        const auto format = corpus::format_from_name(a->format);
        require_file(a->train);
        require_file(a->vectors);
        for (const char* f : {"positive.txt", "negative.txt", "negation.txt"}) require_file(fs::path(a->lexicon) / f);
        auto train = corpus::filter_short(corpus::load_corpus(a->train, format));
        if (train.empty()) throw std::runtime_error("no training responses with at least 3 tokens");
        // Keep only vectors for words the corpus uses; the bundle then
        // stays small enough to embed in checkpoints.
        auto vectors = attr::load_word_vectors(a->vectors);
        std::vector<std::pair<std::string, std::vector<corpus::DialogueExample>>> splits{{"train", train}};
        for (auto [name, path] : {std::pair{"valid", a->valid}, std::pair{"test", a->test}}) {
          if (path.empty()) continue;
          require_file(path);
          splits.emplace_back(name, corpus::filter_short(corpus::load_corpus(path, format)));
        }
        attr::WordVectorTable used;
        used.dim = vectors.dim;
        for (const auto& [name, exs] : splits) {
          for (const auto& e : exs) {
            for (const auto* seq : {&e.response, &e.last_utterance()}) {
              for (const auto& w : *seq) {
                if (const auto* v = vectors.find(w)) used.add(w, *v);
              }
            }
          }
        }
        const auto res = attr::fit_resources(corpus::response_pairs(train), attr::load_lexicon(a->lexicon), used);
        // A .jsonl --out names the training output; siblings share its stem.
        const fs::path out(a->out);
        const bool single = out.extension() == ".jsonl";
        auto path_for = [&](const std::string& name, const std::string& ext) {
          if (!single) return out / (name + ext);
          if (name == "train" && ext == ".jsonl") return out;
          return out.parent_path() / (out.stem().string() + "." + name + ext);
        };
        fs::create_directories(single ? (out.parent_path().empty() ? fs::path(".") : out.parent_path()) : out);
        attr::save_resources(res, path_for("resources", ".json"));
        const std::string schema_doc = json{{"attributes", to_json(res.schema)}}.dump(2) + "\n";
        write_file(a->schema.empty() ? path_for("schema", ".json") : fs::path(a->schema), schema_doc);
        for (const auto& [name, exs] : splits) {
          const auto annotated = corpus::annotate_all(exs, res);
          corpus::save_annotated(annotated, path_for(name, ".jsonl"));
          out_ << name << ": " << annotated.size() << " examples";
          for (auto at : attr::kAllAttributes) {
            std::vector<std::size_t> count(static_cast<std::size_t>(attr::arity_of(at)), 0);
            for (const auto& e : annotated) ++count[static_cast<std::size_t>(e.attributes[at])];
            out_ << " " << attr::name_of(at) << "=";
            for (std::size_t v = 0; v < count.size(); ++v) out_ << (v ? "/" : "") << count[v];
          }
          out_ << "\n";
        }
        return int{kOk};
      };
    });
  }

  struct TrainArgs {
    std::string train, valid, resources, checkpoint, out, log, config;
    std::optional<std::uint64_t> seed;
    std::optional<long> max_steps;
  };

  void add_train_flags(CLI::App* cmd, TrainArgs& a) {
    cmd->add_option("--train", a.train, "Annotated training split")->required();
    cmd->add_option("--valid", a.valid, "Annotated validation split");
    cmd->add_option("--out", a.out, "Checkpoint path to write")->required();
    cmd->add_option("--log", a.log, "Per-step JSONL log");
    cmd->add_option("--config", a.config, "JSON config (default: $CRAYON_CONFIG)");
    cmd->add_option("--seed", a.seed, "Random seed for initialization and batching");
    cmd->add_option("--max-steps", a.max_steps, "Override the step budget");
  }

  static std::unique_ptr<std::ofstream> open_log(const std::string& path) {
    if (path.empty()) return nullptr;
    if (fs::path(path).has_parent_path()) fs::create_directories(fs::path(path).parent_path());
    auto f = std::make_unique<std::ofstream>(path, std::ios::trunc);
    if (!*f) throw std::runtime_error("cannot write " + path);
    return f;
  }

  void define_train_ml(CLI::App& app) {
    auto a = std::make_shared<TrainArgs>();
    auto* cmd = app.add_subcommand("train-ml", "Maximum-likelihood training");
    add_train_flags(cmd, *a);
    cmd->add_option("--resources", a->resources, "Annotation resources from annotate")->required();
    cmd->callback([this, a] {
      action_ = [this, a] {
        RunConfig cfg = load_run_config(config_path(a->config));
        if (a->seed) cfg.training.seed = cfg.model.seed = *a->seed;
        if (a->max_steps) cfg.training.max_steps = *a->max_steps;
        cfg.training.validate();
        require_file(a->resources);
        const auto res = attr::load_resources(a->resources);
        const auto train = load_annotated_file(a->train);
        const auto valid = a->valid.empty() ? std::vector<corpus::AnnotatedExample>{} : load_annotated_file(a->valid);
        const auto vocab = corpus::build_vocabulary(train, cfg.min_count);
        cfg.model.vocab_size = vocab.size();
        cfg.model.validate();
        log_config("train-ml", cfg);

        model::Model<float> m(cfg.model);
        auto log = open_log(a->log);
        const json extra{{"stage", "ml"}, {"training", train::to_json(cfg.training)}, {"reward", train::to_json(cfg.reward)}};
        train::TrainHooks hooks;
        hooks.log = log.get();
        hooks.on_eval = [&](const train::EvalPoint& e) {
          if (e.best) model::save_checkpoint(a->out, m, vocab, res, extra);
          err_ << "step " << e.step << " valid_ppl " << e.valid_ppl << (e.best ? " (best)" : "") << "\n";
        };
        const auto result = train::train_ml(m, train, valid, vocab, cfg.training, hooks);
        model::save_checkpoint(a->out, m, vocab, res, extra);
        out_ << json{{"steps", result.steps}, {"best_step", result.best_step},
                     {"best_valid_ppl", result.best_step < 0 ? json(nullptr) : json(result.best_valid_ppl)},
                     {"early_stopped", result.early_stopped}, {"checkpoint", a->out}}.dump()
             << "\n";
        return int{kOk};
      };
    });
  }

  void define_train_rl(CLI::App& app) {
    auto a = std::make_shared<TrainArgs>();
    auto* cmd = app.add_subcommand("train-rl", "Reinforcement fine-tuning from an ML checkpoint");
    add_train_flags(cmd, *a);
    cmd->add_option("--checkpoint,--ckpt", a->checkpoint, "ML checkpoint to start from")->required();
    cmd->callback([this, a] {
      action_ = [this, a] {
        RunConfig cfg = load_run_config(config_path(a->config));
        if (a->seed) cfg.rl.seed = *a->seed;
        if (a->max_steps) cfg.rl.max_steps = *a->max_steps;
        cfg.rl.validate();
        require_file(a->checkpoint);
        auto ck = model::load_checkpoint<float>(a->checkpoint);
        const auto train = load_annotated_file(a->train);
        const auto valid = a->valid.empty() ? std::vector<corpus::AnnotatedExample>{} : load_annotated_file(a->valid);
        log_config("train-rl", cfg);

        auto log = open_log(a->log);
        auto& m = *ck.model;
        const json extra{{"stage", "rl"}, {"training", train::to_json(cfg.rl)}, {"reward", train::to_json(cfg.reward)}};
        train::TrainHooks hooks;
        hooks.log = log.get();
        hooks.on_eval = [&](const train::EvalPoint& e) {
          if (e.best) model::save_checkpoint(a->out, m, ck.vocab, ck.resources, extra);
          err_ << "step " << e.step << " valid_ppl " << e.valid_ppl << " valid_reward " << e.valid_reward
               << (e.best ? " (best)" : "") << "\n";
        };
        const auto result = train::train_rl(m, train, valid, ck.vocab, cfg.rl, cfg.reward, ck.resources, hooks);
        model::save_checkpoint(a->out, m, ck.vocab, ck.resources, extra);
        double reward = 0.0;
        for (double r : result.reward_trace) reward += r;
        if (!result.reward_trace.empty()) reward /= static_cast<double>(result.reward_trace.size());
        out_ << json{{"steps", result.steps}, {"best_step", result.best_step}, {"mean_sampled_reward", reward},
                     {"best_valid_reward", result.best_step < 0 ? json(nullptr) : json(result.best_valid_reward)},
                     {"checkpoint", a->out}}.dump()
             << "\n";
        return int{kOk};
      };
    });
  }

  struct EvalArgs {
    std::string checkpoint, data, out, config, setting = "all", name;
  };

  void add_eval_flags(CLI::App* cmd, EvalArgs& a) {
    cmd->add_option("--checkpoint,--ckpt", a.checkpoint, "Model checkpoint")->required();
    cmd->add_option("--data", a.data, "Annotated evaluation split")->required();
    cmd->add_option("--out", a.out, "Write the report as JSON");
    cmd->add_option("--config", a.config, "JSON config (default: $CRAYON_CONFIG)");
    cmd->add_option("--name", a.name, "Corpus identifier for the report");
  }

  int report(const std::vector<eval::EvalReport>& reports, const std::string& path) {
    out_ << eval::render_table(reports);
    if (!path.empty()) {
      json arr = json::array();
      for (const auto& r : reports) arr.push_back(eval::to_json(r));
      write_file(path, json{{"reports", arr}}.dump(2) + "\n");
    }
    return kOk;
  }

  void define_evaluate(CLI::App& app) {
    auto a = std::make_shared<EvalArgs>();
    auto* cmd = app.add_subcommand("evaluate", "Perplexity, BLEU, Distinct and oracle control accuracy");
    add_eval_flags(cmd, *a);
    cmd->add_option("--setting", a->setting, "system, oracle or all");
    cmd->callback([this, a] {
      action_ = [this, a] {
        const RunConfig cfg = load_run_config(config_path(a->config));
        require_file(a->checkpoint);
        const auto ck = model::load_checkpoint<float>(a->checkpoint);
        const auto data = load_annotated_file(a->data);
        const std::string name = a->name.empty() ? fs::path(a->data).filename().string() : a->name;
        std::vector<eval::Setting> settings;
        if (a->setting == "all") settings = {eval::Setting::system, eval::Setting::oracle};
        else if (a->setting == "system" || a->setting == "oracle") settings = {eval::setting_from_name(a->setting)};
        else throw ConfigError("--setting must be system, oracle or all");
        std::vector<eval::EvalReport> reports;
        for (auto s : settings) reports.push_back(eval::evaluate(*ck.model, ck.vocab, data, ck.resources, s, cfg.generation, name));
        return report(reports, a->out);
      };
    });
  }

  void define_probe(CLI::App& app) {
    auto a = std::make_shared<EvalArgs>();
    auto* cmd = app.add_subcommand("probe", "Probing control accuracy, reported beside the oracle setting");
    add_eval_flags(cmd, *a);
    cmd->callback([this, a] {
      action_ = [this, a] {
        const RunConfig cfg = load_run_config(config_path(a->config));
        require_file(a->checkpoint);
        const auto ck = model::load_checkpoint<float>(a->checkpoint);
        const auto data = load_annotated_file(a->data);
        const std::string name = a->name.empty() ? fs::path(a->data).filename().string() : a->name;
        std::vector<eval::EvalReport> reports;
        for (auto s : {eval::Setting::oracle, eval::Setting::probing}) {
          reports.push_back(eval::evaluate(*ck.model, ck.vocab, data, ck.resources, s, cfg.generation, name));
        }
        return report(reports, a->out);
      };
    });
  }

  void define_ablate(CLI::App& app) {
    struct Args {
      std::string train, valid, test, resources, out, config;
      std::optional<long> max_steps;
    };
    auto a = std::make_shared<Args>();
    auto* cmd = app.add_subcommand("ablate", "Train and evaluate single-attribute variants");
    cmd->add_option("--train", a->train, "Annotated training split")->required();
    cmd->add_option("--valid", a->valid, "Annotated validation split");
    cmd->add_option("--test", a->test, "Annotated evaluation split")->required();
    cmd->add_option("--resources", a->resources, "Annotation resources")->required();
    cmd->add_option("--out", a->out, "Write the report as JSON");
    cmd->add_option("--config", a->config, "JSON config (default: $CRAYON_CONFIG)");
    cmd->add_option("--max-steps", a->max_steps, "Override the step budget per variant");
    cmd->callback([this, a] {
      action_ = [this, a] {
        RunConfig cfg = load_run_config(config_path(a->config));
        if (a->max_steps) cfg.training.max_steps = *a->max_steps;
        require_file(a->resources);
        const auto res = attr::load_resources(a->resources);
        const auto train = load_annotated_file(a->train);
        const auto valid = a->valid.empty() ? std::vector<corpus::AnnotatedExample>{} : load_annotated_file(a->valid);
        const auto test = load_annotated_file(a->test);
        const auto vocab = corpus::build_vocabulary(train, cfg.min_count);
        cfg.model.vocab_size = vocab.size();
        cfg.model.validate();
        log_config("ablate", cfg);
        const auto reports = eval::single_attribute_ablation<float>(
            train, valid, test, vocab, res, cfg.model, cfg.training, cfg.generation,
            [this](const std::string& label) { err_ << "training variant " << label << "\n"; });
        return report(reports, a->out);
      };
    });
  }

  void define_serve(CLI::App& app) {
    struct Args {
      std::string checkpoint, host = "127.0.0.1";
      int port = 8080;
      double reload_interval = 0.0;
    };
    auto a = std::make_shared<Args>();
    auto* cmd = app.add_subcommand("serve", "Run the HTTP inference service");
    cmd->add_option("--checkpoint,--ckpt", a->checkpoint, "Model checkpoint")->required();
    cmd->add_option("--host", a->host, "Listening address");
    cmd->add_option("--port", a->port, "Listening port");
    cmd->add_option("--reload-interval", a->reload_interval, "Seconds between checkpoint change checks (0 disables)");
    cmd->callback([this, a] {
      action_ = [this, a] {
        require_file(a->checkpoint);
        service::InferenceService svc;
        svc.load(a->checkpoint);
        httplib::Server server;
        svc.mount(server);
        std::atomic<bool> stop{false};
        std::thread watcher;
        if (a->reload_interval > 0.0) {
          watcher = std::thread([&] {
            auto stamp = fs::last_write_time(a->checkpoint);
            while (!stop) {
              std::this_thread::sleep_for(std::chrono::duration<double>(a->reload_interval));
              std::error_code ec;
              const auto now = fs::last_write_time(a->checkpoint, ec);
              if (ec || now == stamp) continue;
              try {
                svc.load(a->checkpoint);
                stamp = now;
                err_ << "reloaded " << a->checkpoint << "\n";
              } catch (const std::exception& e) {
                err_ << "reload failed: " << e.what() << "\n";
              }
            }
          });
        }
        err_ << "serving " << a->checkpoint << " on " << a->host << ":" << a->port << "\n";
        const bool ok = server.listen(a->host, a->port);
        stop = true;
        if (watcher.joinable()) watcher.join();
        if (!ok) throw std::runtime_error("cannot listen on " + a->host + ":" + std::to_string(a->port));
        return int{kOk};
      };
    });
  }

  std::ostream& out_;
  std::ostream& err_;
  std::function<int()> action_;
};

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  return App(out, err).run(argc, argv);
}

}  // namespace crayon::cli
