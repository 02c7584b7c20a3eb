// saliensim CLI: corpus ingestion, salient n-gram extraction, embeddings,
// n-gram LM and classifier training, plain and constrained decoding, and the
// attribute-rate experiment harness.
//
// Exit codes: 0 success, 1 usage error, 2 validation error, 3 runtime failure.

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "saliensim/classifier.hpp"
#include "saliensim/decoding.hpp"
#include "saliensim/embedding.hpp"
#include "saliensim/error.hpp"
#include "saliensim/harness.hpp"
#include "saliensim/lm.hpp"
#include "saliensim/salience.hpp"
#include "saliensim/text.hpp"
#include "saliensim/version.hpp"

namespace {

using namespace saliensim;
using ordered_json = nlohmann::ordered_json;

std::set<int> parse_n_values(const std::string& csv) {
  std::set<int> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.insert(std::stoi(item));
    } catch (const std::exception&) {
      throw ValidationError("bad n-gram order: \"" + item + "\"");
    }
  }
  if (out.empty()) throw ValidationError("--n must list at least one order");
  return out;
}

std::vector<AugmentTarget> load_augment_targets(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open augment targets: " + path);
  ordered_json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("invalid augment targets in " + path + ": " + e.what());
  }
  std::vector<AugmentTarget> targets;
  try {
    for (const auto& item : j) {
      targets.push_back({item.at("topic").get<std::string>(), item.at("positive").get<bool>(),
                         item.at("count").get<std::size_t>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("invalid augment target entry in " + path + ": " + e.what());
  }
  return targets;
}


struct IngestOpts {
  std::string in, out, augment;
  bool balance = false;
  std::uint64_t seed = 0;
};
struct SalienceOpts {
  std::string in, out, lambda = "0.5", gamma = "5.5", n = "3,4,5";
  std::string embeddings, profile;
};
struct EmbedOpts {
  std::string in, out, sidecar;
  int dim = 64, window = 5, min_count = 1;
};
struct TrainLmOpts {
  std::string in, out, topic;
  int order = 3, min_count = 1;
  double discount = 0.75;
};
struct TrainClfOpts {
  std::string in, out;
  ClassifierConfig config;
};
struct DecodeOpts {
  std::string model, profile, embeddings, post, mode = "topk", out;
  DecoderConfig config;
  int num_samples = 1;
};
struct ClassifyOpts {
  std::string model, in, out;
  std::optional<double> threshold;
};
struct ExperimentOpts {
  std::string config;
};
struct ReportOpts {
  std::string in, format = "csv", out, baseline, treatment, compare_out;
};

int run_cli(int argc, char** argv) {
  CLI::App app{"salience-guided constrained decoding toolkit"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  std::optional<std::uint64_t> global_seed;
  std::string global_config;
  std::string out_dir = ".";
  app.add_option("--seed", global_seed, "Seed override applied to the chosen subcommand");
  app.add_option("--config", global_config, "Experiment config JSON (used by `experiment`)");
  app.add_option("--out-dir", out_dir, "Output directory for experiment artifacts");

  std::function<void()> action;

  // ingest -------------------------------------------------------------
  auto* ingest = app.add_subcommand("ingest", "Preprocess and curate a JSONL corpus");
  {
    auto opts = std::make_shared<IngestOpts>();
    ingest->add_option("--in", opts->in, "Input corpus (JSONL)")->required();
    ingest->add_option("--out", opts->out, "Output corpus (JSONL)")->required();
    ingest->add_flag("--balance", opts->balance,
                     "Downsample negatives to match positives per (topic, source)");
    ingest->add_option("--augment", opts->augment,
                       "JSON file of {topic, positive, count} augmentation targets");
    ingest->add_option("--seed", opts->seed, "Seed for balancing/augmentation");
    ingest->callback([opts, &action, &global_seed] {
      action = [opts, &global_seed] {
        const std::uint64_t seed = global_seed.value_or(opts->seed);
        Corpus corpus = preprocess_corpus(load_corpus(opts->in));
        if (opts->balance) {
          std::vector<std::string> notes;
          corpus = downsample_balance(corpus, seed, &notes);
          for (const auto& note : notes) std::cerr << "note: " << note << "\n";
        }
        if (!opts->augment.empty()) {
          corpus = augment_pairs(corpus, load_augment_targets(opts->augment), seed);
        }
        save_corpus(corpus, opts->out);
        std::cerr << "wrote " << corpus.pairs.size() << " pairs to " << opts->out << "\n";
      };
    });
  }

  // salience -----------------------------------------------------------
  auto* salience = app.add_subcommand("salience", "Extract salient n-grams per attribute");
  {
    auto opts = std::make_shared<SalienceOpts>();
    salience->add_option("--in", opts->in, "Labeled corpus (JSONL)")->required();
    salience->add_option("--out", opts->out, "Salient-set JSON output")->required();
    salience->add_option("--lambda", opts->lambda, "Smoothing (decimal, default 0.5)");
    salience->add_option("--gamma", opts->gamma, "Salience threshold (decimal, default 5.5)");
    salience->add_option("--n", opts->n, "Comma-separated n-gram orders (default 3,4,5)");
    salience->add_option("--embeddings", opts->embeddings,
                         "Embedding table for building a constraint profile");
    salience->add_option("--profile", opts->profile,
                         "Constraint-profile JSON output (requires --embeddings)");
    salience->callback([opts, &action] {
      action = [opts] {
        SalienceConfig config;
        config.lambda = Rational::from_decimal(opts->lambda);
        config.gamma_sal = Rational::from_decimal(opts->gamma);
        config.n_values = parse_n_values(opts->n);
        config.validate();

        const Corpus corpus = load_corpus(opts->in);
        const SalienceTable table = count_label_ngrams(corpus, config);
        const SalientSets sets = extract_salient(table, config);
        save_salient_sets(sets, table.attributes, config, opts->out);
        std::cerr << "salient: " << sets.at(kPositiveAttribute).size() << " positive, "
                  << sets.at(kNegativeAttribute).size() << " negative -> " << opts->out << "\n";

        if (!opts->profile.empty()) {
          if (opts->embeddings.empty()) {
            throw ValidationError("--profile requires --embeddings");
          }
          const EmbeddingTable emb = load_embeddings(opts->embeddings);
          const Vocabulary vocab = build_vocab(corpus, 1);
          const ConstraintProfile profile =
              build_profile(sets.at(kPositiveAttribute), sets.at(kNegativeAttribute), emb,
                            kPositiveAttribute, kNegativeAttribute);
          save_profile(profile, opts->profile);
          std::cerr << "profile: " << profile.matrix_a.size() << " x "
                    << profile.matrix_b.size() << " rows -> " << opts->profile << "\n";
        }
      };
    });
  }

  // embed ----------------------------------------------------------------
  auto* embed = app.add_subcommand("embed", "Train PPMI+SVD token embeddings");
  {
    auto opts = std::make_shared<EmbedOpts>();
    embed->add_option("--in", opts->in, "Corpus (JSONL)")->required();
    embed->add_option("--out", opts->out, "Embedding JSON output")->required();
    embed->add_option("--dim", opts->dim, "Embedding dimension (default 64)");
    embed->add_option("--window", opts->window, "Co-occurrence window (default 5)");
    embed->add_option("--min-count", opts->min_count, "Vocabulary threshold (default 1)");
    embed->add_option("--sidecar", opts->sidecar, "Write rows to a float32 sidecar file");
    embed->callback([opts, &action] {
      action = [opts] {
        const Corpus corpus = load_corpus(opts->in);
        const Vocabulary vocab = build_vocab(corpus, opts->min_count);
        const EmbeddingTable table = build_embeddings(corpus, vocab, opts->window, opts->dim);
        save_embeddings(table, opts->out, opts->sidecar);
        std::cerr << "embedded " << table.tokens.size() << " tokens at dim " << table.dim
                  << " -> " << opts->out << "\n";
      };
    });
  }

  // train-lm ---------------------------------------------------------------
  auto* train_lm_cmd = app.add_subcommand("train-lm", "Train the backoff n-gram language model");
  {
    auto opts = std::make_shared<TrainLmOpts>();
    train_lm_cmd->add_option("--in", opts->in, "Corpus (JSONL)")->required();
    train_lm_cmd->add_option("--out", opts->out, "Model JSON output")->required();
    train_lm_cmd->add_option("--order", opts->order, "Max n-gram order (default 3)");
    train_lm_cmd->add_option("--discount", opts->discount, "Absolute discount (default 0.75)");
    train_lm_cmd->add_option("--min-count", opts->min_count, "Vocabulary threshold (default 1)");
    train_lm_cmd->add_option("--topic", opts->topic, "Train on this topic subset only");
    train_lm_cmd->callback([opts, &action] {
      action = [opts] {
        const Corpus corpus = load_corpus(opts->in);
        // the vocabulary always comes from the full corpus so subset models share it
        const Vocabulary vocab = build_vocab(corpus, opts->min_count);
        Corpus subset;
        if (opts->topic.empty()) {
          subset = corpus;
        } else {
          for (const auto& pair : corpus.pairs) {
            if (pair.topic == opts->topic) subset.pairs.push_back(pair);
          }
          if (subset.pairs.empty()) {
            throw ValidationError("no pairs with topic \"" + opts->topic + "\"");
          }
        }
        const BackoffNgramLM lm = train_lm(subset, vocab, opts->order, opts->discount);
        lm.save(opts->out);
        std::cerr << "trained order-" << opts->order << " lm on " << subset.pairs.size()
                  << " pairs, perplexity " << perplexity(lm, subset, vocab) << " -> "
                  << opts->out << "\n";
      };
    });
  }

  // train-classifier ---------------------------------------------------
  auto* train_clf = app.add_subcommand("train-classifier", "Train the attribute classifier");
  {
    auto opts = std::make_shared<TrainClfOpts>();
    train_clf->add_option("--in", opts->in, "Labeled corpus (JSONL)")->required();
    train_clf->add_option("--out", opts->out, "Classifier JSON output")->required();
    train_clf->add_option("--seed", opts->config.seed, "Dev-split seed");
    train_clf->add_option("--epochs", opts->config.epochs, "Training epochs (default 20)");
    train_clf->add_option("--lr", opts->config.learning_rate, "Learning rate (default 0.1)");
    train_clf->add_option("--l2", opts->config.l2, "L2 regularization (default 1e-4)");
    train_clf->add_option("--dev-fraction", opts->config.dev_fraction,
                          "Held-out fraction for the dev accuracy report (default 0)");
    train_clf->add_option("--threshold", opts->config.threshold,
                          "Decision threshold (default 0.5)");
    train_clf->add_flag("--response-only", opts->config.response_only,
                        "Ablation: ignore the post text");
    train_clf->callback([opts, &action, &global_seed] {
      action = [opts, &global_seed] {
        if (global_seed) opts->config.seed = *global_seed;
        const Corpus corpus = load_corpus(opts->in);
        TrainReport report;
        const ClassifierModel model = train_classifier(corpus, opts->config, &report);
        model.save(opts->out);
        std::cerr << "train accuracy " << report.train_accuracy;
        if (opts->config.dev_fraction > 0) std::cerr << ", dev accuracy " << report.dev_accuracy;
        std::cerr << ", loss " << report.initial_loss << " -> " << report.final_loss << "\n";
        std::cerr << "wrote " << opts->out << "\n";
      };
    });
  }

  // decode ---------------------------------------------------------------
  auto* decode = app.add_subcommand("decode", "Generate responses to a post");
  {
    auto opts = std::make_shared<DecodeOpts>();
    decode->add_option("--model", opts->model, "LM JSON")->required();
    decode->add_option("--post", opts->post, "Input post text")->required();
    decode->add_option("--mode", opts->mode, "topk | saliensim")
        ->check(CLI::IsMember({"topk", "saliensim"}));
    decode->add_option("--profile", opts->profile, "Constraint profile JSON (saliensim)");
    decode->add_option("--embeddings", opts->embeddings, "Embedding JSON (saliensim)");
    decode->add_option("--k", opts->config.k, "Top-k size (default 40)");
    decode->add_option("--c", opts->config.c, "Candidates per step (default 10)");
    decode->add_option("--r", opts->config.r, "Recent-gram length (default 5)");
    decode->add_option("--gamma", opts->config.gamma_sim, "Similarity margin (default 0.01)");
    decode->add_option("--backtracks", opts->config.backtrack_limit,
                       "Backtrack budget (default 5)");
    decode->add_option("--max-steps", opts->config.max_steps, "Generation cap (default 30)");
    decode->add_option("--seed", opts->config.seed, "Base seed; sample i uses seed+i");
    decode->add_option("--num-samples", opts->num_samples, "Samples to generate (default 1)");
    decode->add_option("--out", opts->out, "Output JSONL (default stdout)");
    decode->callback([opts, &action, &global_seed] {
      action = [opts, &global_seed] {
        if (global_seed) opts->config.seed = *global_seed;
        if (opts->num_samples < 1) throw ValidationError("--num-samples must be >= 1");
        const BackoffNgramLM lm = BackoffNgramLM::load(opts->model);

        std::optional<SalienSimDecoder> constrained;
        EmbeddingTable embeddings;
        if (opts->mode == "saliensim") {
          if (opts->profile.empty() || opts->embeddings.empty()) {
            throw ValidationError("saliensim mode requires --profile and --embeddings");
          }
          embeddings = load_embeddings(opts->embeddings);
          constrained.emplace(load_profile(opts->profile), embeddings, lm.vocab());
        }

        std::ofstream file;
        if (!opts->out.empty()) {
          file.open(opts->out, std::ios::trunc);
          if (!file) throw ValidationError("cannot write output: " + opts->out);
        }
        std::ostream& out = opts->out.empty() ? std::cout : file;

        const std::string post = preprocess(opts->post);
        std::vector<int> input = lm.vocab().encode(post);
        input.push_back(Vocabulary::kEosId);

        for (int i = 0; i < opts->num_samples; ++i) {
          DecoderConfig config = opts->config;
          config.seed = opts->config.seed + static_cast<std::uint64_t>(i);
          const DecodeResult result = constrained
                                          ? constrained->decode(lm, input, config)
                                          : decode_top_k(lm, input, config);
          std::span<const int> tokens(result.tokens);
          if (!tokens.empty() && tokens.back() == Vocabulary::kEosId) {
            tokens = tokens.subspan(0, tokens.size() - 1);
          }
          ordered_json record;
          record["post"] = post;
          record["response"] = lm.vocab().decode(tokens);
          record["mode"] = opts->mode;
          record["seed"] = config.seed;
          record["backtracks_used"] = result.backtracks_used;
          out << record.dump() << '\n';
        }
      };
    });
  }

  // classify ---------------------------------------------------------------
  auto* classify = app.add_subcommand("classify", "Label (post, response) pairs");
  {
    auto opts = std::make_shared<ClassifyOpts>();
    classify->add_option("--model", opts->model, "Classifier JSON")->required();
    classify->add_option("--in", opts->in, "Input JSONL with post/response fields")->required();
    classify->add_option("--out", opts->out, "Output JSONL with a predicted field")->required();
    classify->add_option("--threshold", opts->threshold, "Override the decision threshold");
    classify->callback([opts, &action] {
      action = [opts] {
        const ClassifierModel model = ClassifierModel::load(opts->model);
        const double threshold = opts->threshold.value_or(model.config().threshold);
        std::ifstream in(opts->in);
        if (!in) throw ValidationError("cannot open input: " + opts->in);
        std::ofstream out(opts->out, std::ios::trunc);
        if (!out) throw ValidationError("cannot write output: " + opts->out);

        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
          ++line_no;
          if (line.empty()) continue;
          ordered_json record;
          try {
            record = ordered_json::parse(line);
            if (!record.is_object() || !record.at("post").is_string() ||
                !record.at("response").is_string()) {
              throw ValidationError("record needs string post/response fields");
            }
          } catch (const nlohmann::json::exception& e) {
            throw ValidationError(opts->in + ":" + std::to_string(line_no) + ": " + e.what());
          } catch (const ValidationError& e) {
            throw ValidationError(opts->in + ":" + std::to_string(line_no) + ": " + e.what());
          }
          const Prediction p = model.predict(record["post"].get<std::string>(),
                                             record["response"].get<std::string>());
          record["predicted"] = {{"is_positive", p.probability >= threshold},
                                 {"probability", p.probability}};
          out << record.dump() << '\n';
        }
      };
    });
  }

  // experiment ---------------------------------------------------------
  auto* experiment = app.add_subcommand("experiment", "Run the attribute-rate experiment");
  {
    auto opts = std::make_shared<ExperimentOpts>();
    experiment->add_option("--config", opts->config, "Experiment spec JSON");
    experiment->callback([opts, &action, &global_seed, &global_config, &out_dir] {
      action = [opts, &global_seed, &global_config, &out_dir] {
        const std::string config_path = !opts->config.empty() ? opts->config : global_config;
        if (config_path.empty()) throw ValidationError("experiment requires --config");
        ExperimentSpec spec = load_experiment_spec(config_path);
        if (global_seed) spec.seed = *global_seed;
        const ExperimentResult result = run_experiment(spec, out_dir);
        for (const auto& cell : result.report.cells) {
          std::cout << cell.topic << '\t' << cell.generator << '\t' << cell.decoder << '\t'
                    << cell.positives << '/' << cell.total << '\t' << cell.rate << '\n';
        }
        std::cerr << "wrote " << (std::filesystem::path(out_dir) / "report.json").string()
                  << " and generations.jsonl\n";
      };
    });
  }

  // report ---------------------------------------------------------------
  auto* report_cmd = app.add_subcommand("report", "Render or compare a rate report");
  {
    auto opts = std::make_shared<ReportOpts>();
    report_cmd->add_option("--in", opts->in, "report.json from `experiment`")->required();
    report_cmd->add_option("--format", opts->format, "csv | svg (default csv)")
        ->check(CLI::IsMember({"csv", "svg"}));
    report_cmd->add_option("--out", opts->out, "Output file");
    report_cmd->add_option("--baseline", opts->baseline, "Baseline decoder name for comparison");
    report_cmd->add_option("--treatment", opts->treatment, "Treatment decoder name");
    report_cmd->add_option("--compare-out", opts->compare_out,
                           "Comparison CSV output (default stdout)");
    report_cmd->callback([opts, &action, &out_dir] {
      action = [opts, &out_dir] {
        const RateReport report = load_report(opts->in);
        if (!opts->baseline.empty() || !opts->treatment.empty()) {
          if (opts->baseline.empty() || opts->treatment.empty()) {
            throw ValidationError("comparison requires both --baseline and --treatment");
          }
          const auto rows = compare_rates(report, opts->baseline, opts->treatment);
          if (opts->compare_out.empty()) {
            std::cout << "topic\tgenerator\tbase\ttreat\trelative_reduction\n";
            for (const auto& row : rows) {
              std::cout << row.topic << '\t' << row.generator << '\t' << row.base_rate << '\t'
                        << row.treat_rate << '\t';
              if (row.applicable) std::cout << row.relative_reduction;
              else std::cout << "n/a";
              std::cout << '\n';
            }
          } else {
            render_comparison_csv(rows, opts->compare_out);
          }
          return;
        }
        std::string out = opts->out;
        if (out.empty()) {
          out = (std::filesystem::path(out_dir) / ("rates." + opts->format)).string();
        }
        render_report(report, opts->format, out);
        std::cerr << "wrote " << out << "\n";
      };
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;  // usage errors are exit code 1
  }
  if (action) action();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_cli(argc, argv);
  } catch (const saliensim::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
