#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "saliensim/classifier.hpp"
#include "saliensim/decoding.hpp"
#include "saliensim/salience.hpp"

namespace saliensim {

struct DecoderSpec {
  std::string name;  // report key
  std::string mode;  // "topk" | "saliensim"
  DecoderConfig config;
};

struct LmParams {
  int order = 3;
  double discount = 0.75;
};

struct EmbeddingParams {
  int dim = 64;
  int window = 5;
};

// Mirrors the experiment config JSON field-for-field.
struct ExperimentSpec {
  std::string corpus_path;
  std::vector<std::string> topics;      // empty -> every topic in the corpus
  std::vector<std::string> generators;  // LM training subsets: "all" or a topic
  std::vector<DecoderSpec> decoders;
  std::string classifier_path;
  std::string embeddings_path;  // optional; built from the corpus when empty
  std::string profile_path;     // optional; built from the corpus when empty
  std::size_t posts_per_topic = 1;
  std::uint64_t seed = 0;
  int vocab_min_count = 1;
  LmParams lm;
  EmbeddingParams embedding;
  SalienceConfig salience;

  void validate() const;
};

ExperimentSpec load_experiment_spec(const std::string& path);
void save_experiment_spec(const ExperimentSpec& spec, const std::string& path);

struct RateCell {
  std::string topic;
  std::string generator;
  std::string decoder;
  std::uint64_t positives = 0;
  std::uint64_t total = 0;
  double rate = 0.0;  // positives / total
};

struct RateReport {
  std::string version;
  ExperimentSpec spec;
  std::vector<RateCell> cells;  // sorted by (topic, generator, decoder)
};

struct GenerationRecord {
  std::string topic;
  std::string generator;
  std::string decoder;
  std::string post;
  std::string response;
  bool predicted = false;
  double probability = 0.0;
  int backtracks_used = 0;
  std::uint64_t seed = 0;
};

struct ExperimentResult {
  RateReport report;
  std::vector<GenerationRecord> generations;
};

// Validates every referenced artifact up front, then fills each
// (topic, generator, decoder) cell with posts_per_topic classified
// generations. Writes report.json and generations.jsonl under out_dir.
// Deterministic given the spec: per-cell streams are derived from
// (seed, cell key).
ExperimentResult run_experiment(const ExperimentSpec& spec, const std::string& out_dir);

void save_report(const RateReport& report, const std::string& path);
RateReport load_report(const std::string& path);

std::string generation_to_json_line(const GenerationRecord& record);
GenerationRecord generation_from_json_line(std::string_view line);
std::vector<GenerationRecord> load_generations(const std::string& path);

struct RateComparison {
  std::string topic;
  std::string generator;
  double base_rate = 0.0;
  double treat_rate = 0.0;
  double relative_reduction = 0.0;  // (base - treat) / base
  bool applicable = false;          // false when base_rate == 0
};

// Per (topic, generator) relative reduction from baseline to treatment.
std::vector<RateComparison> compare_rates(const RateReport& report, const std::string& baseline,
                                          const std::string& treatment);

// CSV columns: topic,generator,decoder,positives,total,rate
void render_report_csv(const RateReport& report, const std::string& path);
std::vector<RateCell> load_rates_csv(const std::string& path);
// Grouped bar chart; cosmetic companion to the CSV.
void render_report_svg(const RateReport& report, const std::string& path);
// format: "csv" | "svg"; anything else -> ValidationError
void render_report(const RateReport& report, const std::string& format, const std::string& path);

void render_comparison_csv(const std::vector<RateComparison>& rows, const std::string& path);

}  // namespace saliensim
