#include "saliensim/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include <json.hpp>

#include "saliensim/error.hpp"
#include "saliensim/lm.hpp"
#include "saliensim/rng.hpp"
#include "saliensim/version.hpp"

namespace saliensim {

namespace {

using ordered_json = nlohmann::ordered_json;

// shortest round-trip decimal form
std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

ordered_json decoder_to_json(const DecoderSpec& d) {
  ordered_json j;
  j["name"] = d.name;
  j["mode"] = d.mode;
  j["k"] = d.config.k;
  j["c"] = d.config.c;
  j["r"] = d.config.r;
  j["gamma_sim"] = d.config.gamma_sim;
  j["backtrack_limit"] = d.config.backtrack_limit;
  j["max_steps"] = d.config.max_steps;
  return j;
}

DecoderSpec decoder_from_json(const ordered_json& j) {
  DecoderSpec d;
  d.name = j.at("name").get<std::string>();
  d.mode = j.at("mode").get<std::string>();
  d.config.k = j.value("k", d.config.k);
  d.config.c = j.value("c", d.config.c);
  d.config.r = j.value("r", d.config.r);
  d.config.gamma_sim = j.value("gamma_sim", d.config.gamma_sim);
  d.config.backtrack_limit = j.value("backtrack_limit", d.config.backtrack_limit);
  d.config.max_steps = j.value("max_steps", d.config.max_steps);
  return d;
}

ordered_json spec_to_json(const ExperimentSpec& spec) {
  ordered_json j;
  j["corpus"] = spec.corpus_path;
  j["topics"] = spec.topics;
  j["generators"] = spec.generators;
  ordered_json decoders = ordered_json::array();
  for (const auto& d : spec.decoders) decoders.push_back(decoder_to_json(d));
  j["decoders"] = std::move(decoders);
  j["classifier"] = spec.classifier_path;
  j["embeddings"] = spec.embeddings_path;
  j["profile"] = spec.profile_path;
  j["posts_per_topic"] = spec.posts_per_topic;
  j["seed"] = spec.seed;
  j["vocab_min_count"] = spec.vocab_min_count;
  j["lm"] = {{"order", spec.lm.order}, {"discount", spec.lm.discount}};
  j["embedding"] = {{"dim", spec.embedding.dim}, {"window", spec.embedding.window}};
  ordered_json sal;
  sal["n_values"] = spec.salience.n_values;
  sal["lambda"] = {{"num", spec.salience.lambda.num}, {"den", spec.salience.lambda.den}};
  sal["gamma_sal"] = {{"num", spec.salience.gamma_sal.num}, {"den", spec.salience.gamma_sal.den}};
  j["salience"] = std::move(sal);
  return j;
}

ExperimentSpec spec_from_json(const ordered_json& j) {
  ExperimentSpec spec;
  spec.corpus_path = j.at("corpus").get<std::string>();
  if (j.contains("topics")) spec.topics = j.at("topics").get<std::vector<std::string>>();
  spec.generators = j.at("generators").get<std::vector<std::string>>();
  for (const auto& d : j.at("decoders")) spec.decoders.push_back(decoder_from_json(d));
  spec.classifier_path = j.at("classifier").get<std::string>();
  spec.embeddings_path = j.value("embeddings", std::string());
  spec.profile_path = j.value("profile", std::string());
  spec.posts_per_topic = j.at("posts_per_topic").get<std::size_t>();
  spec.seed = j.at("seed").get<std::uint64_t>();
  spec.vocab_min_count = j.value("vocab_min_count", 1);
  if (j.contains("lm")) {
    spec.lm.order = j.at("lm").value("order", spec.lm.order);
    spec.lm.discount = j.at("lm").value("discount", spec.lm.discount);
  }
  if (j.contains("embedding")) {
    spec.embedding.dim = j.at("embedding").value("dim", spec.embedding.dim);
    spec.embedding.window = j.at("embedding").value("window", spec.embedding.window);
  }
  if (j.contains("salience")) {
    const auto& sal = j.at("salience");
    if (sal.contains("n_values")) {
      spec.salience.n_values.clear();
      for (int n : sal.at("n_values")) spec.salience.n_values.insert(n);
    }
    if (sal.contains("lambda")) {
      spec.salience.lambda = Rational(sal.at("lambda").at("num").get<std::int64_t>(),
                                      sal.at("lambda").at("den").get<std::int64_t>());
    }
    if (sal.contains("gamma_sal")) {
      spec.salience.gamma_sal = Rational(sal.at("gamma_sal").at("num").get<std::int64_t>(),
                                         sal.at("gamma_sal").at("den").get<std::int64_t>());
    }
  }
  return spec;
}

std::string csv_field(const std::string& value) {
  if (value.find_first_of(",\"\n") == std::string::npos) return value;
  std::string quoted = "\"";
  for (char c : value) {
    if (c == '"') quoted += "\"\"";
    else quoted += c;
  }
  quoted += '"';
  return quoted;
}

}  // namespace

void ExperimentSpec::validate() const {
  if (corpus_path.empty()) throw ValidationError("experiment spec: corpus path is required");
  if (classifier_path.empty()) throw ValidationError("experiment spec: classifier path is required");
  if (generators.empty()) throw ValidationError("experiment spec: at least one generator subset");
  if (decoders.empty()) throw ValidationError("experiment spec: at least one decoder");
  if (posts_per_topic < 1) throw ValidationError("experiment spec: posts_per_topic must be >= 1");
  std::set<std::string> names;
  for (const auto& d : decoders) {
    if (d.mode != "topk" && d.mode != "saliensim") {
      throw ValidationError("experiment spec: unknown decoder mode \"" + d.mode + "\"");
    }
    if (!names.insert(d.name).second) {
      throw ValidationError("experiment spec: duplicate decoder name \"" + d.name + "\"");
    }
  }
  salience.validate();
}

ExperimentSpec load_experiment_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open experiment spec: " + path);
  ordered_json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("invalid experiment spec JSON in " + path + ": " + e.what());
  }
  try {
    return spec_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("invalid experiment spec in " + path + ": " + e.what());
  }
}

void save_experiment_spec(const ExperimentSpec& spec, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ValidationError("cannot write experiment spec: " + path);
  out << spec_to_json(spec).dump(2) << '\n';
}

std::string generation_to_json_line(const GenerationRecord& record) {
  ordered_json j;
  j["topic"] = record.topic;
  j["generator"] = record.generator;
  j["decoder"] = record.decoder;
  j["post"] = record.post;
  j["response"] = record.response;
  j["predicted"] = record.predicted;
  j["probability"] = record.probability;
  j["backtracks_used"] = record.backtracks_used;
  j["seed"] = record.seed;
  return j.dump();
}

GenerationRecord generation_from_json_line(std::string_view line) {
  ordered_json j;
  try {
    j = ordered_json::parse(line);
    GenerationRecord record;
    record.topic = j.at("topic").get<std::string>();
    record.generator = j.at("generator").get<std::string>();
    record.decoder = j.at("decoder").get<std::string>();
    record.post = j.at("post").get<std::string>();
    record.response = j.at("response").get<std::string>();
    record.predicted = j.at("predicted").get<bool>();
    record.probability = j.at("probability").get<double>();
    record.backtracks_used = j.at("backtracks_used").get<int>();
    record.seed = j.at("seed").get<std::uint64_t>();
    return record;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("invalid generation record: ") + e.what());
  }
}

std::vector<GenerationRecord> load_generations(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open generations file: " + path);
  std::vector<GenerationRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      records.push_back(generation_from_json_line(line));
    } catch (const ValidationError& e) {
      throw ValidationError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return records;
}

ExperimentResult run_experiment(const ExperimentSpec& spec, const std::string& out_dir) {
  spec.validate();

  // fail-fast artifact validation before any generation
  const Corpus corpus = load_corpus(spec.corpus_path);
  if (corpus.pairs.empty()) throw ValidationError("experiment corpus is empty");
  const ClassifierModel classifier = ClassifierModel::load(spec.classifier_path);

  bool needs_profile = false;
  for (const auto& d : spec.decoders) needs_profile |= d.mode == "saliensim";

  const Vocabulary vocab = build_vocab(corpus, spec.vocab_min_count);

  EmbeddingTable embeddings;
  ConstraintProfile profile;
  std::optional<SalienSimDecoder> constrained;
  if (needs_profile) {
    embeddings = spec.embeddings_path.empty()
                     ? build_embeddings(corpus, vocab, spec.embedding.window, spec.embedding.dim)
                     : load_embeddings(spec.embeddings_path);
    if (spec.profile_path.empty()) {
      const SalienceTable table = count_label_ngrams(corpus, spec.salience);
      const SalientSets sets = extract_salient(table, spec.salience);
      profile = build_profile(sets.at(kPositiveAttribute), sets.at(kNegativeAttribute),
                              embeddings, kPositiveAttribute, kNegativeAttribute);
    } else {
      profile = load_profile(spec.profile_path);
    }
    constrained.emplace(profile, embeddings, vocab);
  }

  std::vector<std::string> topics = spec.topics;
  if (topics.empty()) {
    std::set<std::string> seen;
    for (const auto& pair : corpus.pairs) seen.insert(pair.topic);
    topics.assign(seen.begin(), seen.end());
  }

  // generator subsets and their trained models
  std::map<std::string, BackoffNgramLM> generators;
  for (const auto& name : spec.generators) {
    Corpus subset;
    if (name == "all") {
      subset = corpus;
    } else {
      for (const auto& pair : corpus.pairs) {
        if (pair.topic == name) subset.pairs.push_back(pair);
      }
      if (subset.pairs.empty()) {
        throw ValidationError("generator subset \"" + name + "\" matches no pairs");
      }
    }
    generators.emplace(name, train_lm(subset, vocab, spec.lm.order, spec.lm.discount));
  }

  // shared per-topic post sample so decoders see the same prompts
  std::map<std::string, std::vector<std::string>> posts_by_topic;
  for (const auto& topic : topics) {
    std::vector<std::string> pool;
    for (const auto& pair : corpus.pairs) {
      if (pair.topic == topic) pool.push_back(pair.post);
    }
    if (pool.empty()) throw ValidationError("topic \"" + topic + "\" matches no pairs");
    Rng rng(derive_seed(spec.seed, "posts\x1f" + topic));
    std::vector<std::string> sample;
    sample.reserve(spec.posts_per_topic);
    if (pool.size() >= spec.posts_per_topic) {
      rng.shuffle(pool);
      sample.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(spec.posts_per_topic));
    } else {
      for (std::size_t i = 0; i < spec.posts_per_topic; ++i) {
        sample.push_back(pool[rng.next_below(pool.size())]);
      }
    }
    posts_by_topic.emplace(topic, std::move(sample));
  }

  ExperimentResult result;
  result.report.version = kVersion;
  result.report.spec = spec;

  for (const auto& topic : topics) {
    const auto& posts = posts_by_topic.at(topic);
    for (const auto& gen_name : spec.generators) {
      const BackoffNgramLM& lm = generators.at(gen_name);
      for (const auto& dec : spec.decoders) {
        const std::uint64_t cell_seed =
            derive_seed(spec.seed, topic + "\x1f" + gen_name + "\x1f" + dec.name);
        RateCell cell{topic, gen_name, dec.name, 0, 0, 0.0};
        for (std::size_t i = 0; i < posts.size(); ++i) {
          DecoderConfig config = dec.config;
          config.seed = derive_seed(cell_seed, std::to_string(i));

          std::vector<int> input = vocab.encode(posts[i]);
          input.push_back(Vocabulary::kEosId);

          DecodeResult decoded;
          if (dec.mode == "saliensim") {
            decoded = constrained->decode(lm, input, config);
          } else {
            decoded = decode_top_k(lm, input, config);
          }
          std::span<const int> generated(decoded.tokens);
          if (!generated.empty() && generated.back() == Vocabulary::kEosId) {
            generated = generated.subspan(0, generated.size() - 1);
          }
          const std::string response = vocab.decode(generated);

          const Prediction prediction = classifier.predict(posts[i], response);
          GenerationRecord record{topic, gen_name, dec.name, posts[i], response,
                                  prediction.is_positive, prediction.probability,
                                  decoded.backtracks_used, config.seed};
          result.generations.push_back(std::move(record));
          cell.total += 1;
          cell.positives += prediction.is_positive ? 1 : 0;
        }
        cell.rate = static_cast<double>(cell.positives) / static_cast<double>(cell.total);
        result.report.cells.push_back(std::move(cell));
      }
    }
  }

  std::sort(result.report.cells.begin(), result.report.cells.end(),
            [](const RateCell& a, const RateCell& b) {
              return std::tie(a.topic, a.generator, a.decoder) <
                     std::tie(b.topic, b.generator, b.decoder);
            });

  std::filesystem::create_directories(out_dir);
  save_report(result.report, (std::filesystem::path(out_dir) / "report.json").string());
  {
    const std::string path = (std::filesystem::path(out_dir) / "generations.jsonl").string();
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ValidationError("cannot write generations file: " + path);
    for (const auto& record : result.generations) {
      out << generation_to_json_line(record) << '\n';
    }
  }
  return result;
}

void save_report(const RateReport& report, const std::string& path) {
  ordered_json j;
  j["version"] = report.version;
  j["spec"] = spec_to_json(report.spec);
  ordered_json cells = ordered_json::array();
  for (const auto& cell : report.cells) {
    ordered_json c;
    c["topic"] = cell.topic;
    c["generator"] = cell.generator;
    c["decoder"] = cell.decoder;
    c["positives"] = cell.positives;
    c["total"] = cell.total;
    c["rate"] = cell.rate;
    cells.push_back(std::move(c));
  }
  j["cells"] = std::move(cells);

  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ValidationError("cannot write report file: " + path);
  out << j.dump(2) << '\n';
}

RateReport load_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open report file: " + path);
  ordered_json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("invalid report JSON in " + path + ": " + e.what());
  }
  try {
    RateReport report;
    report.version = j.at("version").get<std::string>();
    report.spec = spec_from_json(j.at("spec"));
    for (const auto& c : j.at("cells")) {
      RateCell cell;
      cell.topic = c.at("topic").get<std::string>();
      cell.generator = c.at("generator").get<std::string>();
      cell.decoder = c.at("decoder").get<std::string>();
      cell.positives = c.at("positives").get<std::uint64_t>();
      cell.total = c.at("total").get<std::uint64_t>();
      cell.rate = c.at("rate").get<double>();
      report.cells.push_back(std::move(cell));
    }
    return report;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("invalid report document in " + path + ": " + e.what());
  }
}

std::vector<RateComparison> compare_rates(const RateReport& report, const std::string& baseline,
                                          const std::string& treatment) {
  std::map<std::pair<std::string, std::string>, std::pair<const RateCell*, const RateCell*>> rows;
  bool saw_base = false, saw_treat = false;
  for (const auto& cell : report.cells) {
    if (cell.decoder == baseline) {
      rows[{cell.topic, cell.generator}].first = &cell;
      saw_base = true;
    } else if (cell.decoder == treatment) {
      rows[{cell.topic, cell.generator}].second = &cell;
      saw_treat = true;
    }
  }
  if (!saw_base) throw ValidationError("unknown decoder in report: \"" + baseline + "\"");
  if (!saw_treat) throw ValidationError("unknown decoder in report: \"" + treatment + "\"");

  std::vector<RateComparison> out;
  for (const auto& [key, cells] : rows) {
    if (!cells.first || !cells.second) continue;
    RateComparison row;
    row.topic = key.first;
    row.generator = key.second;
    row.base_rate = cells.first->rate;
    row.treat_rate = cells.second->rate;
    if (row.base_rate > 0.0) {
      row.applicable = true;
      row.relative_reduction = (row.base_rate - row.treat_rate) / row.base_rate;
    }
    out.push_back(std::move(row));
  }
  return out;
}

void render_report_csv(const RateReport& report, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ValidationError("cannot write csv file: " + path);
  out << "topic,generator,decoder,positives,total,rate\n";
  for (const auto& cell : report.cells) {
    out << csv_field(cell.topic) << ',' << csv_field(cell.generator) << ','
        << csv_field(cell.decoder) << ',' << cell.positives << ',' << cell.total << ','
        << format_double(cell.rate) << '\n';
  }
}

std::vector<RateCell> load_rates_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open csv file: " + path);
  std::string line;
  if (!std::getline(in, line) || line != "topic,generator,decoder,positives,total,rate") {
    throw ValidationError("unexpected csv header in " + path);
  }
  std::vector<RateCell> cells;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 6) throw ValidationError("malformed csv row in " + path);
    RateCell cell;
    cell.topic = fields[0];
    cell.generator = fields[1];
    cell.decoder = fields[2];
    try {
      cell.positives = std::stoull(fields[3]);
      cell.total = std::stoull(fields[4]);
      cell.rate = std::stod(fields[5]);
    } catch (const std::exception&) {
      throw ValidationError("malformed csv numbers in " + path);
    }
    cells.push_back(std::move(cell));
  }
  return cells;
}

void render_report_svg(const RateReport& report, const std::string& path) {
  // series = (generator, decoder); groups = topics
  std::vector<std::string> topics;
  std::vector<std::pair<std::string, std::string>> series;
  for (const auto& cell : report.cells) {
    if (std::find(topics.begin(), topics.end(), cell.topic) == topics.end()) {
      topics.push_back(cell.topic);
    }
    const std::pair<std::string, std::string> key{cell.generator, cell.decoder};
    if (std::find(series.begin(), series.end(), key) == series.end()) series.push_back(key);
  }
  std::map<std::pair<std::string, std::string>, std::map<std::string, double>> rates;
  for (const auto& cell : report.cells) {
    rates[{cell.generator, cell.decoder}][cell.topic] = cell.rate;
  }

  const double bar_w = 24.0, gap = 12.0, group_gap = 36.0;
  const double plot_h = 240.0, margin = 48.0;
  const double group_w = static_cast<double>(series.size()) * (bar_w + gap) + group_gap;
  const double width = margin * 2 + group_w * static_cast<double>(topics.size());
  const double height = plot_h + margin * 2 + 14.0 * static_cast<double>(series.size());

  static const char* kPalette[] = {"#1b9e77", "#d95f02", "#7570b3", "#e7298a",
                                   "#66a61e", "#e6ab02", "#a6761d", "#666666"};

  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ValidationError("cannot write svg file: " + path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\">\n";
  out << "  <text x=\"" << margin << "\" y=\"20\" font-size=\"13\">attribute rate by topic</text>\n";
  out << "  <line x1=\"" << margin << "\" y1=\"" << margin + plot_h << "\" x2=\"" << width - margin
      << "\" y2=\"" << margin + plot_h << "\" stroke=\"#000\"/>\n";
  for (std::size_t t = 0; t < topics.size(); ++t) {
    const double gx = margin + group_w * static_cast<double>(t);
    for (std::size_t s = 0; s < series.size(); ++s) {
      auto it = rates[series[s]].find(topics[t]);
      const double rate = it == rates[series[s]].end() ? 0.0 : it->second;
      const double h = rate * plot_h;
      const double x = gx + static_cast<double>(s) * (bar_w + gap);
      out << "  <rect x=\"" << x << "\" y=\"" << margin + plot_h - h << "\" width=\"" << bar_w
          << "\" height=\"" << h << "\" fill=\"" << kPalette[s % 8] << "\"/>\n";
      out << "  <text x=\"" << x << "\" y=\"" << margin + plot_h - h - 4 << "\" font-size=\"9\">"
          << format_double(std::round(rate * 1000.0) / 10.0) << "%</text>\n";
    }
    out << "  <text x=\"" << gx << "\" y=\"" << margin + plot_h + 16 << "\" font-size=\"11\">"
        << topics[t] << "</text>\n";
  }
  for (std::size_t s = 0; s < series.size(); ++s) {
    const double y = margin + plot_h + 36 + 14.0 * static_cast<double>(s);
    out << "  <rect x=\"" << margin << "\" y=\"" << y - 9 << "\" width=\"10\" height=\"10\" fill=\""
        << kPalette[s % 8] << "\"/>\n";
    out << "  <text x=\"" << margin + 14 << "\" y=\"" << y << "\" font-size=\"10\">"
        << series[s].first << " / " << series[s].second << "</text>\n";
  }
  out << "</svg>\n";
}

void render_report(const RateReport& report, const std::string& format, const std::string& path) {
  if (format == "csv") {
    render_report_csv(report, path);
  } else if (format == "svg") {
    render_report_svg(report, path);
  } else {
    throw ValidationError("unknown report format: \"" + format + "\"");
  }
}

void render_comparison_csv(const std::vector<RateComparison>& rows, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ValidationError("cannot write csv file: " + path);
  out << "topic,generator,base_rate,treat_rate,relative_reduction\n";
  for (const auto& row : rows) {
    out << csv_field(row.topic) << ',' << csv_field(row.generator) << ','
        << format_double(row.base_rate) << ',' << format_double(row.treat_rate) << ',';
    if (row.applicable) {
      out << format_double(row.relative_reduction);
    } else {
      out << "n/a";
    }
    out << '\n';
  }
}

}  // namespace saliensim
