#include "saliensim/salience.hpp"

#include <algorithm>
#include <fstream>

#include <json.hpp>

#include "saliensim/error.hpp"
#include "saliensim/text.hpp"
#include "saliensim/version.hpp"

namespace saliensim {

namespace {

using ordered_json = nlohmann::ordered_json;
using int128 = __int128;

// Numerator/denominator of S(u, a) scaled by lambda.den:
//   S = (c_a * den + num) / (c_other * den + num)
int128 scaled(std::uint64_t count, const Rational& lambda) {
  return static_cast<int128>(count) * lambda.den + lambda.num;
}

}  // namespace

void SalienceConfig::validate() const {
  if (n_values.empty()) throw ValidationError("n_values must be non-empty");
  for (int n : n_values) {
    if (n < 1) throw ValidationError("n-gram orders must be >= 1");
  }
  if (lambda.num <= 0) throw ValidationError("lambda must be > 0");
  if (static_cast<int128>(gamma_sal.num) < static_cast<int128>(gamma_sal.den)) {
    throw ValidationError("gamma_sal must be >= 1");
  }
}

std::uint64_t SalienceTable::count(std::string_view ngram, const std::string& attribute) const {
  auto attr_it = counts.find(attribute);
  if (attr_it == counts.end()) return 0;
  auto it = attr_it->second.find(std::string(ngram));
  return it == attr_it->second.end() ? 0 : it->second;
}

std::uint64_t SalienceTable::count_others(std::string_view ngram,
                                          const std::string& attribute) const {
  std::uint64_t total = 0;
  for (const auto& [attr, by_ngram] : counts) {
    if (attr == attribute) continue;
    auto it = by_ngram.find(std::string(ngram));
    if (it != by_ngram.end()) total += it->second;
  }
  return total;
}

std::string join_ngram(const std::vector<std::string>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0) out += ' ';
    out += tokens[i];
  }
  return out;
}

std::vector<std::string> split_ngram(std::string_view ngram) {
  std::vector<std::string> tokens;
  std::size_t start = 0;
  while (start <= ngram.size()) {
    std::size_t end = ngram.find(' ', start);
    if (end == std::string_view::npos) end = ngram.size();
    tokens.emplace_back(ngram.substr(start, end - start));
    start = end + 1;
  }
  return tokens;
}

std::string label_attribute(const LabeledPair& pair) {
  if (!pair.label) throw ValidationError("pair has no label");
  return pair.label->is_positive ? kPositiveAttribute : kNegativeAttribute;
}

SalienceTable count_ngrams(const Corpus& corpus, const AttributeOf& attribute_of,
                           const SalienceConfig& config, std::vector<std::string> attributes) {
  config.validate();
  SalienceTable table;
  table.attributes = std::move(attributes);
  for (const auto& attr : table.attributes) table.counts[attr];

  for (const auto& pair : corpus.pairs) {
    const std::string attr = attribute_of(pair);
    if (table.counts.find(attr) == table.counts.end()) {
      if (!table.attributes.empty()) {
        throw ValidationError("pair attribute \"" + attr + "\" not in the attribute set");
      }
      table.counts[attr];
    }
    auto& by_ngram = table.counts[attr];
    const std::vector<std::string> tokens = tokenize(pair.response);
    for (int n : config.n_values) {
      if (tokens.size() < static_cast<std::size_t>(n)) continue;
      for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
        std::string key = tokens[i];
        for (std::size_t j = 1; j < static_cast<std::size_t>(n); ++j) {
          key += ' ';
          key += tokens[i + j];
        }
        ++by_ngram[key];
      }
    }
  }

  if (table.attributes.empty()) {
    for (const auto& [attr, by_ngram] : table.counts) table.attributes.push_back(attr);
  }
  std::sort(table.attributes.begin(), table.attributes.end());
  return table;
}

SalienceTable count_label_ngrams(const Corpus& corpus, const SalienceConfig& config) {
  return count_ngrams(corpus, label_attribute, config,
                      {kNegativeAttribute, kPositiveAttribute});
}

namespace {

void require_attribute(const SalienceTable& table, const std::string& attribute) {
  if (std::find(table.attributes.begin(), table.attributes.end(), attribute) ==
      table.attributes.end()) {
    throw ValidationError("unknown attribute: \"" + attribute + "\"");
  }
  if (table.attributes.size() < 2) {
    throw ValidationError("salience requires at least two attributes");
  }
}

}  // namespace

double salience_score(std::string_view ngram, const std::string& attribute,
                      const SalienceTable& table, const SalienceConfig& config) {
  require_attribute(table, attribute);
  const double lambda = config.lambda.value();
  const double own = static_cast<double>(table.count(ngram, attribute));
  const double other = static_cast<double>(table.count_others(ngram, attribute));
  return (own + lambda) / (other + lambda);
}

bool is_salient(std::string_view ngram, const std::string& attribute, const SalienceTable& table,
                const SalienceConfig& config) {
  require_attribute(table, attribute);
  // (c_a*ld + ln) / (c_o*ld + ln) >= gn/gd  <=>  gd*(c_a*ld + ln) >= gn*(c_o*ld + ln)
  const int128 own = scaled(table.count(ngram, attribute), config.lambda);
  const int128 other = scaled(table.count_others(ngram, attribute), config.lambda);
  return static_cast<int128>(config.gamma_sal.den) * own >=
         static_cast<int128>(config.gamma_sal.num) * other;
}

SalientSets extract_salient(const SalienceTable& table, const SalienceConfig& config) {
  config.validate();
  if (table.attributes.size() < 2) {
    throw ValidationError("salience requires at least two attributes");
  }

  std::set<std::string> ngrams;
  for (const auto& [attr, by_ngram] : table.counts) {
    for (const auto& [ngram, count] : by_ngram) ngrams.insert(ngram);
  }

  SalientSets sets;
  for (const auto& attr : table.attributes) {
    // (ngram, own scaled, other scaled) for exact sorting
    std::vector<std::tuple<std::string, int128, int128>> hits;
    for (const auto& ngram : ngrams) {
      if (is_salient(ngram, attr, table, config)) {
        hits.emplace_back(ngram, scaled(table.count(ngram, attr), config.lambda),
                          scaled(table.count_others(ngram, attr), config.lambda));
      }
    }
    std::sort(hits.begin(), hits.end(), [](const auto& a, const auto& b) {
      // descending score: a_num/a_den > b_num/b_den via cross-multiplication
      const int128 lhs = std::get<1>(a) * std::get<2>(b);
      const int128 rhs = std::get<1>(b) * std::get<2>(a);
      if (lhs != rhs) return lhs > rhs;
      return std::get<0>(a) < std::get<0>(b);
    });
    auto& out = sets[attr];
    out.reserve(hits.size());
    for (const auto& [ngram, own, other] : hits) {
      out.push_back(SalientNgram{split_ngram(ngram), salience_score(ngram, attr, table, config)});
    }
  }
  return sets;
}

void save_salient_sets(const SalientSets& sets, const std::vector<std::string>& attributes,
                       const SalienceConfig& config, const std::string& path) {
  ordered_json j;
  j["version"] = kVersion;
  ordered_json cfg;
  cfg["n_values"] = config.n_values;
  cfg["lambda"] = {{"num", config.lambda.num}, {"den", config.lambda.den}};
  cfg["gamma_sal"] = {{"num", config.gamma_sal.num}, {"den", config.gamma_sal.den}};
  j["config"] = std::move(cfg);
  j["attributes"] = attributes;
  ordered_json salient = ordered_json::object();
  for (const auto& attr : attributes) {
    ordered_json entries = ordered_json::array();
    auto it = sets.find(attr);
    if (it != sets.end()) {
      for (const auto& sn : it->second) {
        entries.push_back(ordered_json::array({sn.tokens, sn.score}));
      }
    }
    salient[attr] = std::move(entries);
  }
  j["salient"] = std::move(salient);

  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ValidationError("cannot write salience file: " + path);
  out << j.dump(2) << '\n';
}

SalienceDocument load_salient_sets(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open salience file: " + path);
  ordered_json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("invalid salience JSON in " + path + ": " + e.what());
  }

  SalienceDocument doc;
  try {
    const auto& cfg = j.at("config");
    doc.config.n_values.clear();
    for (int n : cfg.at("n_values")) doc.config.n_values.insert(n);
    doc.config.lambda = Rational(cfg.at("lambda").at("num").get<std::int64_t>(),
                                 cfg.at("lambda").at("den").get<std::int64_t>());
    doc.config.gamma_sal = Rational(cfg.at("gamma_sal").at("num").get<std::int64_t>(),
                                    cfg.at("gamma_sal").at("den").get<std::int64_t>());
    doc.attributes = j.at("attributes").get<std::vector<std::string>>();
    for (const auto& [attr, entries] : j.at("salient").items()) {
      auto& out = doc.salient[attr];
      for (const auto& entry : entries) {
        out.push_back(SalientNgram{entry.at(0).get<std::vector<std::string>>(),
                                   entry.at(1).get<double>()});
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("invalid salience document in " + path + ": " + e.what());
  }
  doc.config.validate();
  return doc;
}

}  // namespace saliensim
