#include "saliensim/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "saliensim/error.hpp"
#include "saliensim/rng.hpp"
#include "saliensim/text.hpp"

namespace saliensim {

namespace {

using ordered_json = nlohmann::ordered_json;

}  // namespace

const char* to_string(Category category) {
  switch (category) {
    case Category::kStupidity: return "stupidity";
    case Category::kIgnorance: return "ignorance";
    case Category::kTrollingLying: return "trolling_lying";
    case Category::kBias: return "bias";
    case Category::kCondescension: return "condescension";
    case Category::kOther: return "other";
  }
  throw ValidationError("invalid category value");
}

Category category_from_string(std::string_view name) {
  for (Category c : all_categories()) {
    if (name == to_string(c)) return c;
  }
  throw ValidationError("unknown category: \"" + std::string(name) + "\"");
}

const std::vector<Category>& all_categories() {
  static const std::vector<Category> categories = {
      Category::kStupidity,    Category::kIgnorance, Category::kTrollingLying,
      Category::kBias,         Category::kCondescension, Category::kOther};
  return categories;
}

void AttributeLabel::validate() const {
  if (is_positive && categories.empty()) {
    throw ValidationError("positive label requires at least one category");
  }
  if (!is_positive && !categories.empty()) {
    throw ValidationError("negative label must have no categories");
  }
}

namespace {

AttributeLabel label_from_json(const ordered_json& j) {
  if (!j.is_object()) throw ValidationError("label must be an object or null");
  AttributeLabel label;
  if (!j.contains("is_positive") || !j["is_positive"].is_boolean()) {
    throw ValidationError("label missing boolean \"is_positive\"");
  }
  label.is_positive = j["is_positive"].get<bool>();
  if (j.contains("categories") && !j["categories"].is_null()) {
    if (!j["categories"].is_array()) throw ValidationError("\"categories\" must be an array");
    for (const auto& c : j["categories"]) {
      if (!c.is_string()) throw ValidationError("category entries must be strings");
      label.categories.insert(category_from_string(c.get<std::string>()));
    }
  }
  label.validate();
  return label;
}

ordered_json label_to_json(const AttributeLabel& label) {
  ordered_json j;
  j["is_positive"] = label.is_positive;
  ordered_json cats = ordered_json::array();
  for (Category c : label.categories) cats.push_back(to_string(c));
  j["categories"] = std::move(cats);
  return j;
}

std::string require_string(const ordered_json& j, const char* field) {
  if (!j.contains(field) || !j[field].is_string()) {
    throw ValidationError(std::string("missing string field \"") + field + "\"");
  }
  return j[field].get<std::string>();
}

}  // namespace

LabeledPair pair_from_json_line(std::string_view line) {
  ordered_json j;
  try {
    j = ordered_json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ValidationError("record must be a JSON object");

  LabeledPair pair;
  pair.post = require_string(j, "post");
  pair.response = require_string(j, "response");
  pair.topic = require_string(j, "topic");
  pair.source = require_string(j, "source");
  if (pair.post.empty()) throw ValidationError("\"post\" must be non-empty");
  if (pair.response.empty()) throw ValidationError("\"response\" must be non-empty");

  if (j.contains("label") && !j["label"].is_null()) {
    pair.label = label_from_json(j["label"]);
  }
  if (j.contains("annotations") && !j["annotations"].is_null()) {
    if (!j["annotations"].is_array()) throw ValidationError("\"annotations\" must be an array");
    std::vector<AttributeLabel> annotations;
    for (const auto& a : j["annotations"]) annotations.push_back(label_from_json(a));
    if (annotations.empty()) throw ValidationError("\"annotations\" must be non-empty when present");
    pair.annotations = std::move(annotations);
  }
  return pair;
}

std::string pair_to_json_line(const LabeledPair& pair) {
  ordered_json j;
  j["post"] = pair.post;
  j["response"] = pair.response;
  j["topic"] = pair.topic;
  j["source"] = pair.source;
  if (pair.label) {
    j["label"] = label_to_json(*pair.label);
  } else {
    j["label"] = nullptr;
  }
  if (pair.annotations) {
    ordered_json anns = ordered_json::array();
    for (const auto& a : *pair.annotations) anns.push_back(label_to_json(a));
    j["annotations"] = std::move(anns);
  } else {
    j["annotations"] = nullptr;
  }
  return j.dump();
}

Corpus load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open corpus file: " + path);
  Corpus corpus;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      corpus.pairs.push_back(pair_from_json_line(line));
    } catch (const ValidationError& e) {
      throw ValidationError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return corpus;
}

void save_corpus(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ValidationError("cannot write corpus file: " + path);
  for (const auto& pair : corpus.pairs) {
    out << pair_to_json_line(pair) << '\n';
  }
}

Corpus preprocess_corpus(const Corpus& corpus) {
  Corpus out = corpus;
  for (auto& pair : out.pairs) {
    pair.post = preprocess(pair.post);
    pair.response = preprocess(pair.response);
  }
  return out;
}

Corpus downsample_balance(const Corpus& corpus, std::uint64_t seed,
                          std::vector<std::string>* notes) {
  // cell -> (positive indices, negative indices)
  std::map<std::pair<std::string, std::string>, std::pair<std::vector<std::size_t>, std::vector<std::size_t>>>
      cells;
  for (std::size_t i = 0; i < corpus.pairs.size(); ++i) {
    const auto& pair = corpus.pairs[i];
    if (!pair.label) {
      throw ValidationError("downsample_balance requires every pair to be labeled");
    }
    auto& cell = cells[{pair.topic, pair.source}];
    (pair.label->is_positive ? cell.first : cell.second).push_back(i);
  }

  Rng rng(seed);
  std::vector<bool> removed(corpus.pairs.size(), false);
  for (auto& [key, cell] : cells) {
    auto& [positives, negatives] = cell;
    if (negatives.size() < positives.size()) {
      if (notes) {
        notes->push_back("cell (topic=" + key.first + ", source=" + key.second + ") has " +
                         std::to_string(negatives.size()) + " negatives for " +
                         std::to_string(positives.size()) + " positives; left as-is");
      }
      continue;
    }
    std::vector<std::size_t> shuffled = negatives;
    rng.shuffle(shuffled);
    for (std::size_t i = positives.size(); i < shuffled.size(); ++i) {
      removed[shuffled[i]] = true;
    }
  }

  Corpus out;
  out.pairs.reserve(corpus.pairs.size());
  for (std::size_t i = 0; i < corpus.pairs.size(); ++i) {
    if (!removed[i]) out.pairs.push_back(corpus.pairs[i]);
  }
  return out;
}

Corpus augment_pairs(const Corpus& corpus, const std::vector<AugmentTarget>& targets,
                     std::uint64_t seed) {
  if (corpus.pairs.empty()) throw ValidationError("augment_pairs requires a non-empty corpus");

  std::map<std::string, std::vector<std::size_t>> posts_by_topic;
  std::vector<std::size_t> labeled_positive, labeled_negative;
  for (std::size_t i = 0; i < corpus.pairs.size(); ++i) {
    posts_by_topic[corpus.pairs[i].topic].push_back(i);
    if (corpus.pairs[i].label) {
      (corpus.pairs[i].label->is_positive ? labeled_positive : labeled_negative).push_back(i);
    }
  }

  std::vector<AugmentTarget> ordered = targets;
  std::sort(ordered.begin(), ordered.end(), [](const AugmentTarget& a, const AugmentTarget& b) {
    return std::tie(a.topic, a.positive) < std::tie(b.topic, b.positive);
  });

  Corpus out = corpus;
  Rng rng(seed);
  for (const auto& target : ordered) {
    if (target.count == 0) continue;
    const std::string cell = "(topic=" + target.topic + ", label=" +
                             (target.positive ? "positive" : "negative") + ")";
    auto posts_it = posts_by_topic.find(target.topic);
    if (posts_it == posts_by_topic.end()) {
      throw ValidationError("augment cell " + cell + " has no posts for the topic");
    }
    const auto& responses = target.positive ? labeled_positive : labeled_negative;
    if (responses.empty()) {
      throw ValidationError("augment cell " + cell + " has no labeled responses");
    }
    for (std::size_t n = 0; n < target.count; ++n) {
      const auto& post_pair = corpus.pairs[posts_it->second[rng.next_below(posts_it->second.size())]];
      const auto& resp_pair = corpus.pairs[responses[rng.next_below(responses.size())]];
      LabeledPair fresh;
      fresh.post = post_pair.post;
      fresh.response = resp_pair.response;
      fresh.topic = post_pair.topic;
      fresh.source = "synthetic";
      fresh.label = resp_pair.label;
      out.pairs.push_back(std::move(fresh));
    }
  }
  return out;
}

AgreementReport wawa_agreement(const Corpus& corpus) {
  if (corpus.pairs.empty()) throw ValidationError("wawa_agreement requires a non-empty corpus");

  std::uint64_t tp = 0, fp = 0, fn = 0;
  for (const auto& pair : corpus.pairs) {
    if (!pair.annotations || pair.annotations->empty()) {
      throw ValidationError("wawa_agreement requires at least one annotation per pair");
    }
    std::size_t yes = 0;
    for (const auto& a : *pair.annotations) {
      if (a.is_positive) ++yes;
    }
    const std::size_t no = pair.annotations->size() - yes;
    const bool majority = yes > no;  // ties resolve to negative
    for (const auto& a : *pair.annotations) {
      if (a.is_positive && majority) ++tp;
      else if (a.is_positive && !majority) ++fp;
      else if (!a.is_positive && majority) ++fn;
    }
  }

  AgreementReport report;
  report.precision = (tp + fp) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 1.0;
  report.recall = (tp + fn) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 1.0;
  if (2 * tp + fp + fn > 0) {
    report.f1 = static_cast<double>(2 * tp) / static_cast<double>(2 * tp + fp + fn);
  } else {
    report.f1 = 1.0;  // no decisions disagreed and no positives: perfect agreement
  }
  return report;
}

}  // namespace saliensim
