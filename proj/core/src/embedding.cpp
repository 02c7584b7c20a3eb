#include "saliensim/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <Eigen/Dense>
#include <json.hpp>

#include "saliensim/error.hpp"
#include "saliensim/text.hpp"
#include "saliensim/version.hpp"

namespace saliensim {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr char kSidecarMagic[8] = {'S', 'S', 'E', 'M', 'B', '1', '\0', '\0'};

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

}  // namespace

const std::vector<double>& EmbeddingTable::vector_for(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= vectors.size()) {
    throw ValidationError("embedding id out of range: " + std::to_string(id));
  }
  return vectors[static_cast<std::size_t>(id)];
}

EmbeddingTable build_embeddings(const Corpus& corpus, const Vocabulary& vocab, int window,
                                int dim) {
  const int v = vocab.size();
  if (dim < 1) throw ValidationError("embedding dim must be >= 1");
  if (dim > v) throw ValidationError("embedding dim exceeds vocabulary size");
  if (window < 1) throw ValidationError("window must be >= 1");

  Eigen::MatrixXd cooc = Eigen::MatrixXd::Zero(v, v);
  auto add_sequence = [&](const std::vector<int>& ids) {
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const std::size_t hi = std::min(ids.size(), i + 1 + static_cast<std::size_t>(window));
      for (std::size_t j = i + 1; j < hi; ++j) {
        cooc(ids[i], ids[j]) += 1.0;
        cooc(ids[j], ids[i]) += 1.0;
      }
    }
  };
  for (const auto& pair : corpus.pairs) {
    add_sequence(vocab.encode(pair.post));
    add_sequence(vocab.encode(pair.response));
  }

  const double total = cooc.sum();
  Eigen::VectorXd marginals = cooc.rowwise().sum();
  Eigen::MatrixXd ppmi = Eigen::MatrixXd::Zero(v, v);
  if (total > 0) {
    for (int i = 0; i < v; ++i) {
      for (int j = 0; j < v; ++j) {
        const double c = cooc(i, j);
        if (c <= 0) continue;
        const double pmi = std::log(c * total / (marginals(i) * marginals(j)));
        if (pmi > 0) ppmi(i, j) = pmi;
      }
    }
  }

  Eigen::BDCSVD<Eigen::MatrixXd> svd(ppmi, Eigen::ComputeThinU);
  const Eigen::MatrixXd& u = svd.matrixU();
  const Eigen::VectorXd& sigma = svd.singularValues();

  EmbeddingTable table;
  table.dim = dim;
  table.tokens = vocab.tokens();
  table.provenance =
      "ppmi-svd(window=" + std::to_string(window) + ",dim=" + std::to_string(dim) + ")";
  table.vectors.assign(static_cast<std::size_t>(v), std::vector<double>(dim, 0.0));
  for (int i = 0; i < v; ++i) {
    auto& row = table.vectors[static_cast<std::size_t>(i)];
    for (int d = 0; d < dim; ++d) {
      row[static_cast<std::size_t>(d)] = u(i, d) * std::sqrt(std::max(0.0, sigma(d)));
    }
    const double n = norm(row);
    if (n > 1e-12) {
      for (double& x : row) x /= n;
    } else {
      // never co-occurred: deterministic unit fallback
      std::fill(row.begin(), row.end(), 0.0);
      row[static_cast<std::size_t>(i % dim)] = 1.0;
    }
  }
  return table;
}

std::vector<double> ngram_mean(std::span<const int> token_ids, const EmbeddingTable& table) {
  if (token_ids.empty()) throw ValidationError("ngram_mean requires a non-empty n-gram");
  std::vector<double> mean(static_cast<std::size_t>(table.dim), 0.0);
  for (int id : token_ids) {
    const auto& row = table.vector_for(id);
    for (std::size_t d = 0; d < mean.size(); ++d) mean[d] += row[d];
  }
  const double inv = 1.0 / static_cast<double>(token_ids.size());
  for (double& x : mean) x *= inv;
  return mean;
}

namespace {

std::unordered_map<std::string, std::size_t> token_index(const EmbeddingTable& table) {
  std::unordered_map<std::string, std::size_t> index;
  index.reserve(table.tokens.size());
  for (std::size_t i = 0; i < table.tokens.size(); ++i) index[table.tokens[i]] = i;
  if (index.find(std::string(Vocabulary::kUnkToken)) == index.end()) {
    throw ValidationError("embedding table lacks the [UNK] row");
  }
  return index;
}

std::vector<int> resolve_tokens(const std::vector<std::string>& tokens,
                                const std::unordered_map<std::string, std::size_t>& index) {
  const std::size_t unk = index.at(std::string(Vocabulary::kUnkToken));
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) {
    auto it = index.find(t);
    ids.push_back(static_cast<int>(it == index.end() ? unk : it->second));
  }
  return ids;
}

}  // namespace

std::vector<double> ngram_mean(const std::vector<std::string>& tokens,
                               const EmbeddingTable& table) {
  return ngram_mean(resolve_tokens(tokens, token_index(table)), table);
}

double max_cosine(std::span<const double> query, const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return 0.0;
  const double qn = norm(query);
  double best = 0.0;
  bool first = true;
  for (const auto& row : rows) {
    double sim = 0.0;
    const double rn = norm(row);
    if (qn > 0 && rn > 0) sim = dot(query, row) / (qn * rn);
    if (first || sim > best) {
      best = sim;
      first = false;
    }
  }
  return best;
}

ConstraintProfile build_profile(const std::vector<SalientNgram>& salient_a,
                                const std::vector<SalientNgram>& salient_b,
                                const EmbeddingTable& table, std::string attribute_a,
                                std::string attribute_b) {
  ConstraintProfile profile;
  profile.dim = table.dim;
  profile.attribute_a = std::move(attribute_a);
  profile.attribute_b = std::move(attribute_b);
  const auto index = token_index(table);
  auto fill = [&](const std::vector<SalientNgram>& source, std::vector<ConstraintProfile::Entry>& out) {
    out.reserve(source.size());
    for (const auto& sn : source) {
      out.push_back({sn.tokens, ngram_mean(resolve_tokens(sn.tokens, index), table)});
    }
  };
  fill(salient_a, profile.matrix_a);
  fill(salient_b, profile.matrix_b);
  return profile;
}

std::vector<std::vector<double>> aligned_vectors(const EmbeddingTable& table,
                                                 const Vocabulary& vocab) {
  const auto index = token_index(table);
  const std::size_t unk = index.at(std::string(Vocabulary::kUnkToken));
  std::vector<std::vector<double>> rows;
  rows.reserve(static_cast<std::size_t>(vocab.size()));
  for (const auto& token : vocab.tokens()) {
    auto it = index.find(token);
    rows.push_back(table.vectors[it == index.end() ? unk : it->second]);
  }
  return rows;
}

void save_embeddings(const EmbeddingTable& table, const std::string& path,
                     const std::string& sidecar_path) {
  ordered_json j;
  j["version"] = kVersion;
  j["dim"] = table.dim;
  j["provenance"] = table.provenance;
  j["tokens"] = table.tokens;
  if (sidecar_path.empty()) {
    ordered_json rows = ordered_json::array();
    for (const auto& row : table.vectors) rows.push_back(row);
    j["vectors"] = std::move(rows);
  } else {
    std::ofstream bin(sidecar_path, std::ios::trunc | std::ios::binary);
    if (!bin) throw ValidationError("cannot write embedding sidecar: " + sidecar_path);
    bin.write(kSidecarMagic, sizeof(kSidecarMagic));
    const std::uint32_t dim = static_cast<std::uint32_t>(table.dim);
    const std::uint32_t rows = static_cast<std::uint32_t>(table.vectors.size());
    bin.write(reinterpret_cast<const char*>(&dim), sizeof(dim));
    bin.write(reinterpret_cast<const char*>(&rows), sizeof(rows));
    for (const auto& row : table.vectors) {
      for (double x : row) {
        const float f = static_cast<float>(x);
        bin.write(reinterpret_cast<const char*>(&f), sizeof(f));
      }
    }
    j["sidecar"] = std::filesystem::path(sidecar_path).filename().string();
  }

  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ValidationError("cannot write embedding file: " + path);
  out << j.dump() << '\n';
}

EmbeddingTable load_embeddings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open embedding file: " + path);
  ordered_json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("invalid embedding JSON in " + path + ": " + e.what());
  }

  EmbeddingTable table;
  try {
    table.dim = j.at("dim").get<int>();
    table.provenance = j.value("provenance", std::string());
    table.tokens = j.at("tokens").get<std::vector<std::string>>();
    if (j.contains("vectors")) {
      for (const auto& row : j.at("vectors")) {
        table.vectors.push_back(row.get<std::vector<double>>());
      }
    } else {
      const std::string sidecar =
          (std::filesystem::path(path).parent_path() / j.at("sidecar").get<std::string>()).string();
      std::ifstream bin(sidecar, std::ios::binary);
      if (!bin) throw ValidationError("cannot open embedding sidecar: " + sidecar);
      char magic[sizeof(kSidecarMagic)];
      bin.read(magic, sizeof(magic));
      if (!bin || std::memcmp(magic, kSidecarMagic, sizeof(magic)) != 0) {
        throw ValidationError("bad embedding sidecar magic in " + sidecar);
      }
      std::uint32_t dim = 0, rows = 0;
      bin.read(reinterpret_cast<char*>(&dim), sizeof(dim));
      bin.read(reinterpret_cast<char*>(&rows), sizeof(rows));
      if (!bin || static_cast<int>(dim) != table.dim) {
        throw ValidationError("embedding sidecar header mismatch in " + sidecar);
      }
      table.vectors.assign(rows, std::vector<double>(dim, 0.0));
      for (auto& row : table.vectors) {
        for (double& x : row) {
          float f = 0.0f;
          bin.read(reinterpret_cast<char*>(&f), sizeof(f));
          x = static_cast<double>(f);
        }
      }
      if (!bin) throw ValidationError("truncated embedding sidecar: " + sidecar);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("invalid embedding document in " + path + ": " + e.what());
  }

  if (table.vectors.size() != table.tokens.size()) {
    throw ValidationError("embedding rows do not match token list in " + path);
  }
  for (const auto& row : table.vectors) {
    if (static_cast<int>(row.size()) != table.dim) {
      throw ValidationError("embedding row width mismatch in " + path);
    }
    for (double x : row) {
      if (!std::isfinite(x)) throw ValidationError("non-finite embedding value in " + path);
    }
  }
  return table;
}

void save_profile(const ConstraintProfile& profile, const std::string& path) {
  ordered_json j;
  j["version"] = kVersion;
  j["dim"] = profile.dim;
  j["attribute_a"] = profile.attribute_a;
  j["attribute_b"] = profile.attribute_b;
  auto dump_matrix = [](const std::vector<ConstraintProfile::Entry>& entries) {
    ordered_json arr = ordered_json::array();
    for (const auto& e : entries) {
      ordered_json item;
      item["tokens"] = e.tokens;
      item["mean"] = e.mean;
      arr.push_back(std::move(item));
    }
    return arr;
  };
  j["matrix_a"] = dump_matrix(profile.matrix_a);
  j["matrix_b"] = dump_matrix(profile.matrix_b);

  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ValidationError("cannot write profile file: " + path);
  out << j.dump() << '\n';
}

ConstraintProfile load_profile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open profile file: " + path);
  ordered_json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("invalid profile JSON in " + path + ": " + e.what());
  }

  ConstraintProfile profile;
  try {
    profile.dim = j.at("dim").get<int>();
    profile.attribute_a = j.at("attribute_a").get<std::string>();
    profile.attribute_b = j.at("attribute_b").get<std::string>();
    auto read_matrix = [&](const char* key, std::vector<ConstraintProfile::Entry>& out) {
      for (const auto& item : j.at(key)) {
        out.push_back({item.at("tokens").get<std::vector<std::string>>(),
                       item.at("mean").get<std::vector<double>>()});
        if (static_cast<int>(out.back().mean.size()) != profile.dim) {
          throw ValidationError("profile row width mismatch in " + path);
        }
      }
    };
    read_matrix("matrix_a", profile.matrix_a);
    read_matrix("matrix_b", profile.matrix_b);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("invalid profile document in " + path + ": " + e.what());
  }
  return profile;
}

}  // namespace saliensim
