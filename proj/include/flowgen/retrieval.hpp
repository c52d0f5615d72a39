#pragma once

// Activity catalog and retrievers: edit-distance ranking over descriptions,
// a pluggable similarity backend (built-in: character-3-gram TF-IDF cosine),
// and demonstration retrieval with prior-presence shortlisting.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "flowgen/ir.hpp"

namespace flowgen::retrieval {

class CatalogError : public std::runtime_error {
 public:
  explicit CatalogError(const std::string& message)
      : std::runtime_error(message) {}
};

struct ActivityEntry {
  std::string id;
  std::string description;
};

using Catalog = std::vector<ActivityEntry>;

inline Catalog load_catalog(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw CatalogError(std::string("catalog is not valid JSON: ") + e.what());
  }
  if (!j.is_array()) throw CatalogError("catalog must be a JSON array");
  Catalog catalog;
  std::set<std::string> seen;
  for (const auto& item : j) {
    if (!item.is_object() || !item.contains("id") ||
        !item.contains("description"))
      throw CatalogError("catalog entries need 'id' and 'description'");
    ActivityEntry entry{item.at("id").get<std::string>(),
                        item.at("description").get<std::string>()};
    if (!ir::is_identifier(entry.id))
      throw CatalogError("catalog id '" + entry.id +
                         "' is not a valid identifier");
    if (!seen.insert(entry.id).second)
      throw CatalogError("duplicate catalog id '" + entry.id + "'");
    catalog.push_back(std::move(entry));
  }
  return catalog;
}

// ---------------------------------------------------------------------------
// ranking kernels

inline size_t levenshtein(const std::string& a, const std::string& b) {
  const size_t n = a.size(), m = b.size();
  std::vector<size_t> row(m + 1);
  for (size_t j = 0; j <= m; ++j) row[j] = j;
  for (size_t i = 1; i <= n; ++i) {
    size_t diag = row[0];
    row[0] = i;
    for (size_t j = 1; j <= m; ++j) {
      size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1,
                         diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[m];
}

inline std::string lowercased(const std::string& s) {
  std::string out = s;
  for (char& c : out)
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// Levenshtein over lowercased strings, scaled by the longer length.
inline double normalized_distance(const std::string& a, const std::string& b) {
  if (a.empty() && b.empty()) return 0.0;
  return static_cast<double>(levenshtein(lowercased(a), lowercased(b))) /
         static_cast<double>(std::max(a.size(), b.size()));
}

class SimilarityBackend {
 public:
  virtual ~SimilarityBackend() = default;
  // deterministic, in [0, 1], higher = more similar
  virtual double score(const std::string& query,
                       const std::string& candidate) const = 0;
};

// Cosine similarity over TF-IDF vectors of character 3-grams of lowercased
// text. IDF comes from a corpus supplied up front; without one, plain TF
// cosine (idf = 1) is used.
class TfidfBackend : public SimilarityBackend {
 public:
  TfidfBackend() = default;

  explicit TfidfBackend(const std::vector<std::string>& corpus) {
    std::map<std::string, int> df;
    for (const std::string& doc : corpus) {
      std::map<std::string, double> tf = grams(doc);
      for (const auto& [g, _] : tf) ++df[g];
    }
    const double n = static_cast<double>(corpus.size());
    for (const auto& [g, d] : df)
      idf_[g] = std::log((1.0 + n) / (1.0 + d)) + 1.0;
  }

  double score(const std::string& query,
               const std::string& candidate) const override {
    std::map<std::string, double> q = vectorize(query);
    std::map<std::string, double> c = vectorize(candidate);
    double dot = 0, qn = 0, cn = 0;
    for (const auto& [g, w] : q) {
      qn += w * w;
      auto it = c.find(g);
      if (it != c.end()) dot += w * it->second;
    }
    for (const auto& [g, w] : c) cn += w * w;
    if (qn == 0 || cn == 0) return 0.0;
    return dot / (std::sqrt(qn) * std::sqrt(cn));
  }

 private:
  static std::map<std::string, double> grams(const std::string& text) {
    std::string t = lowercased(text);
    std::map<std::string, double> counts;
    if (t.size() < 3) {
      if (!t.empty()) counts[t] += 1;
      return counts;
    }
    for (size_t i = 0; i + 3 <= t.size(); ++i) counts[t.substr(i, 3)] += 1;
    return counts;
  }

  std::map<std::string, double> vectorize(const std::string& text) const {
    std::map<std::string, double> v = grams(text);
    if (idf_.empty()) return v;
    for (auto& [g, w] : v) {
      auto it = idf_.find(g);
      // unseen grams get the max-rarity weight
      w *= it != idf_.end() ? it->second : std::log(1.0 + idf_size_hint()) + 1.0;
    }
    return v;
  }

  double idf_size_hint() const {
    return static_cast<double>(idf_.size());
  }

  std::map<std::string, double> idf_;
};

enum class RetrieverKind { edit_distance, similarity_backend };

struct RetrieverConfig {
  RetrieverKind kind = RetrieverKind::edit_distance;
  int top_k = 50;
  const SimilarityBackend* backend = nullptr;  // required for similarity kind
};

// ---------------------------------------------------------------------------
// activity retrieval

namespace detail {

// rank = sort key where smaller is better; ties keep input order
inline std::vector<size_t> ranked_order(const std::vector<double>& keys) {
  std::vector<size_t> order(keys.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return keys[a] < keys[b]; });
  return order;
}

}  // namespace detail

inline std::vector<ActivityEntry> retrieve_activities(
    const std::string& utterance, const ir::Program* prior,
    const Catalog& catalog, const RetrieverConfig& config) {
  std::vector<double> keys(catalog.size());
  for (size_t i = 0; i < catalog.size(); ++i) {
    if (config.kind == RetrieverKind::edit_distance) {
      keys[i] = normalized_distance(utterance, catalog[i].description);
    } else {
      if (!config.backend)
        throw CatalogError("similarity retriever configured without backend");
      keys[i] = -config.backend->score(utterance, catalog[i].description);
    }
  }
  std::vector<size_t> order = detail::ranked_order(keys);

  std::vector<ActivityEntry> result;
  std::set<std::string> included;
  if (prior) {
    for (const std::string& name : ir::collect_activities(*prior)) {
      if (included.count(name)) continue;
      for (const ActivityEntry& entry : catalog) {
        if (entry.id == name) {
          result.push_back(entry);
          included.insert(name);
          break;
        }
      }
    }
  }
  for (size_t i : order) {
    if (static_cast<int>(result.size()) >= config.top_k) break;
    if (included.insert(catalog[i].id).second) result.push_back(catalog[i]);
  }
  if (static_cast<int>(result.size()) > config.top_k)
    result.resize(static_cast<size_t>(config.top_k));
  return result;
}

// ---------------------------------------------------------------------------
// demonstration retrieval

struct Demonstration {
  std::string utterance;
  std::optional<ir::Program> prior_sequence;
  ir::Program expected;
  std::set<std::string> tags;
  int uid = -1;
};

// Update queries draw demos only from update demos, initial queries only from
// initial ones; ranking compares utterances.
inline std::vector<Demonstration> retrieve_demos(
    const std::string& utterance, bool prior_present,
    const std::vector<Demonstration>& demos, const RetrieverConfig& config) {
  std::vector<const Demonstration*> pool;
  for (const Demonstration& d : demos)
    if (d.prior_sequence.has_value() == prior_present) pool.push_back(&d);

  std::vector<double> keys(pool.size());
  for (size_t i = 0; i < pool.size(); ++i) {
    if (config.kind == RetrieverKind::edit_distance) {
      keys[i] = normalized_distance(utterance, pool[i]->utterance);
    } else {
      if (!config.backend)
        throw CatalogError("similarity retriever configured without backend");
      keys[i] = -config.backend->score(utterance, pool[i]->utterance);
    }
  }
  std::vector<size_t> order = detail::ranked_order(keys);
  std::vector<Demonstration> result;
  for (size_t i : order) {
    if (static_cast<int>(result.size()) >= config.top_k) break;
    result.push_back(*pool[i]);
  }
  return result;
}

// ---------------------------------------------------------------------------

inline double activities_recall(const std::vector<ActivityEntry>& retrieved,
                                const std::set<std::string>& gold) {
  if (gold.empty()) return 1.0;
  size_t hit = 0;
  for (const std::string& g : gold)
    for (const ActivityEntry& e : retrieved)
      if (e.id == g) {
        ++hit;
        break;
      }
  return static_cast<double>(hit) / static_cast<double>(gold.size());
}

}  // namespace flowgen::retrieval
