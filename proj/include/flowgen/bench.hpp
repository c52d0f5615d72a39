#pragma once

// Flow-Bench dataset loading, the four evaluation metrics, and the eval
// runner with JSON + text reports.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>
#include <yaml-cpp/yaml.h>

#include "flowgen/pipeline.hpp"

namespace flowgen::bench {

class DatasetError : public std::runtime_error {
 public:
  DatasetError(const std::string& file, const std::string& reason)
      : std::runtime_error(file + ": " + reason), file(file), reason(reason) {}
  std::string file;
  std::string reason;
};

struct BenchCase {
  int uid = -1;
  std::set<std::string> tags;
  std::string utterance;
  std::optional<ir::Program> prior_sequence;
  std::string prior_source;
  std::vector<std::string> prior_context;  // opaque, preserved
  std::optional<bpmn::Document> prior_bpmn;
  ir::Program expected_sequence;
  std::string expected_source;
  bpmn::Document expected_bpmn;
  std::string file;
};

namespace detail {

inline std::string read_file(const std::filesystem::path& path,
                             const std::string& yaml_file) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetError(yaml_file, "missing file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// sequences are YAML lists of text blocks; join them into one source
inline std::string join_sequence(const YAML::Node& node) {
  std::string out;
  for (const YAML::Node& part : node) {
    if (!out.empty() && out.back() != '\n') out += '\n';
    out += part.as<std::string>();
  }
  return out;
}

inline bpmn::Document load_bpmn_ref(const YAML::Node& node,
                                    const std::filesystem::path& base_dir,
                                    const std::string& yaml_file) {
  if (!node["$ref"]) throw DatasetError(yaml_file, "bpmn node without $ref");
  std::filesystem::path ref = base_dir / node["$ref"].as<std::string>();
  std::string xml = read_file(ref, yaml_file);
  try {
    return bpmn::parse_bpmn(xml);
  } catch (const std::exception& e) {
    throw DatasetError(yaml_file, ref.string() + ": " + e.what());
  }
}

}  // namespace detail

inline BenchCase load_case(const std::filesystem::path& path) {
  const std::string file = path.string();
  YAML::Node doc;
  try {
    doc = YAML::LoadFile(file);
  } catch (const YAML::Exception& e) {
    throw DatasetError(file, std::string("YAML parse error: ") + e.what());
  }
  BenchCase c;
  c.file = file;
  try {
    YAML::Node meta = doc["_metadata"];
    if (!meta) throw DatasetError(file, "missing _metadata");
    c.uid = meta["uid"].as<int>();
    for (const YAML::Node& t : meta["tags"])
      c.tags.insert(t.as<std::string>());

    YAML::Node input = doc["input"];
    if (!input) throw DatasetError(file, "missing input");
    c.utterance = input["utterance"].as<std::string>();
    if (input["prior_context"])
      for (const YAML::Node& p : input["prior_context"])
        c.prior_context.push_back(YAML::Dump(p));

    std::filesystem::path base_dir = path.parent_path();
    if (input["prior_sequence"]) {
      c.prior_source = detail::join_sequence(input["prior_sequence"]);
      try {
        c.prior_sequence = ir::parse_ir(c.prior_source);
      } catch (const ir::SyntaxError& e) {
        throw DatasetError(file, std::string("prior_sequence: ") + e.what());
      }
      if (input["bpmn"])
        c.prior_bpmn = detail::load_bpmn_ref(input["bpmn"], base_dir, file);
    }

    YAML::Node expected = doc["expected_output"];
    if (!expected || !expected["sequence"])
      throw DatasetError(file, "missing expected_output.sequence");
    c.expected_source = detail::join_sequence(expected["sequence"]);
    try {
      c.expected_sequence = ir::parse_ir(c.expected_source);
    } catch (const ir::SyntaxError& e) {
      throw DatasetError(file, std::string("expected sequence: ") + e.what());
    }
    if (!expected["bpmn"])
      throw DatasetError(file, "missing expected_output.bpmn");
    c.expected_bpmn = detail::load_bpmn_ref(expected["bpmn"], base_dir, file);
  } catch (const YAML::Exception& e) {
    throw DatasetError(file, std::string("YAML structure error: ") + e.what());
  }

  // corpus consistency: the BPMN files must agree with the sequences
  if (c.prior_bpmn) {
    ir::Program dec = bpmn2py::decompile(*c.prior_bpmn);
    if (!(ir::normalize_ir(dec) == ir::normalize_ir(*c.prior_sequence)))
      throw DatasetError(file, "prior BPMN does not match prior_sequence");
  }
  {
    ir::Program dec = bpmn2py::decompile(c.expected_bpmn);
    if (!(ir::normalize_ir(dec) == ir::normalize_ir(c.expected_sequence)))
      throw DatasetError(file, "expected BPMN does not match sequence");
  }
  return c;
}

inline std::vector<BenchCase> load_dataset(const std::string& root_dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(root_dir))
    throw DatasetError(root_dir, "not a directory");
  std::vector<fs::path> files;
  for (const fs::directory_entry& entry : fs::directory_iterator(root_dir)) {
    if (entry.path().extension() == ".yaml" ||
        entry.path().extension() == ".yml")
      files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<BenchCase> cases;
  for (const fs::path& f : files) cases.push_back(load_case(f));
  std::set<int> uids;
  for (const BenchCase& c : cases)
    if (!uids.insert(c.uid).second)
      throw DatasetError(c.file, "duplicate uid " + std::to_string(c.uid));
  return cases;
}

// ---------------------------------------------------------------------------
// metrics

inline int exact_match(const ir::Program& generated, const ir::Program& gold) {
  return ir::normalize_ir(generated) == ir::normalize_ir(gold) ? 1 : 0;
}

inline double hallucination_rate(const ir::Program& generated,
                                 const std::set<std::string>& catalog_ids) {
  std::vector<std::string> calls = ir::collect_activities(generated);
  if (calls.empty()) return 0.0;
  size_t bad = 0;
  for (const std::string& c : calls)
    if (!catalog_ids.count(c)) ++bad;
  return static_cast<double>(bad) / static_cast<double>(calls.size());
}

namespace detail {

// feature = (ancestor statement-kind path, head label); head label is the
// callee for call statements, the keyword for compounds
inline void features(const ir::Block& block, const std::string& path,
                     std::map<std::pair<std::string, std::string>, int>& out) {
  for (const ir::Stmt& stmt : block) {
    std::visit(
        [&](const auto& node) {
          using T = std::decay_t<decltype(node)>;
          if constexpr (std::is_same_v<T, ir::Assign> ||
                        std::is_same_v<T, ir::ExprCall>) {
            ++out[{path, node.call.callee}];
          } else if constexpr (std::is_same_v<T, ir::If>) {
            ++out[{path, "if"}];
            features(node.then_body, path + "/if", out);
            if (node.else_body) features(*node.else_body, path + "/if", out);
          } else if constexpr (std::is_same_v<T, ir::For>) {
            ++out[{path, "for"}];
            features(node.body, path + "/for", out);
          } else {
            ++out[{path, "while"}];
            features(node.body, path + "/while", out);
          }
        },
        stmt.node);
  }
}

}  // namespace detail

inline double syntax_f1(const ir::Program& generated, const ir::Program& gold) {
  std::map<std::pair<std::string, std::string>, int> g, x;
  detail::features(generated.statements, "", g);
  detail::features(gold.statements, "", x);
  int gen_total = 0, gold_total = 0, match = 0;
  for (const auto& [f, n] : g) gen_total += n;
  for (const auto& [f, n] : x) gold_total += n;
  if (gen_total == 0 && gold_total == 0) return 1.0;
  for (const auto& [f, n] : g) {
    auto it = x.find(f);
    if (it != x.end()) match += std::min(n, it->second);
  }
  if (match == 0) return 0.0;
  double p = static_cast<double>(match) / gen_total;
  double r = static_cast<double>(match) / gold_total;
  return 2 * p * r / (p + r);
}

// ---------------------------------------------------------------------------
// eval runner

enum class DomainMode { in_domain, cross_domain };

struct CaseResult {
  int uid = -1;
  std::set<std::string> tags;
  int exact = 0;
  double recall = 0;
  double hallucination = 0;
  double f1 = 0;
  bool generated = false;  // a program was produced (metrics meaningful)
  std::string error;
};

struct EvalConfig {
  pipeline::PipelineConfig pipeline;
  DomainMode domain = DomainMode::in_domain;
  int jobs = 1;
  std::string provider_name = "unknown";
};

struct EvalReport {
  EvalConfig config;
  std::vector<CaseResult> cases;

  double mean_exact = 0, mean_recall = 0, mean_hallucination = 0, mean_f1 = 0;
  int errored = 0;

  void finalize() {
    std::sort(cases.begin(), cases.end(),
              [](const CaseResult& a, const CaseResult& b) {
                return a.uid < b.uid;
              });
    double em = 0, rc = 0, hr = 0, f1 = 0;
    int with_program = 0;
    errored = 0;
    for (const CaseResult& c : cases) {
      em += c.exact;
      f1 += c.f1;
      rc += c.recall;
      if (c.generated) {
        hr += c.hallucination;
        ++with_program;
      }
      if (!c.error.empty()) ++errored;
    }
    const double n = cases.empty() ? 1 : static_cast<double>(cases.size());
    mean_exact = em / n;
    mean_f1 = f1 / n;
    mean_recall = rc / n;
    mean_hallucination = with_program ? hr / with_program : 0.0;
  }

  nlohmann::json to_json() const;
  std::string to_text() const;
};

inline std::vector<retrieval::Demonstration> as_demos(
    const std::vector<BenchCase>& cases) {
  std::vector<retrieval::Demonstration> demos;
  for (const BenchCase& c : cases) {
    retrieval::Demonstration d;
    d.utterance = c.utterance;
    d.prior_sequence = c.prior_sequence;
    d.expected = c.expected_sequence;
    d.tags = c.tags;
    d.uid = c.uid;
    demos.push_back(std::move(d));
  }
  return demos;
}

inline std::map<int, std::string> oracle_table(
    const std::vector<BenchCase>& cases) {
  std::map<int, std::string> gold;
  for (const BenchCase& c : cases) gold[c.uid] = c.expected_source;
  return gold;
}

namespace detail {

inline std::set<std::string> activity_set(const ir::Program& p) {
  std::vector<std::string> v = ir::collect_activities(p);
  return {v.begin(), v.end()};
}

inline CaseResult eval_case(const BenchCase& c,
                            const std::vector<retrieval::Demonstration>& all,
                            const retrieval::Catalog& catalog,
                            const std::set<std::string>& catalog_ids,
                            const EvalConfig& config,
                            pipeline::Provider& provider) {
  CaseResult r;
  r.uid = c.uid;
  r.tags = c.tags;

  std::set<std::string> gold = activity_set(c.expected_sequence);

  // leave-one-out demo pool; cross-domain also drops demos that use any
  // gold activity of this case
  std::vector<retrieval::Demonstration> demos;
  for (const retrieval::Demonstration& d : all) {
    if (d.uid == c.uid) continue;
    if (config.domain == DomainMode::cross_domain) {
      std::set<std::string> used = activity_set(d.expected);
      bool overlap = false;
      for (const std::string& a : used)
        if (gold.count(a)) {
          overlap = true;
          break;
        }
      if (overlap) continue;
    }
    demos.push_back(d);
  }

  // retrieval recall is provider-independent
  const ir::Program* prior =
      c.prior_sequence ? &*c.prior_sequence : nullptr;
  std::vector<retrieval::ActivityEntry> retrieved =
      retrieval::retrieve_activities(c.utterance, prior, catalog,
                                     config.pipeline.activities);
  r.recall = retrieval::activities_recall(retrieved, gold);

  try {
    pipeline::RunOutcome outcome =
        c.prior_bpmn
            ? pipeline::run_update(c.utterance, *c.prior_bpmn, catalog, demos,
                                   config.pipeline, provider, c.uid)
            : pipeline::run_initial(c.utterance, catalog, demos,
                                    config.pipeline, provider, c.uid);
    r.generated = true;
    r.exact = exact_match(outcome.generation.program, c.expected_sequence);
    r.f1 = syntax_f1(outcome.generation.program, c.expected_sequence);
    r.hallucination =
        hallucination_rate(outcome.generation.program, catalog_ids);
  } catch (const std::exception& e) {
    r.error = e.what();  // scores stay 0
  }
  return r;
}

}  // namespace detail

inline EvalReport run_eval(const std::vector<BenchCase>& cases,
                           const retrieval::Catalog& catalog,
                           const EvalConfig& config,
                           pipeline::Provider& provider) {
  std::vector<retrieval::Demonstration> demos = as_demos(cases);
  std::set<std::string> catalog_ids;
  for (const retrieval::ActivityEntry& e : catalog) catalog_ids.insert(e.id);

  EvalReport report;
  report.config = config;
  report.cases.resize(cases.size());

  int jobs = std::max(1, config.jobs);
  if (int cap = provider.max_in_flight(); cap > 0) jobs = std::min(jobs, cap);
  jobs = std::min<int>(jobs, static_cast<int>(cases.size()));
  if (jobs <= 1) {
    for (size_t i = 0; i < cases.size(); ++i)
      report.cases[i] = detail::eval_case(cases[i], demos, catalog,
                                          catalog_ids, config, provider);
  } else {
    std::mutex mu;
    size_t next = 0;
    std::vector<std::thread> workers;
    for (int w = 0; w < jobs; ++w) {
      workers.emplace_back([&] {
        for (;;) {
          size_t i;
          {
            std::lock_guard<std::mutex> lock(mu);
            if (next >= cases.size()) return;
            i = next++;
          }
          report.cases[i] = detail::eval_case(cases[i], demos, catalog,
                                              catalog_ids, config, provider);
        }
      });
    }
    for (std::thread& t : workers) t.join();
  }
  report.finalize();
  return report;
}

// ---------------------------------------------------------------------------
// reports

inline nlohmann::json EvalReport::to_json() const {
  nlohmann::json per_case = nlohmann::json::array();
  for (const CaseResult& c : cases) {
    nlohmann::json j{{"uid", c.uid},
                     {"exact_match", c.exact},
                     {"activities_recall", c.recall},
                     {"hallucination_rate", c.hallucination},
                     {"syntax_f1", c.f1},
                     {"tags", c.tags}};
    if (!c.error.empty()) j["error"] = c.error;
    per_case.push_back(std::move(j));
  }

  // per-tag aggregation
  std::map<std::string, std::pair<int, double>> by_tag;  // count, em sum
  for (const CaseResult& c : cases)
    for (const std::string& t : c.tags) {
      by_tag[t].first += 1;
      by_tag[t].second += c.exact;
    }
  nlohmann::json tags = nlohmann::json::object();
  for (const auto& [tag, agg] : by_tag)
    tags[tag] = {{"cases", agg.first},
                 {"exact_match", agg.second / agg.first}};

  return nlohmann::json{
      {"note",
       "syntax_f1 uses this tool's own feature definition; values are not "
       "comparable across tools"},
      {"config",
       {{"provider", config.provider_name},
        {"domain", config.domain == DomainMode::in_domain ? "in" : "cross"},
        {"activity_top_k", config.pipeline.activities.top_k},
        {"demo_top_k", config.pipeline.demos.top_k},
        {"jobs", config.jobs}}},
      {"aggregates",
       {{"exact_match", mean_exact},
        {"activities_recall", mean_recall},
        {"hallucination_rate", mean_hallucination},
        {"syntax_f1", mean_f1},
        {"cases", cases.size()},
        {"errored", errored}}},
      {"tags", tags},
      {"cases", per_case}};
}

inline std::string EvalReport::to_text() const {
  std::ostringstream out;
  out << "flowgen eval  provider=" << config.provider_name << "  domain="
      << (config.domain == DomainMode::in_domain ? "in" : "cross")
      << "  activity_top_k=" << config.pipeline.activities.top_k
      << "  demo_top_k=" << config.pipeline.demos.top_k << "\n";
  out << "note: syntax_f1 uses this tool's own feature definition\n\n";
  out << std::left << std::setw(6) << "uid" << std::right << std::setw(7)
      << "exact" << std::setw(9) << "recall" << std::setw(9) << "halluc"
      << std::setw(9) << "f1"
      << "  error\n";
  out << std::fixed << std::setprecision(4);
  for (const CaseResult& c : cases) {
    out << std::left << std::setw(6) << c.uid << std::right << std::setw(7)
        << c.exact << std::setw(9) << c.recall << std::setw(9)
        << c.hallucination << std::setw(9) << c.f1 << "  "
        << (c.error.empty() ? "" : c.error) << "\n";
  }
  out << "\nmean  " << std::right << std::setw(7) << mean_exact
      << std::setw(9) << mean_recall << std::setw(9) << mean_hallucination
      << std::setw(9) << mean_f1 << "  (" << cases.size() << " cases, "
      << errored << " errored)\n";
  return out.str();
}

// mock_table provider file: YAML map from uid to response text
inline std::map<int, std::string> load_mock_table(const std::string& path) {
  YAML::Node doc;
  try {
    doc = YAML::LoadFile(path);
  } catch (const YAML::Exception& e) {
    throw DatasetError(path, std::string("YAML parse error: ") + e.what());
  }
  std::map<int, std::string> table;
  for (const auto& kv : doc)
    table[kv.first.as<int>()] = kv.second.as<std::string>();
  return table;
}

}  // namespace flowgen::bench
