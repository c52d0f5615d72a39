#pragma once

// Prompt assembly, provider abstraction (mock table / mock oracle / HTTP),
// response extraction, and grounding of generated calls against the catalog.

#include <cstdlib>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "flowgen/compile.hpp"
#include "flowgen/decompile.hpp"
#include "flowgen/diff.hpp"
#include "flowgen/ir.hpp"
#include "flowgen/patch.hpp"
#include "flowgen/retrieval.hpp"

namespace flowgen::pipeline {

class ProviderError : public std::runtime_error {
 public:
  explicit ProviderError(const std::string& message)
      : std::runtime_error(message) {}
};

class ExtractionError : public std::runtime_error {
 public:
  explicit ExtractionError(const std::string& message)
      : std::runtime_error(message) {}
};

// ---------------------------------------------------------------------------
// prompt

struct PromptBundle {
  std::string system_instructions;
  std::string activity_block;
  std::string demo_block;
  std::optional<std::string> prior_block;
  std::string utterance;

  std::string render() const {
    std::ostringstream out;
    out << system_instructions << "\n\n## Available activities\n"
        << activity_block;
    if (!demo_block.empty()) out << "\n## Examples\n" << demo_block;
    if (prior_block) out << "\n## Current workflow\n```python\n"
                         << *prior_block << "\n```\n";
    out << "\n## Request\n" << utterance << "\n";
    return out.str();
  }
};

inline PromptBundle assemble_prompt(
    const std::string& utterance,
    const std::vector<retrieval::ActivityEntry>& activities,
    const std::vector<retrieval::Demonstration>& demos,
    const ir::Program* prior) {
  PromptBundle bundle;
  bundle.system_instructions =
      "You translate workflow requests into a restricted Python subset.\n"
      "Rules:\n"
      "- Reply with exactly one fenced code block and nothing else.\n"
      "- Each statement is an assignment of a single activity call, a bare\n"
      "  call, an if/else, a for loop, or a while loop.\n"
      "- Call only the activities listed below, with no arguments.\n"
      "- Encode human steps as user_task(\"description\").\n"
      "- When a current workflow is given, reply with the full updated\n"
      "  workflow, changing as little as possible.";
  std::ostringstream acts;
  for (const retrieval::ActivityEntry& a : activities)
    acts << "- " << a.id << ": " << a.description << "\n";
  bundle.activity_block = acts.str();
  std::ostringstream ds;
  for (const retrieval::Demonstration& d : demos) {
    ds << "Request: " << d.utterance << "\n";
    if (d.prior_sequence)
      ds << "Current workflow:\n```python\n"
         << ir::print_ir(*d.prior_sequence) << "\n```\n";
    ds << "Answer:\n```python\n" << ir::print_ir(d.expected) << "\n```\n\n";
  }
  bundle.demo_block = ds.str();
  if (prior) bundle.prior_block = ir::print_ir(*prior);
  bundle.utterance = utterance;
  return bundle;
}

// ---------------------------------------------------------------------------
// providers

class Provider {
 public:
  virtual ~Provider() = default;
  virtual std::string complete(const std::string& prompt, int uid) = 0;
  // 0 = unlimited; the eval harness caps its worker count by this
  virtual int max_in_flight() const { return 0; }
};

// Canned responses keyed by case uid.
class MockTableProvider : public Provider {
 public:
  explicit MockTableProvider(std::map<int, std::string> responses)
      : responses_(std::move(responses)) {}

  std::string complete(const std::string&, int uid) override {
    auto it = responses_.find(uid);
    if (it == responses_.end())
      throw ProviderError("mock table has no response for uid " +
                          std::to_string(uid));
    return it->second;
  }

 private:
  std::map<int, std::string> responses_;
};

// Returns each case's gold sequence; isolates pipeline plumbing from model
// quality.
class MockOracleProvider : public Provider {
 public:
  explicit MockOracleProvider(std::map<int, std::string> gold_sources)
      : gold_(std::move(gold_sources)) {}

  std::string complete(const std::string&, int uid) override {
    auto it = gold_.find(uid);
    if (it == gold_.end())
      throw ProviderError("oracle has no gold sequence for uid " +
                          std::to_string(uid));
    return "```python\n" + it->second + "\n```";
  }

 private:
  std::map<int, std::string> gold_;
};

// POSTs {"prompt": ..., "max_tokens": ...} and expects {"text": ...}.
// Endpoint and key come from FLOWGEN_LLM_ENDPOINT / FLOWGEN_LLM_API_KEY.
class HttpProvider : public Provider {
 public:
  HttpProvider();  // defined in net.hpp to keep httplib out of every TU

  std::string complete(const std::string& prompt, int uid) override;
  int max_in_flight() const override { return 4; }

  static const char* endpoint_env() { return "FLOWGEN_LLM_ENDPOINT"; }
  static const char* api_key_env() { return "FLOWGEN_LLM_API_KEY"; }

 private:
  std::string endpoint_;
  std::string api_key_;
  int max_tokens_ = 1024;
};

// ---------------------------------------------------------------------------
// extraction + grounding

// First fenced code block; without fences the whole reply must parse as IR.
inline std::string extract_code(const std::string& raw) {
  size_t fence = raw.find("```");
  if (fence != std::string::npos) {
    size_t line_end = raw.find('\n', fence);
    if (line_end == std::string::npos)
      throw ExtractionError("unterminated code fence");
    size_t close = raw.find("```", line_end + 1);
    if (close == std::string::npos)
      throw ExtractionError("unterminated code fence");
    return raw.substr(line_end + 1, close - line_end - 1);
  }
  try {
    ir::parse_ir(raw);
    return raw;
  } catch (const ir::SyntaxError&) {
    throw ExtractionError("response contains no code region");
  }
}

enum class Verdict { in_catalog, user_task, hallucinated };

struct GroundedCall {
  std::string callee;
  Verdict verdict;
};

inline void ground_block(const ir::Block& block,
                         const std::set<std::string>& catalog_ids,
                         std::vector<GroundedCall>& out) {
  for (const ir::Stmt& stmt : block) {
    std::visit(
        [&](const auto& node) {
          using T = std::decay_t<decltype(node)>;
          if constexpr (std::is_same_v<T, ir::Assign> ||
                        std::is_same_v<T, ir::ExprCall>) {
            const std::string& callee = node.call.callee;
            Verdict v = callee == ir::kUserTaskCallee ? Verdict::user_task
                        : catalog_ids.count(callee)   ? Verdict::in_catalog
                                                      : Verdict::hallucinated;
            out.push_back({callee, v});
          } else if constexpr (std::is_same_v<T, ir::If>) {
            ground_block(node.then_body, catalog_ids, out);
            if (node.else_body) ground_block(*node.else_body, catalog_ids, out);
          } else {
            ground_block(node.body, catalog_ids, out);
          }
        },
        stmt.node);
  }
}

struct GenerationResult {
  std::string raw_text;
  ir::Program program;
  std::vector<GroundedCall> grounding;

  bool has_hallucination() const {
    for (const GroundedCall& g : grounding)
      if (g.verdict == Verdict::hallucinated) return true;
    return false;
  }
};

inline GenerationResult generate_ir(const PromptBundle& bundle,
                                    Provider& provider,
                                    const retrieval::Catalog& catalog,
                                    int uid = -1) {
  GenerationResult result;
  result.raw_text = provider.complete(bundle.render(), uid);
  result.program = ir::parse_ir(extract_code(result.raw_text));
  std::set<std::string> ids;
  for (const retrieval::ActivityEntry& e : catalog) ids.insert(e.id);
  ground_block(result.program.statements, ids, result.grounding);
  return result;
}

// ---------------------------------------------------------------------------
// end-to-end runs

struct PipelineConfig {
  retrieval::RetrieverConfig activities;  // defaults: ED, top_k 50
  retrieval::RetrieverConfig demos{retrieval::RetrieverKind::edit_distance, 5,
                                   nullptr};
};

struct RunOutcome {
  bpmn::Document document;
  GenerationResult generation;
};

inline RunOutcome run_initial(const std::string& utterance,
                              const retrieval::Catalog& catalog,
                              const std::vector<retrieval::Demonstration>& demos,
                              const PipelineConfig& config, Provider& provider,
                              int uid = -1) {
  std::vector<retrieval::ActivityEntry> acts =
      retrieval::retrieve_activities(utterance, nullptr, catalog,
                                     config.activities);
  std::vector<retrieval::Demonstration> shots =
      retrieval::retrieve_demos(utterance, false, demos, config.demos);
  PromptBundle bundle = assemble_prompt(utterance, acts, shots, nullptr);
  GenerationResult gen = generate_ir(bundle, provider, catalog, uid);
  bpmn::Document doc = py2bpmn::compile(gen.program);
  return {std::move(doc), std::move(gen)};
}

inline RunOutcome run_update(const std::string& utterance,
                             const bpmn::Document& prior_doc,
                             const retrieval::Catalog& catalog,
                             const std::vector<retrieval::Demonstration>& demos,
                             const PipelineConfig& config, Provider& provider,
                             int uid = -1) {
  ir::Program prior = bpmn2py::decompile(prior_doc);
  std::vector<retrieval::ActivityEntry> acts =
      retrieval::retrieve_activities(utterance, &prior, catalog,
                                     config.activities);
  std::vector<retrieval::Demonstration> shots =
      retrieval::retrieve_demos(utterance, true, demos, config.demos);
  PromptBundle bundle = assemble_prompt(utterance, acts, shots, &prior);
  GenerationResult gen = generate_ir(bundle, provider, catalog, uid);
  flow_diff::EditScript script = flow_diff::diff_ir(prior, gen.program);
  bpmn::Document doc = flow_diff::patch_bpmn(prior_doc, script);
  return {std::move(doc), std::move(gen)};
}

}  // namespace flowgen::pipeline
