// flowgen command-line tool: compile/decompile/diff/patch/retrieve/generate/
// eval over the workflow IR and BPMN pipeline.

#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "flowgen/bench.hpp"
#include "flowgen/net.hpp"

namespace {

using namespace flowgen;

std::string read_input(const std::string& path) {
  if (path == "-") {
    std::ostringstream buf;
    buf << std::cin.rdbuf();
    return buf.str();
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_output(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
    if (!content.empty() && content.back() != '\n') std::cout << "\n";
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

struct ProviderSpec {
  std::string kind;
  std::string arg;
};

ProviderSpec parse_provider(const std::string& spec) {
  size_t colon = spec.find(':');
  ProviderSpec p;
  p.kind = colon == std::string::npos ? spec : spec.substr(0, colon);
  if (colon != std::string::npos) p.arg = spec.substr(colon + 1);
  if (p.kind != "mock-table" && p.kind != "mock-oracle" && p.kind != "http")
    throw CLI::ValidationError(
        "provider", "unknown provider '" + p.kind +
                        "' (valid: mock-table:<file>, mock-oracle:<dataset>, "
                        "http)");
  return p;
}

std::unique_ptr<pipeline::Provider> make_provider(const ProviderSpec& spec) {
  if (spec.kind == "mock-table")
    return std::make_unique<pipeline::MockTableProvider>(
        bench::load_mock_table(spec.arg));
  if (spec.kind == "mock-oracle")
    return std::make_unique<pipeline::MockOracleProvider>(
        bench::oracle_table(bench::load_dataset(spec.arg)));
  return std::make_unique<pipeline::HttpProvider>();
}

std::string describe_script(const flow_diff::EditScript& script) {
  std::ostringstream out;
  for (const flow_diff::EditOp& op : script.ops) {
    std::visit(
        [&](const auto& o) {
          using T = std::decay_t<decltype(o)>;
          out << (std::is_same_v<T, flow_diff::InsertStmt>    ? "insert"
                  : std::is_same_v<T, flow_diff::DeleteStmt>  ? "delete"
                  : std::is_same_v<T, flow_diff::ReplaceCall> ? "replace_call"
                  : std::is_same_v<T, flow_diff::WrapInLoop>  ? "wrap_in_loop"
                  : std::is_same_v<T, flow_diff::UnwrapLoop>  ? "unwrap_loop"
                                                              : "set_condition")
              << " at [";
          for (size_t i = 0; i < o.path.size(); ++i) {
            if (i) out << ", ";
            out << o.path[i].index;
            if (o.path[i].branch) out << ":else";
          }
          out << "]";
          if constexpr (std::is_same_v<T, flow_diff::ReplaceCall>)
            out << " -> " << o.call.callee;
          if constexpr (std::is_same_v<T, flow_diff::SetCondition>)
            out << " -> " << o.text;
          if constexpr (std::is_same_v<T, flow_diff::WrapInLoop>)
            out << " x" << o.count << " (" << o.header << ")";
          out << "\n";
        },
        op);
  }
  if (script.empty()) out << "no changes\n";
  return out.str();
}

retrieval::RetrieverKind parse_retriever(const std::string& name) {
  if (name == "ed") return retrieval::RetrieverKind::edit_distance;
  if (name == "lexical") return retrieval::RetrieverKind::similarity_backend;
  throw CLI::ValidationError("retriever",
                             "unknown retriever '" + name +
                                 "' (valid: ed, lexical)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"workflow IR <-> BPMN pipeline"};
  app.require_subcommand(1);

  // compile
  std::string c_in, c_out;
  CLI::App* compile = app.add_subcommand("compile", "IR file to BPMN XML");
  compile->add_option("ir-file", c_in)->required();
  compile->add_option("-o,--output", c_out);

  // decompile
  std::string d_in, d_out;
  CLI::App* decompile =
      app.add_subcommand("decompile", "BPMN XML to IR source");
  decompile->add_option("bpmn-file", d_in)->required();
  decompile->add_option("-o,--output", d_out);

  // diff
  std::string f_base, f_target;
  bool f_json = false;
  CLI::App* diff = app.add_subcommand("diff", "edit script between IR files");
  diff->add_option("--base", f_base)->required();
  diff->add_option("--target", f_target)->required();
  diff->add_flag("--json", f_json, "emit the script as JSON");

  // patch
  std::string p_bpmn, p_script, p_out;
  CLI::App* patch =
      app.add_subcommand("patch", "apply an edit script to a BPMN file");
  patch->add_option("--bpmn", p_bpmn)->required();
  patch->add_option("--script", p_script)->required();
  patch->add_option("-o,--output", p_out);

  // retrieve
  std::string r_utt, r_catalog, r_prior, r_kind = "ed";
  int r_top_k = 50;
  CLI::App* retrieve =
      app.add_subcommand("retrieve", "rank catalog activities for a request");
  retrieve->add_option("--utterance", r_utt)->required();
  retrieve->add_option("--catalog", r_catalog)->required();
  retrieve->add_option("--retriever", r_kind, "ed|lexical");
  retrieve->add_option("--top-k", r_top_k);
  retrieve->add_option("--prior", r_prior, "IR file of the current workflow");

  // generate
  std::string g_utt, g_catalog, g_demos, g_prior_bpmn, g_provider, g_out;
  int g_act_k = 50, g_demo_k = 5;
  CLI::App* generate =
      app.add_subcommand("generate", "NL request to BPMN via a provider");
  generate->add_option("--utterance", g_utt)->required();
  generate->add_option("--catalog", g_catalog)->required();
  generate->add_option("--demos", g_demos, "dataset directory for few-shot")
      ->required();
  generate->add_option("--prior-bpmn", g_prior_bpmn);
  generate->add_option("--provider", g_provider)->required();
  generate->add_option("--activity-top-k", g_act_k);
  generate->add_option("--demo-top-k", g_demo_k);
  generate->add_option("-o,--output", g_out);

  // eval
  std::string e_dataset, e_catalog, e_provider, e_domain = "in", e_report;
  int e_act_k = 50, e_demo_k = 5;
  int e_jobs = static_cast<int>(std::thread::hardware_concurrency());
  CLI::App* eval = app.add_subcommand("eval", "run the benchmark");
  eval->add_option("--dataset", e_dataset)->required();
  eval->add_option("--catalog", e_catalog)->required();
  eval->add_option("--provider", e_provider)->required();
  eval->add_option("--domain", e_domain, "in|cross");
  eval->add_option("--activity-top-k", e_act_k);
  eval->add_option("--demo-top-k", e_demo_k);
  eval->add_option("--report", e_report, "write JSON report here");
  eval->add_option("--jobs", e_jobs);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) ? 2 : 0;
  }

  try {
    if (*compile) {
      ir::Program p = ir::parse_ir(read_input(c_in));
      write_output(c_out, bpmn::serialize_bpmn(py2bpmn::compile(p)));
    } else if (*decompile) {
      bpmn::Document doc = bpmn::parse_bpmn(read_input(d_in));
      write_output(d_out, ir::print_ir(bpmn2py::decompile(doc)) + "\n");
    } else if (*diff) {
      ir::Program base = ir::parse_ir(read_input(f_base));
      ir::Program target = ir::parse_ir(read_input(f_target));
      flow_diff::EditScript script = flow_diff::diff_ir(base, target);
      write_output("", f_json ? flow_diff::to_json(script).dump(2)
                              : describe_script(script));
    } else if (*patch) {
      bpmn::Document doc = bpmn::parse_bpmn(read_input(p_bpmn));
      flow_diff::EditScript script = flow_diff::script_from_json(
          nlohmann::json::parse(read_input(p_script)));
      write_output(p_out,
                   bpmn::serialize_bpmn(flow_diff::patch_bpmn(doc, script)));
    } else if (*retrieve) {
      retrieval::Catalog catalog =
          retrieval::load_catalog(read_input(r_catalog));
      retrieval::RetrieverConfig cfg;
      cfg.kind = parse_retriever(r_kind);
      cfg.top_k = r_top_k;
      std::vector<std::string> descriptions;
      for (const retrieval::ActivityEntry& e : catalog)
        descriptions.push_back(e.description);
      retrieval::TfidfBackend backend(descriptions);
      if (cfg.kind == retrieval::RetrieverKind::similarity_backend)
        cfg.backend = &backend;
      std::optional<ir::Program> prior;
      if (!r_prior.empty()) prior = ir::parse_ir(read_input(r_prior));
      std::ostringstream out;
      for (const retrieval::ActivityEntry& e : retrieval::retrieve_activities(
               r_utt, prior ? &*prior : nullptr, catalog, cfg))
        out << e.id << "\t" << e.description << "\n";
      write_output("", out.str());
    } else if (*generate) {
      retrieval::Catalog catalog =
          retrieval::load_catalog(read_input(g_catalog));
      std::vector<retrieval::Demonstration> demos =
          bench::as_demos(bench::load_dataset(g_demos));
      std::unique_ptr<pipeline::Provider> provider =
          make_provider(parse_provider(g_provider));
      pipeline::PipelineConfig cfg;
      cfg.activities.top_k = g_act_k;
      cfg.demos.top_k = g_demo_k;
      pipeline::RunOutcome outcome;
      if (!g_prior_bpmn.empty()) {
        bpmn::Document prior = bpmn::parse_bpmn(read_input(g_prior_bpmn));
        outcome = pipeline::run_update(g_utt, prior, catalog, demos, cfg,
                                       *provider);
      } else {
        outcome =
            pipeline::run_initial(g_utt, catalog, demos, cfg, *provider);
      }
      for (const pipeline::GroundedCall& g : outcome.generation.grounding)
        if (g.verdict == pipeline::Verdict::hallucinated)
          std::cerr << "warning: activity '" << g.callee
                    << "' is not in the catalog\n";
      write_output(g_out, bpmn::serialize_bpmn(outcome.document));
    } else if (*eval) {
      std::vector<bench::BenchCase> cases = bench::load_dataset(e_dataset);
      retrieval::Catalog catalog =
          retrieval::load_catalog(read_input(e_catalog));
      std::unique_ptr<pipeline::Provider> provider =
          make_provider(parse_provider(e_provider));
      bench::EvalConfig cfg;
      cfg.pipeline.activities.top_k = e_act_k;
      cfg.pipeline.demos.top_k = e_demo_k;
      cfg.jobs = std::max(1, e_jobs);
      cfg.provider_name = e_provider;
      if (e_domain == "cross")
        cfg.domain = bench::DomainMode::cross_domain;
      else if (e_domain != "in")
        throw CLI::ValidationError("domain", "must be 'in' or 'cross'");
      bench::EvalReport report = bench::run_eval(cases, catalog, cfg,
                                                 *provider);
      if (!e_report.empty()) write_output(e_report, report.to_json().dump(2));
      std::cout << report.to_text();
    }
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
