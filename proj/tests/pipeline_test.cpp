#include <catch2/catch_amalgamated.hpp>

#include "flowgen/bench.hpp"
#include "flowgen/pipeline.hpp"
#include "helpers.hpp"

using namespace flowgen;

namespace {

retrieval::Catalog small_catalog() {
  return {
      {"GitHub_Issue__3_0_0__create_Issue", "Create a GitHub issue"},
      {"Slack_Message__1_0_0__create_Message", "Post a Slack message"},
  };
}

std::vector<retrieval::Demonstration> small_demos() {
  retrieval::Demonstration initial;
  initial.utterance = "post a message to slack";
  initial.expected = ir::parse_ir("m = Slack_Message__1_0_0__create_Message()");
  retrieval::Demonstration update;
  update.utterance = "then open an issue";
  update.prior_sequence =
      ir::parse_ir("m = Slack_Message__1_0_0__create_Message()");
  update.expected = ir::parse_ir(
      "m = Slack_Message__1_0_0__create_Message()\n"
      "i = GitHub_Issue__3_0_0__create_Issue()");
  return {initial, update};
}

}  // namespace

TEST_CASE("assemble_prompt includes the prior only when given") {
  retrieval::Catalog catalog = small_catalog();
  std::vector<retrieval::ActivityEntry> acts(catalog.begin(), catalog.end());

  pipeline::PromptBundle no_prior =
      pipeline::assemble_prompt("make a flow", acts, {}, nullptr);
  CHECK_FALSE(no_prior.prior_block.has_value());

  ir::Program prior = ir::parse_ir("i = GitHub_Issue__3_0_0__create_Issue()");
  pipeline::PromptBundle with_prior =
      pipeline::assemble_prompt("add a step", acts, {}, &prior);
  REQUIRE(with_prior.prior_block.has_value());
  CHECK(with_prior.render().find(ir::print_ir(prior)) != std::string::npos);
}

TEST_CASE("assemble_prompt keeps retrieval order and counts") {
  retrieval::Catalog catalog = small_catalog();
  std::vector<retrieval::ActivityEntry> acts(catalog.begin(), catalog.end());
  pipeline::PromptBundle bundle =
      pipeline::assemble_prompt("x", acts, small_demos(), nullptr);
  size_t first = bundle.activity_block.find(acts[0].id);
  size_t second = bundle.activity_block.find(acts[1].id);
  REQUIRE(first != std::string::npos);
  REQUIRE(second != std::string::npos);
  CHECK(first < second);
  // one "- " line per activity
  size_t lines = 0;
  for (size_t at = bundle.activity_block.find("- ");
       at != std::string::npos; at = bundle.activity_block.find("- ", at + 1))
    ++lines;
  CHECK(lines == acts.size());
  CHECK(bundle.demo_block.find("post a message to slack") != std::string::npos);
  CHECK(bundle.demo_block.find("then open an issue") != std::string::npos);
}

TEST_CASE("prompt text is frozen") {
  retrieval::Catalog catalog = small_catalog();
  std::vector<retrieval::ActivityEntry> acts(catalog.begin(), catalog.end());
  ir::Program prior = ir::parse_ir("i = GitHub_Issue__3_0_0__create_Issue()");
  pipeline::PromptBundle bundle = pipeline::assemble_prompt(
      "notify the team about new issues", acts, small_demos(), &prior);
  std::string golden = testutil::slurp(testutil::data_path("prompt_golden.txt"));
  REQUIRE_FALSE(golden.empty());
  CHECK(bundle.render() == golden);
}

TEST_CASE("extract_code takes the first fenced block") {
  CHECK(pipeline::extract_code(
            "```python\nissue = GitHub_Issue__3_0_0__create_Issue()\n```") ==
        "issue = GitHub_Issue__3_0_0__create_Issue()\n");
  CHECK_THROWS_AS(pipeline::extract_code("Sorry, I cannot help with that."),
                  pipeline::ExtractionError);
  // bare valid code passes through
  CHECK(pipeline::extract_code("x = F()") == "x = F()");
}

TEST_CASE("generate_ir parses and grounds the response") {
  pipeline::MockTableProvider provider(
      {{1, "```python\nissue = GitHub_Issue__3_0_0__create_Issue()\n"
           "x = Made_Up__9_9_9__delete_Everything()\n```"}});
  pipeline::PromptBundle bundle;
  pipeline::GenerationResult result =
      pipeline::generate_ir(bundle, provider, small_catalog(), 1);
  REQUIRE(result.program.statements.size() == 2);
  REQUIRE(result.grounding.size() == 2);
  CHECK(result.grounding[0].verdict == pipeline::Verdict::in_catalog);
  CHECK(result.grounding[1].verdict == pipeline::Verdict::hallucinated);
  CHECK(result.has_hallucination());
  std::set<std::string> ids{"GitHub_Issue__3_0_0__create_Issue"};
  CHECK(bench::hallucination_rate(result.program, ids) == 0.5);
}

TEST_CASE("generate_ir on a one-line reply") {
  pipeline::MockTableProvider provider(
      {{7, "```python\nissue = GitHub_Issue__3_0_0__create_Issue()\n```"}});
  pipeline::GenerationResult result =
      pipeline::generate_ir({}, provider, small_catalog(), 7);
  REQUIRE(result.program.statements.size() == 1);
  CHECK_FALSE(result.has_hallucination());
}

TEST_CASE("every call receives exactly one grounding verdict") {
  pipeline::MockTableProvider provider(
      {{2, "```python\nif c:\n  a = GitHub_Issue__3_0_0__create_Issue()\n"
           "else:\n  user_task(\"by hand\")\nxs = Unknown__1_0_0__list_X()\n"
           "for x in xs:\n  m = Slack_Message__1_0_0__create_Message()\n```"}});
  pipeline::GenerationResult result =
      pipeline::generate_ir({}, provider, small_catalog(), 2);
  REQUIRE(result.grounding.size() == 4);
  int user_tasks = 0, hallucinated = 0, grounded = 0;
  for (const pipeline::GroundedCall& g : result.grounding) {
    if (g.verdict == pipeline::Verdict::user_task) ++user_tasks;
    if (g.verdict == pipeline::Verdict::hallucinated) ++hallucinated;
    if (g.verdict == pipeline::Verdict::in_catalog) ++grounded;
  }
  CHECK(user_tasks == 1);
  CHECK(hallucinated == 1);
  CHECK(grounded == 2);
}

TEST_CASE("run_initial compiles what the provider returns") {
  std::string gold = "m = Slack_Message__1_0_0__create_Message()";
  pipeline::MockTableProvider provider({{3, "```python\n" + gold + "\n```"}});
  pipeline::PipelineConfig cfg;
  pipeline::RunOutcome outcome = pipeline::run_initial(
      "post a message", small_catalog(), small_demos(), cfg, provider, 3);
  CHECK(py2bpmn::structural_equal(outcome.document,
                                  py2bpmn::compile(ir::parse_ir(gold))));
}

TEST_CASE("run_update with an echoing provider keeps the document identical") {
  bpmn::Document prior_doc =
      bpmn::parse_bpmn(testutil::slurp(testutil::data_path("loop_prior.bpmn")));
  std::string echoed = ir::print_ir(bpmn2py::decompile(prior_doc));
  pipeline::MockTableProvider provider({{4, "```python\n" + echoed + "```"}});
  pipeline::PipelineConfig cfg;
  pipeline::RunOutcome outcome = pipeline::run_update(
      "no change please", prior_doc, small_catalog(), small_demos(), cfg,
      provider, 4);
  CHECK(outcome.document == prior_doc);
}

TEST_CASE("run_update applies the worked-example edit") {
  bpmn::Document prior_doc =
      bpmn::parse_bpmn(testutil::slurp(testutil::data_path("loop_prior.bpmn")));
  pipeline::MockTableProvider provider(
      {{97, std::string("```python\n") + testutil::kLoopExpectedIr + "\n```"}});
  retrieval::Catalog catalog = {
      {"GitHub_Repository__3_0_0__retrievewithwhere_Repository",
       "Retrieve repositories matching a filter"},
      {"GitHub_Issue__3_0_0__retrievewithwhere_Issue",
       "Retrieve issues matching a filter"},
      {"GitHub_Issue__3_0_0__create_Issue", "Create a GitHub issue"},
  };
  pipeline::PipelineConfig cfg;
  pipeline::RunOutcome outcome = pipeline::run_update(
      "Instead of retrieving all the issues just create a new issue in each "
      "repo",
      prior_doc, catalog, small_demos(), cfg, provider, 97);
  CHECK(py2bpmn::structural_equal(
      outcome.document,
      py2bpmn::compile(ir::parse_ir(testutil::kLoopExpectedIr))));
  CHECK(outcome.document.scope.find("Activity_0n3dkn6") != nullptr);
  CHECK_FALSE(outcome.generation.has_hallucination());
}

TEST_CASE("hallucinated activities warn but do not block the patch") {
  bpmn::Document prior_doc =
      py2bpmn::compile(ir::parse_ir("m = Slack_Message__1_0_0__create_Message()"));
  pipeline::MockTableProvider provider(
      {{5, "```python\nm = Slack_Message__1_0_0__create_Message()\n"
           "y = Fabricated__0_0_1__do_Thing()\n```"}});
  pipeline::PipelineConfig cfg;
  pipeline::RunOutcome outcome =
      pipeline::run_update("add a made-up step", prior_doc, small_catalog(),
                           small_demos(), cfg, provider, 5);
  CHECK(outcome.generation.has_hallucination());
  // the patch still landed
  CHECK(py2bpmn::structural_equal(
      outcome.document,
      py2bpmn::compile(ir::parse_ir(
          "m = Slack_Message__1_0_0__create_Message()\n"
          "y = Fabricated__0_0_1__do_Thing()"))));
}

TEST_CASE("prose responses surface as ExtractionError") {
  pipeline::MockTableProvider provider({{6, "I would suggest a loop here."}});
  CHECK_THROWS_AS(pipeline::generate_ir({}, provider, small_catalog(), 6),
                  pipeline::ExtractionError);
}

TEST_CASE("providers are deterministic: equal prompts, equal outputs") {
  retrieval::Catalog catalog = small_catalog();
  std::vector<retrieval::ActivityEntry> acts(catalog.begin(), catalog.end());
  pipeline::PromptBundle a =
      pipeline::assemble_prompt("u", acts, small_demos(), nullptr);
  pipeline::PromptBundle b =
      pipeline::assemble_prompt("u", acts, small_demos(), nullptr);
  CHECK(a.render() == b.render());
}
