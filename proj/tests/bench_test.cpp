#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "flowgen/bench.hpp"
#include "helpers.hpp"

using namespace flowgen;

TEST_CASE("load_case reads the documented case shape") {
  bench::BenchCase c =
      bench::load_case(testutil::dataset_dir() + "/uid_97.yaml");
  CHECK(c.uid == 97);
  CHECK(c.tags.count("conditional_update") == 1);
  REQUIRE(c.prior_sequence.has_value());
  REQUIRE(c.prior_bpmn.has_value());
  CHECK(ir::normalize_ir(*c.prior_sequence) ==
        ir::normalize_ir(ir::parse_ir(testutil::kLoopPriorIr)));
  CHECK(ir::normalize_ir(c.expected_sequence) ==
        ir::normalize_ir(ir::parse_ir(testutil::kLoopExpectedIr)));
}

TEST_CASE("load_dataset finds all 101 cases") {
  std::vector<bench::BenchCase> cases =
      bench::load_dataset(testutil::dataset_dir());
  CHECK(cases.size() == 101);
}

TEST_CASE("a missing BPMN ref is a dataset error naming the path") {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "flowgen_bench_test";
  fs::create_directories(dir);
  std::ofstream(dir / "uid_1.yaml") <<
      "_metadata:\n  tags: [linear]\n  uid: 1\n"
      "input:\n  utterance: do a thing\n"
      "expected_output:\n"
      "  sequence:\n    - x = F()\n"
      "  bpmn:\n    $ref: \"output/uid_1_output.bpmn\"\n";
  try {
    bench::load_dataset(dir.string());
    FAIL("expected DatasetError");
  } catch (const bench::DatasetError& e) {
    CHECK(std::string(e.what()).find("uid_1_output.bpmn") !=
          std::string::npos);
  }
  fs::remove_all(dir);
}

TEST_CASE("exact_match compares normalized programs") {
  ir::Program gold = ir::parse_ir(testutil::kLoopExpectedIr);
  CHECK(bench::exact_match(gold, gold) == 1);
  // alpha-rename still matches
  ir::Program renamed = ir::parse_ir(
      "repositories = GitHub_Repository__3_0_0__retrievewithwhere_Repository()\n"
      "for repo in repositories:\n"
      "  new_issue = GitHub_Issue__3_0_0__create_Issue()");
  CHECK(bench::exact_match(renamed, gold) == 1);
  // an extra trailing statement does not
  ir::Program longer = ir::parse_ir(std::string(testutil::kLoopExpectedIr) +
                                    "\nextra = Extra__1_0_0__create_Extra()");
  CHECK(bench::exact_match(longer, gold) == 0);
}

TEST_CASE("hallucination_rate") {
  std::set<std::string> catalog{"A", "B"};
  CHECK(bench::hallucination_rate(ir::parse_ir("x = A()\ny = B()"), catalog) ==
        0.0);
  CHECK(bench::hallucination_rate(ir::parse_ir("x = A()\ny = Z()"), catalog) ==
        0.5);
  CHECK(bench::hallucination_rate(ir::parse_ir("user_task(\"manual\")"),
                                  catalog) == 0.0);
}

TEST_CASE("syntax_f1") {
  ir::Program gold = ir::parse_ir("a = F()\nb = G()");
  CHECK(bench::syntax_f1(gold, gold) == 1.0);
  // half the gold, all of it right: P=1, R=0.5, F1=2/3
  CHECK(bench::syntax_f1(ir::parse_ir("a = F()"), gold) ==
        Catch::Approx(2.0 / 3.0));
  CHECK(bench::syntax_f1(ir::parse_ir("x = X()\ny = Y()"), gold) == 0.0);
  CHECK(bench::syntax_f1(ir::Program{}, ir::Program{}) == 1.0);
  // nesting matters: the same call at a different depth is a different feature
  CHECK(bench::syntax_f1(ir::parse_ir("for i in xs:\n  a = F()"),
                         ir::parse_ir("a = F()")) < 1.0);
}

TEST_CASE("exact match implies perfect syntax F1") {
  const char* corpus[] = {
      testutil::kLoopExpectedIr,
      testutil::kLinearIr,
      "if c:\n  a = F()\nelse:\n  user_task(\"review\")",
  };
  for (const char* src : corpus) {
    ir::Program p = ir::parse_ir(src);
    CHECK(bench::syntax_f1(p, p) == 1.0);
  }
}

TEST_CASE("mock table eval: one wrong answer of 101") {
  std::vector<bench::BenchCase> cases =
      bench::load_dataset(testutil::dataset_dir());
  retrieval::Catalog catalog =
      retrieval::load_catalog(testutil::slurp(testutil::catalog_path()));
  std::map<int, std::string> table;
  for (const auto& [uid, gold] : bench::oracle_table(cases))
    table[uid] = "```python\n" + gold + "\n```";
  table[97] = "```python\nwrong = Jira_Issue__2_0_0__create_Issue()\n```";

  pipeline::MockTableProvider provider(table);
  bench::EvalConfig cfg;
  cfg.jobs = 4;
  cfg.provider_name = "mock-table";
  bench::EvalReport report = bench::run_eval(cases, catalog, cfg, provider);
  CHECK(report.cases.size() == 101);
  CHECK(report.errored == 0);
  CHECK(report.mean_exact == Catch::Approx(100.0 / 101.0));
}

TEST_CASE("eval reports are deterministic") {
  std::vector<bench::BenchCase> cases =
      bench::load_dataset(testutil::dataset_dir());
  retrieval::Catalog catalog =
      retrieval::load_catalog(testutil::slurp(testutil::catalog_path()));
  pipeline::MockOracleProvider provider(bench::oracle_table(cases));
  bench::EvalConfig cfg;
  cfg.jobs = 4;
  bench::EvalReport a = bench::run_eval(cases, catalog, cfg, provider);
  bench::EvalReport b = bench::run_eval(cases, catalog, cfg, provider);
  CHECK(a.to_json() == b.to_json());
  CHECK(a.to_text() == b.to_text());
}

TEST_CASE("cross-domain mode still evaluates every case") {
  std::vector<bench::BenchCase> cases =
      bench::load_dataset(testutil::dataset_dir());
  retrieval::Catalog catalog =
      retrieval::load_catalog(testutil::slurp(testutil::catalog_path()));
  pipeline::MockOracleProvider provider(bench::oracle_table(cases));
  bench::EvalConfig cfg;
  cfg.domain = bench::DomainMode::cross_domain;
  cfg.jobs = 4;
  bench::EvalReport report = bench::run_eval(cases, catalog, cfg, provider);
  CHECK(report.cases.size() == 101);
  CHECK(report.errored == 0);
  CHECK(report.mean_exact == 1.0);  // oracle still answers with gold
}

TEST_CASE("per-tag aggregation covers every case") {
  std::vector<bench::BenchCase> cases =
      bench::load_dataset(testutil::dataset_dir());
  retrieval::Catalog catalog =
      retrieval::load_catalog(testutil::slurp(testutil::catalog_path()));
  pipeline::MockOracleProvider provider(bench::oracle_table(cases));
  bench::EvalConfig cfg;
  cfg.jobs = 4;
  nlohmann::json report =
      bench::run_eval(cases, catalog, cfg, provider).to_json();
  size_t tagged = 0;
  for (const auto& [tag, agg] : report["tags"].items())
    tagged += agg["cases"].get<size_t>();
  size_t expected = 0;
  for (const bench::BenchCase& c : cases) expected += c.tags.size();
  CHECK(tagged == expected);
  CHECK(report["note"].get<std::string>().find("feature definition") !=
        std::string::npos);
}

TEST_CASE("load_mock_table reads a uid-to-text YAML map") {
  namespace fs = std::filesystem;
  fs::path file = fs::temp_directory_path() / "flowgen_mock_table.yaml";
  std::ofstream(file) << "3: |\n  hello\n  world\n7: plain\n";
  std::map<int, std::string> table = bench::load_mock_table(file.string());
  REQUIRE(table.size() == 2);
  CHECK(table[3] == "hello\nworld\n");
  CHECK(table[7] == "plain");
  fs::remove(file);
}
