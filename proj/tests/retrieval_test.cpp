#include <catch2/catch_amalgamated.hpp>

#include <algorithm>

#include "flowgen/ir.hpp"
#include "flowgen/retrieval.hpp"
#include "helpers.hpp"

using namespace flowgen;

TEST_CASE("load_catalog reads the documented entry shape") {
  retrieval::Catalog c = retrieval::load_catalog(
      R"([{"id": "Jira_Issue__2_0_0__retrievewithwhere_Issue",
           "description": "Retrieve all Jira issues"}])");
  REQUIRE(c.size() == 1);
  CHECK(c[0].id == "Jira_Issue__2_0_0__retrievewithwhere_Issue");
  CHECK(c[0].description == "Retrieve all Jira issues");
}

TEST_CASE("load_catalog accepts the empty catalog") {
  CHECK(retrieval::load_catalog("[]").empty());
}

TEST_CASE("load_catalog rejects duplicates and missing fields") {
  CHECK_THROWS_AS(retrieval::load_catalog(
                      R"([{"id": "A", "description": "x"},
                          {"id": "A", "description": "y"}])"),
                  retrieval::CatalogError);
  CHECK_THROWS_AS(retrieval::load_catalog(R"([{"id": "A"}])"),
                  retrieval::CatalogError);
  CHECK_THROWS_AS(retrieval::load_catalog(R"([{"description": "x"}])"),
                  retrieval::CatalogError);
}

TEST_CASE("levenshtein agrees with a brute-force oracle") {
  CHECK(retrieval::levenshtein("kitten", "sitting") == 3);
  CHECK(retrieval::levenshtein("", "abc") == 3);
  CHECK(retrieval::levenshtein("same", "same") == 0);

  // exhaustive check over short strings from a 2-letter alphabet
  std::function<size_t(const std::string&, const std::string&)> slow =
      [&](const std::string& a, const std::string& b) -> size_t {
    if (a.empty()) return b.size();
    if (b.empty()) return a.size();
    size_t sub = slow(a.substr(1), b.substr(1)) + (a[0] != b[0] ? 1 : 0);
    size_t del = slow(a.substr(1), b) + 1;
    size_t ins = slow(a, b.substr(1)) + 1;
    return std::min({sub, del, ins});
  };
  std::vector<std::string> words{""};
  for (int len = 0; len < 3; ++len) {
    std::vector<std::string> next;
    for (const std::string& w : words)
      if (static_cast<int>(w.size()) == len)
        for (char c : {'a', 'b'}) next.push_back(w + c);
    words.insert(words.end(), next.begin(), next.end());
  }
  for (const std::string& a : words)
    for (const std::string& b : words) {
      INFO('"' << a << "\" vs \"" << b << '"');
      CHECK(retrieval::levenshtein(a, b) == slow(a, b));
    }
}

namespace {

retrieval::Catalog tiny_catalog() {
  return {
      {"GitHub_Issue__3_0_0__create_Issue", "Create a GitHub issue"},
      {"Jira_Issue__2_0_0__retrievewithwhere_Issue", "Retrieve all Jira issues"},
      {"Slack_Message__1_0_0__create_Message", "Post a Slack message"},
      {"Stripe_Refund__1_0_0__create_Refund", "Issue a Stripe refund"},
  };
}

}  // namespace

TEST_CASE("an exact description match ranks first under edit distance") {
  retrieval::RetrieverConfig cfg;
  cfg.top_k = 4;
  std::vector<retrieval::ActivityEntry> out = retrieval::retrieve_activities(
      "Retrieve all Jira issues", nullptr, tiny_catalog(), cfg);
  REQUIRE_FALSE(out.empty());
  CHECK(out[0].id == "Jira_Issue__2_0_0__retrievewithwhere_Issue");
}

TEST_CASE("activities from the prior workflow are force-included") {
  retrieval::RetrieverConfig cfg;
  cfg.top_k = 1;  // tight budget: only the forced entry fits
  ir::Program prior = ir::parse_ir("x = GitHub_Issue__3_0_0__create_Issue()");
  std::vector<retrieval::ActivityEntry> out = retrieval::retrieve_activities(
      "Post a Slack message", &prior, tiny_catalog(), cfg);
  REQUIRE(out.size() == 1);
  CHECK(out[0].id == "GitHub_Issue__3_0_0__create_Issue");
}

TEST_CASE("tfidf backend ranks the identical description first") {
  retrieval::Catalog catalog = tiny_catalog();
  std::vector<std::string> corpus;
  for (const auto& e : catalog) corpus.push_back(e.description);
  retrieval::TfidfBackend backend(corpus);
  retrieval::RetrieverConfig cfg;
  cfg.kind = retrieval::RetrieverKind::similarity_backend;
  cfg.backend = &backend;
  cfg.top_k = 4;
  std::vector<retrieval::ActivityEntry> out = retrieval::retrieve_activities(
      "Issue a Stripe refund", nullptr, catalog, cfg);
  REQUIRE_FALSE(out.empty());
  CHECK(out[0].id == "Stripe_Refund__1_0_0__create_Refund");
}

TEST_CASE("demo shortlist partitions on prior presence") {
  retrieval::Demonstration with_prior;
  with_prior.utterance = "add a step";
  with_prior.prior_sequence = ir::parse_ir("x = F()");
  with_prior.expected = ir::parse_ir("x = F()\ny = G()");
  retrieval::Demonstration without_prior;
  without_prior.utterance = "make a flow";
  without_prior.expected = ir::parse_ir("z = H()");
  std::vector<retrieval::Demonstration> pool{with_prior, without_prior};

  retrieval::RetrieverConfig cfg;
  cfg.top_k = 5;
  std::vector<retrieval::Demonstration> update =
      retrieval::retrieve_demos("add a step", true, pool, cfg);
  REQUIRE(update.size() == 1);
  CHECK(update[0].prior_sequence.has_value());

  std::vector<retrieval::Demonstration> fresh =
      retrieval::retrieve_demos("make a flow", false, pool, cfg);
  REQUIRE(fresh.size() == 1);
  CHECK_FALSE(fresh[0].prior_sequence.has_value());
}

TEST_CASE("top_k larger than the pool returns the whole pool") {
  retrieval::Demonstration d;
  d.utterance = "one";
  d.expected = ir::parse_ir("x = F()");
  retrieval::RetrieverConfig cfg;
  cfg.top_k = 50;
  CHECK(retrieval::retrieve_demos("anything", false, {d}, cfg).size() == 1);

  cfg.top_k = 100;
  CHECK(retrieval::retrieve_activities("anything", nullptr, tiny_catalog(), cfg)
            .size() == tiny_catalog().size());
}

TEST_CASE("an identical demo utterance ranks first") {
  std::vector<retrieval::Demonstration> pool;
  for (const char* u : {"create a jira ticket", "archive old repos",
                        "send the weekly report"}) {
    retrieval::Demonstration d;
    d.utterance = u;
    d.expected = ir::parse_ir("x = F()");
    pool.push_back(d);
  }
  retrieval::RetrieverConfig cfg;
  cfg.top_k = 3;
  std::vector<retrieval::Demonstration> out =
      retrieval::retrieve_demos("send the weekly report", false, pool, cfg);
  REQUIRE_FALSE(out.empty());
  CHECK(out[0].utterance == "send the weekly report");
}

TEST_CASE("activities_recall") {
  retrieval::Catalog c = tiny_catalog();
  std::set<std::string> gold{"GitHub_Issue__3_0_0__create_Issue",
                             "Slack_Message__1_0_0__create_Message"};
  // superset of gold
  CHECK(retrieval::activities_recall({c.begin(), c.end()}, gold) == 1.0);
  // half of gold
  CHECK(retrieval::activities_recall({c[0]}, gold) == 0.5);
  // empty gold counts as full recall
  CHECK(retrieval::activities_recall({}, {}) == 1.0);
}

TEST_CASE("recall is monotone in top_k and rankings are deterministic") {
  retrieval::Catalog catalog = tiny_catalog();
  std::set<std::string> gold{"GitHub_Issue__3_0_0__create_Issue"};
  double prev = -1.0;
  for (int k : {1, 2, 3, 4}) {
    retrieval::RetrieverConfig cfg;
    cfg.top_k = k;
    std::vector<retrieval::ActivityEntry> a = retrieval::retrieve_activities(
        "create an issue on github", nullptr, catalog, cfg);
    std::vector<retrieval::ActivityEntry> b = retrieval::retrieve_activities(
        "create an issue on github", nullptr, catalog, cfg);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) CHECK(a[i].id == b[i].id);
    double r = retrieval::activities_recall(a, gold);
    CHECK(r >= prev);
    prev = r;
  }
}
