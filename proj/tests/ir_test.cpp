#include <catch2/catch_amalgamated.hpp>

#include "flowgen/ir.hpp"
#include "helpers.hpp"

using namespace flowgen;

TEST_CASE("parse_ir builds the loop worked example") {
  ir::Program p = ir::parse_ir(testutil::kLoopPriorIr);
  REQUIRE(p.statements.size() == 2);
  const auto* assign = std::get_if<ir::Assign>(&p.statements[0].node);
  REQUIRE(assign);
  CHECK(assign->target == "repositories");
  CHECK(assign->call.callee ==
        "GitHub_Repository__3_0_0__retrievewithwhere_Repository");
  const auto* loop = std::get_if<ir::For>(&p.statements[1].node);
  REQUIRE(loop);
  CHECK(loop->loop_var == "repo");
  CHECK(loop->iterable == "repositories");
  REQUIRE(loop->body.size() == 1);
  CHECK(std::holds_alternative<ir::Assign>(loop->body[0].node));
}

TEST_CASE("parse_ir rejects degenerate and malformed input") {
  CHECK_THROWS_AS(ir::parse_ir(""), ir::SyntaxError);
  CHECK_THROWS_AS(ir::parse_ir("  \n\n"), ir::SyntaxError);
  try {
    ir::parse_ir("x = f(");
    FAIL("expected SyntaxError");
  } catch (const ir::SyntaxError& e) {
    CHECK(e.span().line == 1);
  }
}

TEST_CASE("parse_ir rejects constructs outside the subset") {
  const char* bad[] = {
      "def f():\n  x = F()",
      "class A:\n  x = F()",
      "import os",
      "from os import path",
      "return x",
      "try:\n  x = F()",
      "raise E()",
      "with open() as f:\n  x = F()",
      "lambda: F()",
      "x = 1",
      "x = y",
      "x = F() + G()",
      "\tx = F()",          // tab indentation
      "if c:\n\tx = F()",   // tab indentation in body
      "if c:",              // empty block
      "for x in y:",        // empty block
      "x == F()",
      "F()()",
  };
  for (const char* src : bad) {
    INFO(src);
    CHECK_THROWS_AS(ir::parse_ir(src), ir::SyntaxError);
  }
}

TEST_CASE("parse_ir reports inconsistent dedent") {
  CHECK_THROWS_AS(ir::parse_ir("for x in y:\n    a = F()\n  b = G()"),
                  ir::SyntaxError);
}

TEST_CASE("elif desugars to else with a nested if") {
  ir::Program p =
      ir::parse_ir("if a:\n  x = F()\nelif b:\n  y = G()\nelse:\n  z = H()");
  REQUIRE(p.statements.size() == 1);
  const auto& outer = std::get<ir::If>(p.statements[0].node);
  REQUIRE(outer.else_body);
  REQUIRE(outer.else_body->size() == 1);
  const auto& inner = std::get<ir::If>((*outer.else_body)[0].node);
  CHECK(inner.condition == "b");
  REQUIRE(inner.else_body);
}

TEST_CASE("user_task requires exactly one string argument") {
  CHECK_NOTHROW(ir::parse_ir("user_task(\"Manager approval\")"));
  CHECK_THROWS_AS(ir::parse_ir("user_task()"), ir::SyntaxError);
  CHECK_THROWS_AS(ir::parse_ir("user_task(x)"), ir::SyntaxError);
  CHECK_THROWS_AS(ir::parse_ir("user_task(\"a\", \"b\")"), ir::SyntaxError);
}

TEST_CASE("print_ir canonicalizes spacing and indentation") {
  CHECK(ir::print_ir(ir::parse_ir("issue = GitHub_Issue__3_0_0__create_Issue()")) ==
        "issue = GitHub_Issue__3_0_0__create_Issue()");
  CHECK(ir::print_ir(ir::parse_ir("x  =  F( a ,  \"s\" , k = b )")) ==
        "x = F(a, \"s\", k=b)");
  CHECK(ir::print_ir(ir::parse_ir("for  r   in  rs:\n    x = F()")) ==
        "for r in rs:\n  x = F()");
}

TEST_CASE("print/parse round trip is a fixed point") {
  const char* corpus[] = {
      testutil::kLoopPriorIr,
      testutil::kLoopExpectedIr,
      testutil::kLinearIr,
      "user_task(\"review\")",
      "if total > 10:\n  a = F()\nelse:\n  user_task(\"escalate\")",
      "while pending:\n  item = Next_Item__1_0_0__retrieve_Item()",
      "x = F()\nif c:\n  for i in x:\n    y = G()\n  z = H()",
  };
  for (const char* src : corpus) {
    INFO(src);
    ir::Program once = ir::parse_ir(src);
    std::string printed = ir::print_ir(once);
    ir::Program twice = ir::parse_ir(printed);
    CHECK(once == twice);
    CHECK(ir::print_ir(twice) == printed);
  }
}

TEST_CASE("normalize_ir gives alpha-equivalence") {
  CHECK(ir::normalize_ir(ir::parse_ir("issue = F()")) ==
        ir::normalize_ir(ir::parse_ir("x = F()")));

  // gold output renames the loop-body variable; equality must survive that
  ir::Program renamed = ir::parse_ir(
      "repositories = GitHub_Repository__3_0_0__retrievewithwhere_Repository()\n"
      "for repo in repositories:\n"
      "  new_issue = GitHub_Issue__3_0_0__create_Issue()");
  CHECK(ir::normalize_ir(renamed) ==
        ir::normalize_ir(ir::parse_ir(testutil::kLoopExpectedIr)));
}

TEST_CASE("normalize_ir is idempotent and keeps activities") {
  const char* corpus[] = {
      testutil::kLoopPriorIr,
      testutil::kLinearIr,
      "x = F()\nfor i in x:\n  y = G()\n  user_task(\"check\")",
  };
  for (const char* src : corpus) {
    ir::Program p = ir::parse_ir(src);
    ir::Program n = ir::normalize_ir(p);
    CHECK(ir::normalize_ir(n) == n);
    CHECK(ir::collect_activities(n) == ir::collect_activities(p));
  }
}

TEST_CASE("collect_activities lists callees in order, user_task excluded") {
  std::vector<std::string> acts =
      ir::collect_activities(ir::parse_ir(testutil::kLoopExpectedIr));
  REQUIRE(acts ==
          std::vector<std::string>{
              "GitHub_Repository__3_0_0__retrievewithwhere_Repository",
              "GitHub_Issue__3_0_0__create_Issue"});

  CHECK(ir::collect_activities(ir::parse_ir("user_task(\"approve\")")).empty());

  CHECK(ir::collect_activities(ir::parse_ir("F()\nF()")) ==
        std::vector<std::string>{"F", "F"});
}
