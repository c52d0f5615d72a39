#include <catch2/catch_amalgamated.hpp>

#include "flowgen/bpmn.hpp"
#include "flowgen/compile.hpp"
#include "flowgen/ir.hpp"
#include "helpers.hpp"

using namespace flowgen;

TEST_CASE("parse_bpmn reads a default-namespace linear listing") {
  bpmn::Document doc =
      bpmn::parse_bpmn(testutil::slurp(testutil::data_path("linear_flow.bpmn")));
  REQUIRE(doc.scope.nodes.size() == 4);
  std::vector<std::string> names;
  for (const bpmn::Node& n : doc.scope.nodes)
    if (n.kind == bpmn::NodeKind::Task) names.push_back(n.name);
  CHECK(names == std::vector<std::string>{
                     "Jira_Issue__2_0_0__create_Issue",
                     "GitHub_Repository__3_0_0__create_Repository"});
  CHECK(doc.scope.flows.size() == 3);
  // DI carried over
  CHECK(doc.diagram.shapes.count("task_2"));
  CHECK(doc.diagram.shapes.at("task_3") == bpmn::Bounds{460, 80, 100, 80});
}

TEST_CASE("parse_bpmn reads a prefixed loop listing") {
  bpmn::Document doc =
      bpmn::parse_bpmn(testutil::slurp(testutil::data_path("loop_prior.bpmn")));
  const bpmn::Node* sub = doc.scope.find("Activity_0n3dkn6");
  REQUIRE(sub);
  CHECK(sub->kind == bpmn::NodeKind::SubProcess);
  CHECK(sub->loop == bpmn::LoopKind::MultiInstanceSequential);
  const bpmn::TextAnnotation* ann = doc.annotation_for("Activity_0n3dkn6");
  REQUIRE(ann);
  CHECK(ann->text == "for repo in repositories");
}

TEST_CASE("serialize/parse round trip is the identity") {
  for (const char* fixture : {"linear_flow.bpmn", "loop_prior.bpmn",
                              "loop_output.bpmn"}) {
    INFO(fixture);
    bpmn::Document doc =
        bpmn::parse_bpmn(testutil::slurp(testutil::data_path(fixture)));
    bpmn::Document again = bpmn::parse_bpmn(bpmn::serialize_bpmn(doc));
    CHECK(again == doc);
  }
  bpmn::Document compiled =
      py2bpmn::compile(ir::parse_ir(testutil::kLoopExpectedIr));
  CHECK(bpmn::parse_bpmn(bpmn::serialize_bpmn(compiled)) == compiled);
}

TEST_CASE("serialize_bpmn rejects an empty process") {
  bpmn::Document empty;
  CHECK_THROWS_AS(bpmn::serialize_bpmn(empty), bpmn::ValidationError);
}

TEST_CASE("three-task linear document serializes to the expected shape") {
  std::string xml =
      bpmn::serialize_bpmn(py2bpmn::compile(ir::parse_ir(testutil::kLinearIr)));
  auto count = [&](const std::string& needle) {
    size_t n = 0;
    for (size_t at = xml.find(needle); at != std::string::npos;
         at = xml.find(needle, at + 1))
      ++n;
    return n;
  };
  CHECK(count("<bpmn:task ") == 3);
  CHECK(count("<bpmn:sequenceFlow ") == 4);
  CHECK(count("<bpmn:startEvent ") == 1);
  CHECK(count("<bpmn:endEvent ") == 1);
}

TEST_CASE("for-loop document carries loop characteristics and annotation") {
  std::string xml = bpmn::serialize_bpmn(
      py2bpmn::compile(ir::parse_ir("xs = F()\nfor x in xs:\n  y = G()")));
  CHECK(xml.find("multiInstanceLoopCharacteristics isSequential=\"true\"") !=
        std::string::npos);
  CHECK(xml.find("textAnnotation") != std::string::npos);
  CHECK(xml.find("for x in xs") != std::string::npos);
}

TEST_CASE("parse_bpmn names unsupported elements") {
  const char* xml =
      "<?xml version=\"1.0\"?>"
      "<definitions xmlns=\"http://www.omg.org/spec/BPMN/20100524/MODEL\">"
      "<process id=\"P\"><startEvent id=\"s\"/><endEvent id=\"e\"/>"
      "<parallelGateway id=\"g\"/>"
      "<sequenceFlow id=\"f1\" sourceRef=\"s\" targetRef=\"g\"/>"
      "<sequenceFlow id=\"f2\" sourceRef=\"g\" targetRef=\"e\"/>"
      "</process></definitions>";
  try {
    bpmn::parse_bpmn(xml);
    FAIL("expected UnsupportedElement");
  } catch (const bpmn::UnsupportedElement& e) {
    CHECK(std::string(e.what()).find("parallelGateway") != std::string::npos);
  }
}

TEST_CASE("parse_bpmn reports malformed XML") {
  CHECK_THROWS_AS(bpmn::parse_bpmn("<definitions><process>"),
                  bpmn::ParseError);
  CHECK_THROWS_AS(bpmn::parse_bpmn("not xml at all"), bpmn::ParseError);
}

TEST_CASE("parse_bpmn ignores vendor attributes and labels") {
  // exporter metadata, BPMNLabel blocks, xsi namespace: all tolerated
  bpmn::Document doc =
      bpmn::parse_bpmn(testutil::slurp(testutil::data_path("loop_output.bpmn")));
  CHECK(doc.process_id == "Process_1j6betq");
  CHECK_FALSE(doc.scope.nodes.empty());
}
