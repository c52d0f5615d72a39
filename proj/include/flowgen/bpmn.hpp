#pragma once

// In-memory BPMN 2.0 model restricted to the vocabulary the pipeline emits:
// start/end events, task, userTask, subProcess with loop characteristics,
// exclusiveGateway, sequenceFlow, textAnnotation, association, plus the
// diagram-interchange section. Parses both default-namespace and prefixed
// documents; serializes the prefixed form.

#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "flowgen/xml.hpp"

namespace flowgen::bpmn {

class ParseError : public std::runtime_error {
 public:
  ParseError(std::string path, const std::string& message)
      : std::runtime_error(path + ": " + message), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

class UnsupportedElement : public std::runtime_error {
 public:
  explicit UnsupportedElement(const std::string& element)
      : std::runtime_error("unsupported BPMN element <" + element + ">"),
        element_(element) {}
  const std::string& element() const { return element_; }

 private:
  std::string element_;
};

class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& message)
      : std::runtime_error(message) {}
};

struct Bounds {
  double x = 0, y = 0, width = 0, height = 0;
  friend bool operator==(const Bounds&, const Bounds&) = default;
};

struct Waypoint {
  double x = 0, y = 0;
  friend bool operator==(const Waypoint&, const Waypoint&) = default;
};

enum class NodeKind {
  StartEvent,
  EndEvent,
  Task,
  UserTask,
  SubProcess,
  GatewaySplit,
  GatewayJoin,
};

enum class LoopKind { None, MultiInstanceSequential, StandardLoop };

struct SequenceFlow {
  std::string id;
  std::string source;
  std::string target;
  std::optional<std::string> condition;
  friend bool operator==(const SequenceFlow&, const SequenceFlow&) = default;
};

struct Node;

struct Scope {
  std::vector<Node> nodes;
  std::vector<SequenceFlow> flows;

  const Node* find(std::string_view id) const;
  Node* find(std::string_view id);
};

bool operator==(const Node& a, const Node& b);

struct Node {
  std::string id;
  NodeKind kind = NodeKind::Task;
  std::string name;                     // task/userTask activity name
  LoopKind loop = LoopKind::None;       // SubProcess only
  std::string default_flow;             // GatewaySplit only
  Scope children;                       // SubProcess only
};

inline bool operator==(const Scope& a, const Scope& b) {
  return a.nodes == b.nodes && a.flows == b.flows;
}
inline bool operator==(const Node& a, const Node& b) {
  return a.id == b.id && a.kind == b.kind && a.name == b.name &&
         a.loop == b.loop && a.default_flow == b.default_flow &&
         a.children == b.children;
}

inline const Node* Scope::find(std::string_view id) const {
  for (const Node& n : nodes)
    if (n.id == id) return &n;
  return nullptr;
}
inline Node* Scope::find(std::string_view id) {
  for (Node& n : nodes)
    if (n.id == id) return &n;
  return nullptr;
}

struct TextAnnotation {
  std::string id;
  std::string text;
  friend bool operator==(const TextAnnotation&, const TextAnnotation&) = default;
};

struct Association {
  std::string id;
  std::string source;  // node id
  std::string target;  // annotation id
  friend bool operator==(const Association&, const Association&) = default;
};

struct Diagram {
  std::map<std::string, Bounds> shapes;                 // element id -> bounds
  std::map<std::string, std::vector<Waypoint>> edges;   // flow/assoc id -> pts
  friend bool operator==(const Diagram&, const Diagram&) = default;
};

struct Document {
  std::string process_id = "Process_1";
  bool executable = false;
  Scope scope;
  std::vector<TextAnnotation> annotations;
  std::vector<Association> associations;
  Diagram diagram;

  friend bool operator==(const Document&, const Document&) = default;

  const TextAnnotation* annotation_for(std::string_view node_id) const {
    for (const Association& a : associations) {
      if (a.source == node_id) {
        for (const TextAnnotation& t : annotations)
          if (t.id == a.target) return &t;
      }
    }
    return nullptr;
  }
};

// ---------------------------------------------------------------------------
// validation

namespace detail {

inline void collect_ids(const Scope& scope, std::set<std::string>& ids) {
  for (const Node& n : scope.nodes) {
    if (!ids.insert(n.id).second)
      throw ValidationError("duplicate node id '" + n.id + "'");
    if (n.kind == NodeKind::SubProcess) collect_ids(n.children, ids);
  }
  for (const SequenceFlow& f : scope.flows) {
    if (!ids.insert(f.id).second)
      throw ValidationError("duplicate flow id '" + f.id + "'");
  }
}

inline void validate_scope(const Scope& scope, const std::string& where) {
  int starts = 0, ends = 0;
  for (const Node& n : scope.nodes) {
    if (n.kind == NodeKind::StartEvent) ++starts;
    if (n.kind == NodeKind::EndEvent) ++ends;
    if (n.kind == NodeKind::SubProcess)
      validate_scope(n.children, "subprocess '" + n.id + "'");
  }
  if (starts != 1 || ends != 1)
    throw ValidationError(where + " must contain exactly one start and one "
                          "end event");
  for (const SequenceFlow& f : scope.flows) {
    if (!scope.find(f.source))
      throw ValidationError("flow '" + f.id + "' references unknown source '" +
                            f.source + "'");
    if (!scope.find(f.target))
      throw ValidationError("flow '" + f.id + "' references unknown target '" +
                            f.target + "'");
  }
}

}  // namespace detail

inline void validate(const Document& doc) {
  std::set<std::string> ids;
  detail::collect_ids(doc.scope, ids);
  detail::validate_scope(doc.scope, "process '" + doc.process_id + "'");
  for (const Association& a : doc.associations) {
    bool found = false;
    for (const TextAnnotation& t : doc.annotations) found |= t.id == a.target;
    if (!found)
      throw ValidationError("association '" + a.id +
                            "' targets unknown annotation");
  }
}

// ---------------------------------------------------------------------------
// serialization

namespace detail {

inline std::string fmt_num(double v) {
  std::ostringstream out;
  if (v == static_cast<long long>(v)) {
    out << static_cast<long long>(v);
  } else {
    out << v;
  }
  return out.str();
}

inline void emit_scope(const Scope& scope, xml::Element& parent) {
  for (const Node& n : scope.nodes) {
    switch (n.kind) {
      case NodeKind::StartEvent:
        parent.add_child("bpmn:startEvent").set("id", n.id);
        break;
      case NodeKind::EndEvent:
        parent.add_child("bpmn:endEvent").set("id", n.id);
        break;
      case NodeKind::Task:
        parent.add_child("bpmn:task").set("id", n.id).set("name", n.name);
        break;
      case NodeKind::UserTask:
        parent.add_child("bpmn:userTask").set("id", n.id).set("name", n.name);
        break;
      case NodeKind::GatewaySplit:
      case NodeKind::GatewayJoin: {
        xml::Element& gw = parent.add_child("bpmn:exclusiveGateway");
        gw.set("id", n.id);
        if (!n.default_flow.empty()) gw.set("default", n.default_flow);
        break;
      }
      case NodeKind::SubProcess: {
        xml::Element& sub = parent.add_child("bpmn:subProcess");
        sub.set("id", n.id);
        if (n.loop == LoopKind::MultiInstanceSequential)
          sub.add_child("bpmn:multiInstanceLoopCharacteristics")
              .set("isSequential", "true");
        else if (n.loop == LoopKind::StandardLoop)
          sub.add_child("bpmn:standardLoopCharacteristics");
        emit_scope(n.children, sub);
        break;
      }
    }
  }
  for (const SequenceFlow& f : scope.flows) {
    xml::Element& el = parent.add_child("bpmn:sequenceFlow");
    el.set("id", f.id).set("sourceRef", f.source).set("targetRef", f.target);
    if (f.condition) {
      xml::Element& cond = el.add_child("bpmn:conditionExpression");
      cond.set("xsi:type", "bpmn:tFormalExpression");
      cond.text = *f.condition;
    }
  }
}

inline void emit_di_scope(const Document& doc, const Scope& scope,
                          xml::Element& plane) {
  for (const Node& n : scope.nodes) {
    auto it = doc.diagram.shapes.find(n.id);
    if (it != doc.diagram.shapes.end()) {
      xml::Element& shape = plane.add_child("bpmndi:BPMNShape");
      shape.set("id", n.id + "_di").set("bpmnElement", n.id);
      if (n.kind == NodeKind::SubProcess) shape.set("isExpanded", "true");
      const Bounds& b = it->second;
      shape.add_child("dc:Bounds")
          .set("x", fmt_num(b.x))
          .set("y", fmt_num(b.y))
          .set("width", fmt_num(b.width))
          .set("height", fmt_num(b.height));
    }
    if (n.kind == NodeKind::SubProcess) emit_di_scope(doc, n.children, plane);
  }
  for (const SequenceFlow& f : scope.flows) {
    auto it = doc.diagram.edges.find(f.id);
    if (it == doc.diagram.edges.end()) continue;
    xml::Element& edge = plane.add_child("bpmndi:BPMNEdge");
    edge.set("id", f.id + "_di").set("bpmnElement", f.id);
    for (const Waypoint& w : it->second)
      edge.add_child("di:waypoint").set("x", fmt_num(w.x)).set("y",
                                                               fmt_num(w.y));
  }
}

}  // namespace detail

inline std::string serialize_bpmn(const Document& doc) {
  validate(doc);
  xml::Element root{"bpmn:definitions"};
  root.set("xmlns:bpmn", "http://www.omg.org/spec/BPMN/20100524/MODEL")
      .set("xmlns:bpmndi", "http://www.omg.org/spec/BPMN/20100524/DI")
      .set("xmlns:dc", "http://www.omg.org/spec/DD/20100524/DC")
      .set("xmlns:di", "http://www.omg.org/spec/DD/20100524/DI")
      .set("xmlns:xsi", "http://www.w3.org/2001/XMLSchema-instance")
      .set("exporter", "flowgen")
      .set("exporterVersion", "0.1.0");

  xml::Element& process = root.add_child("bpmn:process");
  process.set("id", doc.process_id)
      .set("isExecutable", doc.executable ? "true" : "false");
  detail::emit_scope(doc.scope, process);
  for (const TextAnnotation& t : doc.annotations) {
    xml::Element& el = process.add_child("bpmn:textAnnotation");
    el.set("id", t.id);
    el.add_child("bpmn:text").text = t.text;
  }
  for (const Association& a : doc.associations) {
    process.add_child("bpmn:association")
        .set("id", a.id)
        .set("associationDirection", "None")
        .set("sourceRef", a.source)
        .set("targetRef", a.target);
  }

  xml::Element& diagram = root.add_child("bpmndi:BPMNDiagram");
  diagram.set("id", "BPMNDiagram_1");
  xml::Element& plane = diagram.add_child("bpmndi:BPMNPlane");
  plane.set("id", "BPMNPlane_1").set("bpmnElement", doc.process_id);
  detail::emit_di_scope(doc, doc.scope, plane);
  for (const TextAnnotation& t : doc.annotations) {
    auto it = doc.diagram.shapes.find(t.id);
    if (it == doc.diagram.shapes.end()) continue;
    xml::Element& shape = plane.add_child("bpmndi:BPMNShape");
    shape.set("id", t.id + "_di").set("bpmnElement", t.id);
    shape.add_child("dc:Bounds")
        .set("x", detail::fmt_num(it->second.x))
        .set("y", detail::fmt_num(it->second.y))
        .set("width", detail::fmt_num(it->second.width))
        .set("height", detail::fmt_num(it->second.height));
  }
  for (const Association& a : doc.associations) {
    auto it = doc.diagram.edges.find(a.id);
    if (it == doc.diagram.edges.end()) continue;
    xml::Element& edge = plane.add_child("bpmndi:BPMNEdge");
    edge.set("id", a.id + "_di").set("bpmnElement", a.id);
    for (const Waypoint& w : it->second)
      edge.add_child("di:waypoint")
          .set("x", detail::fmt_num(w.x))
          .set("y", detail::fmt_num(w.y));
  }
  return xml::write(root);
}

// ---------------------------------------------------------------------------
// parsing

namespace detail {

// BPMN constructs we recognize but deliberately do not model.
inline bool is_known_unsupported(std::string_view local) {
  static const std::set<std::string, std::less<>> names = {
      "parallelGateway",        "inclusiveGateway",   "complexGateway",
      "eventBasedGateway",      "intermediateCatchEvent",
      "intermediateThrowEvent", "boundaryEvent",      "callActivity",
      "serviceTask",            "scriptTask",         "sendTask",
      "receiveTask",            "businessRuleTask",   "manualTask",
      "laneSet",                "lane",               "messageFlow",
      "dataObject",             "dataObjectReference","dataStoreReference",
      "transaction",            "adHocSubProcess",    "eventSubProcess"};
  return names.count(local) > 0;
}

struct DocBuilder {
  Document doc;

  void parse_scope(const xml::Element& el, Scope& scope) {
    for (const xml::Element& child : el.children) {
      std::string_view local = child.local_name();
      if (local == "startEvent") {
        scope.nodes.push_back({child.attr_or("id"), NodeKind::StartEvent});
      } else if (local == "endEvent") {
        scope.nodes.push_back({child.attr_or("id"), NodeKind::EndEvent});
      } else if (local == "task") {
        Node n{child.attr_or("id"), NodeKind::Task};
        n.name = child.attr_or("name");
        scope.nodes.push_back(std::move(n));
      } else if (local == "userTask") {
        Node n{child.attr_or("id"), NodeKind::UserTask};
        n.name = child.attr_or("name");
        scope.nodes.push_back(std::move(n));
      } else if (local == "exclusiveGateway") {
        Node n{child.attr_or("id"), NodeKind::GatewayJoin};  // refined later
        n.default_flow = child.attr_or("default");
        scope.nodes.push_back(std::move(n));
      } else if (local == "subProcess") {
        Node n{child.attr_or("id"), NodeKind::SubProcess};
        for (const xml::Element& sub : child.children) {
          std::string_view sl = sub.local_name();
          if (sl == "multiInstanceLoopCharacteristics")
            n.loop = LoopKind::MultiInstanceSequential;
          else if (sl == "standardLoopCharacteristics")
            n.loop = LoopKind::StandardLoop;
        }
        parse_scope(child, n.children);
        scope.nodes.push_back(std::move(n));
      } else if (local == "sequenceFlow") {
        SequenceFlow f;
        f.id = child.attr_or("id");
        f.source = child.attr_or("sourceRef");
        f.target = child.attr_or("targetRef");
        for (const xml::Element& sub : child.children) {
          if (sub.local_name() == "conditionExpression") f.condition = sub.text;
        }
        scope.flows.push_back(std::move(f));
      } else if (local == "textAnnotation") {
        TextAnnotation t;
        t.id = child.attr_or("id");
        for (const xml::Element& sub : child.children)
          if (sub.local_name() == "text") t.text = sub.text;
        doc.annotations.push_back(std::move(t));
      } else if (local == "association") {
        doc.associations.push_back({child.attr_or("id"),
                                    child.attr_or("sourceRef"),
                                    child.attr_or("targetRef")});
      } else if (local == "incoming" || local == "outgoing" ||
                 local == "documentation" || local == "extensionElements" ||
                 local == "multiInstanceLoopCharacteristics" ||
                 local == "standardLoopCharacteristics") {
        // redundant with the flow list, or handled above
      } else if (is_known_unsupported(local)) {
        throw UnsupportedElement(std::string(local));
      }
      // anything else: vendor extension, ignored
    }
  }

  // Gateways are written as plain exclusiveGateway elements; split vs join
  // falls out of the out-degree.
  static void classify_gateways(Scope& scope) {
    for (Node& n : scope.nodes) {
      if (n.kind == NodeKind::SubProcess) {
        classify_gateways(n.children);
        continue;
      }
      if (n.kind != NodeKind::GatewayJoin && n.kind != NodeKind::GatewaySplit)
        continue;
      int out = 0;
      for (const SequenceFlow& f : scope.flows)
        if (f.source == n.id) ++out;
      n.kind = out > 1 ? NodeKind::GatewaySplit : NodeKind::GatewayJoin;
    }
  }

  void parse_diagram(const xml::Element& el) {
    for (const xml::Element& child : el.children) {
      std::string_view local = child.local_name();
      if (local == "BPMNPlane") {
        parse_diagram(child);
      } else if (local == "BPMNShape") {
        for (const xml::Element& b : child.children) {
          if (b.local_name() != "Bounds") continue;
          Bounds bounds{std::stod(b.attr_or("x", "0")),
                        std::stod(b.attr_or("y", "0")),
                        std::stod(b.attr_or("width", "0")),
                        std::stod(b.attr_or("height", "0"))};
          doc.diagram.shapes[child.attr_or("bpmnElement")] = bounds;
        }
      } else if (local == "BPMNEdge") {
        std::vector<Waypoint>& pts =
            doc.diagram.edges[child.attr_or("bpmnElement")];
        for (const xml::Element& w : child.children) {
          if (w.local_name() == "waypoint")
            pts.push_back({std::stod(w.attr_or("x", "0")),
                           std::stod(w.attr_or("y", "0"))});
        }
      }
    }
  }
};

}  // namespace detail

inline Document parse_bpmn(std::string_view xml_text) {
  xml::Element root = [&] {
    try {
      return xml::parse(xml_text);
    } catch (const xml::ParseError& e) {
      throw ParseError("definitions", e.what());
    }
  }();
  if (root.local_name() != "definitions")
    throw ParseError("definitions", "root element is not <definitions>");

  detail::DocBuilder builder;
  bool saw_process = false;
  for (const xml::Element& child : root.children) {
    std::string_view local = child.local_name();
    if (local == "process") {
      if (saw_process)
        throw ParseError("process", "multiple processes are not supported");
      saw_process = true;
      builder.doc.process_id = child.attr_or("id", "Process_1");
      builder.doc.executable = child.attr_or("isExecutable") == "true";
      builder.parse_scope(child, builder.doc.scope);
    } else if (local == "BPMNDiagram") {
      builder.parse_diagram(child);
    } else if (local == "collaboration") {
      throw UnsupportedElement("collaboration");
    }
  }
  if (!saw_process) throw ParseError("process", "no <process> element found");
  detail::DocBuilder::classify_gateways(builder.doc.scope);
  return builder.doc;
}

}  // namespace flowgen::bpmn
