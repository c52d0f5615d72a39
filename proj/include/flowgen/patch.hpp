#pragma once

// Applies an IR edit script directly to a BPMN document. Nodes not addressed
// by any op keep their ids, bounds, and waypoints; rewired flows get fresh
// straight waypoints; inserted statements are compiled into the affected
// scope and drawn on a free row below the existing shapes.

#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "flowgen/bpmn.hpp"
#include "flowgen/bpmn_walk.hpp"
#include "flowgen/compile.hpp"
#include "flowgen/decompile.hpp"
#include "flowgen/diff.hpp"
#include "flowgen/ir.hpp"

namespace flowgen::flow_diff {

class PatchError : public std::runtime_error {
 public:
  explicit PatchError(const std::string& message)
      : std::runtime_error(message) {}
};

namespace detail {

inline void collect_scope_ids(const bpmn::Scope& scope,
                              std::set<std::string>& nodes,
                              std::set<std::string>& flows) {
  for (const bpmn::Node& n : scope.nodes) {
    nodes.insert(n.id);
    if (n.kind == bpmn::NodeKind::SubProcess)
      collect_scope_ids(n.children, nodes, flows);
  }
  for (const bpmn::SequenceFlow& f : scope.flows) flows.insert(f.id);
}

inline std::set<std::string> all_element_ids(const bpmn::Document& doc) {
  std::set<std::string> nodes, flows;
  collect_scope_ids(doc.scope, nodes, flows);
  nodes.insert(flows.begin(), flows.end());
  for (const bpmn::TextAnnotation& t : doc.annotations) nodes.insert(t.id);
  for (const bpmn::Association& a : doc.associations) nodes.insert(a.id);
  return nodes;
}

// Node ids making up one statement: a task, or a subprocess with its whole
// child tree, or a gateway pair with both branches.
inline void stmt_node_ids(const bpmn::WalkItem& item,
                          std::set<std::string>& out) {
  out.insert(item.node->id);
  if (item.node->kind == bpmn::NodeKind::SubProcess) {
    std::set<std::string> flows;
    collect_scope_ids(item.node->children, out, flows);
  }
  if (item.node->kind == bpmn::NodeKind::GatewaySplit) {
    out.insert(item.join->id);
    for (const bpmn::WalkItem& sub : item.body) stmt_node_ids(sub, out);
    for (const bpmn::WalkItem& sub : item.else_body) stmt_node_ids(sub, out);
  }
}

inline std::string stmt_entry(const bpmn::WalkItem& item) {
  return item.node->id;
}
inline std::string stmt_exit(const bpmn::WalkItem& item) {
  return item.node->kind == bpmn::NodeKind::GatewaySplit ? item.join->id
                                                         : item.node->id;
}

struct BlockRef {
  bpmn::Scope* scope = nullptr;
  std::vector<bpmn::WalkItem> items;
  std::string entry;  // start event or split gateway
  std::string exit;   // end event or join gateway

  std::string pred_of(size_t k) const {
    return k == 0 ? entry : stmt_exit(items[k - 1]);
  }
  std::string succ_of(size_t k) const {
    return k >= items.size() ? exit : stmt_entry(items[k]);
  }
};

class Patcher {
 public:
  explicit Patcher(bpmn::Document doc)
      : doc_(std::move(doc)), ids_(all_element_ids(doc_)) {}

  bpmn::Document apply(const EditScript& script) {
    for (const EditOp& op : script.ops) apply_op(op);
    bpmn::validate(doc_);
    return std::move(doc_);
  }

 private:
  // --- navigation ---------------------------------------------------------

  BlockRef block_at(const Path& path, size_t depth) {
    BlockRef ref;
    ref.scope = &doc_.scope;
    ref.items = walk(*ref.scope);
    ref.entry = find_event(*ref.scope, bpmn::NodeKind::StartEvent);
    ref.exit = find_event(*ref.scope, bpmn::NodeKind::EndEvent);
    for (size_t i = 0; i < depth; ++i) {
      const PathStep& step = path[i];
      if (step.index < 0 ||
          static_cast<size_t>(step.index) >= ref.items.size())
        throw PathError("path index " + std::to_string(step.index) +
                        " out of range");
      bpmn::WalkItem item = ref.items[static_cast<size_t>(step.index)];
      if (item.node->kind == bpmn::NodeKind::SubProcess) {
        bpmn::Node* sub = ref.scope->find(item.node->id);
        ref.scope = &sub->children;
        ref.items = walk(*ref.scope);
        ref.entry = find_event(*ref.scope, bpmn::NodeKind::StartEvent);
        ref.exit = find_event(*ref.scope, bpmn::NodeKind::EndEvent);
      } else if (item.node->kind == bpmn::NodeKind::GatewaySplit) {
        ref.entry = item.node->id;
        ref.exit = item.join->id;
        ref.items = step.branch == 0 ? item.body : item.else_body;
      } else {
        throw PathError("path descends into a non-compound statement");
      }
    }
    return ref;
  }

  static std::vector<bpmn::WalkItem> walk(const bpmn::Scope& scope) {
    try {
      return bpmn::walk_scope(scope);
    } catch (const bpmn::WalkError& e) {
      throw PatchError(e.what());
    }
  }

  static std::string find_event(const bpmn::Scope& scope,
                                bpmn::NodeKind kind) {
    for (const bpmn::Node& n : scope.nodes)
      if (n.kind == kind) return n.id;
    throw PatchError("scope is missing its start or end event");
  }

  bpmn::WalkItem item_at(BlockRef& ref, const Path& path) {
    int index = path.back().index;
    if (index < 0 || static_cast<size_t>(index) >= ref.items.size())
      throw PathError("path index " + std::to_string(index) +
                      " out of range");
    return ref.items[static_cast<size_t>(index)];
  }

  // --- shared plumbing ----------------------------------------------------

  bpmn::SequenceFlow* flow_from_to(bpmn::Scope& scope, const std::string& src,
                                   const std::string& dst) {
    for (bpmn::SequenceFlow& f : scope.flows)
      if (f.source == src && f.target == dst) return &f;
    throw PatchError("no flow between '" + src + "' and '" + dst + "'");
  }

  void straight_edge(const std::string& flow_id, const std::string& from,
                     const std::string& to) {
    auto a = doc_.diagram.shapes.find(from);
    auto b = doc_.diagram.shapes.find(to);
    if (a == doc_.diagram.shapes.end() || b == doc_.diagram.shapes.end()) {
      doc_.diagram.edges.erase(flow_id);
      return;
    }
    doc_.diagram.edges[flow_id] = {
        {a->second.x + a->second.width,
         a->second.y + a->second.height / 2},
        {b->second.x, b->second.y + b->second.height / 2}};
  }

  void erase_geometry(const std::set<std::string>& element_ids) {
    for (const std::string& id : element_ids) {
      doc_.diagram.shapes.erase(id);
      doc_.diagram.edges.erase(id);
    }
  }

  // Removes annotations and associations attached to removed nodes.
  void drop_annotations(const std::set<std::string>& node_ids) {
    for (auto it = doc_.associations.begin();
         it != doc_.associations.end();) {
      if (node_ids.count(it->source)) {
        const std::string ann_id = it->target;
        doc_.diagram.edges.erase(it->id);
        doc_.diagram.shapes.erase(ann_id);
        for (auto at = doc_.annotations.begin();
             at != doc_.annotations.end(); ++at) {
          if (at->id == ann_id) {
            doc_.annotations.erase(at);
            break;
          }
        }
        it = doc_.associations.erase(it);
      } else {
        ++it;
      }
    }
  }

  double free_row_center() const {
    double bottom = 160;
    for (const auto& [id, b] : doc_.diagram.shapes)
      bottom = std::max(bottom, b.y + b.height);
    return bottom + py2bpmn::kGap + py2bpmn::kTaskHeight / 2;
  }

  // --- ops ----------------------------------------------------------------

  void apply_op(const EditOp& op) {
    try {
      std::visit([&](const auto& o) { do_op(o); }, op);
    } catch (const bpmn2py::DecompileError& e) {
      throw PatchError(e.what());
    }
  }

  void do_op(const ReplaceCall& o) {
    BlockRef ref = block_at(o.path, o.path.size() - 1);
    bpmn::WalkItem item = item_at(ref, o.path);
    if (item.node->kind != bpmn::NodeKind::Task &&
        item.node->kind != bpmn::NodeKind::UserTask)
      throw PatchError("replace_call target is not a task");
    bpmn::Node* node = ref.scope->find(item.node->id);
    if (o.call.callee == ir::kUserTaskCallee) {
      node->kind = bpmn::NodeKind::UserTask;
      node->name.clear();
      if (!o.call.args.empty())
        if (const auto* lit = std::get_if<ir::StringLit>(&o.call.args.front()))
          node->name = lit->value;
    } else {
      node->kind = bpmn::NodeKind::Task;
      node->name = o.call.callee;
    }
  }

  void do_op(const DeleteStmt& o) {
    BlockRef ref = block_at(o.path, o.path.size() - 1);
    bpmn::WalkItem item = item_at(ref, o.path);
    size_t k = static_cast<size_t>(o.path.back().index);
    const std::string pred = ref.pred_of(k);
    const std::string succ = ref.succ_of(k + 1);

    std::set<std::string> removed;
    stmt_node_ids(item, removed);

    // the incoming flow is retargeted (keeping any condition / default role);
    // every other flow touching the statement goes away
    bpmn::SequenceFlow* incoming =
        flow_from_to(*ref.scope, pred, stmt_entry(item));
    const std::string incoming_id = incoming->id;
    for (auto it = ref.scope->flows.begin(); it != ref.scope->flows.end();) {
      if (it->id != incoming_id &&
          (removed.count(it->source) || removed.count(it->target))) {
        doc_.diagram.edges.erase(it->id);
        it = ref.scope->flows.erase(it);
      } else {
        ++it;
      }
    }
    drop_annotations(removed);
    erase_geometry(removed);
    for (auto it = ref.scope->nodes.begin(); it != ref.scope->nodes.end();) {
      if (removed.count(it->id)) {
        std::set<std::string> child_nodes, child_flows;
        if (it->kind == bpmn::NodeKind::SubProcess)
          collect_scope_ids(it->children, child_nodes, child_flows);
        erase_geometry(child_flows);
        it = ref.scope->nodes.erase(it);
      } else {
        ++it;
      }
    }
    incoming = flow_from_to_existing(*ref.scope, incoming_id);
    incoming->target = succ;
    straight_edge(incoming_id, pred, succ);
  }

  bpmn::SequenceFlow* flow_from_to_existing(bpmn::Scope& scope,
                                            const std::string& id) {
    for (bpmn::SequenceFlow& f : scope.flows)
      if (f.id == id) return &f;
    throw PatchError("flow '" + id + "' vanished during patch");
  }

  void do_op(const InsertStmt& o) {
    BlockRef ref = block_at(o.path, o.path.size() - 1);
    size_t k = static_cast<size_t>(o.path.back().index);
    if (k > ref.items.size()) throw PathError("insert index out of range");
    const std::string pred = ref.pred_of(k);
    const std::string succ = ref.succ_of(k);

    py2bpmn::detail::Compiler compiler(ids_, doc_);
    size_t flow_mark = ref.scope->flows.size();
    std::string last = compiler.build_stmt(o.stmt, *ref.scope, pred);

    // the builder linked pred -> new entry with a fresh flow; fold that into
    // the existing boundary flow so conditions and default markers survive
    std::string entry_id;
    for (size_t i = flow_mark; i < ref.scope->flows.size(); ++i) {
      if (ref.scope->flows[i].source == pred) {
        entry_id = ref.scope->flows[i].target;
        ref.scope->flows.erase(ref.scope->flows.begin() +
                               static_cast<long>(i));
        break;
      }
    }
    if (entry_id.empty()) throw PatchError("builder produced no entry flow");
    bpmn::SequenceFlow* boundary = flow_from_to(*ref.scope, pred, succ);
    boundary->target = entry_id;
    const std::string boundary_id = boundary->id;
    bpmn::SequenceFlow exit_flow{ids_.next("flow"), last, succ, std::nullopt};
    const std::string exit_id = exit_flow.id;
    ref.scope->flows.push_back(std::move(exit_flow));

    layout_inserted(ref, o.path, pred, succ, boundary_id, exit_id, last);
  }

  void layout_inserted(BlockRef&, const Path& path,
                       const std::string& pred, const std::string& succ,
                       const std::string& boundary_id,
                       const std::string& exit_id, const std::string& last) {
    // fresh row below everything, so untouched geometry stays untouched
    double cy = free_row_center();
    auto pred_shape = doc_.diagram.shapes.find(pred);
    double x = pred_shape != doc_.diagram.shapes.end()
                   ? pred_shape->second.x + pred_shape->second.width +
                         py2bpmn::kGap
                   : 160;
    BlockRef updated = block_at(path, path.size() - 1);
    size_t k = static_cast<size_t>(path.back().index);
    bpmn::WalkItem item = updated.items[k];

    py2bpmn::detail::Compiler compiler(ids_, doc_);
    py2bpmn::detail::Compiler::Extent ext;
    ext.top = cy;
    ext.bottom = cy;
    std::string prev_id = pred;
    bpmn::Bounds prev_bounds =
        pred_shape != doc_.diagram.shapes.end()
            ? pred_shape->second
            : bpmn::Bounds{x - py2bpmn::kGap, cy, 0, 0};
    compiler.layout_item(item, *updated.scope, x, cy, prev_id, prev_bounds,
                         ext);
    (void)boundary_id;
    straight_edge(exit_id, last, succ);
  }

  void do_op(const WrapInLoop& o) {
    BlockRef ref = block_at(o.path, o.path.size() - 1);
    size_t first = static_cast<size_t>(o.path.back().index);
    size_t count = static_cast<size_t>(o.count);
    if (o.path.back().index < 0 || o.count < 1 ||
        first + count > ref.items.size())
      throw PathError("wrap range out of range");

    ir::Stmt header_stmt = detail_parse_header(o.header);
    const bool is_for = std::holds_alternative<ir::For>(header_stmt.node);

    const std::string pred = ref.pred_of(first);
    const std::string succ = ref.succ_of(first + count);
    const std::string range_entry = stmt_entry(ref.items[first]);
    const std::string range_exit = stmt_exit(ref.items[first + count - 1]);

    std::set<std::string> moved;
    for (size_t i = first; i < first + count; ++i)
      stmt_node_ids(ref.items[i], moved);

    bpmn::Node sub{ids_.next("subProcess"), bpmn::NodeKind::SubProcess};
    sub.loop = is_for ? bpmn::LoopKind::MultiInstanceSequential
                      : bpmn::LoopKind::StandardLoop;
    bpmn::Node inner_start{ids_.next("startEvent"), bpmn::NodeKind::StartEvent};
    bpmn::Node inner_end{ids_.next("endEvent"), bpmn::NodeKind::EndEvent};

    // move the range's nodes and internal flows into the subprocess
    for (auto it = ref.scope->nodes.begin(); it != ref.scope->nodes.end();) {
      if (moved.count(it->id)) {
        sub.children.nodes.push_back(std::move(*it));
        it = ref.scope->nodes.erase(it);
      } else {
        ++it;
      }
    }
    for (auto it = ref.scope->flows.begin(); it != ref.scope->flows.end();) {
      if (moved.count(it->source) && moved.count(it->target)) {
        sub.children.flows.push_back(std::move(*it));
        it = ref.scope->flows.erase(it);
      } else {
        ++it;
      }
    }
    sub.children.flows.push_back(
        {ids_.next("flow"), inner_start.id, range_entry, std::nullopt});
    sub.children.flows.push_back(
        {ids_.next("flow"), range_exit, inner_end.id, std::nullopt});

    // geometry: children keep their bounds; events and bounds fit around them
    bpmn::Bounds bbox = bounding_box(moved);
    doc_.diagram.shapes[inner_start.id] = {
        bbox.x - py2bpmn::kGap - py2bpmn::kEventSize,
        bbox.y + bbox.height / 2 - py2bpmn::kEventSize / 2,
        py2bpmn::kEventSize, py2bpmn::kEventSize};
    doc_.diagram.shapes[inner_end.id] = {
        bbox.x + bbox.width + py2bpmn::kGap,
        bbox.y + bbox.height / 2 - py2bpmn::kEventSize / 2,
        py2bpmn::kEventSize, py2bpmn::kEventSize};
    straight_edge(sub.children.flows[sub.children.flows.size() - 2].id,
                  inner_start.id, range_entry);
    straight_edge(sub.children.flows.back().id, range_exit, inner_end.id);
    bpmn::Bounds sub_bounds{
        bbox.x - py2bpmn::kGap - py2bpmn::kEventSize - py2bpmn::kSubPadX,
        bbox.y - py2bpmn::kSubPadY,
        bbox.width + 2 * (py2bpmn::kGap + py2bpmn::kEventSize +
                          py2bpmn::kSubPadX) - py2bpmn::kGap,
        bbox.height + 2 * py2bpmn::kSubPadY};
    doc_.diagram.shapes[sub.id] = sub_bounds;

    sub.children.nodes.push_back(std::move(inner_start));
    sub.children.nodes.push_back(std::move(inner_end));

    const std::string sub_id = sub.id;
    ref.scope->nodes.push_back(std::move(sub));

    bpmn::SequenceFlow* incoming = flow_from_to(*ref.scope, pred, range_entry);
    incoming->target = sub_id;
    straight_edge(incoming->id, pred, sub_id);
    bpmn::SequenceFlow* outgoing = flow_from_to(*ref.scope, range_exit, succ);
    outgoing->source = sub_id;
    straight_edge(outgoing->id, sub_id, succ);

    std::string header = ir::collapse_whitespace(o.header);
    bpmn::TextAnnotation ann{ids_.next("textAnnotation"), header};
    bpmn::Association assoc{ids_.next("association"), sub_id, ann.id};
    doc_.diagram.shapes[ann.id] = {
        sub_bounds.x + sub_bounds.width - py2bpmn::kAnnotationWidth,
        sub_bounds.y - py2bpmn::kAnnotationGap - py2bpmn::kAnnotationHeight,
        py2bpmn::kAnnotationWidth, py2bpmn::kAnnotationHeight};
    doc_.annotations.push_back(std::move(ann));
    doc_.associations.push_back(std::move(assoc));
  }

  static ir::Stmt detail_parse_header(const std::string& header) {
    return flow_diff::detail::parse_loop_header(header, ir::Block{});
  }

  bpmn::Bounds bounding_box(const std::set<std::string>& node_ids) const {
    double x0 = 1e18, y0 = 1e18, x1 = -1e18, y1 = -1e18;
    for (const std::string& id : node_ids) {
      auto it = doc_.diagram.shapes.find(id);
      if (it == doc_.diagram.shapes.end()) continue;
      x0 = std::min(x0, it->second.x);
      y0 = std::min(y0, it->second.y);
      x1 = std::max(x1, it->second.x + it->second.width);
      y1 = std::max(y1, it->second.y + it->second.height);
    }
    if (x0 > x1) return {160, 120, py2bpmn::kTaskWidth, py2bpmn::kTaskHeight};
    return {x0, y0, x1 - x0, y1 - y0};
  }

  void do_op(const UnwrapLoop& o) {
    BlockRef ref = block_at(o.path, o.path.size() - 1);
    bpmn::WalkItem item = item_at(ref, o.path);
    if (item.node->kind != bpmn::NodeKind::SubProcess ||
        item.node->loop == bpmn::LoopKind::None)
      throw PatchError("unwrap target is not a loop subprocess");
    size_t k = static_cast<size_t>(o.path.back().index);
    const std::string pred = ref.pred_of(k);
    const std::string succ = ref.succ_of(k + 1);
    const std::string sub_id = item.node->id;

    bpmn::Node* sub = ref.scope->find(sub_id);
    std::vector<bpmn::WalkItem> child_items = walk(sub->children);
    std::string child_entry =
        child_items.empty() ? "" : stmt_entry(child_items.front());
    std::string child_exit =
        child_items.empty() ? "" : stmt_exit(child_items.back());

    const std::string inner_start =
        find_event(sub->children, bpmn::NodeKind::StartEvent);
    const std::string inner_end =
        find_event(sub->children, bpmn::NodeKind::EndEvent);

    bpmn::Scope lifted = std::move(sub->children);
    for (auto it = lifted.nodes.begin(); it != lifted.nodes.end();) {
      if (it->id == inner_start || it->id == inner_end) {
        doc_.diagram.shapes.erase(it->id);
        it = lifted.nodes.erase(it);
      } else {
        ++it;
      }
    }
    for (auto it = lifted.flows.begin(); it != lifted.flows.end();) {
      if (it->source == inner_start || it->target == inner_end ||
          it->source == inner_end || it->target == inner_start) {
        doc_.diagram.edges.erase(it->id);
        it = lifted.flows.erase(it);
      } else {
        ++it;
      }
    }
    for (bpmn::Node& n : lifted.nodes)
      ref.scope->nodes.push_back(std::move(n));
    for (bpmn::SequenceFlow& f : lifted.flows)
      ref.scope->flows.push_back(std::move(f));

    std::set<std::string> sub_only{sub_id};
    drop_annotations(sub_only);
    doc_.diagram.shapes.erase(sub_id);
    bpmn::SequenceFlow* incoming = flow_from_to(*ref.scope, pred, sub_id);
    bpmn::SequenceFlow* outgoing = flow_from_to(*ref.scope, sub_id, succ);
    if (child_entry.empty()) {
      // empty loop body: bridge pred -> succ
      const std::string out_id = outgoing->id;
      incoming->target = succ;
      straight_edge(incoming->id, pred, succ);
      for (auto it = ref.scope->flows.begin(); it != ref.scope->flows.end();
           ++it) {
        if (it->id == out_id) {
          doc_.diagram.edges.erase(out_id);
          ref.scope->flows.erase(it);
          break;
        }
      }
    } else {
      incoming->target = child_entry;
      straight_edge(incoming->id, pred, child_entry);
      outgoing->source = child_exit;
      straight_edge(outgoing->id, child_exit, succ);
    }
    for (auto it = ref.scope->nodes.begin(); it != ref.scope->nodes.end();
         ++it) {
      if (it->id == sub_id) {
        ref.scope->nodes.erase(it);
        break;
      }
    }
  }

  void do_op(const SetCondition& o) {
    BlockRef ref = block_at(o.path, o.path.size() - 1);
    bpmn::WalkItem item = item_at(ref, o.path);
    std::string text = ir::collapse_whitespace(o.text);
    if (item.node->kind == bpmn::NodeKind::GatewaySplit) {
      bpmn::SequenceFlow* flow =
          flow_from_to_existing(*ref.scope, item.cond_flow->id);
      flow->condition = text;
      return;
    }
    if (item.node->kind == bpmn::NodeKind::SubProcess &&
        item.node->loop != bpmn::LoopKind::None) {
      const bpmn::TextAnnotation* ann = doc_.annotation_for(item.node->id);
      if (!ann) throw PatchError("loop subprocess has no annotation");
      std::string prefix =
          item.node->loop == bpmn::LoopKind::MultiInstanceSequential
              ? "for "
              : "while ";
      for (bpmn::TextAnnotation& t : doc_.annotations)
        if (t.id == ann->id) t.text = prefix + text;
      return;
    }
    throw PatchError("set_condition target has no condition");
  }

  bpmn::Document doc_;
  py2bpmn::IdGen ids_;
};

}  // namespace detail

// Result is structurally equal to compiling the patched IR; elements not
// addressed by the script keep ids and geometry from the base document.
inline bpmn::Document patch_bpmn(const bpmn::Document& base,
                                 const EditScript& script) {
  if (script.empty()) return base;
  try {
    return detail::Patcher(base).apply(script);
  } catch (const PathError& e) {
    throw PatchError(e.what());
  } catch (const bpmn::ValidationError& e) {
    throw PatchError(e.what());
  } catch (const bpmn::WalkError& e) {
    throw PatchError(e.what());
  }
}

}  // namespace flowgen::flow_diff
