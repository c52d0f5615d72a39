#pragma once

// Series walk over a BPMN scope: orders nodes by following sequence flows
// from the start event, pairing each split gateway with its join and nesting
// the branch contents. Everything downstream (layout, structural comparison,
// decompilation, patching) shares this traversal.

#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "flowgen/bpmn.hpp"

namespace flowgen::bpmn {

class WalkError : public std::runtime_error {
 public:
  explicit WalkError(const std::string& message)
      : std::runtime_error(message) {}
};

struct WalkItem {
  const Node* node = nullptr;           // Task/UserTask/SubProcess/GatewaySplit
  std::vector<WalkItem> body;           // gateway then-branch
  std::vector<WalkItem> else_body;      // gateway else-branch (may be empty)
  const Node* join = nullptr;           // paired join gateway
  const SequenceFlow* cond_flow = nullptr;     // split -> then
  const SequenceFlow* default_flow = nullptr;  // split -> else/join
};

namespace detail {

class Walker {
 public:
  explicit Walker(const Scope& scope) : scope_(scope) {
    for (const SequenceFlow& f : scope.flows) out_[f.source].push_back(&f);
  }

  std::vector<WalkItem> run() {
    const Node* start = nullptr;
    for (const Node& n : scope_.nodes) {
      if (n.kind == NodeKind::StartEvent) {
        if (start) throw WalkError("multiple start events in scope");
        start = &n;
      }
    }
    if (!start) throw WalkError("scope has no start event");
    visited_.insert(start->id);
    std::vector<WalkItem> items;
    const Node* cur = follow_single(start);
    while (cur && cur->kind != NodeKind::EndEvent) {
      items.push_back(walk_node(&cur));
    }
    if (!cur) throw WalkError("walk did not reach an end event");
    visited_.insert(cur->id);
    if (visited_.size() != scope_.nodes.size()) {
      for (const Node& n : scope_.nodes)
        if (!visited_.count(n.id))
          throw WalkError("unreachable node '" + n.id + "'");
    }
    return items;
  }

 private:
  const std::vector<const SequenceFlow*>& outgoing(const Node* n) {
    static const std::vector<const SequenceFlow*> none;
    auto it = out_.find(n->id);
    return it == out_.end() ? none : it->second;
  }

  const Node* node_by_id(const std::string& id) {
    const Node* n = scope_.find(id);
    if (!n) throw WalkError("flow targets unknown node '" + id + "'");
    return n;
  }

  const Node* follow_single(const Node* n) {
    const auto& flows = outgoing(n);
    if (flows.size() != 1)
      throw WalkError("node '" + n->id + "' has " +
                      std::to_string(flows.size()) +
                      " successors, expected 1");
    const Node* next = node_by_id(flows[0]->target);
    visit(next);
    return next;
  }

  void visit(const Node* n) {
    if (!visited_.insert(n->id).second)
      throw WalkError("cycle through node '" + n->id + "'");
  }

  // Consumes *cur and advances it to the node after the statement.
  WalkItem walk_node(const Node** cur) {
    const Node* n = *cur;
    switch (n->kind) {
      case NodeKind::Task:
      case NodeKind::UserTask:
      case NodeKind::SubProcess: {
        WalkItem item;
        item.node = n;
        *cur = follow_single(n);
        return item;
      }
      case NodeKind::GatewaySplit:
        return walk_split(cur);
      case NodeKind::GatewayJoin:
        throw WalkError("unexpected join gateway '" + n->id + "'");
      default:
        throw WalkError("unexpected event '" + n->id + "' mid-flow");
    }
  }

  WalkItem walk_split(const Node** cur) {
    const Node* split = *cur;
    const auto& flows = outgoing(split);
    if (flows.size() != 2)
      throw WalkError("split gateway '" + split->id +
                      "' must have exactly 2 outgoing flows");
    const SequenceFlow* cond = nullptr;
    const SequenceFlow* dflt = nullptr;
    for (const SequenceFlow* f : flows) {
      if (f->condition && !cond) cond = f;
      else dflt = f;
    }
    if (!cond)
      throw WalkError("split gateway '" + split->id +
                      "' has no conditional flow");
    if (!split->default_flow.empty() && dflt->id != split->default_flow)
      throw WalkError("split gateway '" + split->id +
                      "' default attribute does not match its flows");

    WalkItem item;
    item.node = split;
    item.cond_flow = cond;
    item.default_flow = dflt;

    const Node* join = nullptr;
    item.body = walk_branch(node_by_id(cond->target), &join);
    const Node* else_entry = node_by_id(dflt->target);
    if (else_entry == join) {
      // empty else: default flow runs straight to the join
    } else {
      const Node* join2 = nullptr;
      item.else_body = walk_branch(else_entry, &join2);
      if (join2 != join)
        throw WalkError("branches of gateway '" + split->id +
                        "' do not meet at one join");
    }
    item.join = join;
    visit(join);
    *cur = follow_single(join);
    return item;
  }

  // Walks from entry until the first top-level join gateway; *join_out gets
  // the join node, which is not consumed.
  std::vector<WalkItem> walk_branch(const Node* entry, const Node** join_out) {
    std::vector<WalkItem> items;
    const Node* cur = entry;
    if (cur->kind == NodeKind::GatewayJoin) {
      *join_out = cur;
      return items;
    }
    visit(cur);
    while (cur->kind != NodeKind::GatewayJoin) {
      items.push_back(walk_node(&cur));
      if (cur->kind == NodeKind::GatewayJoin) break;
      if (cur->kind == NodeKind::EndEvent)
        throw WalkError("branch reached end event without a join gateway");
    }
    visited_.erase(cur->id);  // join is consumed by walk_split
    *join_out = cur;
    return items;
  }

  const Scope& scope_;
  std::map<std::string, std::vector<const SequenceFlow*>> out_;
  std::set<std::string> visited_;
};

}  // namespace detail

inline std::vector<WalkItem> walk_scope(const Scope& scope) {
  return detail::Walker(scope).run();
}

}  // namespace flowgen::bpmn
