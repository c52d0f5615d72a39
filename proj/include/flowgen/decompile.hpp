#pragma once

// Deterministic BPMN -> IR decompiler. Walks the series-structured graph,
// reconstructs loops from their annotations, and invents assignment variable
// names from task names (BPMN does not store them; alpha-normalization makes
// the choice immaterial).

#include <cctype>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "flowgen/bpmn.hpp"
#include "flowgen/bpmn_walk.hpp"
#include "flowgen/ir.hpp"

namespace flowgen::bpmn2py {

class DecompileError : public std::runtime_error {
 public:
  explicit DecompileError(const std::string& message)
      : std::runtime_error(message) {}
};

namespace detail {

// "GitHub_Repository__3_0_0__retrievewithwhere_Repository" -> "repository"
inline std::string variable_stem(const std::string& task_name) {
  size_t us = task_name.find_last_of('_');
  std::string stem =
      us == std::string::npos ? task_name : task_name.substr(us + 1);
  for (char& c : stem) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (!ir::is_identifier(stem)) stem = "result";
  return stem;
}

class Decompiler {
 public:
  explicit Decompiler(const bpmn::Document& doc) : doc_(doc) {}

  ir::Program run() {
    std::vector<bpmn::WalkItem> items = [&] {
      try {
        return bpmn::walk_scope(doc_.scope);
      } catch (const bpmn::WalkError& e) {
        throw DecompileError(e.what());
      }
    }();
    ir::Program program{build_block(items)};
    if (program.statements.empty())
      throw DecompileError("document contains no activities (empty program)");
    return program;
  }

 private:
  std::string fresh_var(const std::string& task_name) {
    std::string stem = variable_stem(task_name);
    int& count = var_counts_[stem];
    ++count;
    return count == 1 ? stem : stem + std::to_string(count);
  }

  ir::Block build_block(const std::vector<bpmn::WalkItem>& items) {
    ir::Block block;
    for (const bpmn::WalkItem& item : items) {
      size_t before = assign_targets_.size();
      block.push_back(build_stmt(item));
      // A for-loop iterable that nothing binds refers to the result of an
      // earlier task whose reconstructed variable got a different name
      // (e.g. "repositories" vs the reconstructed "repository"); re-link it
      // to the best-matching assignment made before the loop.
      if (auto* loop = std::get_if<ir::For>(&block.back().node)) {
        if (!bound_.count(loop->iterable) && before > 0)
          loop->iterable = resolve_iterable(loop->iterable, before);
      }
    }
    return block;
  }

  static bool plural_of(const std::string& target, const std::string& it) {
    if (it == target || it == target + "s" || it == target + "es") return true;
    if (!target.empty() && target.back() == 'y' &&
        it == target.substr(0, target.size() - 1) + "ies")
      return true;
    return false;
  }

  std::string resolve_iterable(const std::string& iterable,
                               size_t limit) const {
    for (size_t i = limit; i-- > 0;) {
      if (plural_of(assign_targets_[i], iterable)) return assign_targets_[i];
    }
    return assign_targets_[limit - 1];
  }

  ir::Stmt build_stmt(const bpmn::WalkItem& item) {
    const bpmn::Node* n = item.node;
    switch (n->kind) {
      case bpmn::NodeKind::Task: {
        std::string var = fresh_var(n->name);
        bound_.insert(var);
        assign_targets_.push_back(var);
        return ir::Stmt{ir::Assign{var, ir::Call{n->name, {}}}};
      }
      case bpmn::NodeKind::UserTask: {
        ir::Call call{std::string(ir::kUserTaskCallee),
                      {ir::StringLit{n->name}}};
        return ir::Stmt{ir::ExprCall{std::move(call)}};
      }
      case bpmn::NodeKind::SubProcess:
        return build_loop(item);
      case bpmn::NodeKind::GatewaySplit:
        return build_if(item);
      default:
        throw DecompileError("unexpected node kind in walk");
    }
  }

  ir::Stmt build_loop(const bpmn::WalkItem& item) {
    const bpmn::Node* n = item.node;
    const bpmn::TextAnnotation* ann = doc_.annotation_for(n->id);
    if (!ann)
      throw DecompileError("loop subprocess '" + n->id +
                           "' has no header annotation");
    std::string header = ir::collapse_whitespace(ann->text);
    std::vector<bpmn::WalkItem> body_items = [&] {
      try {
        return bpmn::walk_scope(n->children);
      } catch (const bpmn::WalkError& e) {
        throw DecompileError(e.what());
      }
    }();

    if (n->loop == bpmn::LoopKind::MultiInstanceSequential) {
      if (header.rfind("for ", 0) != 0)
        throw DecompileError("annotation '" + header +
                             "' does not match 'for <var> in <iterable>'");
      size_t in_pos = header.find(" in ");
      if (in_pos == std::string::npos)
        throw DecompileError("annotation '" + header +
                             "' does not match 'for <var> in <iterable>'");
      ir::For loop;
      loop.loop_var = header.substr(4, in_pos - 4);
      loop.iterable = header.substr(in_pos + 4);
      if (!ir::is_identifier(loop.loop_var) ||
          !ir::is_identifier(loop.iterable))
        throw DecompileError("annotation '" + header +
                             "' does not match 'for <var> in <iterable>'");
      bound_.insert(loop.loop_var);
      loop.body = build_block(body_items);
      if (loop.body.empty())
        throw DecompileError("loop subprocess '" + n->id + "' has empty body");
      return ir::Stmt{std::move(loop)};
    }
    if (n->loop == bpmn::LoopKind::StandardLoop) {
      if (header.rfind("while ", 0) != 0)
        throw DecompileError("annotation '" + header +
                             "' does not match 'while <condition>'");
      ir::While loop;
      loop.condition = header.substr(6);
      loop.body = build_block(body_items);
      if (loop.body.empty())
        throw DecompileError("loop subprocess '" + n->id + "' has empty body");
      return ir::Stmt{std::move(loop)};
    }
    throw DecompileError("subprocess '" + n->id +
                         "' has no loop characteristics");
  }

  ir::Stmt build_if(const bpmn::WalkItem& item) {
    ir::If node;
    node.condition = item.cond_flow && item.cond_flow->condition
                         ? ir::collapse_whitespace(*item.cond_flow->condition)
                         : "";
    if (node.condition.empty())
      throw DecompileError("gateway '" + item.node->id +
                           "' has no condition on its conditional flow");
    node.then_body = build_block(item.body);
    if (node.then_body.empty())
      throw DecompileError("gateway '" + item.node->id +
                           "' has an empty then-branch");
    if (!item.else_body.empty()) node.else_body = build_block(item.else_body);
    return ir::Stmt{std::move(node)};
  }

  const bpmn::Document& doc_;
  std::map<std::string, int> var_counts_;
  std::set<std::string> bound_;
  std::vector<std::string> assign_targets_;
};

}  // namespace detail

inline ir::Program decompile(const bpmn::Document& doc) {
  return detail::Decompiler(doc).run();
}

}  // namespace flowgen::bpmn2py
