#pragma once

// Edit scripts between two IR programs: LCS alignment on statement
// signatures per scope, recursing into matched compound statements. Scripts
// apply back-to-front so earlier paths stay valid.

#include <algorithm>
#include <cctype>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "flowgen/ir.hpp"

namespace flowgen::flow_diff {

class PathError : public std::runtime_error {
 public:
  explicit PathError(const std::string& message)
      : std::runtime_error(message) {}
};

// branch 0 descends into a statement's body / then-branch, 1 into its else.
struct PathStep {
  int index = 0;
  int branch = 0;
  friend bool operator==(const PathStep&, const PathStep&) = default;
};
using Path = std::vector<PathStep>;

struct InsertStmt {
  Path path;  // insert before this index
  ir::Stmt stmt;
  friend bool operator==(const InsertStmt&, const InsertStmt&) = default;
};
struct DeleteStmt {
  Path path;
  friend bool operator==(const DeleteStmt&, const DeleteStmt&) = default;
};
struct ReplaceCall {
  Path path;
  ir::Call call;
  friend bool operator==(const ReplaceCall&, const ReplaceCall&) = default;
};
struct WrapInLoop {
  Path path;   // first statement of the range
  int count = 1;
  std::string header;  // "for <var> in <iterable>" or "while <cond>"
  friend bool operator==(const WrapInLoop&, const WrapInLoop&) = default;
};
struct UnwrapLoop {
  Path path;
  friend bool operator==(const UnwrapLoop&, const UnwrapLoop&) = default;
};
struct SetCondition {
  Path path;
  std::string text;  // condition for if/while, "<var> in <iterable>" for for
  friend bool operator==(const SetCondition&, const SetCondition&) = default;
};

using EditOp = std::variant<InsertStmt, DeleteStmt, ReplaceCall, WrapInLoop,
                            UnwrapLoop, SetCondition>;

struct EditScript {
  std::vector<EditOp> ops;
  bool empty() const { return ops.empty(); }
};

inline const Path& op_path(const EditOp& op) {
  return std::visit([](const auto& o) -> const Path& { return o.path; }, op);
}

// ---------------------------------------------------------------------------
// path navigation

namespace detail {

inline ir::Block* descend(ir::Block* block, const PathStep& step) {
  if (step.index < 0 || static_cast<size_t>(step.index) >= block->size())
    throw PathError("path index " + std::to_string(step.index) +
                    " out of range");
  ir::Stmt& stmt = (*block)[static_cast<size_t>(step.index)];
  if (auto* iff = std::get_if<ir::If>(&stmt.node)) {
    if (step.branch == 0) return &iff->then_body;
    if (!iff->else_body) iff->else_body.emplace();
    return &*iff->else_body;
  }
  if (auto* loop = std::get_if<ir::For>(&stmt.node)) return &loop->body;
  if (auto* loop = std::get_if<ir::While>(&stmt.node)) return &loop->body;
  throw PathError("path descends into a non-compound statement");
}

inline ir::Block* parent_block(ir::Program& program, const Path& path) {
  if (path.empty()) throw PathError("empty path");
  ir::Block* block = &program.statements;
  for (size_t i = 0; i + 1 < path.size(); ++i)
    block = descend(block, path[i]);
  return block;
}

inline ir::Stmt& stmt_at(ir::Program& program, const Path& path) {
  ir::Block* block = parent_block(program, path);
  int index = path.back().index;
  if (index < 0 || static_cast<size_t>(index) >= block->size())
    throw PathError("path index " + std::to_string(index) + " out of range");
  return (*block)[static_cast<size_t>(index)];
}

inline ir::Stmt parse_loop_header(const std::string& header, ir::Block body) {
  if (header.rfind("while ", 0) == 0) {
    ir::While loop;
    loop.condition = ir::collapse_whitespace(header.substr(6));
    loop.body = std::move(body);
    return ir::Stmt{std::move(loop)};
  }
  if (header.rfind("for ", 0) == 0) {
    std::string rest = ir::collapse_whitespace(header.substr(4));
    size_t in_pos = rest.find(" in ");
    if (in_pos != std::string::npos) {
      ir::For loop;
      loop.loop_var = rest.substr(0, in_pos);
      loop.iterable = rest.substr(in_pos + 4);
      if (ir::is_identifier(loop.loop_var) && ir::is_identifier(loop.iterable)) {
        loop.body = std::move(body);
        return ir::Stmt{std::move(loop)};
      }
    }
  }
  throw PathError("invalid loop header '" + header + "'");
}

inline void prune_empty_else(ir::Block& block) {
  for (ir::Stmt& stmt : block) {
    if (auto* iff = std::get_if<ir::If>(&stmt.node)) {
      prune_empty_else(iff->then_body);
      if (iff->else_body) {
        prune_empty_else(*iff->else_body);
        if (iff->else_body->empty()) iff->else_body.reset();
      }
    } else if (auto* loop = std::get_if<ir::For>(&stmt.node)) {
      prune_empty_else(loop->body);
    } else if (auto* loop = std::get_if<ir::While>(&stmt.node)) {
      prune_empty_else(loop->body);
    }
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// apply

inline ir::Program apply_ir(ir::Program base, const EditScript& script) {
  for (const EditOp& op : script.ops) {
    std::visit(
        [&](const auto& o) {
          using T = std::decay_t<decltype(o)>;
          if constexpr (std::is_same_v<T, InsertStmt>) {
            ir::Block* block = detail::parent_block(base, o.path);
            int index = o.path.back().index;
            if (index < 0 || static_cast<size_t>(index) > block->size())
              throw PathError("insert index out of range");
            block->insert(block->begin() + index, o.stmt);
          } else if constexpr (std::is_same_v<T, DeleteStmt>) {
            ir::Block* block = detail::parent_block(base, o.path);
            int index = o.path.back().index;
            if (index < 0 || static_cast<size_t>(index) >= block->size())
              throw PathError("delete index out of range");
            block->erase(block->begin() + index);
          } else if constexpr (std::is_same_v<T, ReplaceCall>) {
            ir::Stmt& stmt = detail::stmt_at(base, o.path);
            if (auto* assign = std::get_if<ir::Assign>(&stmt.node))
              assign->call = o.call;
            else if (auto* call = std::get_if<ir::ExprCall>(&stmt.node))
              call->call = o.call;
            else
              throw PathError("replace_call target is not a call statement");
          } else if constexpr (std::is_same_v<T, WrapInLoop>) {
            ir::Block* block = detail::parent_block(base, o.path);
            int first = o.path.back().index;
            if (first < 0 || o.count < 1 ||
                static_cast<size_t>(first + o.count) > block->size())
              throw PathError("wrap range out of range");
            ir::Block body(block->begin() + first,
                           block->begin() + first + o.count);
            ir::Stmt loop = detail::parse_loop_header(o.header, std::move(body));
            block->erase(block->begin() + first,
                         block->begin() + first + o.count);
            block->insert(block->begin() + first, std::move(loop));
          } else if constexpr (std::is_same_v<T, UnwrapLoop>) {
            ir::Block* block = detail::parent_block(base, o.path);
            int index = o.path.back().index;
            if (index < 0 || static_cast<size_t>(index) >= block->size())
              throw PathError("unwrap index out of range");
            ir::Stmt& stmt = (*block)[static_cast<size_t>(index)];
            ir::Block body;
            if (auto* loop = std::get_if<ir::For>(&stmt.node))
              body = std::move(loop->body);
            else if (auto* loop = std::get_if<ir::While>(&stmt.node))
              body = std::move(loop->body);
            else
              throw PathError("unwrap target is not a loop");
            block->erase(block->begin() + index);
            block->insert(block->begin() + index,
                          std::make_move_iterator(body.begin()),
                          std::make_move_iterator(body.end()));
          } else {  // SetCondition
            ir::Stmt& stmt = detail::stmt_at(base, o.path);
            if (auto* iff = std::get_if<ir::If>(&stmt.node)) {
              iff->condition = ir::collapse_whitespace(o.text);
            } else if (auto* loop = std::get_if<ir::While>(&stmt.node)) {
              loop->condition = ir::collapse_whitespace(o.text);
            } else if (auto* loop = std::get_if<ir::For>(&stmt.node)) {
              std::string rest = ir::collapse_whitespace(o.text);
              size_t in_pos = rest.find(" in ");
              if (in_pos == std::string::npos)
                throw PathError("set_condition on a for-loop needs "
                                "'<var> in <iterable>'");
              loop->loop_var = rest.substr(0, in_pos);
              loop->iterable = rest.substr(in_pos + 4);
            } else {
              throw PathError("set_condition target has no condition");
            }
          }
        },
        op);
  }
  detail::prune_empty_else(base.statements);
  return base;
}

// ---------------------------------------------------------------------------
// diff

namespace detail {

enum class SigKind { AssignCall, BareCall, If, For, While };

struct Sig {
  SigKind kind;
  std::string label;
  friend bool operator==(const Sig&, const Sig&) = default;
};

inline Sig signature(const ir::Stmt& stmt) {
  return std::visit(
      [](const auto& node) -> Sig {
        using T = std::decay_t<decltype(node)>;
        if constexpr (std::is_same_v<T, ir::Assign>) {
          return {SigKind::AssignCall, node.call.callee};
        } else if constexpr (std::is_same_v<T, ir::ExprCall>) {
          return {SigKind::BareCall, node.call.callee};
        } else if constexpr (std::is_same_v<T, ir::If>) {
          return {SigKind::If, node.condition};
        } else if constexpr (std::is_same_v<T, ir::For>) {
          return {SigKind::For, node.loop_var + " in " + node.iterable};
        } else {
          return {SigKind::While, node.condition};
        }
      },
      stmt.node);
}

inline const ir::Call* call_of(const ir::Stmt& stmt) {
  if (const auto* a = std::get_if<ir::Assign>(&stmt.node)) return &a->call;
  if (const auto* c = std::get_if<ir::ExprCall>(&stmt.node)) return &c->call;
  return nullptr;
}

// every identifier a program mentions: assignment targets, loop variables,
// iterables, identifier arguments, and identifier-shaped words inside opaque
// condition texts
inline void collect_idents(const ir::Block& block, std::set<std::string>& out) {
  auto words = [&](const std::string& text) {
    size_t i = 0;
    while (i < text.size()) {
      if (std::isalpha(static_cast<unsigned char>(text[i])) || text[i] == '_') {
        size_t start = i;
        while (i < text.size() &&
               (std::isalnum(static_cast<unsigned char>(text[i])) ||
                text[i] == '_'))
          ++i;
        out.insert(text.substr(start, i - start));
      } else {
        ++i;
      }
    }
  };
  auto call_idents = [&](const ir::Call& call) {
    for (const ir::Arg& arg : call.args) {
      if (const auto* ref = std::get_if<ir::IdentRef>(&arg)) out.insert(ref->name);
      if (const auto* kw = std::get_if<ir::KeywordArg>(&arg))
        if (const auto* ref = std::get_if<ir::IdentRef>(&kw->value))
          out.insert(ref->name);
    }
  };
  for (const ir::Stmt& stmt : block) {
    std::visit(
        [&](const auto& node) {
          using T = std::decay_t<decltype(node)>;
          if constexpr (std::is_same_v<T, ir::Assign>) {
            out.insert(node.target);
            call_idents(node.call);
          } else if constexpr (std::is_same_v<T, ir::ExprCall>) {
            call_idents(node.call);
          } else if constexpr (std::is_same_v<T, ir::If>) {
            words(node.condition);
            collect_idents(node.then_body, out);
            if (node.else_body) collect_idents(*node.else_body, out);
          } else if constexpr (std::is_same_v<T, ir::For>) {
            out.insert(node.loop_var);
            out.insert(node.iterable);
            collect_idents(node.body, out);
          } else {
            words(node.condition);
            collect_idents(node.body, out);
          }
        },
        stmt.node);
  }
}

// strict alignment key: the full canonical statement text for call statements
// (so only verbatim-equal atoms match), plain signature for compounds
inline Sig strict_signature(const ir::Stmt& stmt) {
  Sig sig = signature(stmt);
  if (sig.kind == SigKind::AssignCall || sig.kind == SigKind::BareCall) {
    sig.label = ir::print_ir(ir::Program{{stmt}});
  }
  return sig;
}

class Differ {
 public:
  std::vector<EditOp> ops;

  // `strict` aligns call statements only when textually identical and never
  // pairs renamed assignments, trading script size for exactness
  Differ(bool strict, const ir::Program& target) : strict_(strict) {
    collect_idents(target.statements, target_idents_);
  }

  void diff_block(const ir::Block& base, const ir::Block& target,
                  const Path& prefix) {
    const size_t n = base.size(), m = target.size();
    std::vector<Sig> bs, ts;
    bs.reserve(n);
    ts.reserve(m);
    for (const ir::Stmt& s : base)
      bs.push_back(strict_ ? strict_signature(s) : signature(s));
    for (const ir::Stmt& s : target)
      ts.push_back(strict_ ? strict_signature(s) : signature(s));

    // LCS table
    std::vector<std::vector<int>> lcs(n + 1, std::vector<int>(m + 1, 0));
    for (size_t i = n; i-- > 0;)
      for (size_t j = m; j-- > 0;)
        lcs[i][j] = bs[i] == ts[j]
                        ? lcs[i + 1][j + 1] + 1
                        : std::max(lcs[i + 1][j], lcs[i][j + 1]);

    std::vector<std::pair<size_t, size_t>> matches;
    for (size_t i = 0, j = 0; i < n && j < m;) {
      if (bs[i] == ts[j]) {
        matches.emplace_back(i, j);
        ++i, ++j;
      } else if (lcs[i + 1][j] >= lcs[i][j + 1]) {
        ++i;
      } else {
        ++j;
      }
    }

    // emit ops right-to-left so application back-to-front keeps paths valid
    size_t bi = n, ti = m;
    for (size_t k = matches.size() + 1; k-- > 0;) {
      size_t mb = k == 0 ? 0 : matches[k - 1].first + 1;
      size_t mt = k == 0 ? 0 : matches[k - 1].second + 1;
      emit_gap(base, target, prefix, mb, bi, mt, ti);
      if (k == 0) break;
      bi = matches[k - 1].first;
      ti = matches[k - 1].second;
      // matched compounds: recurse into bodies
      recurse_match(base[bi], target[ti], prefix, static_cast<int>(bi));
    }
  }

 private:
  bool strict_ = false;
  std::set<std::string> target_idents_;

  Path child(const Path& prefix, int index, int branch = 0) const {
    Path p = prefix;
    p.push_back({index, branch});
    return p;
  }

  void recurse_match(const ir::Stmt& base, const ir::Stmt& target,
                     const Path& prefix, int index) {
    if (const auto* bf = std::get_if<ir::For>(&base.node)) {
      const auto& tf = std::get<ir::For>(target.node);
      Path p = child(prefix, index);
      diff_block(bf->body, tf.body, p);
    } else if (const auto* bw = std::get_if<ir::While>(&base.node)) {
      const auto& tw = std::get<ir::While>(target.node);
      diff_block(bw->body, tw.body, child(prefix, index));
    } else if (const auto* bi = std::get_if<ir::If>(&base.node)) {
      const auto& tif = std::get<ir::If>(target.node);
      if (bi->else_body || tif.else_body) {
        static const ir::Block empty;
        diff_block(bi->else_body ? *bi->else_body : empty,
                   tif.else_body ? *tif.else_body : empty,
                   child(prefix, index, 1));
      }
      diff_block(bi->then_body, tif.then_body, child(prefix, index, 0));
    }
  }

  // unmatched base range [b0,b1) vs target range [t0,t1)
  void emit_gap(const ir::Block& base, const ir::Block& target,
                const Path& prefix, size_t b0, size_t b1, size_t t0,
                size_t t1) {
    const size_t deletions = b1 - b0, insertions = t1 - t0;
    const size_t paired = std::min(deletions, insertions);

    for (size_t k = deletions; k-- > paired;)
      ops.push_back(DeleteStmt{child(prefix, static_cast<int>(b0 + k))});
    for (size_t k = insertions; k-- > paired;)
      ops.push_back(InsertStmt{child(prefix, static_cast<int>(b0 + paired)),
                               target[t0 + k]});
    for (size_t k = paired; k-- > 0;)
      emit_pair(base[b0 + k], target[t0 + k], prefix,
                static_cast<int>(b0 + k));
  }

  void emit_pair(const ir::Stmt& base, const ir::Stmt& target,
                 const Path& prefix, int index) {
    Sig bsig = signature(base), tsig = signature(target);
    if (bsig.kind == tsig.kind &&
        (bsig.kind == SigKind::AssignCall || bsig.kind == SigKind::BareCall)) {
      // replacing in place keeps the base assignment's variable name; that is
      // only safe when the old name cannot collide with a name the target
      // mentions elsewhere (otherwise bindings shift)
      bool renamed_hazard = false;
      if (const auto* ba = std::get_if<ir::Assign>(&base.node)) {
        const auto& ta = std::get<ir::Assign>(target.node);
        renamed_hazard =
            strict_ ||
            (ba->target != ta.target && target_idents_.count(ba->target));
      }
      if (!renamed_hazard) {
        ops.push_back(ReplaceCall{child(prefix, index), *call_of(target)});
        return;
      }
      ops.push_back(DeleteStmt{child(prefix, index)});
      ops.push_back(InsertStmt{child(prefix, index), target});
      return;
    }
    if (bsig.kind == tsig.kind) {  // compound of the same kind
      if (bsig.label != tsig.label)
        ops.push_back(SetCondition{child(prefix, index), tsig.label});
      recurse_match(base, target, prefix, index);
      return;
    }
    ops.push_back(DeleteStmt{child(prefix, index)});
    ops.push_back(InsertStmt{child(prefix, index), target});
  }
};

}  // namespace detail

// Minimal edit script under LCS alignment; applying the result to `base`
// always reproduces `target` up to normalization. The relaxed alignment can
// rename variables in ways that shift later bindings, so the script is
// verified and recomputed with stricter alignment (ultimately a full
// rewrite) when needed.
inline EditScript diff_ir(const ir::Program& base, const ir::Program& target) {
  auto reproduces = [&](const EditScript& script) {
    try {
      return ir::normalize_ir(apply_ir(base, script)) ==
             ir::normalize_ir(target);
    } catch (const PathError&) {
      return false;
    }
  };

  for (bool strict : {false, true}) {
    detail::Differ differ(strict, target);
    differ.diff_block(base.statements, target.statements, {});
    EditScript script{std::move(differ.ops)};
    if (reproduces(script)) return script;
  }

  // last resort: rewrite everything
  EditScript rewrite;
  for (size_t i = base.statements.size(); i-- > 0;)
    rewrite.ops.push_back(DeleteStmt{{{static_cast<int>(i), 0}}});
  for (size_t i = target.statements.size(); i-- > 0;)
    rewrite.ops.push_back(InsertStmt{{{0, 0}}, target.statements[i]});
  return rewrite;
}

// ---------------------------------------------------------------------------
// JSON form (CLI `diff --json` / `patch --script`)

namespace detail {

inline nlohmann::json path_json(const Path& path) {
  nlohmann::json arr = nlohmann::json::array();
  for (const PathStep& s : path) arr.push_back({s.index, s.branch});
  return arr;
}

inline Path path_from_json(const nlohmann::json& arr) {
  Path path;
  for (const auto& s : arr) path.push_back({s.at(0), s.at(1)});
  return path;
}

inline std::string stmt_source(const ir::Stmt& stmt) {
  ir::Program tmp;
  tmp.statements.push_back(stmt);
  return ir::print_ir(tmp);
}

inline ir::Stmt stmt_from_source(const std::string& source) {
  ir::Program program = ir::parse_ir(source);
  if (program.statements.size() != 1)
    throw PathError("op source must contain exactly one statement");
  return program.statements.front();
}

inline ir::Call call_from_source(const std::string& source) {
  ir::Stmt stmt = stmt_from_source(source);
  const ir::Call* call = call_of(stmt);
  if (!call) throw PathError("op source is not a call");
  return *call;
}

}  // namespace detail

inline nlohmann::json to_json(const EditScript& script) {
  nlohmann::json ops = nlohmann::json::array();
  for (const EditOp& op : script.ops) {
    nlohmann::json j;
    std::visit(
        [&](const auto& o) {
          using T = std::decay_t<decltype(o)>;
          j["path"] = detail::path_json(o.path);
          if constexpr (std::is_same_v<T, InsertStmt>) {
            j["op"] = "insert";
            j["stmt"] = detail::stmt_source(o.stmt);
          } else if constexpr (std::is_same_v<T, DeleteStmt>) {
            j["op"] = "delete";
          } else if constexpr (std::is_same_v<T, ReplaceCall>) {
            j["op"] = "replace_call";
            ir::Program tmp;
            tmp.statements.push_back(ir::Stmt{ir::ExprCall{o.call}});
            j["call"] = ir::print_ir(tmp);
          } else if constexpr (std::is_same_v<T, WrapInLoop>) {
            j["op"] = "wrap_in_loop";
            j["count"] = o.count;
            j["header"] = o.header;
          } else if constexpr (std::is_same_v<T, UnwrapLoop>) {
            j["op"] = "unwrap_loop";
          } else {
            j["op"] = "set_condition";
            j["text"] = o.text;
          }
        },
        op);
    ops.push_back(std::move(j));
  }
  return nlohmann::json{{"ops", ops}};
}

inline EditScript script_from_json(const nlohmann::json& j) {
  EditScript script;
  for (const auto& o : j.at("ops")) {
    const std::string op = o.at("op");
    Path path = detail::path_from_json(o.at("path"));
    if (op == "insert")
      script.ops.push_back(
          InsertStmt{std::move(path), detail::stmt_from_source(o.at("stmt"))});
    else if (op == "delete")
      script.ops.push_back(DeleteStmt{std::move(path)});
    else if (op == "replace_call")
      script.ops.push_back(ReplaceCall{
          std::move(path), detail::call_from_source(o.at("call"))});
    else if (op == "wrap_in_loop")
      script.ops.push_back(
          WrapInLoop{std::move(path), o.at("count"), o.at("header")});
    else if (op == "unwrap_loop")
      script.ops.push_back(UnwrapLoop{std::move(path)});
    else if (op == "set_condition")
      script.ops.push_back(SetCondition{std::move(path), o.at("text")});
    else
      throw PathError("unknown edit op '" + op + "'");
  }
  return script;
}

}  // namespace flowgen::flow_diff
