#pragma once

// Restricted-Python workflow IR: AST, parser, canonical printer, normalizer.
//
// The accepted subset is: assignments of a single call, bare call statements,
// if/else, for-loops over an identifier, and while-loops. Conditions are kept
// as opaque text. Indentation is spaces-only with a consistent width per
// nesting level; the printer always emits two spaces.

#include <algorithm>
#include <cctype>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <variant>
#include <vector>

namespace flowgen::ir {

struct SourceSpan {
  int line = 1;
  int column = 1;
};

class SyntaxError : public std::runtime_error {
 public:
  SyntaxError(SourceSpan span, const std::string& message)
      : std::runtime_error("line " + std::to_string(span.line) + ", col " +
                           std::to_string(span.column) + ": " + message),
        span_(span) {}
  SourceSpan span() const { return span_; }

 private:
  SourceSpan span_;
};

// The callee name reserved for human steps with no backing API.
inline constexpr std::string_view kUserTaskCallee = "user_task";

struct StringLit {
  std::string value;
  friend bool operator==(const StringLit&, const StringLit&) = default;
};

struct IdentRef {
  std::string name;
  friend bool operator==(const IdentRef&, const IdentRef&) = default;
};

struct KeywordArg {
  std::string name;
  std::variant<StringLit, IdentRef> value;
  friend bool operator==(const KeywordArg&, const KeywordArg&) = default;
};

using Arg = std::variant<StringLit, IdentRef, KeywordArg>;

struct Call {
  std::string callee;
  std::vector<Arg> args;
  friend bool operator==(const Call&, const Call&) = default;
};

struct Stmt;
using Block = std::vector<Stmt>;

struct Assign {
  std::string target;
  Call call;
};

struct ExprCall {
  Call call;
};

struct If {
  std::string condition;  // opaque, whitespace-collapsed
  Block then_body;
  std::optional<Block> else_body;
};

struct For {
  std::string loop_var;
  std::string iterable;
  Block body;
};

struct While {
  std::string condition;
  Block body;
};

struct Stmt {
  std::variant<Assign, ExprCall, If, For, While> node;
};

struct Program {
  Block statements;
};

bool operator==(const Stmt& a, const Stmt& b);

inline bool operator==(const Assign& a, const Assign& b) {
  return a.target == b.target && a.call == b.call;
}
inline bool operator==(const ExprCall& a, const ExprCall& b) {
  return a.call == b.call;
}
inline bool operator==(const If& a, const If& b) {
  return a.condition == b.condition && a.then_body == b.then_body &&
         a.else_body == b.else_body;
}
inline bool operator==(const For& a, const For& b) {
  return a.loop_var == b.loop_var && a.iterable == b.iterable &&
         a.body == b.body;
}
inline bool operator==(const While& a, const While& b) {
  return a.condition == b.condition && a.body == b.body;
}
inline bool operator==(const Stmt& a, const Stmt& b) {
  return a.node == b.node;
}
inline bool operator==(const Program& a, const Program& b) {
  return a.statements == b.statements;
}

inline bool is_identifier(std::string_view s) {
  if (s.empty()) return false;
  if (std::isdigit(static_cast<unsigned char>(s[0]))) return false;
  return std::all_of(s.begin(), s.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '_';
  });
}

inline std::string collapse_whitespace(std::string_view s) {
  std::string out;
  bool in_space = false;
  for (char c : s) {
    if (c == ' ' || c == '\t') {
      in_space = true;
      continue;
    }
    if (in_space && !out.empty()) out += ' ';
    in_space = false;
    out += c;
  }
  return out;
}

namespace detail {

// Statement kinds Python has but the subset rejects outright.
inline const std::unordered_set<std::string>& rejected_keywords() {
  static const std::unordered_set<std::string> kw = {
      "def",    "class",  "import", "from",     "return",   "try",
      "except", "finally", "with",  "lambda",   "global",   "nonlocal",
      "assert", "raise",  "del",    "pass",     "break",    "continue",
      "yield",  "async",  "await",  "match"};
  return kw;
}

inline bool balanced_brackets(std::string_view s) {
  int paren = 0, bracket = 0;
  for (char c : s) {
    if (c == '(') ++paren;
    if (c == ')') --paren;
    if (c == '[') ++bracket;
    if (c == ']') --bracket;
    if (paren < 0 || bracket < 0) return false;
  }
  return paren == 0 && bracket == 0;
}

struct Line {
  int indent = 0;
  std::string text;
  int number = 1;
};

inline std::vector<Line> split_lines(std::string_view source) {
  std::vector<Line> lines;
  int number = 0;
  size_t pos = 0;
  while (pos <= source.size()) {
    size_t nl = source.find('\n', pos);
    std::string_view raw = source.substr(
        pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    ++number;
    pos = nl == std::string_view::npos ? source.size() + 1 : nl + 1;
    // strip trailing whitespace / carriage return
    size_t end = raw.size();
    while (end > 0 && (raw[end - 1] == ' ' || raw[end - 1] == '\r' ||
                       raw[end - 1] == '\t'))
      --end;
    raw = raw.substr(0, end);
    size_t indent = 0;
    while (indent < raw.size() && raw[indent] == ' ') ++indent;
    if (indent < raw.size() && raw[indent] == '\t')
      throw SyntaxError({number, static_cast<int>(indent) + 1},
                        "tabs are not allowed in indentation");
    if (indent == raw.size()) continue;  // blank line
    lines.push_back({static_cast<int>(indent),
                     std::string(raw.substr(indent)), number});
  }
  return lines;
}

class CallParser {
 public:
  CallParser(std::string_view text, int line, int column_offset)
      : text_(text), line_(line), offset_(column_offset) {}

  Call parse() {
    Call call;
    call.callee = parse_identifier("function name");
    expect('(');
    skip_spaces();
    if (!at(')')) {
      for (;;) {
        call.args.push_back(parse_arg());
        skip_spaces();
        if (at(',')) {
          ++pos_;
          skip_spaces();
          continue;
        }
        break;
      }
    }
    expect(')');
    skip_spaces();
    if (pos_ != text_.size())
      fail("unexpected trailing characters after call");
    if (call.callee == kUserTaskCallee &&
        (call.args.size() != 1 ||
         !std::holds_alternative<StringLit>(call.args.front())))
      fail("user_task takes exactly one string argument");
    return call;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) {
    throw SyntaxError({line_, offset_ + static_cast<int>(pos_) + 1}, msg);
  }
  bool at(char c) const { return pos_ < text_.size() && text_[pos_] == c; }
  void skip_spaces() {
    while (pos_ < text_.size() && text_[pos_] == ' ') ++pos_;
  }
  void expect(char c) {
    if (!at(c)) {
      if (c == ')') fail("unclosed parenthesis");
      fail(std::string("expected '") + c + "'");
    }
    ++pos_;
  }
  std::string parse_identifier(const char* what) {
    size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
            text_[pos_] == '_'))
      ++pos_;
    std::string name(text_.substr(start, pos_ - start));
    if (!is_identifier(name)) fail(std::string("expected ") + what);
    return name;
  }
  StringLit parse_string() {
    char quote = text_[pos_++];
    std::string value;
    while (pos_ < text_.size() && text_[pos_] != quote) {
      char c = text_[pos_++];
      if (c == '\\' && pos_ < text_.size()) {
        char esc = text_[pos_++];
        switch (esc) {
          case 'n': value += '\n'; break;
          case 't': value += '\t'; break;
          default: value += esc; break;
        }
      } else {
        value += c;
      }
    }
    if (pos_ >= text_.size()) fail("unterminated string literal");
    ++pos_;  // closing quote
    return StringLit{value};
  }
  Arg parse_arg() {
    if (at('\'') || at('"')) return parse_string();
    std::string name = parse_identifier("argument");
    skip_spaces();
    if (at('=')) {
      ++pos_;
      skip_spaces();
      if (at('\'') || at('"')) return KeywordArg{name, parse_string()};
      return KeywordArg{name, IdentRef{parse_identifier("keyword value")}};
    }
    return IdentRef{name};
  }

  std::string_view text_;
  size_t pos_ = 0;
  int line_;
  int offset_;
};

class Parser {
 public:
  explicit Parser(const std::vector<Line>& lines) : lines_(lines) {}

  Block parse_block(int indent) {
    Block block;
    while (pos_ < lines_.size()) {
      const Line& line = lines_[pos_];
      if (line.indent < indent) break;
      if (line.indent > indent)
        throw SyntaxError({line.number, line.indent + 1},
                          "inconsistent indentation");
      block.push_back(parse_stmt(indent));
    }
    return block;
  }

 private:
  const Line& current() const { return lines_[pos_]; }

  Block parse_body(int parent_indent, int header_line) {
    if (pos_ >= lines_.size() || lines_[pos_].indent <= parent_indent)
      throw SyntaxError({header_line, 1}, "empty block after ':'");
    int body_indent = lines_[pos_].indent;
    Block body = parse_block(body_indent);
    // a dedent must land back on an enclosing level; parse_block of the
    // parent catches levels that never existed
    if (pos_ < lines_.size() && lines_[pos_].indent > parent_indent &&
        lines_[pos_].indent < body_indent)
      throw SyntaxError({current().number, current().indent + 1},
                        "inconsistent dedent");
    return body;
  }

  Stmt parse_if(int indent, std::string condition, int header_line) {
    If node;
    node.condition = std::move(condition);
    node.then_body = parse_body(indent, header_line);
    if (pos_ < lines_.size() && current().indent == indent) {
      const Line& next = current();
      if (next.text == "else:") {
        ++pos_;
        node.else_body = parse_body(indent, next.number);
      } else if (next.text.rfind("elif ", 0) == 0 ||
                 next.text.rfind("elif(", 0) == 0) {
        std::string cond = header_condition(next, 4);
        ++pos_;
        Block els;
        els.push_back(parse_if(indent, std::move(cond), next.number));
        node.else_body = std::move(els);
      }
    }
    return Stmt{std::move(node)};
  }

  std::string header_condition(const Line& line, size_t keyword_len) {
    std::string_view text = line.text;
    if (text.back() != ':')
      throw SyntaxError({line.number, static_cast<int>(text.size())},
                        "expected ':' at end of header");
    std::string cond =
        collapse_whitespace(text.substr(keyword_len, text.size() - keyword_len - 1));
    if (cond.empty())
      throw SyntaxError({line.number, static_cast<int>(keyword_len) + 1},
                        "missing condition");
    if (cond.find('\n') != std::string::npos || !balanced_brackets(cond))
      throw SyntaxError({line.number, static_cast<int>(keyword_len) + 1},
                        "unbalanced brackets in condition");
    return cond;
  }

  Stmt parse_stmt(int indent) {
    const Line line = current();
    const std::string& text = line.text;
    size_t word_end = 0;
    while (word_end < text.size() &&
           (std::isalnum(static_cast<unsigned char>(text[word_end])) ||
            text[word_end] == '_'))
      ++word_end;
    std::string first_word = text.substr(0, word_end);

    if (rejected_keywords().count(first_word))
      throw SyntaxError({line.number, line.indent + 1},
                        "'" + first_word + "' is outside the supported subset");
    if (first_word == "else" || first_word == "elif")
      throw SyntaxError({line.number, line.indent + 1},
                        "'" + first_word + "' without matching 'if'");

    if (first_word == "if" && word_end < text.size()) {
      std::string cond = header_condition(line, 2);
      ++pos_;
      return parse_if(indent, std::move(cond), line.number);
    }
    if (first_word == "while" && word_end < text.size()) {
      std::string cond = header_condition(line, 5);
      ++pos_;
      While node;
      node.condition = std::move(cond);
      node.body = parse_body(indent, line.number);
      return Stmt{std::move(node)};
    }
    if (first_word == "for" && word_end < text.size()) {
      std::string header = header_condition(line, 3);  // "<var> in <iter>"
      size_t in_pos = header.find(" in ");
      if (in_pos == std::string::npos)
        throw SyntaxError({line.number, line.indent + 1},
                          "for-loop header must be 'for <var> in <iterable>:'");
      For node;
      node.loop_var = header.substr(0, in_pos);
      node.iterable = header.substr(in_pos + 4);
      if (!is_identifier(node.loop_var) || !is_identifier(node.iterable))
        throw SyntaxError({line.number, line.indent + 1},
                          "for-loop variable and iterable must be identifiers");
      ++pos_;
      node.body = parse_body(indent, line.number);
      return Stmt{std::move(node)};
    }

    // assignment or bare call
    ++pos_;
    size_t eq = find_assignment_eq(text);
    if (eq != std::string::npos) {
      std::string target = collapse_whitespace(text.substr(0, eq));
      if (!is_identifier(target))
        throw SyntaxError({line.number, line.indent + 1},
                          "assignment target must be an identifier");
      size_t rhs_start = eq + 1;
      while (rhs_start < text.size() && text[rhs_start] == ' ') ++rhs_start;
      CallParser cp(std::string_view(text).substr(rhs_start), line.number,
                    line.indent + static_cast<int>(rhs_start));
      return Stmt{Assign{std::move(target), cp.parse()}};
    }
    CallParser cp(text, line.number, line.indent);
    return Stmt{ExprCall{cp.parse()}};
  }

  // '=' at depth 0 that is not part of a keyword argument (those sit inside
  // parentheses) and not '=='
  static size_t find_assignment_eq(const std::string& text) {
    int depth = 0;
    for (size_t i = 0; i < text.size(); ++i) {
      char c = text[i];
      if (c == '(') ++depth;
      if (c == ')') --depth;
      if (c == '=' && depth == 0) {
        if (i + 1 < text.size() && text[i + 1] == '=') return std::string::npos;
        return i;
      }
    }
    return std::string::npos;
  }

  const std::vector<Line>& lines_;
  size_t pos_ = 0;
};

}  // namespace detail

inline Program parse_ir(std::string_view source) {
  std::vector<detail::Line> lines = detail::split_lines(source);
  if (lines.empty()) throw SyntaxError({1, 1}, "empty program");
  if (lines.front().indent != 0)
    throw SyntaxError({lines.front().number, lines.front().indent + 1},
                      "unexpected indentation at top level");
  detail::Parser parser(lines);
  Program program{parser.parse_block(0)};
  return program;
}

namespace detail {

inline void print_call(const Call& call, std::ostream& out) {
  out << call.callee << '(';
  bool first = true;
  auto quote = [&](const std::string& s) {
    out << '"';
    for (char c : s) {
      if (c == '"' || c == '\\') out << '\\';
      out << c;
    }
    out << '"';
  };
  for (const Arg& arg : call.args) {
    if (!first) out << ", ";
    first = false;
    if (const auto* lit = std::get_if<StringLit>(&arg)) {
      quote(lit->value);
    } else if (const auto* ref = std::get_if<IdentRef>(&arg)) {
      out << ref->name;
    } else {
      const auto& kw = std::get<KeywordArg>(arg);
      out << kw.name << '=';
      if (const auto* lit = std::get_if<StringLit>(&kw.value))
        quote(lit->value);
      else
        out << std::get<IdentRef>(kw.value).name;
    }
  }
  out << ')';
}

inline void print_block(const Block& block, std::ostream& out, int depth) {
  const std::string indent(static_cast<size_t>(depth) * 2, ' ');
  for (const Stmt& stmt : block) {
    out << indent;
    std::visit(
        [&](const auto& node) {
          using T = std::decay_t<decltype(node)>;
          if constexpr (std::is_same_v<T, Assign>) {
            out << node.target << " = ";
            print_call(node.call, out);
            out << '\n';
          } else if constexpr (std::is_same_v<T, ExprCall>) {
            print_call(node.call, out);
            out << '\n';
          } else if constexpr (std::is_same_v<T, If>) {
            out << "if " << node.condition << ":\n";
            print_block(node.then_body, out, depth + 1);
            if (node.else_body) {
              out << indent << "else:\n";
              print_block(*node.else_body, out, depth + 1);
            }
          } else if constexpr (std::is_same_v<T, For>) {
            out << "for " << node.loop_var << " in " << node.iterable << ":\n";
            print_block(node.body, out, depth + 1);
          } else {
            out << "while " << node.condition << ":\n";
            print_block(node.body, out, depth + 1);
          }
        },
        stmt.node);
  }
}

}  // namespace detail

inline std::string print_ir(const Program& program) {
  std::ostringstream out;
  detail::print_block(program.statements, out, 0);
  std::string text = out.str();
  if (!text.empty() && text.back() == '\n') text.pop_back();
  return text;
}

namespace detail {

struct Renamer {
  std::unordered_map<std::string, std::string> names;
  int next = 1;

  // every binding occurrence gets a fresh name: rebinding or shadowing a
  // name is indistinguishable from binding a new one after renaming
  std::string bind(const std::string& name) {
    std::string fresh = "v" + std::to_string(next++);
    names[name] = fresh;
    return fresh;
  }
  std::string ref(const std::string& name) const {
    auto it = names.find(name);
    return it == names.end() ? name : it->second;
  }

  void rename_call(Call& call) {
    for (Arg& arg : call.args) {
      if (auto* r = std::get_if<IdentRef>(&arg)) {
        r->name = ref(r->name);
      } else if (auto* kw = std::get_if<KeywordArg>(&arg)) {
        if (auto* v = std::get_if<IdentRef>(&kw->value)) v->name = ref(v->name);
      }
    }
  }

  void rename_block(Block& block) {
    for (Stmt& stmt : block) {
      std::visit(
          [&](auto& node) {
            using T = std::decay_t<decltype(node)>;
            if constexpr (std::is_same_v<T, Assign>) {
              rename_call(node.call);
              node.target = bind(node.target);
            } else if constexpr (std::is_same_v<T, ExprCall>) {
              rename_call(node.call);
            } else if constexpr (std::is_same_v<T, If>) {
              node.condition = collapse_whitespace(node.condition);
              rename_block(node.then_body);
              if (node.else_body) rename_block(*node.else_body);
            } else if constexpr (std::is_same_v<T, For>) {
              node.iterable = ref(node.iterable);
              node.loop_var = bind(node.loop_var);
              rename_block(node.body);
            } else {
              node.condition = collapse_whitespace(node.condition);
              rename_block(node.body);
            }
          },
          stmt.node);
    }
  }
};

}  // namespace detail

// Alpha-renames bound variables to v1, v2, ... in order of first binding.
// Callee names, string literals, and unbound references are untouched.
inline Program normalize_ir(Program program) {
  detail::Renamer renamer;
  renamer.rename_block(program.statements);
  return program;
}

namespace detail {

inline void collect_block(const Block& block, std::vector<std::string>& out) {
  for (const Stmt& stmt : block) {
    std::visit(
        [&](const auto& node) {
          using T = std::decay_t<decltype(node)>;
          if constexpr (std::is_same_v<T, Assign>) {
            if (node.call.callee != kUserTaskCallee)
              out.push_back(node.call.callee);
          } else if constexpr (std::is_same_v<T, ExprCall>) {
            if (node.call.callee != kUserTaskCallee)
              out.push_back(node.call.callee);
          } else if constexpr (std::is_same_v<T, If>) {
            collect_block(node.then_body, out);
            if (node.else_body) collect_block(*node.else_body, out);
          } else if constexpr (std::is_same_v<T, For>) {
            collect_block(node.body, out);
          } else {
            collect_block(node.body, out);
          }
        },
        stmt.node);
  }
}

}  // namespace detail

// Callee names of all calls in document order, excluding user_task.
inline std::vector<std::string> collect_activities(const Program& program) {
  std::vector<std::string> out;
  detail::collect_block(program.statements, out);
  return out;
}

}  // namespace flowgen::ir
