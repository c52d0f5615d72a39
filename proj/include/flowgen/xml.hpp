#pragma once

// Minimal XML document model: enough for BPMN 2.0 interchange files.
// Handles prolog, comments, CDATA, the five predefined entities, and
// single- or double-quoted attributes. No DTDs, no processing beyond that.

#include <cctype>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace flowgen::xml {

class ParseError : public std::runtime_error {
 public:
  ParseError(size_t offset, const std::string& message)
      : std::runtime_error("xml offset " + std::to_string(offset) + ": " +
                           message),
        offset_(offset) {}
  size_t offset() const { return offset_; }

 private:
  size_t offset_;
};

struct Element {
  std::string name;  // qualified name as written, e.g. "bpmn:task"
  std::vector<std::pair<std::string, std::string>> attrs;
  std::vector<Element> children;
  std::string text;  // concatenated character data (mixed content collapsed)

  std::string_view local_name() const {
    size_t colon = name.find(':');
    return colon == std::string::npos
               ? std::string_view(name)
               : std::string_view(name).substr(colon + 1);
  }

  const std::string* attr(std::string_view key) const {
    for (const auto& [k, v] : attrs) {
      if (k == key) return &v;
    }
    return nullptr;
  }

  std::string attr_or(std::string_view key, std::string fallback = "") const {
    const std::string* v = attr(key);
    return v ? *v : std::move(fallback);
  }

  Element& add_child(std::string child_name) {
    children.push_back(Element{std::move(child_name), {}, {}, {}});
    return children.back();
  }

  Element& set(std::string key, std::string value) {
    attrs.emplace_back(std::move(key), std::move(value));
    return *this;
  }
};

namespace detail {

class XmlParser {
 public:
  explicit XmlParser(std::string_view input) : in_(input) {}

  Element parse_document() {
    skip_misc();
    if (!at('<')) fail("expected root element");
    Element root = parse_element();
    skip_misc();
    if (pos_ != in_.size()) fail("trailing content after root element");
    return root;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) { throw ParseError(pos_, msg); }

  bool at(char c) const { return pos_ < in_.size() && in_[pos_] == c; }
  bool starts_with(std::string_view s) const {
    return in_.substr(pos_, s.size()) == s;
  }
  void skip_ws() {
    while (pos_ < in_.size() &&
           (in_[pos_] == ' ' || in_[pos_] == '\t' || in_[pos_] == '\n' ||
            in_[pos_] == '\r'))
      ++pos_;
  }
  void skip_misc() {
    for (;;) {
      skip_ws();
      if (starts_with("<?")) {
        size_t end = in_.find("?>", pos_);
        if (end == std::string_view::npos) fail("unterminated declaration");
        pos_ = end + 2;
      } else if (starts_with("<!--")) {
        size_t end = in_.find("-->", pos_);
        if (end == std::string_view::npos) fail("unterminated comment");
        pos_ = end + 3;
      } else if (starts_with("<!DOCTYPE")) {
        size_t end = in_.find('>', pos_);
        if (end == std::string_view::npos) fail("unterminated doctype");
        pos_ = end + 1;
      } else {
        return;
      }
    }
  }

  static bool name_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' ||
           c == '-' || c == '.' || c == ':';
  }

  std::string parse_name() {
    size_t start = pos_;
    while (pos_ < in_.size() && name_char(in_[pos_])) ++pos_;
    if (pos_ == start) fail("expected name");
    return std::string(in_.substr(start, pos_ - start));
  }

  std::string decode_entities(std::string_view raw) {
    std::string out;
    out.reserve(raw.size());
    for (size_t i = 0; i < raw.size(); ++i) {
      if (raw[i] != '&') {
        out += raw[i];
        continue;
      }
      size_t semi = raw.find(';', i);
      if (semi == std::string_view::npos) fail("unterminated entity");
      std::string_view name = raw.substr(i + 1, semi - i - 1);
      if (name == "lt") out += '<';
      else if (name == "gt") out += '>';
      else if (name == "amp") out += '&';
      else if (name == "quot") out += '"';
      else if (name == "apos") out += '\'';
      else if (!name.empty() && name[0] == '#') {
        int code = name[1] == 'x' || name[1] == 'X'
                       ? std::stoi(std::string(name.substr(2)), nullptr, 16)
                       : std::stoi(std::string(name.substr(1)));
        if (code < 0x80) out += static_cast<char>(code);
        else fail("non-ASCII character reference");
      } else {
        fail("unknown entity '&" + std::string(name) + ";'");
      }
      i = semi;
    }
    return out;
  }

  Element parse_element() {
    ++pos_;  // '<'
    Element el;
    el.name = parse_name();
    for (;;) {
      skip_ws();
      if (at('>')) {
        ++pos_;
        parse_content(el);
        return el;
      }
      if (starts_with("/>")) {
        pos_ += 2;
        return el;
      }
      std::string key = parse_name();
      skip_ws();
      if (!at('=')) fail("expected '=' in attribute");
      ++pos_;
      skip_ws();
      if (!at('"') && !at('\'')) fail("expected quoted attribute value");
      char quote = in_[pos_++];
      size_t end = in_.find(quote, pos_);
      if (end == std::string_view::npos) fail("unterminated attribute value");
      el.attrs.emplace_back(std::move(key),
                            decode_entities(in_.substr(pos_, end - pos_)));
      pos_ = end + 1;
    }
  }

  void parse_content(Element& el) {
    for (;;) {
      size_t lt = in_.find('<', pos_);
      if (lt == std::string_view::npos) fail("unterminated element");
      std::string_view chunk = in_.substr(pos_, lt - pos_);
      el.text += decode_entities(chunk);
      pos_ = lt;
      if (starts_with("</")) {
        pos_ += 2;
        std::string closing = parse_name();
        if (closing != el.name)
          fail("mismatched closing tag '" + closing + "' for '" + el.name +
               "'");
        skip_ws();
        if (!at('>')) fail("expected '>'");
        ++pos_;
        trim(el.text);
        return;
      }
      if (starts_with("<!--")) {
        size_t end = in_.find("-->", pos_);
        if (end == std::string_view::npos) fail("unterminated comment");
        pos_ = end + 3;
        continue;
      }
      if (starts_with("<![CDATA[")) {
        size_t end = in_.find("]]>", pos_);
        if (end == std::string_view::npos) fail("unterminated CDATA");
        el.text += std::string(in_.substr(pos_ + 9, end - pos_ - 9));
        pos_ = end + 3;
        continue;
      }
      el.children.push_back(parse_element());
    }
  }

  static void trim(std::string& s) {
    size_t begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) {
      s.clear();
      return;
    }
    size_t end = s.find_last_not_of(" \t\r\n");
    s = s.substr(begin, end - begin + 1);
  }

  std::string_view in_;
  size_t pos_ = 0;
};

inline void escape_into(std::ostream& out, std::string_view s, bool attribute) {
  for (char c : s) {
    switch (c) {
      case '<': out << "&lt;"; break;
      case '>': out << "&gt;"; break;
      case '&': out << "&amp;"; break;
      case '"':
        if (attribute) out << "&quot;";
        else out << c;
        break;
      default: out << c; break;
    }
  }
}

inline void write_element(const Element& el, std::ostream& out, int depth) {
  const std::string indent(static_cast<size_t>(depth) * 2, ' ');
  out << indent << '<' << el.name;
  for (const auto& [k, v] : el.attrs) {
    out << ' ' << k << "=\"";
    escape_into(out, v, true);
    out << '"';
  }
  if (el.children.empty() && el.text.empty()) {
    out << " />\n";
    return;
  }
  out << '>';
  if (el.children.empty()) {
    escape_into(out, el.text, false);
    out << "</" << el.name << ">\n";
    return;
  }
  out << '\n';
  if (!el.text.empty()) {
    out << indent << "  ";
    escape_into(out, el.text, false);
    out << '\n';
  }
  for (const Element& child : el.children) write_element(child, out, depth + 1);
  out << indent << "</" << el.name << ">\n";
}

}  // namespace detail

inline Element parse(std::string_view input) {
  return detail::XmlParser(input).parse_document();
}

inline std::string write(const Element& root) {
  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  detail::write_element(root, out, 0);
  return out.str();
}

}  // namespace flowgen::xml
