#pragma once

#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

namespace vlift {

/// Minimal S-expression: either an atom or a list. Used for SMT-LIB2 text,
/// solver output, the prefix formula syntax and rewrite-rule files.
struct SExpr {
  std::string atom;
  std::vector<SExpr> list;
  bool is_list = false;

  SExpr() = default;
  SExpr(std::string a) : atom(std::move(a)) {}  // NOLINT(implicit)
  SExpr(const char* a) : atom(a) {}             // NOLINT(implicit)
  static SExpr make_list(std::vector<SExpr> items);

  bool is_atom() const { return !is_list; }
  size_t size() const { return list.size(); }
  const SExpr& operator[](size_t i) const { return list[i]; }
  /// True if this is a list whose head atom equals `head`.
  bool headed(std::string_view head) const;

  std::string str() const;
  friend bool operator==(const SExpr&, const SExpr&) = default;
};

/// Shorthand list constructor: L({"assert", x}).
SExpr L(std::vector<SExpr> items);

/// Parses every top-level S-expression in `text`. `;` starts a line comment.
/// Throws vlift::Error on unbalanced parentheses.
std::vector<SExpr> parse_sexprs(std::string_view text);
SExpr parse_sexpr(std::string_view text);

}  // namespace vlift
