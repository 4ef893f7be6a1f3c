#include "vlift/kernel_ir.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

namespace vlift::kir {

std::string Diagnostic::str() const {
  return file + ":" + std::to_string(loc.line) + ":" + std::to_string(loc.col) + ": " + message;
}

namespace {

std::string join_diags(const std::vector<Diagnostic>& diags) {
  std::string out;
  for (const auto& d : diags) {
    if (!out.empty()) out += '\n';
    out += d.str();
  }
  return out;
}

}  // namespace

ParseError::ParseError(std::vector<Diagnostic> diags) : Error(join_diags(diags)), diags_(std::move(diags)) {}

// ---------------------------------------------------------------------------
// Lexer

namespace {

enum class Tok { Ident, Int, Real, Punct, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;
  SourceLoc loc;
};

std::vector<Token> lex(std::string_view src, const std::string& file) {
  std::vector<Token> out;
  int line = 1, col = 1;
  size_t i = 0;
  auto advance = [&](size_t n) {
    for (size_t k = 0; k < n; ++k) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
      ++i;
    }
  };
  while (i < src.size()) {
    char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
      continue;
    }
    if (c == '#') {
      while (i < src.size() && src[i] != '\n') advance(1);
      continue;
    }
    SourceLoc loc{line, col};
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t j = i;
      while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_')) ++j;
      out.push_back({Tok::Ident, std::string(src.substr(i, j - i)), loc});
      advance(j - i);
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && i + 1 < src.size() && std::isdigit(static_cast<unsigned char>(src[i + 1])))) {
      size_t j = i;
      bool real = false;
      while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
      if (j < src.size() && src[j] == '.') {
        real = true;
        ++j;
        while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
      }
      if (j < src.size() && (src[j] == 'e' || src[j] == 'E')) {
        size_t k = j + 1;
        if (k < src.size() && (src[k] == '+' || src[k] == '-')) ++k;
        if (k < src.size() && std::isdigit(static_cast<unsigned char>(src[k]))) {
          real = true;
          j = k;
          while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
        }
      }
      out.push_back({real ? Tok::Real : Tok::Int, std::string(src.substr(i, j - i)), loc});
      advance(j - i);
      continue;
    }
    static const char* two[] = {">=", "<=", "=="};
    bool matched = false;
    for (const char* p : two) {
      if (src.substr(i, 2) == p) {
        out.push_back({Tok::Punct, p, loc});
        advance(2);
        matched = true;
        break;
      }
    }
    if (matched) continue;
    if (std::string_view("(){}[],:;=+-*/%<>").find(c) != std::string_view::npos) {
      out.push_back({Tok::Punct, std::string(1, c), loc});
      advance(1);
      continue;
    }
    throw ParseError({Diagnostic{file, loc, std::string("unexpected character '") + c + "'"}});
  }
  out.push_back({Tok::End, "", SourceLoc{line, col}});
  return out;
}

// ---------------------------------------------------------------------------
// Parser

ExprPtr mk(Expr e) { return std::make_shared<const Expr>(std::move(e)); }

class Parser {
 public:
  Parser(std::vector<Token> toks, std::string file) : toks_(std::move(toks)), file_(std::move(file)) {}

  KernelModule parse_module() {
    KernelModule k;
    expect_ident("kernel");
    k.name = expect_kind(Tok::Ident, "kernel name").text;
    expect("(");
    if (!peek_is(")")) {
      do {
        k.params.push_back(parse_param());
      } while (accept(","));
    }
    expect(")");
    bool have_grid = false, have_block = false;
    while (peek().kind == Tok::Ident) {
      Token clause = next();
      expect("(");
      if (clause.text == "grid") {
        k.grid = parse_expr();
        have_grid = true;
      } else if (clause.text == "block") {
        Token t = expect_kind(Tok::Int, "block size");
        k.block_size = std::stoll(t.text);
        if (k.block_size < 1) error(t.loc, "block size must be positive");
        have_block = true;
      } else if (clause.text == "live") {
        k.live = parse_expr();
      } else {
        fail(clause.loc, "unknown kernel clause '" + clause.text + "'");
      }
      expect(")");
    }
    if (!have_grid) error(peek().loc, "missing grid annotation");
    if (!have_block) error(peek().loc, "missing block annotation");
    block_size_ = k.block_size;
    expect("{");
    while (!peek_is("}")) {
      if (peek().kind == Tok::End) fail(peek().loc, "missing '}'");
      k.body.push_back(parse_stmt());
      accept(";");
    }
    expect("}");
    if (peek().kind != Tok::End) fail(peek().loc, "trailing input after kernel");
    check_arange(k);
    return k;
  }

  std::vector<Diagnostic>& diagnostics() { return diags_; }

 private:
  Param parse_param() {
    Param p;
    Token name = expect_kind(Tok::Ident, "parameter name");
    p.name = name.text;
    p.loc = name.loc;
    if (!accept(":")) {
      error(name.loc, "missing type annotation for " + p.name);
      return p;
    }
    Token kind = expect_kind(Tok::Ident, "parameter kind");
    if (kind.text == "in" || kind.text == "out") {
      p.kind = kind.text == "in" ? ParamKind::TensorIn : ParamKind::TensorOut;
      if (!accept("[")) {
        error(name.loc, "missing shape annotation for " + p.name);
        return p;
      }
      do {
        Token d = next();
        if (d.kind == Tok::Int) {
          p.dims.push_back(Dim{"", std::stoll(d.text)});
        } else if (d.kind == Tok::Ident) {
          p.dims.push_back(Dim{d.text, 0});
        } else {
          fail(d.loc, "expected dimension");
        }
      } while (accept(","));
      expect("]");
    } else if (kind.text == "int") {
      p.kind = ParamKind::ScalarInt;
      if (!accept("=")) {
        error(name.loc, "missing value annotation for int parameter " + p.name);
        return p;
      }
      p.int_value = parse_expr();
    } else if (kind.text == "real") {
      p.kind = ParamKind::ScalarReal;
      if (peek().kind == Tok::Ident && peek().text == "positive") {
        next();
        p.positive = true;
      }
    } else {
      error(kind.loc, "unknown parameter kind '" + kind.text + "'");
    }
    return p;
  }

  Stmt parse_stmt() {
    Stmt s;
    Token head = expect_kind(Tok::Ident, "statement");
    s.loc = head.loc;
    if (head.text == "store" && peek_is("(")) {
      s.kind = Stmt::Kind::Store;
      expect("(");
      s.address = parse_expr();
      expect(",");
      s.value = parse_expr();
      expect(")");
      return s;
    }
    s.kind = Stmt::Kind::Assign;
    s.local = head.text;
    expect("=");
    s.value = parse_expr();
    return s;
  }

  ExprPtr parse_expr() {
    ExprPtr lhs = parse_additive();
    static const std::pair<const char*, sym::Rel> rels[] = {
        {">", sym::Rel::Gt}, {">=", sym::Rel::Ge}, {"<", sym::Rel::Lt}, {"<=", sym::Rel::Le}, {"==", sym::Rel::Eq}};
    for (auto [sym, rel] : rels) {
      if (peek_is(sym)) {
        Token t = next();
        Expr e;
        e.kind = ExprKind::Compare;
        e.rel = rel;
        e.loc = t.loc;
        e.args = {lhs, parse_additive()};
        return mk(std::move(e));
      }
    }
    return lhs;
  }

  ExprPtr parse_additive() {
    ExprPtr lhs = parse_multiplicative();
    while (peek_is("+") || peek_is("-")) {
      Token t = next();
      Expr e;
      e.kind = ExprKind::Binary;
      e.op = t.text == "+" ? BinOp::Add : BinOp::Sub;
      e.loc = t.loc;
      e.args = {lhs, parse_multiplicative()};
      lhs = mk(std::move(e));
    }
    return lhs;
  }

  ExprPtr parse_multiplicative() {
    ExprPtr lhs = parse_unary();
    while (peek_is("*") || peek_is("/") || peek_is("%")) {
      Token t = next();
      Expr e;
      e.kind = ExprKind::Binary;
      e.op = t.text == "*" ? BinOp::Mul : (t.text == "/" ? BinOp::Div : BinOp::Mod);
      e.loc = t.loc;
      e.args = {lhs, parse_unary()};
      lhs = mk(std::move(e));
    }
    return lhs;
  }

  ExprPtr parse_unary() {
    if (peek_is("-")) {
      Token t = next();
      Expr e;
      e.kind = ExprKind::Neg;
      e.loc = t.loc;
      e.args = {parse_unary()};
      return mk(std::move(e));
    }
    return parse_primary();
  }

  ExprPtr parse_primary() {
    Token t = next();
    Expr e;
    e.loc = t.loc;
    switch (t.kind) {
      case Tok::Int:
        e.kind = ExprKind::IntLit;
        e.int_value = std::stoll(t.text);
        return mk(std::move(e));
      case Tok::Real: {
        e.kind = ExprKind::RealLit;
        auto q = parse_decimal(t.text);
        if (!q) fail(t.loc, "malformed real literal '" + t.text + "'");
        e.real_value = *q;
        return mk(std::move(e));
      }
      case Tok::Punct:
        if (t.text == "(") {
          ExprPtr inner = parse_expr();
          expect(")");
          return inner;
        }
        fail(t.loc, "unexpected '" + t.text + "'");
      case Tok::End: fail(t.loc, "unexpected end of input");
      case Tok::Ident: break;
    }
    if (t.text == "program_id") {
      e.kind = ExprKind::ProgramId;
      if (accept("(")) {
        // program_id(0) / program_id(axis=0): only axis 0 exists
        if (peek().kind == Tok::Ident && peek().text == "axis") {
          next();
          expect("=");
        }
        expect_kind(Tok::Int, "axis");
        expect(")");
      }
      return mk(std::move(e));
    }
    if (!peek_is("(")) {
      e.kind = ExprKind::Ref;
      e.name = t.text;
      return mk(std::move(e));
    }
    expect("(");
    if (t.text == "arange") {
      e.kind = ExprKind::Arange;
      ExprPtr lo = parse_expr();
      expect(",");
      ExprPtr hi = parse_expr();
      expect(")");
      if (lo->kind != ExprKind::IntLit || hi->kind != ExprKind::IntLit) {
        error(t.loc, "non-constant arange bounds");
      } else {
        e.int_value = lo->int_value;
        e.int_hi = hi->int_value;
      }
      return mk(std::move(e));
    }
    if (t.text == "load") {
      e.kind = ExprKind::Load;
      e.args = {parse_expr()};
      expect(")");
      return mk(std::move(e));
    }
    if (t.text == "where") {
      e.kind = ExprKind::Where;
      ExprPtr c = parse_expr();
      expect(",");
      ExprPtr a = parse_expr();
      expect(",");
      ExprPtr b = parse_expr();
      expect(")");
      e.args = {c, a, b};
      return mk(std::move(e));
    }
    if (t.text == "max" || t.text == "sum") {
      e.kind = ExprKind::Reduce;
      e.reduce = t.text == "max" ? ReduceOp::Max : ReduceOp::Sum;
      e.args = {parse_expr()};
      if (accept(",")) {
        // optional axis=0; the block axis is the only axis
        if (peek().kind == Tok::Ident && peek().text == "axis") {
          next();
          expect("=");
        }
        Token axis = expect_kind(Tok::Int, "axis");
        if (axis.text != "0") error(axis.loc, "reductions apply along the block axis (axis=0) only");
      }
      expect(")");
      return mk(std::move(e));
    }
    if (auto f = sym::parse_fn_name(t.text)) {
      e.kind = ExprKind::MathFn;
      e.fn = *f;
      e.args = {parse_expr()};
      expect(")");
      return mk(std::move(e));
    }
    fail(t.loc, "unknown function '" + t.text + "'");
  }

  void check_arange(const KernelModule& k) {
    std::vector<const Expr*> stack;
    for (const auto& s : k.body) {
      if (s.address) stack.push_back(s.address.get());
      stack.push_back(s.value.get());
    }
    while (!stack.empty()) {
      const Expr* e = stack.back();
      stack.pop_back();
      if (e->kind == ExprKind::Arange && e->int_hi - e->int_value != k.block_size &&
          !(e->int_hi == 0 && e->int_value == 0)) {
        error(e->loc, "arange length " + std::to_string(e->int_hi - e->int_value) + " does not match block size " +
                          std::to_string(k.block_size));
      }
      for (const auto& a : e->args) stack.push_back(a.get());
    }
  }

  const Token& peek() const { return toks_[pos_]; }
  bool peek_is(std::string_view p) const { return peek().kind == Tok::Punct && peek().text == p; }
  Token next() {
    Token t = toks_[pos_];
    if (pos_ + 1 < toks_.size()) ++pos_;
    return t;
  }
  bool accept(std::string_view p) {
    if (!peek_is(p)) return false;
    next();
    return true;
  }
  void expect(std::string_view p) {
    if (!accept(p)) {
      fail(peek().loc, "expected '" + std::string(p) + "' but found '" +
                           (peek().kind == Tok::End ? std::string("end of input") : peek().text) + "'");
    }
  }
  void expect_ident(std::string_view word) {
    if (peek().kind != Tok::Ident || peek().text != word) fail(peek().loc, "expected '" + std::string(word) + "'");
    next();
  }
  Token expect_kind(Tok kind, const std::string& what) {
    if (peek().kind != kind) fail(peek().loc, "expected " + what);
    return next();
  }
  void error(SourceLoc loc, std::string msg) { diags_.push_back(Diagnostic{file_, loc, std::move(msg)}); }
  [[noreturn]] void fail(SourceLoc loc, std::string msg) {
    error(loc, std::move(msg));
    throw ParseError(diags_);
  }

  std::vector<Token> toks_;
  size_t pos_ = 0;
  std::string file_;
  std::vector<Diagnostic> diags_;
  long long block_size_ = 1;
};

// Scope checks: identifiers in the body must be params, earlier locals or
// program_id; identifiers in grid / int params / live must be shape symbols
// or int params.
void check_scopes(const KernelModule& k, const std::string& file, std::vector<Diagnostic>& diags) {
  std::set<std::string> shape_syms;
  std::set<std::string> names;
  std::set<std::string> int_params;
  bool has_out = false;
  for (const auto& p : k.params) {
    if (!names.insert(p.name).second)
      diags.push_back({file, p.loc, "duplicate parameter " + p.name});
    for (const auto& d : p.dims)
      if (d.is_symbol()) shape_syms.insert(d.symbol);
    if (p.kind == ParamKind::TensorOut) has_out = true;
  }
  if (!has_out) diags.push_back({file, SourceLoc{1, 1}, "kernel " + k.name + " has no output tensor"});

  auto check_index_expr = [&](const ExprPtr& e, auto&& self) -> void {
    if (!e) return;
    if (e->kind == ExprKind::Ref && !shape_syms.count(e->name) && !int_params.count(e->name))
      diags.push_back({file, e->loc, "unknown identifier " + e->name});
    if (e->kind != ExprKind::Ref && e->kind != ExprKind::IntLit && e->kind != ExprKind::Binary &&
        e->kind != ExprKind::Neg)
      diags.push_back({file, e->loc, "only integer arithmetic is allowed in annotations"});
    for (const auto& a : e->args) self(a, self);
  };
  for (const auto& p : k.params) {
    if (p.kind == ParamKind::ScalarInt) {
      check_index_expr(p.int_value, check_index_expr);
      int_params.insert(p.name);
    }
  }
  check_index_expr(k.grid, check_index_expr);
  check_index_expr(k.live, check_index_expr);

  std::set<std::string> locals;
  auto check_body_expr = [&](const ExprPtr& e, auto&& self) -> void {
    if (!e) return;
    if (e->kind == ExprKind::Ref && !names.count(e->name) && !locals.count(e->name))
      diags.push_back({file, e->loc, "unknown identifier " + e->name});
    for (const auto& a : e->args) self(a, self);
  };
  for (const auto& s : k.body) {
    check_body_expr(s.address, check_body_expr);
    check_body_expr(s.value, check_body_expr);
    if (s.kind == Stmt::Kind::Assign) {
      if (names.count(s.local))
        diags.push_back({file, s.loc, "cannot assign to parameter " + s.local});
      else if (!locals.insert(s.local).second)
        diags.push_back({file, s.loc, "local " + s.local + " assigned more than once"});
    }
  }
}

}  // namespace

KernelModule parse_kernel(std::string_view text, const std::string& file) {
  Parser p(lex(text, file), file);
  KernelModule k = p.parse_module();
  auto diags = std::move(p.diagnostics());
  check_scopes(k, file, diags);
  if (!diags.empty()) throw ParseError(std::move(diags));
  return k;
}

KernelModule load_kernel_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError({Diagnostic{path, SourceLoc{0, 0}, "cannot open file"}});
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_kernel(ss.str(), path);
}

// ---------------------------------------------------------------------------
// Queries

std::optional<uint32_t> KernelModule::param_index(std::string_view n) const {
  for (size_t i = 0; i < params.size(); ++i)
    if (params[i].name == n) return static_cast<uint32_t>(i);
  return std::nullopt;
}

std::vector<uint32_t> KernelModule::outputs() const {
  std::vector<uint32_t> out;
  for (size_t i = 0; i < params.size(); ++i)
    if (params[i].kind == ParamKind::TensorOut) out.push_back(static_cast<uint32_t>(i));
  return out;
}

std::vector<uint32_t> KernelModule::inputs() const {
  std::vector<uint32_t> out;
  for (size_t i = 0; i < params.size(); ++i)
    if (params[i].kind == ParamKind::TensorIn || params[i].kind == ParamKind::ScalarReal)
      out.push_back(static_cast<uint32_t>(i));
  return out;
}

std::vector<std::string> KernelModule::shape_symbols() const {
  std::vector<std::string> out;
  for (const auto& p : params)
    for (const auto& d : p.dims)
      if (d.is_symbol() && std::find(out.begin(), out.end(), d.symbol) == out.end()) out.push_back(d.symbol);
  return out;
}

bool equal(const Expr& a, const Expr& b) {
  if (a.kind != b.kind || a.args.size() != b.args.size()) return false;
  switch (a.kind) {
    case ExprKind::Ref: if (a.name != b.name) return false; break;
    case ExprKind::IntLit: if (a.int_value != b.int_value) return false; break;
    case ExprKind::RealLit: if (a.real_value != b.real_value) return false; break;
    case ExprKind::Arange: if (a.int_value != b.int_value || a.int_hi != b.int_hi) return false; break;
    case ExprKind::Binary: if (a.op != b.op) return false; break;
    case ExprKind::MathFn: if (a.fn != b.fn) return false; break;
    case ExprKind::Reduce: if (a.reduce != b.reduce) return false; break;
    case ExprKind::Compare: if (a.rel != b.rel) return false; break;
    default: break;
  }
  for (size_t i = 0; i < a.args.size(); ++i)
    if (!equal(*a.args[i], *b.args[i])) return false;
  return true;
}

namespace {

bool equal_ptr(const ExprPtr& a, const ExprPtr& b) {
  if (!a || !b) return !a && !b;
  return equal(*a, *b);
}

}  // namespace

bool equal(const KernelModule& a, const KernelModule& b) {
  if (a.name != b.name || a.block_size != b.block_size || a.params.size() != b.params.size() ||
      a.body.size() != b.body.size() || !equal_ptr(a.grid, b.grid) || !equal_ptr(a.live, b.live))
    return false;
  for (size_t i = 0; i < a.params.size(); ++i) {
    const auto& p = a.params[i];
    const auto& q = b.params[i];
    if (p.name != q.name || p.kind != q.kind || p.dims != q.dims || p.positive != q.positive ||
        !equal_ptr(p.int_value, q.int_value))
      return false;
  }
  for (size_t i = 0; i < a.body.size(); ++i) {
    const auto& s = a.body[i];
    const auto& t = b.body[i];
    if (s.kind != t.kind || s.local != t.local || !equal_ptr(s.address, t.address) || !equal_ptr(s.value, t.value))
      return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Printing

namespace {

int prec(const Expr& e) {
  switch (e.kind) {
    case ExprKind::Compare: return 1;
    case ExprKind::Binary: return (e.op == BinOp::Add || e.op == BinOp::Sub) ? 2 : 3;
    case ExprKind::Neg: return 4;
    default: return 5;
  }
}

std::string print(const Expr& e);

std::string print_child(const Expr& child, int min_prec) {
  std::string s = print(child);
  return prec(child) < min_prec ? "(" + s + ")" : s;
}

const char* binop_symbol(BinOp op) {
  switch (op) {
    case BinOp::Add: return "+";
    case BinOp::Sub: return "-";
    case BinOp::Mul: return "*";
    case BinOp::Div: return "/";
    case BinOp::Mod: return "%";
  }
  return "?";
}

std::string real_literal(const Rational& q) {
  std::string s = to_display_string(q);
  if (s.find('/') != std::string::npos) s = to_display_string(Rational(q));
  if (s.find('.') == std::string::npos) s += ".0";
  return s;
}

std::string print(const Expr& e) {
  switch (e.kind) {
    case ExprKind::Ref: return e.name;
    case ExprKind::ProgramId: return "program_id";
    case ExprKind::IntLit: return std::to_string(e.int_value);
    case ExprKind::RealLit: return real_literal(e.real_value);
    case ExprKind::Arange:
      return "arange(" + std::to_string(e.int_value) + ", " + std::to_string(e.int_hi) + ")";
    case ExprKind::Load: return "load(" + print(*e.args[0]) + ")";
    case ExprKind::Binary: {
      int p = prec(e);
      return print_child(*e.args[0], p) + " " + binop_symbol(e.op) + " " + print_child(*e.args[1], p + 1);
    }
    case ExprKind::Neg: return "-" + print_child(*e.args[0], 4);
    case ExprKind::MathFn: return sym::fn_name(e.fn) + "(" + print(*e.args[0]) + ")";
    case ExprKind::Reduce:
      return std::string(e.reduce == ReduceOp::Max ? "max" : "sum") + "(" + print(*e.args[0]) + ", axis=0)";
    case ExprKind::Where:
      return "where(" + print(*e.args[0]) + ", " + print(*e.args[1]) + ", " + print(*e.args[2]) + ")";
    case ExprKind::Compare:
      return print_child(*e.args[0], 2) + " " + sym::rel_symbol(e.rel) + " " + print_child(*e.args[1], 2);
  }
  return "?";
}

std::string print_dims(const std::vector<Dim>& dims) {
  std::string s = "[";
  for (size_t i = 0; i < dims.size(); ++i) {
    if (i) s += ", ";
    s += dims[i].is_symbol() ? dims[i].symbol : std::to_string(dims[i].value);
  }
  return s + "]";
}

}  // namespace

std::string to_string(const Expr& e) { return print(e); }

std::string pretty_print(const KernelModule& k) {
  std::string s = "kernel " + k.name + "(";
  for (size_t i = 0; i < k.params.size(); ++i) {
    const auto& p = k.params[i];
    if (i) s += ", ";
    s += p.name + ": ";
    switch (p.kind) {
      case ParamKind::TensorIn: s += "in" + print_dims(p.dims); break;
      case ParamKind::TensorOut: s += "out" + print_dims(p.dims); break;
      case ParamKind::ScalarInt: s += "int = " + print(*p.int_value); break;
      case ParamKind::ScalarReal: s += p.positive ? "real positive" : "real"; break;
    }
  }
  s += ") grid(" + print(*k.grid) + ") block(" + std::to_string(k.block_size) + ")";
  if (k.live) s += " live(" + print(*k.live) + ")";
  s += " {\n";
  for (const auto& st : k.body) {
    if (st.kind == Stmt::Kind::Store)
      s += "  store(" + print(*st.address) + ", " + print(*st.value) + ")\n";
    else
      s += "  " + st.local + " = " + print(*st.value) + "\n";
  }
  return s + "}\n";
}

// ---------------------------------------------------------------------------
// Host loop

HostLoop sequentialize(const KernelModule& k) {
  HostLoop loop;
  loop.bound = k.grid;
  loop.body = k.body;
  return loop;
}

std::string HostLoop::to_string() const {
  std::string s = pid + " = 0\nwhile " + pid + " < " + print(*bound) + ":\n";
  for (const auto& st : body) {
    std::string line = st.kind == Stmt::Kind::Store
                           ? "store(" + print(*st.address) + ", " + print(*st.value) + ")"
                           : st.local + " = " + print(*st.value);
    // program_id is bound to the loop variable
    size_t at = 0;
    while ((at = line.find("program_id", at)) != std::string::npos) {
      line.replace(at, 10, pid);
      at += pid.size();
    }
    s += "    " + line + "\n";
  }
  return s + "    " + pid + " += 1\n";
}

long long eval_int(const Expr& e, const std::map<std::string, long long>& env) {
  switch (e.kind) {
    case ExprKind::IntLit: return e.int_value;
    case ExprKind::Ref: {
      auto it = env.find(e.name);
      if (it == env.end()) throw Error("unbound symbol " + e.name);
      return it->second;
    }
    case ExprKind::Neg: return -eval_int(*e.args[0], env);
    case ExprKind::Binary: {
      long long a = eval_int(*e.args[0], env), b = eval_int(*e.args[1], env);
      switch (e.op) {
        case BinOp::Add: return a + b;
        case BinOp::Sub: return a - b;
        case BinOp::Mul: return a * b;
        case BinOp::Div:
        case BinOp::Mod: {
          if (b == 0) throw Error("integer division by zero");
          long long q = a / b;
          if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
          return e.op == BinOp::Div ? q : a - q * b;
        }
      }
      break;
    }
    default: break;
  }
  throw Error("not an integer expression: " + print(e));
}

}  // namespace vlift::kir
