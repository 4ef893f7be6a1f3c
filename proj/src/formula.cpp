#include "vlift/formula.hpp"

#include "vlift/error.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>

namespace vlift::tf {

namespace {

Formula mk(Op op, std::vector<Formula> kids = {}) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->kids = std::move(kids);
  return n;
}

}  // namespace

Formula input(const std::string& name) {
  auto n = std::make_shared<Node>();
  n->op = Op::Input;
  n->name = name;
  return n;
}
Formula transpose(Formula f) { return mk(Op::Permute, {std::move(f)}); }
Formula constant(const Rational& v) {
  auto n = std::make_shared<Node>();
  n->op = Op::Const;
  n->value = v;
  return n;
}
Formula named_constant(const std::string& key) {
  const NamedConstant* c = find_named_constant(key);
  if (!c) throw Error("unknown named constant " + key);
  auto n = std::make_shared<Node>();
  n->op = Op::NamedConst;
  n->name = key;
  n->value = rational_from_double(c->value);
  return n;
}
Formula binary(Op op, Formula a, Formula b) { return mk(op, {std::move(a), std::move(b)}); }
Formula add(Formula a, Formula b) { return binary(Op::Add, std::move(a), std::move(b)); }
Formula sub(Formula a, Formula b) { return binary(Op::Sub, std::move(a), std::move(b)); }
Formula mul(Formula a, Formula b) { return binary(Op::Mul, std::move(a), std::move(b)); }
Formula div(Formula a, Formula b) { return binary(Op::Div, std::move(a), std::move(b)); }
Formula neg(Formula a) { return mk(Op::Neg, {std::move(a)}); }
Formula fn(sym::FnName f, Formula a) {
  auto n = std::make_shared<Node>();
  n->op = Op::Fn;
  n->fn = f;
  n->kids = {std::move(a)};
  return n;
}
Formula reduce_max(Formula a) { return mk(Op::Max, {std::move(a)}); }
Formula reduce_sum(Formula a) { return mk(Op::Sum, {std::move(a)}); }
Formula matmul(Formula a, Formula b) { return mk(Op::MatMul, {std::move(a), std::move(b)}); }
Formula ifpos(Formula c, Formula t, Formula e) { return mk(Op::IfPos, {std::move(c), std::move(t), std::move(e)}); }

bool is_binary(Op op) { return op == Op::Add || op == Op::Sub || op == Op::Mul || op == Op::Div; }
bool is_elementwise(Op op) { return is_binary(op) || op == Op::Neg || op == Op::Fn || op == Op::IfPos; }

const std::vector<NamedConstant>& named_constants() {
  static const std::vector<NamedConstant> table = {
      {"log2e", std::numbers::log2e, "log2(e)", "\\log_2 e"},
      {"ln2", std::numbers::ln2, "ln(2)", "\\ln 2"},
      {"e", std::numbers::e, "e", "e"},
      {"pi", std::numbers::pi, "pi", "\\pi"},
      {"sqrt_2_over_pi", std::sqrt(2.0 / std::numbers::pi), "sqrt(2/pi)", "\\sqrt{2/\\pi}"},
      {"inv_sqrt_2pi", 1.0 / std::sqrt(2.0 * std::numbers::pi), "1/sqrt(2*pi)", "\\frac{1}{\\sqrt{2\\pi}}"},
  };
  return table;
}

const NamedConstant* find_named_constant(const std::string& key) {
  for (const auto& c : named_constants())
    if (c.key == key) return &c;
  return nullptr;
}

// ---------------------------------------------------------------------------
// Shapes

std::optional<Shape> broadcast(const Shape& a, const Shape& b) {
  size_t n = std::max(a.size(), b.size());
  Shape out(n);
  for (size_t i = 0; i < n; ++i) {
    long long x = i < n - a.size() ? 1 : a[i - (n - a.size())];
    long long y = i < n - b.size() ? 1 : b[i - (n - b.size())];
    if (x != y && x != 1 && y != 1) return std::nullopt;
    out[i] = x == 1 ? y : x;
  }
  return out;
}

long long numel(const Shape& s) {
  long long n = 1;
  for (auto d : s) n *= d;
  return n;
}

namespace {

Shape squeeze(const Shape& s) {
  Shape out;
  for (auto d : s)
    if (d != 1) out.push_back(d);
  return out;
}

Shape reduced(const Shape& s) {
  if (s.empty()) return s;
  Shape out = s;
  out.back() = 1;
  return out;
}

}  // namespace

bool fits(const Shape& have, const Shape& want) {
  if (have == want) return true;
  if (auto b = broadcast(have, want); b && *b == want) return true;
  return squeeze(have) == squeeze(want);
}

std::optional<Shape> result_shape(Op op, const std::vector<Shape>& ks) {
  switch (op) {
    case Op::Const:
    case Op::NamedConst: return Shape{};
    case Op::Permute:
      if (ks[0].size() != 2) return std::nullopt;
      return Shape{ks[0][1], ks[0][0]};
    case Op::Neg:
    case Op::Fn: return ks[0];
    case Op::Max:
    case Op::Sum: return reduced(ks[0]);
    case Op::MatMul:
      if (ks[0].size() != 2 || ks[1].size() != 2 || ks[0][1] != ks[1][0]) return std::nullopt;
      return Shape{ks[0][0], ks[1][1]};
    case Op::IfPos: {
      auto b = broadcast(ks[0], ks[1]);
      if (b) b = broadcast(*b, ks[2]);
      return b;
    }
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::Div: return broadcast(ks[0], ks[1]);
    default: return std::nullopt;
  }
}

ShapeResult infer_shape(const Formula& f, const ShapeMap& inputs) {
  auto fail = [](std::string msg) { return ShapeResult{std::nullopt, std::move(msg)}; };
  switch (f->op) {
    case Op::Input: {
      auto it = inputs.find(f->name);
      if (it == inputs.end()) return fail("unknown input " + f->name);
      return {it->second, {}};
    }
    case Op::Const:
    case Op::NamedConst: return {Shape{}, {}};
    default: break;
  }
  std::vector<Shape> ks;
  for (const auto& k : f->kids) {
    auto r = infer_shape(k, inputs);
    if (!r.shape) return r;
    ks.push_back(*r.shape);
  }
  switch (f->op) {
    case Op::Permute:
      if (ks[0].size() != 2) return fail("transpose expects a 2-D tensor");
      return {Shape{ks[0][1], ks[0][0]}, {}};
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::Div: {
      auto b = broadcast(ks[0], ks[1]);
      if (!b) return fail("shapes do not broadcast");
      return {*b, {}};
    }
    case Op::Neg:
    case Op::Fn: return {ks[0], {}};
    case Op::Max:
    case Op::Sum: return {reduced(ks[0]), {}};
    case Op::MatMul:
      if (ks[0].size() != 2 || ks[1].size() != 2) return fail("matmul expects 2-D operands");
      if (ks[0][1] != ks[1][0]) return fail("second dimension of a does not match the first dimension of b");
      return {Shape{ks[0][0], ks[1][1]}, {}};
    case Op::IfPos: {
      auto b = broadcast(ks[0], ks[1]);
      if (b) b = broadcast(*b, ks[2]);
      if (!b) return fail("shapes do not broadcast");
      return {*b, {}};
    }
    default: return fail("bad formula");
  }
}

// ---------------------------------------------------------------------------
// Evaluation

namespace {

template <class T>
Tensor<T> broadcast_to(const Tensor<T>& t, const Shape& want) {
  if (t.shape == want) return t;
  Tensor<T> out;
  out.shape = want;
  long long n = numel(want);
  out.data.reserve(static_cast<size_t>(n));
  size_t r = want.size();
  size_t off = r - t.shape.size();
  std::vector<long long> idx(r, 0);
  for (long long flat = 0; flat < n; ++flat) {
    long long src = 0;
    for (size_t a = 0; a < t.shape.size(); ++a) {
      long long d = t.shape[a];
      src = src * d + (d == 1 ? 0 : idx[a + off]);
    }
    out.data.push_back(t.data[static_cast<size_t>(src)]);
    for (size_t a = r; a-- > 0;) {
      if (++idx[a] < want[a]) break;
      idx[a] = 0;
    }
  }
  return out;
}

template <class A>
Tensor<typename A::T> apply_node(const Node& n, std::vector<Tensor<typename A::T>> ks) {
  using T = typename A::T;
  using Ten = Tensor<T>;
  const Node* g = &n;
  switch (g->op) {
    case Op::Permute: {
      const Ten& a = ks[0];
      if (a.shape.size() != 2) throw Error("transpose expects a 2-D tensor");
      long long r = a.shape[0], c = a.shape[1];
      Ten out{{c, r}, {}};
      for (long long i = 0; i < c; ++i)
        for (long long j = 0; j < r; ++j) out.data.push_back(a.data[static_cast<size_t>(j * c + i)]);
      return out;
    }
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::Div: {
      auto s = broadcast(ks[0].shape, ks[1].shape);
      if (!s) throw Error("shapes do not broadcast");
      Ten a = broadcast_to(ks[0], *s), b = broadcast_to(ks[1], *s);
      Ten out{*s, {}};
      for (size_t i = 0; i < a.data.size(); ++i) out.data.push_back(A::binary(g->op, a.data[i], b.data[i]));
      return out;
    }
    case Op::Neg:
      for (auto& x : ks[0].data) x = A::neg(x);
      return ks[0];
    case Op::Fn:
      for (auto& x : ks[0].data) x = A::fn(g->fn, x);
      return ks[0];
    case Op::Max:
    case Op::Sum: {
      const Ten& a = ks[0];
      if (a.shape.empty()) return a;
      long long c = a.shape.back();
      long long rows = numel(a.shape) / c;
      Ten out{reduced(a.shape), {}};
      for (long long r = 0; r < rows; ++r) {
        T acc = a.data[static_cast<size_t>(r * c)];
        for (long long j = 1; j < c; ++j) {
          const T& x = a.data[static_cast<size_t>(r * c + j)];
          acc = g->op == Op::Sum ? A::binary(Op::Add, acc, x) : A::max2(acc, x);
        }
        out.data.push_back(acc);
      }
      return out;
    }
    case Op::MatMul: {
      const Ten &a = ks[0], &b = ks[1];
      if (a.shape.size() != 2 || b.shape.size() != 2 || a.shape[1] != b.shape[0])
        throw Error("matmul operands are ill-typed");
      long long n = a.shape[0], kk = a.shape[1], m = b.shape[1];
      Ten out{{n, m}, {}};
      for (long long i = 0; i < n; ++i)
        for (long long j = 0; j < m; ++j) {
          T acc = A::binary(Op::Mul, a.data[static_cast<size_t>(i * kk)], b.data[static_cast<size_t>(j)]);
          for (long long t = 1; t < kk; ++t)
            acc = A::binary(Op::Add, acc,
                            A::binary(Op::Mul, a.data[static_cast<size_t>(i * kk + t)],
                                      b.data[static_cast<size_t>(t * m + j)]));
          out.data.push_back(acc);
        }
      return out;
    }
    case Op::IfPos: {
      auto s = broadcast(ks[0].shape, ks[1].shape);
      if (s) s = broadcast(*s, ks[2].shape);
      if (!s) throw Error("shapes do not broadcast");
      Ten c = broadcast_to(ks[0], *s), t = broadcast_to(ks[1], *s), e = broadcast_to(ks[2], *s);
      Ten out{*s, {}};
      for (size_t i = 0; i < c.data.size(); ++i) out.data.push_back(A::ifpos(c.data[i], t.data[i], e.data[i]));
      return out;
    }
    default: throw Error("bad formula");
  }
}

template <class A>
Tensor<typename A::T> eval_with(const Formula& f, const std::map<std::string, Tensor<typename A::T>>& inputs) {
  using Ten = Tensor<typename A::T>;
  auto rec = [&](const Formula& g, auto&& self) -> Ten {
    switch (g->op) {
      case Op::Input: {
        auto it = inputs.find(g->name);
        if (it == inputs.end()) throw Error("unbound input " + g->name);
        return it->second;
      }
      case Op::Const:
      case Op::NamedConst: return Ten{{}, {A::constant(g->value)}};
      default: break;
    }
    std::vector<Ten> ks;
    for (const auto& k : g->kids) ks.push_back(self(k, self));
    return apply_node<A>(*g, std::move(ks));
  };
  return rec(f, rec);
}

struct SymAlgebra {
  using T = sym::Term;
  static T constant(const Rational& v) { return sym::constant(v); }
  static T binary(Op op, T a, T b) {
    switch (op) {
      case Op::Add: return sym::add(a, b);
      case Op::Sub: return sym::sub(a, b);
      case Op::Mul: return sym::mul(a, b);
      default: return sym::div(a, b);
    }
  }
  static T neg(T a) { return sym::neg(a); }
  static T fn(sym::FnName f, T a) { return sym::fn(f, a); }
  static T max2(T a, T b) { return sym::max2(a, b); }
  static T ifpos(T c, T t, T e) { return sym::ite(sym::cmp(sym::Rel::Gt, c, sym::constant(0)), t, e); }
};

struct DoubleAlgebra {
  using T = double;
  static T constant(const Rational& v) { return to_double(v); }
  static T binary(Op op, T a, T b) {
    switch (op) {
      case Op::Add: return a + b;
      case Op::Sub: return a - b;
      case Op::Mul: return a * b;
      default:
        if (b == 0.0) throw DomainError("division by zero");
        return a / b;
    }
  }
  static T neg(T a) { return -a; }
  static T fn(sym::FnName f, T a) {
    double r = sym::apply_fn(f, a);
    if (std::isnan(r) && !std::isnan(a)) throw DomainError(sym::fn_name(f) + " outside its domain");
    return r;
  }
  static T max2(T a, T b) { return a > b ? a : b; }
  static T ifpos(T c, T t, T e) { return c > 0 ? t : e; }
};

}  // namespace

SymTensor apply_sym(const Node& n, std::vector<SymTensor> kids) { return apply_node<SymAlgebra>(n, std::move(kids)); }

SymTensor eval_sym(const Formula& f, const std::map<std::string, SymTensor>& inputs) {
  return eval_with<SymAlgebra>(f, inputs);
}

Tensor<double> eval_double(const Formula& f, const std::map<std::string, Tensor<double>>& inputs) {
  return eval_with<DoubleAlgebra>(f, inputs);
}

template <class T>
Tensor<T> materialize(const Tensor<T>& t, const Shape& want) {
  if (t.shape == want) return t;
  if (auto b = broadcast(t.shape, want); b && *b == want) return broadcast_to(t, want);
  if (squeeze(t.shape) == squeeze(want)) return Tensor<T>{want, t.data};
  throw Error("formula shape does not fit the output shape");
}

template Tensor<sym::Term> materialize(const Tensor<sym::Term>&, const Shape&);
template Tensor<double> materialize(const Tensor<double>&, const Shape&);

// ---------------------------------------------------------------------------
// Text

namespace {

const char* op_word(Op op) {
  switch (op) {
    case Op::Add: return "add";
    case Op::Sub: return "sub";
    case Op::Mul: return "mul";
    case Op::Div: return "div";
    case Op::Neg: return "neg";
    case Op::Max: return "max";
    case Op::Sum: return "sum";
    case Op::MatMul: return "matmul";
    case Op::IfPos: return "ifpos";
    case Op::Permute: return "transpose";
    default: return "?";
  }
}

std::string const_text(const Rational& v) { return to_display_string(v); }

}  // namespace

std::string to_prefix(const Formula& f) {
  switch (f->op) {
    case Op::Input: return f->name;
    case Op::Const: return const_text(f->value);
    case Op::NamedConst: return "(const " + f->name + ")";
    case Op::Fn: return "(" + sym::fn_name(f->fn) + " " + to_prefix(f->kids[0]) + ")";
    default: break;
  }
  std::string s = std::string("(") + op_word(f->op);
  for (const auto& k : f->kids) s += " " + to_prefix(k);
  return s + ")";
}

Formula from_sexpr(const SExpr& e) {
  if (e.is_atom()) {
    if (e.atom.empty()) throw Error("empty formula atom");
    char c = e.atom[0];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '.') {
      if (auto q = parse_decimal(e.atom)) return constant(*q);
      auto slash = e.atom.find('/');
      if (slash != std::string::npos) {
        auto n = parse_decimal(e.atom.substr(0, slash));
        auto d = parse_decimal(e.atom.substr(slash + 1));
        if (n && d && *d != 0) return constant(*n / *d);
      }
      throw Error("malformed constant " + e.atom);
    }
    return input(e.atom);
  }
  if (e.size() == 0 || !e[0].is_atom()) throw Error("malformed formula " + e.str());
  const std::string& head = e[0].atom;
  auto arity = [&](size_t n) {
    if (e.size() != n + 1) throw Error(head + " expects " + std::to_string(n) + " argument(s)");
  };
  if (head == "const") {
    arity(1);
    return named_constant(e[1].atom);
  }
  if (auto f = sym::parse_fn_name(head)) {
    arity(1);
    return fn(*f, from_sexpr(e[1]));
  }
  static const std::pair<const char*, Op> ops[] = {
      {"add", Op::Add}, {"sub", Op::Sub},   {"mul", Op::Mul},       {"div", Op::Div},
      {"neg", Op::Neg}, {"max", Op::Max},   {"sum", Op::Sum},       {"matmul", Op::MatMul},
      {"ifpos", Op::IfPos}, {"transpose", Op::Permute}};
  for (auto [word, op] : ops) {
    if (head != word) continue;
    std::vector<Formula> kids;
    for (size_t i = 1; i < e.size(); ++i) kids.push_back(from_sexpr(e[i]));
    size_t want = is_binary(op) || op == Op::MatMul ? 2 : (op == Op::IfPos ? 3 : 1);
    arity(want);
    return mk(op, std::move(kids));
  }
  throw Error("unknown formula operator " + head);
}

Formula parse_formula(const std::string& text) { return from_sexpr(parse_sexpr(text)); }

namespace {

int infix_prec(const Formula& f) {
  switch (f->op) {
    case Op::Add:
    case Op::Sub: return 1;
    case Op::Mul:
    case Op::Div:
    case Op::MatMul: return 2;
    case Op::Neg: return 3;
    case Op::Const: return f->value < 0 ? 3 : 5;
    default: return 5;
  }
}

std::string infix_child(const Formula& f, int min) {
  std::string s = to_infix(f);
  return infix_prec(f) < min ? "(" + s + ")" : s;
}

}  // namespace

std::string to_infix(const Formula& f) {
  switch (f->op) {
    case Op::Input: return f->name;
    case Op::Const: return const_text(f->value);
    case Op::NamedConst: return find_named_constant(f->name)->text;
    case Op::Permute: return infix_child(f->kids[0], 5) + "^T";
    case Op::Add: return infix_child(f->kids[0], 1) + " + " + infix_child(f->kids[1], 1);
    case Op::Sub: return infix_child(f->kids[0], 1) + " - " + infix_child(f->kids[1], 2);
    case Op::Mul: return infix_child(f->kids[0], 2) + " * " + infix_child(f->kids[1], 2);
    case Op::Div: return infix_child(f->kids[0], 2) + " / " + infix_child(f->kids[1], 3);
    case Op::MatMul: return infix_child(f->kids[0], 2) + " @ " + infix_child(f->kids[1], 3);
    case Op::Neg: return "-" + infix_child(f->kids[0], 4);
    case Op::Fn: return sym::fn_name(f->fn) + "(" + to_infix(f->kids[0]) + ")";
    case Op::Max: return "max(" + to_infix(f->kids[0]) + ")";
    case Op::Sum: return "sum(" + to_infix(f->kids[0]) + ")";
    case Op::IfPos:
      return "where(" + to_infix(f->kids[0]) + " > 0, " + to_infix(f->kids[1]) + ", " + to_infix(f->kids[2]) + ")";
  }
  return "?";
}

namespace {

std::string latex_child(const Formula& f, int min) {
  std::string s = to_latex(f);
  return infix_prec(f) < min ? "\\left(" + s + "\\right)" : s;
}

std::string latex_fn(sym::FnName f) {
  switch (f) {
    case sym::FnName::Exp: return "\\exp";
    case sym::FnName::Log: return "\\log";
    case sym::FnName::Sin: return "\\sin";
    case sym::FnName::Cos: return "\\cos";
    case sym::FnName::Tanh: return "\\tanh";
    default: return "\\operatorname{" + sym::fn_name(f) + "}";
  }
}

}  // namespace

std::string to_latex(const Formula& f) {
  switch (f->op) {
    case Op::Input: return f->name;
    case Op::Const: {
      const Rational& v = f->value;
      std::string s = to_display_string(v);
      if (s.find('/') == std::string::npos) return s;
      std::string num = to_fraction_string(abs(boost::multiprecision::numerator(v)));
      std::string den = to_fraction_string(boost::multiprecision::denominator(v));
      return std::string(v < 0 ? "-" : "") + "\\frac{" + num + "}{" + den + "}";
    }
    case Op::NamedConst: return find_named_constant(f->name)->latex;
    case Op::Permute: return latex_child(f->kids[0], 5) + "^{\\top}";
    case Op::Add: return latex_child(f->kids[0], 1) + " + " + latex_child(f->kids[1], 1);
    case Op::Sub: return latex_child(f->kids[0], 1) + " - " + latex_child(f->kids[1], 2);
    case Op::Mul: return latex_child(f->kids[0], 2) + " \\cdot " + latex_child(f->kids[1], 2);
    case Op::Div: return "\\frac{" + to_latex(f->kids[0]) + "}{" + to_latex(f->kids[1]) + "}";
    case Op::MatMul: return latex_child(f->kids[0], 2) + " " + latex_child(f->kids[1], 3);
    case Op::Neg: return "-" + latex_child(f->kids[0], 4);
    case Op::Fn:
      if (f->fn == sym::FnName::Sqrt) return "\\sqrt{" + to_latex(f->kids[0]) + "}";
      if (f->fn == sym::FnName::Abs) return "\\left|" + to_latex(f->kids[0]) + "\\right|";
      return latex_fn(f->fn) + "\\left(" + to_latex(f->kids[0]) + "\\right)";
    case Op::Max: return "\\max\\left(" + to_latex(f->kids[0]) + "\\right)";
    case Op::Sum: return "\\sum " + latex_child(f->kids[0], 5);
    case Op::IfPos:
      return "\\begin{cases} " + to_latex(f->kids[1]) + " & " + to_latex(f->kids[0]) + " > 0 \\\\ " +
             to_latex(f->kids[2]) + " & \\text{otherwise} \\end{cases}";
  }
  return "?";
}

size_t node_count(const Formula& f) {
  size_t n = 1;
  for (const auto& k : f->kids) n += node_count(k);
  return n;
}

int depth(const Formula& f) {
  int d = 0;
  for (const auto& k : f->kids) d = std::max(d, depth(k) + 1);
  return d;
}

bool equal(const Formula& a, const Formula& b) {
  if (a == b) return true;
  if (a->op != b->op || a->kids.size() != b->kids.size()) return false;
  if (a->op == Op::Input || a->op == Op::NamedConst) {
    if (a->name != b->name) return false;
  } else if (a->op == Op::Const) {
    if (a->value != b->value) return false;
  } else if (a->op == Op::Fn && a->fn != b->fn) {
    return false;
  }
  for (size_t i = 0; i < a->kids.size(); ++i)
    if (!equal(a->kids[i], b->kids[i])) return false;
  return true;
}

Formula sort_commutative(const Formula& f) {
  if (f->kids.empty()) return f;
  auto n = std::make_shared<Node>(*f);
  for (auto& k : n->kids) k = sort_commutative(k);
  if (f->op == Op::Add || f->op == Op::Mul) {
    // flatten the chain, sort operands by their printed form, rebuild left-nested
    std::vector<Formula> ops;
    std::function<void(const Formula&)> flat = [&](const Formula& g) {
      if (g->op == f->op) {
        for (const auto& k : g->kids) flat(k);
      } else {
        ops.push_back(g);
      }
    };
    for (const auto& k : n->kids) flat(k);
    std::stable_sort(ops.begin(), ops.end(),
                     [](const Formula& a, const Formula& b) { return to_prefix(a) < to_prefix(b); });
    Formula acc = ops[0];
    for (size_t i = 1; i < ops.size(); ++i) acc = binary(f->op, acc, ops[i]);
    return acc;
  }
  return n;
}

std::vector<std::string> input_names(const Formula& f) {
  std::vector<std::string> out;
  std::function<void(const Formula&)> walk = [&](const Formula& g) {
    if (g->op == Op::Input && std::find(out.begin(), out.end(), g->name) == out.end()) out.push_back(g->name);
    for (const auto& k : g->kids) walk(k);
  };
  walk(f);
  return out;
}

}  // namespace vlift::tf
