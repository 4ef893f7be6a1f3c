#include "vlift/verifier.hpp"

#include "vlift/error.hpp"
#include "vlift/interp.hpp"
#include "vlift/synthesizer.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <numeric>

namespace vlift::verify {

std::string array_name(const std::string& tensor) { return "a_" + tensor; }
std::string element_name(const std::string& tensor, long long index) {
  return "e_" + tensor + "_" + std::to_string(index);
}
std::string scalar_name(const std::string& param) { return "s_" + param; }
std::string dim_name(const std::string& symbol) { return "dim_" + symbol; }

std::string outcome_name(Outcome o) {
  switch (o) {
    case Outcome::Verified: return "Verified";
    case Outcome::Refuted: return "Refuted";
    case Outcome::Unknown: return "Unknown";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Axioms

namespace {

void collect_fns(sym::Term t, std::set<sym::FnName>& out, std::set<sym::Term>& seen) {
  if (!seen.insert(t).second) return;
  if (t->kind() == sym::Kind::Fn) out.insert(t->fn());
  for (auto k : t->kids()) collect_fns(k, out, seen);
}

void collect_fns(const tf::Formula& f, std::set<sym::FnName>& out) {
  if (f->op == tf::Op::Fn) out.insert(f->fn);
  for (const auto& k : f->kids) collect_fns(k, out);
}

SExpr forall_real(const std::vector<std::string>& vars, SExpr body) {
  std::vector<SExpr> bs;
  for (const auto& v : vars) bs.push_back(L({v, "Real"}));
  return L({"forall", SExpr::make_list(bs), std::move(body)});
}

SExpr app(sym::FnName f, SExpr x) { return L({smt::uf_name(f), std::move(x)}); }

}  // namespace

std::set<sym::FnName> functions_in(sym::Term t) {
  std::set<sym::FnName> out;
  std::set<sym::Term> seen;
  collect_fns(t, out, seen);
  return out;
}

std::set<sym::FnName> functions_in(const tf::Formula& f) {
  std::set<sym::FnName> out;
  collect_fns(f, out);
  return out;
}

AxiomSet function_axioms(const std::set<sym::FnName>& fns, const AxiomOptions& opts) {
  using sym::FnName;
  AxiomSet a;
  a.functions = fns;
  bool has_exp = fns.count(FnName::Exp), has_log = fns.count(FnName::Log);
  if (has_exp) {
    a.function_axioms.push_back(forall_real({"v"}, L({">", app(FnName::Exp, "v"), "0.0"})));
    if (opts.exp_monotone)
      a.function_axioms.push_back(forall_real(
          {"u", "v"}, L({"=>", L({"<", "u", "v"}), L({"<", app(FnName::Exp, "u"), app(FnName::Exp, "v")})})));
  }
  if (fns.count(FnName::Sqrt))
    a.function_axioms.push_back(
        forall_real({"v"}, L({"=>", L({">=", "v", "0.0"}), L({">=", app(FnName::Sqrt, "v"), "0.0"})})));
  if (fns.count(FnName::Tanh))
    a.function_axioms.push_back(forall_real(
        {"v"}, L({"and", L({"<", L({"-", "1.0"}), app(FnName::Tanh, "v")}), L({"<", app(FnName::Tanh, "v"), "1.0"})})));
  if (fns.count(FnName::Abs))
    a.function_axioms.push_back(forall_real({"v"}, L({">=", app(FnName::Abs, "v"), "0.0"})));
  if (has_exp && has_log) {
    a.function_axioms.push_back(forall_real({"v"}, L({"=", app(FnName::Log, app(FnName::Exp, "v")), "v"})));
    a.function_axioms.push_back(
        forall_real({"v"}, L({"=>", L({">", "v", "0.0"}), L({"=", app(FnName::Exp, app(FnName::Log, "v")), "v"})})));
  } else if (has_log) {
    a.warnings.push_back("no axioms for log");
  }
  for (auto f : {FnName::Sin, FnName::Cos})
    if (fns.count(f)) a.warnings.push_back("no axioms for " + sym::fn_name(f));
  return a;
}

void AxiomSet::apply(smt::Script& s) const {
  for (auto f : functions) s.declare_fun(smt::uf_name(f), {"Real"}, "Real");
  for (const auto& x : function_axioms) s.add(x);
  for (const auto& x : param_assumptions) s.add(x);
}

AxiomSet gen_precondition(const LiftSpec& spec, const tf::Formula& f, const AxiomOptions& opts) {
  std::set<sym::FnName> fns = functions_in(f);
  for (const auto& out : spec.outputs)
    for (auto e : out.elems) {
      auto x = functions_in(e);
      fns.insert(x.begin(), x.end());
    }
  AxiomSet a = function_axioms(fns, opts);
  for (const auto& in : spec.inputs)
    if (in.positive) a.param_assumptions.push_back(L({">", scalar_name(in.name), "0.0"}));
  return a;
}

// ---------------------------------------------------------------------------
// Affine

SExpr Affine::to_sexpr() const {
  std::vector<SExpr> terms;
  for (const auto& [v, k] : coef) {
    if (k == 1)
      terms.push_back(SExpr(v));
    else
      terms.push_back(L({"*", smt::integer(k), SExpr(v)}));
  }
  if (c != 0 || terms.empty()) terms.push_back(smt::integer(c));
  if (terms.size() == 1) return terms[0];
  terms.insert(terms.begin(), SExpr("+"));
  return SExpr::make_list(std::move(terms));
}

Affine operator+(const Affine& a, const Affine& b) {
  Affine r = a;
  r.c += b.c;
  for (const auto& [v, k] : b.coef)
    if ((r.coef[v] += k) == 0) r.coef.erase(v);
  return r;
}

Affine operator*(const Affine& a, long long k) {
  if (k == 0) return Affine::constant(0);
  Affine r{a.c * k, {}};
  for (const auto& [v, x] : a.coef) r.coef[v] = x * k;
  return r;
}

Affine operator-(const Affine& a, const Affine& b) { return a + b * -1; }

// ---------------------------------------------------------------------------
// Shape-level integers: shape symbols, int params, grid

namespace {

struct ShapeCtx {
  std::vector<std::string> int_vars;
  std::vector<SExpr> assumptions;
  std::map<std::string, Affine> ints;  // shape symbols and int params
  Affine grid;
  // concrete values of every int var, when built against a ShapeEnv
  std::map<std::string, long long> concrete;
  int fresh = 0;

  ShapeCtx(const kir::KernelModule& k, const ShapeEnv* env) {
    for (const auto& s : k.shape_symbols()) {
      std::string v = dim_name(s);
      int_vars.push_back(v);
      assumptions.push_back(L({">=", v, "1"}));
      ints[s] = Affine::var(v);
      if (env) concrete[v] = env->dims.at(s);
    }
    for (const auto& p : k.params)
      if (p.kind == kir::ParamKind::ScalarInt) ints[p.name] = of(*p.int_value);
    grid = of(*k.grid);
  }

  long long eval(const Affine& a) const {
    long long r = a.c;
    for (const auto& [v, x] : a.coef) r += x * concrete.at(v);
    return r;
  }

  Affine of(const kir::Expr& e) {
    using kir::ExprKind;
    switch (e.kind) {
      case ExprKind::IntLit: return Affine::constant(e.int_value);
      case ExprKind::Ref: {
        auto it = ints.find(e.name);
        if (it == ints.end()) throw Error("unknown integer " + e.name);
        return it->second;
      }
      case ExprKind::Neg: return of(*e.args[0]) * -1;
      case ExprKind::Binary: {
        Affine a = of(*e.args[0]), b = of(*e.args[1]);
        switch (e.op) {
          case kir::BinOp::Add: return a + b;
          case kir::BinOp::Sub: return a - b;
          case kir::BinOp::Mul:
            if (a.is_const()) return b * a.c;
            if (b.is_const()) return a * b.c;
            throw Error("non-linear shape expression " + kir::to_string(e));
          case kir::BinOp::Div:
            if (!b.is_const() || b.c <= 0) throw Error("division by a non-constant in " + kir::to_string(e));
            if (a.is_const()) return Affine::constant(interp::floor_div(a.c, b.c));
            return divide(a, b.c);
          case kir::BinOp::Mod:
            if (a.is_const() && b.is_const()) return Affine::constant(interp::floor_mod(a.c, b.c));
            throw Error("symbolic % in " + kir::to_string(e));
        }
        break;
      }
      default: break;
    }
    throw Error("unsupported shape expression " + kir::to_string(e));
  }

  // num / d for a launch that divides evenly: a fresh q with num = d * q.
  Affine divide(const Affine& num, long long d) {
    std::string q = "q" + std::to_string(fresh++);
    int_vars.push_back(q);
    assumptions.push_back(L({"=", num.to_sexpr(), (Affine::var(q) * d).to_sexpr()}));
    if (!concrete.empty()) concrete[q] = interp::floor_div(eval(num), d);
    return Affine::var(q);
  }
};

// ---------------------------------------------------------------------------
// One thread over SMT terms

struct SmtDomain {
  using Int = Affine;
  using Real = SExpr;
  using Bool = SExpr;

  const kir::KernelModule& k;
  const ShapeCtx& ctx;
  Affine pid;
  uint32_t output;
  std::vector<LaneStore> stores;

  Int int_lit(long long v) { return Affine::constant(v); }
  Int int_add(const Int& a, const Int& b) { return a + b; }
  Int int_sub(const Int& a, const Int& b) { return a - b; }
  Int int_mul(const Int& a, const Int& b) {
    if (a.is_const()) return b * a.c;
    if (b.is_const()) return a * b.c;
    throw Error("non-linear index arithmetic");
  }
  Int int_div(const Int& a, const Int& b) {
    if (a.is_const() && b.is_const()) return Affine::constant(interp::floor_div(a.c, b.c));
    throw Error("symbolic integer division");
  }
  Int int_mod(const Int& a, const Int& b) {
    if (a.is_const() && b.is_const()) return Affine::constant(interp::floor_mod(a.c, b.c));
    throw Error("symbolic integer modulo");
  }
  Int int_neg(const Int& a) { return a * -1; }
  Real real_lit(const Rational& q) { return smt::real(q); }
  Real to_real(const Int& a) {
    if (a.is_const()) return smt::real(Rational(a.c));
    return L({"to_real", a.to_sexpr()});
  }
  Real add(const Real& a, const Real& b) { return L({"+", a, b}); }
  Real sub(const Real& a, const Real& b) { return L({"-", a, b}); }
  Real mul(const Real& a, const Real& b) { return L({"*", a, b}); }
  Real div(const Real& a, const Real& b) { return L({"/", a, b}); }
  Real neg(const Real& a) { return L({"-", a}); }
  Real fn(sym::FnName f, const Real& a) { return app(f, a); }
  Bool cmp(sym::Rel r, const Real& a, const Real& b) {
    std::string op = sym::rel_symbol(r);
    if (op == "==") op = "=";
    return L({op, a, b});
  }
  Real select(const Bool& c, const Real& a, const Real& b) { return L({"ite", c, a, b}); }
  Int program_id() { return pid; }
  Int int_param(uint32_t idx) { return ctx.ints.at(k.param(idx).name); }
  Real real_param(uint32_t idx) { return SExpr(scalar_name(k.param(idx).name)); }
  Real load(uint32_t t, const Int& off) {
    if (k.param(t).kind == kir::ParamKind::TensorOut) throw Error("kernel reads its output " + k.param(t).name);
    return L({"select", array_name(k.param(t).name), off.to_sexpr()});
  }
  void store(uint32_t t, const Int& off, const Real& v) {
    if (t == output) stores.push_back({off, v});
  }
};

long long literal_live(const kir::KernelModule& k) {
  if (!k.live) return k.block_size;
  try {
    return kir::eval_int(*k.live, {});
  } catch (const Error&) {
    throw Error("live lanes must be a literal");
  }
}

bool literal_grid_one(const kir::KernelModule& k) {
  return k.grid->kind == kir::ExprKind::IntLit && k.grid->int_value == 1;
}

ThreadEffect effect_in(const kir::KernelModule& k, const ShapeCtx& ctx, uint32_t output) {
  ThreadEffect te;
  SmtDomain dom{k, ctx, literal_grid_one(k) ? Affine::constant(0) : Affine::var("pid"), output, {}};
  interp::Interpreter<SmtDomain> it(k, dom, literal_live(k));
  it.run();
  te.stores = std::move(dom.stores);
  long long n = static_cast<long long>(te.stores.size());
  te.stride = n;
  if (n == 0) {
    te.failure = "thread stores nothing";
    return te;
  }
  std::vector<bool> hit(static_cast<size_t>(n), false);
  Affine base = dom.pid * n;
  for (const auto& s : te.stores) {
    Affine off = s.index - base;
    if (!off.is_const() || off.c < 0 || off.c >= n || hit[static_cast<size_t>(off.c)]) {
      te.failure = "store index " + s.index.to_sexpr().str() + " is not of the form " + std::to_string(n) +
                   "*pid + k";
      return te;
    }
    hit[static_cast<size_t>(off.c)] = true;
  }
  te.pattern = true;
  return te;
}

// ---------------------------------------------------------------------------
// Pointwise formula values over symbolic shapes

using SymShape = std::vector<Affine>;

bool is_one(const Affine& a) { return a.is_const() && a.c == 1; }

// An index component: affine when possible, otherwise an SMT Int term.
struct Ix {
  Affine a;
  std::optional<SExpr> e;
  static Ix of(const Affine& a) { return Ix{a, std::nullopt}; }
  static Ix raw(SExpr x) { return Ix{{}, std::move(x)}; }
  SExpr sexpr() const { return e ? *e : a.to_sexpr(); }
};

Ix ix_add(const Ix& x, const Ix& y) {
  if (!x.e && !y.e) return Ix::of(x.a + y.a);
  return Ix::raw(L({"+", x.sexpr(), y.sexpr()}));
}
Ix ix_scale(const Ix& x, long long k) {
  if (!x.e) return Ix::of(x.a * k);
  if (k == 1) return x;
  return Ix::raw(L({"*", smt::integer(k), x.sexpr()}));
}

long long literal(const Affine& a, const char* what) {
  if (!a.is_const()) throw Error(std::string("symbolic ") + what + " dimension");
  return a.c;
}

SymShape dims_of(const kir::Param& p) {
  SymShape s;
  for (const auto& d : p.dims) s.push_back(d.is_symbol() ? Affine::var(dim_name(d.symbol)) : Affine::constant(d.value));
  return s;
}

class Pointwise {
 public:
  explicit Pointwise(const kir::KernelModule& k) : k_(k) {
    for (auto idx : k.inputs()) {
      const auto& p = k.param(idx);
      inputs_[p.name] = p.is_tensor() ? dims_of(p) : SymShape{};
      tensor_[p.name] = p.is_tensor();
    }
  }

  SymShape shape(const tf::Formula& f) const {
    using tf::Op;
    switch (f->op) {
      case Op::Input: {
        auto it = inputs_.find(f->name);
        if (it == inputs_.end()) throw Error("unknown input " + f->name);
        return it->second;
      }
      case Op::Const:
      case Op::NamedConst: return {};
      case Op::Permute: {
        SymShape s = shape(f->kids[0]);
        if (s.size() != 2) throw Error("transpose of a non-matrix");
        return {s[1], s[0]};
      }
      case Op::Neg:
      case Op::Fn: return shape(f->kids[0]);
      case Op::Max:
      case Op::Sum: {
        SymShape s = shape(f->kids[0]);
        if (s.empty()) return s;
        s.back() = Affine::constant(1);
        return s;
      }
      case Op::MatMul: {
        SymShape a = shape(f->kids[0]), b = shape(f->kids[1]);
        if (a.size() != 2 || b.size() != 2 || !(a[1] == b[0])) throw Error("matmul shape mismatch");
        return {a[0], b[1]};
      }
      case Op::IfPos: return broadcast(broadcast(shape(f->kids[0]), shape(f->kids[1])), shape(f->kids[2]));
      default: return broadcast(shape(f->kids[0]), shape(f->kids[1]));
    }
  }

  SExpr value(const tf::Formula& f, const std::vector<Ix>& idx) const {
    using tf::Op;
    switch (f->op) {
      case Op::Input: {
        if (!tensor_.at(f->name)) return SExpr(scalar_name(f->name));
        const SymShape& s = inputs_.at(f->name);
        Ix flat = Ix::of(Affine::constant(0));
        long long stride = 1;
        for (size_t j = s.size(); j-- > 0;) {
          flat = ix_add(flat, ix_scale(idx[j], stride));
          if (j > 0) stride *= literal(s[j], "inner");
        }
        return L({"select", array_name(f->name), flat.sexpr()});
      }
      case Op::Const:
      case Op::NamedConst: return smt::real(f->value);
      case Op::Permute: return value(f->kids[0], {idx[1], idx[0]});
      case Op::Neg: return L({"-", value(f->kids[0], idx)});
      case Op::Fn: return app(f->fn, value(f->kids[0], idx));
      case Op::Max:
      case Op::Sum: {
        SymShape s = shape(f->kids[0]);
        if (s.empty()) return value(f->kids[0], idx);
        long long n = literal(s.back(), "reduced");
        std::vector<Ix> at = idx;
        std::optional<SExpr> acc;
        for (long long j = 0; j < n; ++j) {
          at.back() = Ix::of(Affine::constant(j));
          SExpr x = value(f->kids[0], at);
          if (!acc)
            acc = x;
          else if (f->op == Op::Sum)
            acc = L({"+", *acc, x});
          else
            acc = L({"ite", L({">", *acc, x}), *acc, x});
        }
        return *acc;
      }
      case Op::MatMul: {
        SymShape a = shape(f->kids[0]);
        long long n = literal(a[1], "contracted");
        std::optional<SExpr> acc;
        for (long long t = 0; t < n; ++t) {
          Ix tt = Ix::of(Affine::constant(t));
          SExpr x = L({"*", value(f->kids[0], {idx[0], tt}), value(f->kids[1], {tt, idx[1]})});
          acc = acc ? L({"+", *acc, x}) : x;
        }
        return *acc;
      }
      case Op::IfPos: {
        SymShape s = shape(f);
        return L({"ite", L({">", kid(f, 0, s, idx), smt::real(Rational(0))}), kid(f, 1, s, idx), kid(f, 2, s, idx)});
      }
      default: {
        SymShape s = shape(f);
        static const std::map<Op, const char*> ops = {{Op::Add, "+"}, {Op::Sub, "-"}, {Op::Mul, "*"}, {Op::Div, "/"}};
        return L({ops.at(f->op), kid(f, 0, s, idx), kid(f, 1, s, idx)});
      }
    }
  }

  static SymShape broadcast(const SymShape& a, const SymShape& b) {
    size_t n = std::max(a.size(), b.size());
    SymShape out(n);
    for (size_t i = 0; i < n; ++i) {
      const Affine* x = i + a.size() >= n ? &a[i + a.size() - n] : nullptr;
      const Affine* y = i + b.size() >= n ? &b[i + b.size() - n] : nullptr;
      if (!x || is_one(*x))
        out[i] = y ? *y : *x;
      else if (!y || is_one(*y) || *x == *y)
        out[i] = *x;
      else
        throw Error("shapes do not broadcast");
    }
    return out;
  }

  // Index of a broadcast operand of shape `want` inside a result of shape `have`.
  static std::vector<Ix> narrow(const SymShape& want, const SymShape& have, const std::vector<Ix>& idx) {
    std::vector<Ix> out;
    size_t off = have.size() - want.size();
    for (size_t j = 0; j < want.size(); ++j)
      out.push_back(is_one(want[j]) && !is_one(have[j + off]) ? Ix::of(Affine::constant(0)) : idx[j + off]);
    return out;
  }

 private:
  SExpr kid(const tf::Formula& f, size_t i, const SymShape& s, const std::vector<Ix>& idx) const {
    return value(f->kids[i], narrow(shape(f->kids[i]), s, idx));
  }

  const kir::KernelModule& k_;
  std::map<std::string, SymShape> inputs_;
  std::map<std::string, bool> tensor_;
};

// Output flat index -> multi-index.
std::vector<Ix> unflatten(const Ix& flat, const SymShape& dims) {
  if (dims.size() <= 1) return {flat};
  std::vector<long long> strides(dims.size(), 1);
  for (size_t j = dims.size() - 1; j-- > 0;) strides[j] = strides[j + 1] * literal(dims[j + 1], "inner");
  long long inner = strides[0];
  std::vector<Ix> out(dims.size());
  bool affine = !flat.e;
  if (affine)
    for (const auto& [v, k] : flat.a.coef) affine = affine && k % inner == 0;
  if (affine) {
    long long q = interp::floor_div(flat.a.c, inner), r = interp::floor_mod(flat.a.c, inner);
    Affine head{q, {}};
    for (const auto& [v, k] : flat.a.coef) head.coef[v] = k / inner;
    out[0] = Ix::of(head);
    for (size_t j = 1; j < dims.size(); ++j) {
      out[j] = Ix::of(Affine::constant(r / strides[j]));
      r %= strides[j];
    }
    return out;
  }
  SExpr e = flat.sexpr();
  out[0] = Ix::raw(L({"div", e, smt::integer(inner)}));
  for (size_t j = 1; j < dims.size(); ++j)
    out[j] = Ix::raw(L({"mod", L({"div", e, smt::integer(strides[j])}), smt::integer(literal(dims[j], "inner"))}));
  return out;
}

// Maps an output multi-index onto a formula value of shape `have` that fits it.
std::vector<Ix> fit_index(const SymShape& out, const std::vector<Ix>& idx, const SymShape& have) {
  if (have.size() <= out.size()) {
    bool ok = true;
    size_t off = out.size() - have.size();
    for (size_t j = 0; j < have.size() && ok; ++j) ok = is_one(have[j]) || have[j] == out[j + off];
    if (ok) return Pointwise::narrow(have, out, idx);
  }
  // equal up to extent-1 axes
  std::vector<Ix> nonunit;
  for (size_t j = 0; j < out.size(); ++j)
    if (!is_one(out[j])) nonunit.push_back(idx[j]);
  std::vector<Ix> res;
  size_t at = 0;
  for (const auto& d : have) {
    if (is_one(d)) {
      res.push_back(Ix::of(Affine::constant(0)));
    } else {
      if (at >= nonunit.size()) throw Error("formula shape does not fit the output");
      res.push_back(nonunit[at++]);
    }
  }
  if (at != nonunit.size()) throw Error("formula shape does not fit the output");
  return res;
}

SExpr post_value(const kir::KernelModule& k, const tf::Formula& f, uint32_t output, const Ix& i) {
  Pointwise pw(k);
  SymShape out = dims_of(k.param(output));
  auto idx = unflatten(i, out);
  return pw.value(f, fit_index(out, idx, pw.shape(f)));
}

Affine output_length(const kir::KernelModule& k, uint32_t output) {
  SymShape d = dims_of(k.param(output));
  if (d.empty()) return Affine::constant(1);
  Affine len = d[0];
  for (size_t j = 1; j < d.size(); ++j) len = len * literal(d[j], "inner");
  return len;
}

SExpr bounded_forall(const std::string& i, const SExpr& hi, const SExpr& body) {
  return L({"forall", L({L({i, "Int"})}), L({"=>", L({"and", L({"<=", "0", i}), L({"<", i, hi})}), body})});
}

}  // namespace

SExpr gen_postcondition_value(const kir::KernelModule& k, const tf::Formula& f, uint32_t output, const SExpr& i) {
  if (i.is_atom() && !i.atom.empty() && !std::isdigit(static_cast<unsigned char>(i.atom[0])))
    return post_value(k, f, output, Ix::of(Affine::var(i.atom)));
  return post_value(k, f, output, Ix::raw(i));
}

SExpr gen_postcondition(const kir::KernelModule& k, const tf::Formula& f, uint32_t output) {
  SExpr body = L({"=", L({"select", array_name(k.param(output).name), "i"}), gen_postcondition_value(k, f, output, "i")});
  return bounded_forall("i", output_length(k, output).to_sexpr(), body);
}

ThreadEffect abstract_thread_effect(const kir::KernelModule& k, uint32_t output) {
  ShapeCtx ctx(k, nullptr);
  return effect_in(k, ctx, output);
}

std::array<Vc, 3> build_vcs(const VcInput& in) {
  auto with = [&](const std::string& id, std::vector<SExpr> xs) {
    Vc v{id, in.base};
    v.script.comments.push_back(id);
    for (auto& x : xs) v.script.add(std::move(x));
    return v;
  };
  return {with("init", {in.pre, L({"not", in.inv("0", false)})}),
          with("preservation", {in.inv("pid", false), in.cond, L({"not", in.inv(L({"+", "pid", "1"}), true)})}),
          with("exit", {in.inv("pid", false), L({"not", in.cond}), L({"not", in.post})})};
}

// ---------------------------------------------------------------------------
// Driver

namespace {

using Clock = std::chrono::steady_clock;

void persist(const VerifyConfig& cfg, const std::string& stem, const smt::Script& s) {
  if (cfg.artifacts_dir.empty()) return;
  std::filesystem::create_directories(cfg.artifacts_dir);
  std::ofstream(std::filesystem::path(cfg.artifacts_dir) / (stem + ".smt2"))
      << s.str(static_cast<unsigned>(cfg.vc_timeout_s * 1000));
}

// Templates (a, b) whose invariant holds at the concrete launch: every prefix
// index below a*p + b is written by threads before p, and the exit covers the
// whole output.
bool plausible(long long a, long long b, const std::vector<std::set<long long>>& before, long long len) {
  long long g = static_cast<long long>(before.size()) - 1;
  if (a * g + b < len) return false;
  for (long long p = 0; p <= g; ++p) {
    long long hi = a * p + b;
    if (hi > len) return false;
    for (long long i = 0; i < hi; ++i)
      if (!before[static_cast<size_t>(p)].count(i)) return false;
  }
  return true;
}

}  // namespace

VerifyResult verify(const kir::KernelModule& k, const LiftSpec& spec, uint32_t output, const tf::Formula& f,
                    const VerifyConfig& cfg) {
  auto start = Clock::now();
  VerifyResult res;
  auto elapsed = [&] { return std::chrono::duration<double>(Clock::now() - start).count(); };
  auto finish = [&](Outcome o, std::string reason) {
    res.outcome = o;
    res.reason = std::move(reason);
    res.seconds = elapsed();
    return res;
  };
  const std::string out_name = k.param(output).name;

  // bounded refutation at the lifted shape
  const SymbolicTensor* out_t = nullptr;
  for (const auto& t : spec.outputs)
    if (t.param == output) out_t = &t;
  if (!out_t) throw Error("no output " + out_name + " in the LiftSpec");
  {
    synth::SynthConfig sc;
    sc.solver = cfg.solver;
    sc.check_timeout_s = cfg.vc_timeout_s;
    sc.axioms = cfg.axioms;
    auto cr = synth::check_candidate(f, spec, synth::target_of(*out_t), sc);
    if (cr.verdict == synth::Verdict::Rejected) {
      res.witness = cr.witness;
      return finish(Outcome::Refuted, cr.reason.empty() ? "differs at the lifted shape" : cr.reason);
    }
  }

  AxiomSet ax = gen_precondition(spec, f, cfg.axioms);
  res.warnings = ax.warnings;

  std::optional<ShapeCtx> ctx;
  ThreadEffect te;
  Affine len;
  try {
    ctx.emplace(k, &spec.env);
    te = effect_in(k, *ctx, output);
    len = output_length(k, output);
    post_value(k, f, output, Ix::of(Affine::var("i")));
  } catch (const Error& e) {
    return finish(Outcome::Unknown, e.what());
  }
  if (te.stores.empty()) return finish(Outcome::Unknown, te.failure);

  // base script
  smt::Script base;
  base.comments.push_back("kernel " + k.name + ", output " + out_name);
  base.declare_const("pid", "Int");
  for (const auto& v : ctx->int_vars) base.declare_const(v, "Int");
  for (auto idx : k.inputs()) {
    const auto& p = k.param(idx);
    if (p.is_tensor())
      base.declare_const(array_name(p.name), "(Array Int Real)");
    else
      base.declare_const(scalar_name(p.name), "Real");
  }
  base.declare_const(array_name(out_name), "(Array Int Real)");
  ax.apply(base);
  for (const auto& a : ctx->assumptions) base.add(a);
  SExpr grid = ctx->grid.to_sexpr();
  SExpr cond = L({"<", "pid", grid});

  // concrete write sets for template filtering
  long long g_c = ctx->eval(ctx->grid), len_c = ctx->eval(len);
  std::vector<std::set<long long>> before(static_cast<size_t>(g_c) + 1);
  for (long long p = 0; p < g_c; ++p) {
    before[static_cast<size_t>(p) + 1] = before[static_cast<size_t>(p)];
    for (const auto& s : te.stores) {
      Affine idx = s.index;
      long long v = idx.c;
      for (const auto& [var, c] : idx.coef) v += c * (var == "pid" ? p : ctx->concrete.at(var));
      before[static_cast<size_t>(p) + 1].insert(v);
    }
  }

  auto run = [&](const smt::Script& s, const std::string& id, const std::string& stem) {
    smt::SolverConfig sc = cfg.solver;
    sc.timeout_s = std::min(cfg.vc_timeout_s, std::max(1.0, cfg.total_budget_s - elapsed()));
    persist(cfg, stem, s);
    smt::Verdict v = smt::check(s, sc);
    return std::make_pair(VcReport{id, v.status, v.seconds, v.reason}, v);
  };

  const std::string stem = k.name + "_" + out_name;
  bool pattern = cfg.use_pattern && te.pattern;
  if (cfg.use_pattern && !te.pattern) res.warnings.push_back("pattern: " + te.failure);

  // per-lane values: v_k = F(n*pid + k)
  if (pattern) {
    for (size_t i = 0; i < te.stores.size(); ++i) {
      smt::Script s = base;
      s.want_model = true;
      s.add(L({"<=", "0", "pid"}));
      s.add(cond);
      s.add(L({"not", L({"=", te.stores[i].value, post_value(k, f, output, Ix::of(te.stores[i].index))})}));
      auto [rep, v] = run(s, "lane" + std::to_string(i), stem + "_lane" + std::to_string(i));
      res.lane_checks.push_back(rep);
      if (v.status == smt::Status::Sat) {
        res.witness = v.model;
        return finish(Outcome::Refuted, "lane " + std::to_string(i) + " differs for some input");
      }
      if (v.status != smt::Status::Unsat) {
        res.warnings.push_back("pattern: lane " + std::to_string(i) + " " + smt::status_name(v.status));
        pattern = false;
        break;
      }
    }
  }
  res.pattern = pattern;

  VcInput in;
  in.base = base;
  in.cond = cond;
  in.pre = smt::conj(ax.param_assumptions);
  const long long n = te.stride;
  const SExpr lo = (Affine::var("pid") * n).to_sexpr();
  const SExpr hi = (Affine::var("pid") * n + Affine::constant(n)).to_sexpr();
  SExpr y = array_name(out_name);
  SExpr chain = y;
  for (const auto& s : te.stores) chain = L({"store", chain, s.index.to_sexpr(), s.value});
  SExpr fi = post_value(k, f, output, Ix::of(Affine::var("i")));
  if (pattern) {
    in.base.declare_fun("P", {"Int"}, "Bool");
    in.post = bounded_forall("i", len.to_sexpr(), L({"P", "i"}));
  } else {
    in.post = bounded_forall("i", len.to_sexpr(), L({"=", L({"select", y, "i"}), fi}));
  }

  std::vector<std::pair<long long, long long>> templates{{n, 0}};
  const long long bound = std::max<long long>(n, 1);
  for (long long a = -bound; a <= bound; ++a)
    for (long long b = -bound; b <= bound; ++b)
      if (!(a == n && b == 0)) templates.push_back({a, b});

  for (auto [a, b] : templates) {
    if (elapsed() >= cfg.total_budget_s) return finish(Outcome::Unknown, "verification budget exhausted");
    if (!plausible(a, b, before, len_c)) continue;
    ++res.templates_tried;
    in.inv = [&, a = a, b = b](const SExpr& p, bool after) {
      SExpr lim = L({"+", L({"*", smt::integer(a), p}), smt::integer(b)});
      SExpr body;
      if (pattern)
        body = after ? L({"or", L({"P", "i"}), L({"and", L({"<=", lo, "i"}), L({"<", "i", hi})})}) : L({"P", "i"});
      else
        body = L({"=", L({"select", after ? chain : y, "i"}), fi});
      return L({"and", L({"<=", "0", p}), L({"<=", p, grid}), bounded_forall("i", lim, body)});
    };
    auto vcs = build_vcs(in);
    std::vector<VcReport> reps;
    bool ok = true;
    for (size_t j : {0, 2, 1}) {
      auto [rep, v] = run(vcs[j].script, vcs[j].id,
                          stem + "_" + std::to_string(a) + "_" + std::to_string(b) + "_" + vcs[j].id);
      reps.push_back(rep);
      if (v.status != smt::Status::Unsat) {
        ok = false;
        break;
      }
    }
    res.vcs = reps;
    if (ok) {
      res.a = a;
      res.b = b;
      return finish(Outcome::Verified, "");
    }
  }
  return finish(Outcome::Unknown, res.templates_tried == 0 ? "no invariant template fits the store pattern"
                                                         : "no invariant template was proved");
}

}  // namespace vlift::verify
