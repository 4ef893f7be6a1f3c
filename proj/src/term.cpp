#include "vlift/term.hpp"

#include "vlift/error.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <mutex>
#include <unordered_map>
#include <unordered_set>

namespace vlift::sym {

std::string fn_name(FnName f) {
  switch (f) {
    case FnName::Exp: return "exp";
    case FnName::Log: return "log";
    case FnName::Sin: return "sin";
    case FnName::Cos: return "cos";
    case FnName::Sqrt: return "sqrt";
    case FnName::Tanh: return "tanh";
    case FnName::Abs: return "abs";
  }
  return "?";
}

std::optional<FnName> parse_fn_name(std::string_view s) {
  for (FnName f : kAllFns)
    if (fn_name(f) == s) return f;
  return std::nullopt;
}

std::string rel_symbol(Rel r) {
  switch (r) {
    case Rel::Gt: return ">";
    case Rel::Ge: return ">=";
    case Rel::Lt: return "<";
    case Rel::Le: return "<=";
    case Rel::Eq: return "==";
  }
  return "?";
}

double apply_fn(FnName f, double x) {
  switch (f) {
    case FnName::Exp: return std::exp(x);
    case FnName::Log: return x > 0 ? std::log(x) : std::nan("");
    case FnName::Sin: return std::sin(x);
    case FnName::Cos: return std::cos(x);
    case FnName::Sqrt: return x >= 0 ? std::sqrt(x) : std::nan("");
    case FnName::Tanh: return std::tanh(x);
    case FnName::Abs: return std::fabs(x);
  }
  return std::nan("");
}

namespace {

std::optional<Rational> exact_fn(FnName f, const Rational& v) {
  switch (f) {
    case FnName::Exp: if (v == 0) return Rational(1); break;
    case FnName::Log: if (v == 1) return Rational(0); break;
    case FnName::Sin: if (v == 0) return Rational(0); break;
    case FnName::Cos: if (v == 0) return Rational(1); break;
    case FnName::Sqrt: if (v == 0 || v == 1) return v; break;
    case FnName::Tanh: if (v == 0) return Rational(0); break;
    case FnName::Abs: return v < 0 ? Rational(-v) : v;
  }
  return std::nullopt;
}

}  // namespace

Number apply_fn(FnName f, const Number& x) {
  if (x.exact()) {
    if (auto q = exact_fn(f, x.rational())) return Number(*q);
  }
  double d = x.to_double();
  if (f == FnName::Log && !(d > 0)) throw DomainError("log of non-positive value");
  if (f == FnName::Sqrt && d < 0) throw DomainError("sqrt of negative value");
  return Number(apply_fn(f, d));
}

// ---------------------------------------------------------------------------
// Interner

class Interner {
 public:
  Term make(Kind k, std::vector<Term> kids, const Rational& value, ElemRef e, FnName f, Rel r) {
    Node n;
    n.kind_ = k;
    n.kids_ = std::move(kids);
    if (k == Kind::Const) n.value_ = value;
    if (k == Kind::Elem) n.elem_ = e;
    if (k == Kind::Fn) n.fn_ = f;
    if (k == Kind::Cmp) n.rel_ = r;
    return intern(std::move(n));
  }

  Term intern(Node&& proto) {
    proto.hash_ = structural_hash(proto);
    std::lock_guard<std::mutex> lock(mu_);
    auto it = table_.find(&proto);
    if (it != table_.end()) return *it;
    proto.id_ = nodes_.size();
    finish(proto);
    nodes_.push_back(std::move(proto));
    Node* stored = &nodes_.back();
    table_.insert(stored);
    return stored;
  }

  size_t size() {
    std::lock_guard<std::mutex> lock(mu_);
    return nodes_.size();
  }

 private:
  static size_t mix(size_t h, size_t v) { return h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2)); }

  static size_t structural_hash(const Node& n) {
    size_t h = static_cast<size_t>(n.kind_) * 1315423911u;
    switch (n.kind_) {
      case Kind::Const:
        h = mix(h, std::hash<std::string>{}(to_fraction_string(n.value_)));
        break;
      case Kind::Elem:
        h = mix(h, (static_cast<size_t>(n.elem_.tensor) << 32) | n.elem_.index);
        break;
      case Kind::Fn: h = mix(h, static_cast<size_t>(n.fn_)); break;
      case Kind::Cmp: h = mix(h, static_cast<size_t>(n.rel_)); break;
      default: break;
    }
    for (Term k : n.kids_) h = mix(h, k->hash());
    return h;
  }

  struct Hash {
    size_t operator()(const Node* n) const { return n->hash(); }
  };
  struct Eq {
    bool operator()(const Node* a, const Node* b) const {
      if (a->kind() != b->kind() || a->kids() != b->kids()) return false;
      switch (a->kind()) {
        case Kind::Const: return a->value() == b->value();
        case Kind::Elem: return a->elem() == b->elem();
        case Kind::Fn: return a->fn() == b->fn();
        case Kind::Cmp: return a->rel() == b->rel();
        default: return true;
      }
    }
  };

  static double elem_probe(ElemRef e) {
    uint64_t z = (static_cast<uint64_t>(e.tensor) << 32 | e.index) + 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return -2.0 + 4.0 * (static_cast<double>(z >> 11) / static_cast<double>(1ULL << 53));
  }

  static void finish(Node& n) {
    auto& k = n.kids_;
    switch (n.kind_) {
      case Kind::Const: n.probe_ = to_double(n.value_); break;
      case Kind::Elem: n.probe_ = elem_probe(n.elem_); break;
      case Kind::Add: {
        double s = 0;
        for (Term t : k) s += t->probe();
        n.probe_ = s;
        break;
      }
      case Kind::Mul: {
        double p = 1;
        for (Term t : k) p *= t->probe();
        n.probe_ = p;
        break;
      }
      case Kind::Div: n.probe_ = k[0]->probe() / k[1]->probe(); break;
      case Kind::Neg: n.probe_ = -k[0]->probe(); break;
      case Kind::Fn: n.probe_ = apply_fn(n.fn_, k[0]->probe()); break;
      case Kind::Cmp: {
        double a = k[0]->probe(), b = k[1]->probe();
        bool r = false;
        switch (n.rel_) {
          case Rel::Gt: r = a > b; break;
          case Rel::Ge: r = a >= b; break;
          case Rel::Lt: r = a < b; break;
          case Rel::Le: r = a <= b; break;
          case Rel::Eq: r = a == b; break;
        }
        n.probe_ = (std::isnan(a) || std::isnan(b)) ? std::nan("") : (r ? 1.0 : 0.0);
        break;
      }
      case Kind::Ite: {
        double c = k[0]->probe();
        n.probe_ = std::isnan(c) ? c : (c > 0.5 ? k[1]->probe() : k[2]->probe());
        break;
      }
    }
    if (n.kind_ == Kind::Elem) {
      n.elems_.push_back(n.elem_);
    } else if (k.size() == 1) {
      n.elems_ = k[0]->elems();
    } else {
      for (Term t : k) {
        std::vector<ElemRef> merged;
        merged.reserve(n.elems_.size() + t->elems().size());
        std::set_union(n.elems_.begin(), n.elems_.end(), t->elems().begin(), t->elems().end(),
                       std::back_inserter(merged));
        n.elems_ = std::move(merged);
      }
    }
  }

  std::mutex mu_;
  std::deque<Node> nodes_;
  std::unordered_set<const Node*, Hash, Eq> table_;
};


namespace {

Interner& interner() {
  static Interner instance;
  return instance;
}

Term make(Kind k, std::vector<Term> kids, const Rational& value = 0, ElemRef e = {},
          FnName f = FnName::Exp, Rel r = Rel::Gt) {
  return interner().make(k, std::move(kids), value, e, f, r);
}

int cmp3(const Rational& a, const Rational& b) { return a < b ? -1 : (b < a ? 1 : 0); }

template <class T>
int cmp3(const T& a, const T& b) {
  return a < b ? -1 : (b < a ? 1 : 0);
}

std::optional<bool> fold_cmp(Rel r, const Rational& a, const Rational& b) {
  switch (r) {
    case Rel::Gt: return a > b;
    case Rel::Ge: return a >= b;
    case Rel::Lt: return a < b;
    case Rel::Le: return a <= b;
    case Rel::Eq: return a == b;
  }
  return std::nullopt;
}

void sort_chain(std::vector<Term>& ts) {
  std::stable_sort(ts.begin(), ts.end(), [](Term a, Term b) { return compare(a, b) < 0; });
}

}  // namespace

size_t interned_count() { return interner().size(); }

int compare(Term a, Term b) {
  if (a == b) return 0;
  if (a->kind() != b->kind()) return cmp3(static_cast<int>(a->kind()), static_cast<int>(b->kind()));
  switch (a->kind()) {
    case Kind::Const: return cmp3(a->value(), b->value());
    case Kind::Elem: return cmp3(a->elem(), b->elem());
    case Kind::Fn:
      if (a->fn() != b->fn()) return cmp3(static_cast<int>(a->fn()), static_cast<int>(b->fn()));
      break;
    case Kind::Cmp:
      if (a->rel() != b->rel()) return cmp3(static_cast<int>(a->rel()), static_cast<int>(b->rel()));
      break;
    default: break;
  }
  size_t n = std::min(a->kids().size(), b->kids().size());
  for (size_t i = 0; i < n; ++i) {
    int c = compare(a->kid(i), b->kid(i));
    if (c != 0) return c;
  }
  return cmp3(a->kids().size(), b->kids().size());
}

Term constant(const Rational& v) { return make(Kind::Const, {}, v); }
Term constant(long long v) { return constant(Rational(v)); }
Term elem(uint32_t tensor, uint32_t index) { return make(Kind::Elem, {}, 0, ElemRef{tensor, index}); }

Term add(std::vector<Term> terms) {
  std::vector<Term> parts;
  Rational c = 0;
  for (Term t : terms) {
    if (t->kind() == Kind::Add) {
      for (Term k : t->kids()) {
        if (k->is_const()) c += k->value();
        else parts.push_back(k);
      }
    } else if (t->is_const()) {
      c += t->value();
    } else {
      parts.push_back(t);
    }
  }
  if (parts.empty()) return constant(c);
  if (c != 0) parts.push_back(constant(c));
  if (parts.size() == 1) return parts[0];
  sort_chain(parts);
  return make(Kind::Add, std::move(parts));
}

Term add(Term a, Term b) { return add(std::vector<Term>{a, b}); }
Term sub(Term a, Term b) { return add(a, neg(b)); }

Term mul(std::vector<Term> terms) {
  std::vector<Term> parts;
  Rational c = 1;
  for (Term t : terms) {
    if (t->kind() == Kind::Mul) {
      for (Term k : t->kids()) {
        if (k->is_const()) c *= k->value();
        else parts.push_back(k);
      }
    } else if (t->is_const()) {
      c *= t->value();
    } else {
      parts.push_back(t);
    }
  }
  if (c == 0 || parts.empty()) return constant(c);
  if (c != 1) parts.push_back(constant(c));
  if (parts.size() == 1) return parts[0];
  sort_chain(parts);
  return make(Kind::Mul, std::move(parts));
}

Term mul(Term a, Term b) { return mul(std::vector<Term>{a, b}); }

Term div(Term a, Term b) {
  if (b->is_const()) {
    if (b->value() == 1) return a;
    if (a->is_const() && b->value() != 0) return constant(Rational(a->value() / b->value()));
  }
  return make(Kind::Div, {a, b});
}

Term neg(Term a) {
  if (a->is_const()) return constant(Rational(-a->value()));
  if (a->kind() == Kind::Neg) return a->kid(0);
  return make(Kind::Neg, {a});
}

Term fn(FnName f, Term a) {
  if (a->is_const()) {
    if (auto q = exact_fn(f, a->value())) return constant(*q);
  }
  return make(Kind::Fn, {a}, 0, {}, f);
}

Term cmp(Rel r, Term a, Term b) {
  if (r == Rel::Lt) return cmp(Rel::Gt, b, a);
  if (r == Rel::Le) return cmp(Rel::Ge, b, a);
  if (r == Rel::Eq && compare(b, a) < 0) std::swap(a, b);
  return make(Kind::Cmp, {a, b}, 0, {}, FnName::Exp, r);
}

Term ite(Term cond, Term then_t, Term else_t) {
  if (then_t == else_t) return then_t;
  if (cond->kind() == Kind::Cmp && cond->kid(0)->is_const() && cond->kid(1)->is_const()) {
    auto v = fold_cmp(cond->rel(), cond->kid(0)->value(), cond->kid(1)->value());
    return *v ? then_t : else_t;
  }
  return make(Kind::Ite, {cond, then_t, else_t});
}

Term max2(Term a, Term b) { return ite(cmp(Rel::Gt, a, b), a, b); }

Term raw(Kind k, std::vector<Term> kids, const Rational& value, ElemRef e, FnName f, Rel r) {
  return make(k, std::move(kids), value, e, f, r);
}

namespace {

Term rebuild(Term t, std::unordered_map<Term, Term>& memo) {
  if (auto it = memo.find(t); it != memo.end()) return it->second;
  std::vector<Term> kids;
  kids.reserve(t->kids().size());
  for (Term k : t->kids()) kids.push_back(rebuild(k, memo));
  Term out = t;
  switch (t->kind()) {
    case Kind::Const:
    case Kind::Elem: break;
    case Kind::Add: out = add(std::move(kids)); break;
    case Kind::Mul: out = mul(std::move(kids)); break;
    case Kind::Div: out = div(kids[0], kids[1]); break;
    case Kind::Neg: out = neg(kids[0]); break;
    case Kind::Fn: out = fn(t->fn(), kids[0]); break;
    case Kind::Cmp: out = cmp(t->rel(), kids[0], kids[1]); break;
    case Kind::Ite: out = ite(kids[0], kids[1], kids[2]); break;
  }
  memo.emplace(t, out);
  return out;
}

}  // namespace

Term canon(Term t) {
  std::unordered_map<Term, Term> memo;
  return rebuild(t, memo);
}

LeafSet leaves(Term t) {
  LeafSet out;
  out.elems.insert(t->elems().begin(), t->elems().end());
  std::vector<Term> stack{t};
  std::unordered_set<Term> seen;
  while (!stack.empty()) {
    Term n = stack.back();
    stack.pop_back();
    if (!seen.insert(n).second) continue;
    if (n->is_const()) out.consts.insert(n->value());
    for (Term k : n->kids()) stack.push_back(k);
  }
  return out;
}

namespace {

Number subst_rec(Term t, const Binding& b, std::unordered_map<Term, Number>& memo) {
  if (auto it = memo.find(t); it != memo.end()) return it->second;
  Number v;
  const auto& k = t->kids();
  switch (t->kind()) {
    case Kind::Const: v = Number(t->value()); break;
    case Kind::Elem: {
      auto it = b.find(t->elem());
      if (it == b.end()) throw DomainError("unbound element in substitution");
      v = it->second;
      break;
    }
    case Kind::Add:
      v = Number(Rational(0));
      for (Term c : k) v = v + subst_rec(c, b, memo);
      break;
    case Kind::Mul:
      v = Number(Rational(1));
      for (Term c : k) v = v * subst_rec(c, b, memo);
      break;
    case Kind::Div: v = subst_rec(k[0], b, memo) / subst_rec(k[1], b, memo); break;
    case Kind::Neg: v = -subst_rec(k[0], b, memo); break;
    case Kind::Fn: v = apply_fn(t->fn(), subst_rec(k[0], b, memo)); break;
    case Kind::Cmp: {
      Number x = subst_rec(k[0], b, memo), y = subst_rec(k[1], b, memo);
      bool r = false;
      switch (t->rel()) {
        case Rel::Gt: r = x > y; break;
        case Rel::Ge: r = !(x < y); break;
        case Rel::Lt: r = x < y; break;
        case Rel::Le: r = !(x > y); break;
        case Rel::Eq: r = x == y; break;
      }
      v = Number(Rational(r ? 1 : 0));
      break;
    }
    case Kind::Ite: {
      Number c = subst_rec(k[0], b, memo);
      v = c == Number(Rational(1)) ? subst_rec(k[1], b, memo) : subst_rec(k[2], b, memo);
      break;
    }
  }
  memo.emplace(t, v);
  return v;
}

double eval_rec(Term t, const std::function<double(ElemRef)>& val, std::unordered_map<Term, double>& memo) {
  if (auto it = memo.find(t); it != memo.end()) return it->second;
  double v = 0;
  const auto& k = t->kids();
  switch (t->kind()) {
    case Kind::Const: v = to_double(t->value()); break;
    case Kind::Elem: v = val(t->elem()); break;
    case Kind::Add:
      for (Term c : k) v += eval_rec(c, val, memo);
      break;
    case Kind::Mul:
      v = 1;
      for (Term c : k) v *= eval_rec(c, val, memo);
      break;
    case Kind::Div: v = eval_rec(k[0], val, memo) / eval_rec(k[1], val, memo); break;
    case Kind::Neg: v = -eval_rec(k[0], val, memo); break;
    case Kind::Fn: v = apply_fn(t->fn(), eval_rec(k[0], val, memo)); break;
    case Kind::Cmp: {
      double x = eval_rec(k[0], val, memo), y = eval_rec(k[1], val, memo);
      bool r = false;
      switch (t->rel()) {
        case Rel::Gt: r = x > y; break;
        case Rel::Ge: r = x >= y; break;
        case Rel::Lt: r = x < y; break;
        case Rel::Le: r = x <= y; break;
        case Rel::Eq: r = x == y; break;
      }
      v = r ? 1.0 : 0.0;
      break;
    }
    case Kind::Ite:
      v = eval_rec(k[0], val, memo) > 0.5 ? eval_rec(k[1], val, memo) : eval_rec(k[2], val, memo);
      break;
  }
  memo.emplace(t, v);
  return v;
}

int precedence(Term t) {
  switch (t->kind()) {
    case Kind::Cmp: return 1;
    case Kind::Add: return 2;
    case Kind::Mul:
    case Kind::Div: return 3;
    case Kind::Neg: return 4;
    case Kind::Const: return t->value() < 0 ? 4 : 6;
    default: return 6;
  }
}

std::string print_rec(Term t, const Naming& naming);

std::string wrap(Term t, int min_prec, const Naming& naming) {
  std::string s = print_rec(t, naming);
  return precedence(t) < min_prec ? "(" + s + ")" : s;
}

std::string print_rec(Term t, const Naming& naming) {
  const auto& k = t->kids();
  switch (t->kind()) {
    case Kind::Const: return to_display_string(t->value());
    case Kind::Elem:
      if (naming) return naming(t->elem());
      return "t" + std::to_string(t->elem().tensor) + "[" + std::to_string(t->elem().index) + "]";
    case Kind::Add: {
      std::string s = wrap(k[0], 2, naming);
      for (size_t i = 1; i < k.size(); ++i) {
        if (k[i]->kind() == Kind::Neg) s += " - " + wrap(k[i]->kid(0), 3, naming);
        else s += " + " + wrap(k[i], 3, naming);
      }
      return s;
    }
    case Kind::Mul: {
      std::string s = wrap(k[0], 3, naming);
      for (size_t i = 1; i < k.size(); ++i) s += " * " + wrap(k[i], 4, naming);
      return s;
    }
    case Kind::Div: return wrap(k[0], 3, naming) + " / " + wrap(k[1], 4, naming);
    case Kind::Neg: return "-" + wrap(k[0], 5, naming);
    case Kind::Fn: return fn_name(t->fn()) + "(" + print_rec(k[0], naming) + ")";
    case Kind::Cmp:
      return wrap(k[0], 2, naming) + " " + rel_symbol(t->rel()) + " " + wrap(k[1], 2, naming);
    case Kind::Ite:
      return "ite(" + print_rec(k[0], naming) + ", " + print_rec(k[1], naming) + ", " +
             print_rec(k[2], naming) + ")";
  }
  return "?";
}

}  // namespace

Number substitute(Term t, const Binding& binding) {
  std::unordered_map<Term, Number> memo;
  return subst_rec(t, binding, memo);
}

double evaluate(Term t, const std::function<double(ElemRef)>& value_of) {
  std::unordered_map<Term, double> memo;
  return eval_rec(t, value_of, memo);
}

std::string to_string(Term t, const Naming& naming) { return print_rec(t, naming); }

}  // namespace vlift::sym
