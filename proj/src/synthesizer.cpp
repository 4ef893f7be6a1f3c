#include "vlift/synthesizer.hpp"

#include "vlift/error.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <set>
#include <unordered_map>
#include <unordered_set>

namespace vlift::synth {

using sym::Kind;
using sym::Term;
using tf::Formula;
using tf::Shape;
using tf::SymTensor;

std::string phase_name(Phase p) {
  switch (p) {
    case Phase::None: return "none";
    case Phase::TopDown: return "top-down";
    case Phase::BottomUp: return "bottom-up";
  }
  return "?";
}

std::string verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Accepted: return "accepted";
    case Verdict::Rejected: return "rejected";
    case Verdict::Unknown: return "unknown";
  }
  return "?";
}

Target target_of(const SymbolicTensor& t) { return Target{t.dims, t.elems}; }

namespace {

using Key = std::vector<uint64_t>;

Key key_of(const Shape& shape, const std::vector<Term>& elems) {
  Key k;
  k.reserve(shape.size() + elems.size() + 1);
  k.push_back(shape.size());
  for (auto d : shape) k.push_back(static_cast<uint64_t>(d));
  for (auto e : elems) k.push_back(e->id());
  return k;
}

struct KeyHash {
  size_t operator()(const Key& k) const {
    size_t h = 1469598103934665603ull;
    for (auto x : k) h = (h ^ x) * 1099511628211ull;
    return h;
  }
};

bool all_kind(const Target& t, Kind k) {
  return !t.elems.empty() && std::all_of(t.elems.begin(), t.elems.end(), [&](Term e) { return e->kind() == k; });
}

Target with_elems(const Target& t, std::vector<Term> elems) { return Target{t.shape, std::move(elems)}; }

std::vector<sym::ElemRef> leaf_union(const std::vector<Term>& elems) {
  std::set<sym::ElemRef> s;
  for (auto e : elems) s.insert(e->elems().begin(), e->elems().end());
  return {s.begin(), s.end()};
}

bool subset(const std::vector<sym::ElemRef>& a, const std::vector<sym::ElemRef>& b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

size_t probe_index(long long pos, size_t n) {
  if (n == 0) return 0;
  long long p = pos < 0 ? static_cast<long long>(n) + pos : pos;
  return static_cast<size_t>(std::clamp<long long>(p, 0, static_cast<long long>(n) - 1));
}

// Row-constant targets (every element equal along the last axis) collapse to
// extent 1 there; the solution then broadcasts back.
std::optional<Target> collapse_rows(const Target& t) {
  if (t.shape.empty() || t.shape.back() <= 1) return std::nullopt;
  long long c = t.shape.back();
  size_t rows = t.elems.size() / static_cast<size_t>(c);
  Target out;
  out.shape = t.shape;
  out.shape.back() = 1;
  for (size_t r = 0; r < rows; ++r) {
    Term first = t.elems[r * c];
    for (long long j = 1; j < c; ++j)
      if (t.elems[r * c + j] != first) return std::nullopt;
    out.elems.push_back(first);
  }
  return out;
}

std::optional<Term> uniform(const Target& t) {
  if (t.elems.empty()) return std::nullopt;
  for (auto e : t.elems)
    if (e != t.elems[0]) return std::nullopt;
  return t.elems[0];
}

}  // namespace

// ---------------------------------------------------------------------------
// Splitting

std::optional<Split> split_by(const Target& t, SplitOp op, bool last) {
  Split s{with_elems(t, {}), with_elems(t, {})};
  switch (op) {
    case SplitOp::Add:
    case SplitOp::Sub:
    case SplitOp::Mul: {
      Kind k = op == SplitOp::Mul ? Kind::Mul : Kind::Add;
      if (!all_kind(t, k)) return std::nullopt;
      for (auto e : t.elems) {
        const auto& kids = e->kids();
        Term l, r;
        if (!last) {
          l = kids.front();
          std::vector<Term> rest(kids.begin() + 1, kids.end());
          r = op == SplitOp::Mul ? sym::mul(rest) : sym::add(rest);
        } else {
          r = kids.back();
          std::vector<Term> init(kids.begin(), kids.end() - 1);
          l = op == SplitOp::Mul ? sym::mul(init) : sym::add(init);
        }
        if (op == SplitOp::Sub) {
          if (r->kind() != Kind::Neg) return std::nullopt;
          r = r->kid(0);
        }
        s.left.elems.push_back(l);
        s.right.elems.push_back(r);
      }
      return s;
    }
    case SplitOp::Div:
      if (!all_kind(t, Kind::Div)) return std::nullopt;
      for (auto e : t.elems) {
        s.left.elems.push_back(e->kid(0));
        s.right.elems.push_back(e->kid(1));
      }
      return s;
  }
  return std::nullopt;
}

std::optional<Target> split_fn(const Target& t, sym::FnName f) {
  if (!all_kind(t, Kind::Fn)) return std::nullopt;
  Target out = with_elems(t, {});
  for (auto e : t.elems) {
    if (e->fn() != f) return std::nullopt;
    out.elems.push_back(e->kid(0));
  }
  return out;
}

std::optional<Target> split_neg(const Target& t) {
  if (!all_kind(t, Kind::Neg)) return std::nullopt;
  Target out = with_elems(t, {});
  for (auto e : t.elems) out.elems.push_back(e->kid(0));
  return out;
}

namespace {

// Addends in the order of their first input element.
std::vector<Term> ordered_addends(Term e) {
  std::vector<Term> xs = e->kids();
  std::stable_sort(xs.begin(), xs.end(), [](Term a, Term b) {
    if (a->elems().empty() || b->elems().empty()) return !a->elems().empty() && b->elems().empty();
    return a->elems().front() < b->elems().front();
  });
  return xs;
}

std::optional<SumShape> guess_dot(const Target& t) {
  Shape sh = t.shape;
  if (sh.size() == 1) sh.push_back(1);
  if (sh.size() != 2) return std::nullopt;
  long long n = sh[0], m = sh[1];
  std::vector<std::vector<Term>> adds;
  size_t k = 0;
  for (auto e : t.elems) {
    auto xs = ordered_addends(e);
    if (k == 0) k = xs.size();
    if (xs.size() != k) return std::nullopt;
    for (auto x : xs)
      if (x->kind() != Kind::Mul || x->kids().size() != 2) return std::nullopt;
    adds.push_back(std::move(xs));
  }
  auto at = [&](long long i, long long j) -> const std::vector<Term>& { return adds[static_cast<size_t>(i * m + j)]; };
  for (int role = 0; role < 2; ++role) {
    SumShape s;
    s.kind = SumShape::Kind::Dot;
    s.a.shape = {n, static_cast<long long>(k)};
    s.b.shape = {static_cast<long long>(k), m};
    for (long long i = 0; i < n; ++i)
      for (size_t q = 0; q < k; ++q) s.a.elems.push_back(at(i, 0)[q]->kid(role));
    for (size_t q = 0; q < k; ++q)
      for (long long j = 0; j < m; ++j) s.b.elems.push_back(at(0, j)[q]->kid(1 - role));
    bool ok = true;
    for (long long i = 0; i < n && ok; ++i)
      for (long long j = 0; j < m && ok; ++j)
        for (size_t q = 0; q < k && ok; ++q)
          ok = sym::mul(s.a.elems[static_cast<size_t>(i) * k + q], s.b.elems[q * m + j]) == at(i, j)[q];
    if (ok) return s;
  }
  return std::nullopt;
}

}  // namespace

std::optional<SumShape> guess_sum(const Target& t) {
  if (!all_kind(t, Kind::Add)) return std::nullopt;
  if (auto d = guess_dot(t)) return d;
  size_t k = t.elems[0]->kids().size();
  for (auto e : t.elems)
    if (e->kids().size() != k) return std::nullopt;
  // addends must be structurally parallel: same kind at every position
  SumShape s;
  s.kind = SumShape::Kind::Plain;
  s.rows.shape = t.shape;
  while (!s.rows.shape.empty() && s.rows.shape.back() == 1) s.rows.shape.pop_back();
  s.rows.shape.push_back(static_cast<long long>(k));
  std::vector<Term> first = ordered_addends(t.elems[0]);
  for (auto e : t.elems) {
    auto xs = ordered_addends(e);
    for (size_t q = 0; q < k; ++q)
      if (xs[q]->kind() != first[q]->kind()) return std::nullopt;
    s.rows.elems.insert(s.rows.elems.end(), xs.begin(), xs.end());
  }
  return s;
}

std::optional<Target> guess_max(const Target& t) {
  if (!all_kind(t, Kind::Ite)) return std::nullopt;
  Target rows;
  rows.shape = t.shape;
  while (!rows.shape.empty() && rows.shape.back() == 1) rows.shape.pop_back();
  size_t k = 0;
  for (auto e : t.elems) {
    std::vector<Term> items;
    while (e->kind() == Kind::Ite && e->kid(0)->kind() == Kind::Cmp && e->kid(0)->rel() == sym::Rel::Gt &&
           e->kid(0)->kid(0) == e->kid(1) && e->kid(0)->kid(1) == e->kid(2)) {
      items.push_back(e->kid(2));
      e = e->kid(1);
    }
    items.push_back(e);
    if (items.size() < 2 || (k && items.size() != k)) return std::nullopt;
    k = items.size();
    rows.elems.insert(rows.elems.end(), items.rbegin(), items.rend());
  }
  rows.shape.push_back(static_cast<long long>(k));
  return rows;
}

// ---------------------------------------------------------------------------
// Pruning

bool prune_type_keep(const Formula& p, const tf::ShapeMap& shapes) { return tf::infer_shape(p, shapes).shape.has_value(); }

bool prune_value_keep(const SymTensor& value, const Target& t, long long probe_position) {
  if (!tf::fits(value.shape, t.shape)) return true;
  SymTensor m = tf::materialize(value, t.shape);
  size_t p = probe_index(probe_position, t.elems.size());
  return subset(m.data[p]->elems(), t.elems[p]->elems());
}

Terminals terminals_of(const LiftSpec& spec, const Target& t) {
  Terminals out;
  std::set<Rational> consts{Rational(0), Rational(1)};
  for (auto e : t.elems) {
    auto l = sym::leaves(e);
    consts.insert(l.consts.begin(), l.consts.end());
  }
  for (const auto& in : spec.inputs) {
    SymTensor v{in.dims, in.elems};
    out.inputs[in.name] = v;
    out.programs.push_back(tf::input(in.name));
  }
  for (const auto& in : spec.inputs)
    if (in.dims.size() == 2) out.programs.push_back(tf::transpose(tf::input(in.name)));
  for (const auto& c : consts) out.programs.push_back(tf::constant(c));
  return out;
}

// ---------------------------------------------------------------------------
// Candidate checks

namespace {

struct Naming {
  std::map<uint32_t, const SymbolicTensor*> by_param;
  std::string smt(sym::ElemRef e) const {
    const SymbolicTensor* t = by_param.at(e.tensor);
    return t->dims.empty() ? verify::scalar_name(t->name) : verify::element_name(t->name, e.index);
  }
  std::string display(sym::ElemRef e) const {
    const SymbolicTensor* t = by_param.at(e.tensor);
    return t->dims.empty() ? t->name : t->name + "[" + std::to_string(e.index) + "]";
  }
};

Naming naming_of(const LiftSpec& spec) {
  Naming n;
  for (const auto& t : spec.inputs) n.by_param[t.param] = &t;
  return n;
}

std::map<std::string, SymTensor> symbolic_inputs(const LiftSpec& spec) {
  std::map<std::string, SymTensor> m;
  for (const auto& in : spec.inputs) m[in.name] = SymTensor{in.dims, in.elems};
  return m;
}

bool close(double a, double b) { return std::fabs(a - b) <= 1e-6 * std::max(1.0, std::fabs(b)); }

// Probe values as a necessary condition for equality: any comparable lane
// that disagrees rules the candidate out.
// A candidate undefined where the target is defined also disagrees.
bool probe_agrees(const std::vector<Term>& a, const std::vector<Term>& b) {
  for (size_t i = 0; i < a.size(); ++i) {
    double x = a[i]->probe(), y = b[i]->probe();
    if (std::isnan(y)) continue;
    if (std::isnan(x)) return false;
    if (std::isinf(x) || std::isinf(y)) {
      if (x != y) return false;
      continue;
    }
    if (!close(x, y)) return false;
  }
  return true;
}

CheckResult smt_equal(const std::vector<Term>& cand, const std::vector<Term>& want, const LiftSpec& spec,
                      const SynthConfig& cfg, SynthStats* stats) {
  CheckResult r;
  Naming names = naming_of(spec);
  std::set<sym::ElemRef> leaves;
  std::set<sym::FnName> fns;
  std::vector<SExpr> diseq;
  auto leaf = [&](sym::ElemRef e) { return SExpr(names.smt(e)); };
  for (size_t i = 0; i < cand.size(); ++i) {
    if (cand[i] == want[i]) continue;
    for (auto t : {cand[i], want[i]}) {
      leaves.insert(t->elems().begin(), t->elems().end());
      auto f = verify::functions_in(t);
      fns.insert(f.begin(), f.end());
    }
    diseq.push_back(L({"not", L({"=", smt::encode(cand[i], leaf), smt::encode(want[i], leaf)})}));
  }
  if (diseq.empty()) {
    r.verdict = Verdict::Accepted;
    r.syntactic = true;
    return r;
  }
  smt::Script s;
  s.want_model = true;
  for (auto e : leaves) s.declare_const(names.smt(e), "Real");
  verify::AxiomSet ax = verify::function_axioms(fns, cfg.axioms);
  for (const auto& in : spec.inputs)
    if (in.positive && !in.elems.empty() && leaves.count(in.elems[0]->elem()))
      ax.param_assumptions.push_back(L({">", verify::scalar_name(in.name), "0.0"}));
  ax.apply(s);
  s.add(smt::disj(std::move(diseq)));
  smt::SolverConfig sc = cfg.solver;
  sc.timeout_s = cfg.check_timeout_s;
  if (stats) ++stats->solver_calls;
  smt::Verdict v = smt::check(s, sc);
  switch (v.status) {
    case smt::Status::Unsat: r.verdict = Verdict::Accepted; break;
    case smt::Status::Sat: {
      r.verdict = Verdict::Rejected;
      for (auto e : leaves) {
        auto it = v.model.find(names.smt(e));
        if (it != v.model.end()) r.witness[names.display(e)] = it->second;
      }
      break;
    }
    default:
      r.verdict = Verdict::Unknown;
      r.reason = v.reason;
  }
  return r;
}

CheckResult check_against(const Formula& f, const LiftSpec& spec, const Target& t, const SynthConfig& cfg,
                          SynthStats* stats) {
  CheckResult r;
  SymTensor v;
  try {
    v = tf::eval_sym(f, symbolic_inputs(spec));
  } catch (const Error& e) {
    r.verdict = Verdict::Rejected;
    r.reason = e.what();
    return r;
  }
  if (!tf::fits(v.shape, t.shape)) {
    r.verdict = Verdict::Rejected;
    r.reason = "shape mismatch";
    return r;
  }
  v = tf::materialize(v, t.shape);
  if (v.data == t.elems) {
    r.verdict = Verdict::Accepted;
    r.syntactic = true;
    return r;
  }
  return smt_equal(v.data, t.elems, spec, cfg, stats);
}

}  // namespace

CheckResult check_candidate(const Formula& f, const LiftSpec& spec, const Target& target, const SynthConfig& cfg) {
  return check_against(f, spec, target, cfg, nullptr);
}

CheckResult check_candidate(const Formula& f, const LiftSpec& spec, size_t output, const SynthConfig& cfg) {
  return check_against(f, spec, target_of(spec.outputs.at(output)), cfg, nullptr);
}

// ---------------------------------------------------------------------------
// Engine

namespace {

using Clock = std::chrono::steady_clock;

struct Prog {
  Formula f;
  SymTensor val;
  bool constant = false;
  std::vector<sym::ElemRef> leaves;
};

struct Solved {
  std::optional<Formula> f;
  Phase phase = Phase::None;
};

class Engine {
 public:
  Engine(const LiftSpec& spec, const SynthConfig& cfg, SynthStats& stats)
      : spec_(spec), cfg_(cfg), stats_(stats), inputs_(symbolic_inputs(spec)) {
    deadline_ = Clock::now() + std::chrono::milliseconds(static_cast<long long>(cfg.time_budget_s * 1000));
    for (const auto& in : spec.inputs) shapes_[in.name] = in.dims;
  }

  Solved solve(const Target& t, bool root) {
    Key key = key_of(t.shape, t.elems);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    Solved s;
    if (!timed_out()) s = solve_uncached(t, root);
    memo_[key] = s;
    return s;
  }

  bool timed_out() const { return Clock::now() >= deadline_; }
  bool budget_hit() const { return budget_hit_; }

 private:
  Solved solve_uncached(const Target& t, bool root) {
    if (auto c = uniform(t)) {
      if ((*c)->is_const()) return {tf::constant((*c)->value()), Phase::TopDown};
    }
    if (auto hit = match_terminal(t)) return {hit, Phase::TopDown};
    if (auto col = collapse_rows(t)) {
      Solved s = solve(*col, false);
      if (s.f && accept(*s.f, t)) return s;
    }
    if (cfg_.enable_topdown) {
      if (auto f = topdown(t)) return {f, Phase::TopDown};
    }
    size_t budget = root ? cfg_.max_programs : std::max<size_t>(1, cfg_.max_programs / 10);
    if (auto f = bottom_up(t, budget)) return {f, Phase::BottomUp};
    return {};
  }

  std::optional<Formula> match_terminal(const Target& t) {
    Terminals term = terminals_of(spec_, t);
    for (const auto& p : term.programs) {
      if (p->op == tf::Op::Const) continue;
      SymTensor v = tf::eval_sym(p, inputs_);
      if (!tf::fits(v.shape, t.shape)) continue;
      if (tf::materialize(v, t.shape).data == t.elems) return p;
    }
    return std::nullopt;
  }

  bool accept(const Formula& f, const Target& t) {
    CheckResult r = check_against(f, spec_, t, cfg_, &stats_);
    return r.verdict == Verdict::Accepted;
  }

  std::optional<Formula> both(const Split& s, const std::function<Formula(Formula, Formula)>& mk, const Target& t) {
    Solved l = solve(s.left, false);
    if (!l.f) return std::nullopt;
    Solved r = solve(s.right, false);
    if (!r.f) return std::nullopt;
    Formula f = mk(*l.f, *r.f);
    if (accept(f, t)) return f;
    return std::nullopt;
  }

  std::optional<Formula> topdown(const Target& t) {
    // binary operators
    for (bool last : {false, true}) {
      if (auto s = split_by(t, SplitOp::Sub, last))
        if (auto f = both(*s, tf::sub, t)) return f;
      if (auto s = split_by(t, SplitOp::Add, last))
        if (auto f = both(*s, tf::add, t)) return f;
    }
    for (bool last : {false, true}) {
      if (auto s = split_by(t, SplitOp::Mul, last))
        if (auto f = both(*s, tf::mul, t)) return f;
    }
    if (auto s = split_by(t, SplitOp::Div))
      if (auto f = both(*s, tf::div, t)) return f;
    // functions
    if (auto inner = split_neg(t)) {
      Solved s = solve(*inner, false);
      if (s.f) {
        Formula f = tf::neg(*s.f);
        if (accept(f, t)) return f;
      }
    }
    for (auto fn : sym::kAllFns) {
      if (auto inner = split_fn(t, fn)) {
        Solved s = solve(*inner, false);
        if (s.f) {
          Formula f = tf::fn(fn, *s.f);
          if (accept(f, t)) return f;
        }
      }
    }
    // max folds
    if (auto rows = guess_max(t)) {
      Solved r = solve(*rows, false);
      if (r.f) {
        Formula f = tf::reduce_max(*r.f);
        if (accept(f, t)) return f;
      }
    }
    // conditionals: ite(l > r, a, b) as ifpos(l - r, a, b)
    if (all_kind(t, Kind::Ite)) {
      Target c = with_elems(t, {}), a = with_elems(t, {}), b = with_elems(t, {});
      bool ok = true;
      for (auto e : t.elems) {
        Term cond = e->kid(0);
        if (cond->kind() != Kind::Cmp || (cond->rel() != sym::Rel::Gt && cond->rel() != sym::Rel::Ge)) {
          ok = false;
          break;
        }
        bool ge = cond->rel() == sym::Rel::Ge;
        // l >= r holds exactly when not (r - l > 0)
        c.elems.push_back(ge ? sym::sub(cond->kid(1), cond->kid(0)) : sym::sub(cond->kid(0), cond->kid(1)));
        a.elems.push_back(ge ? e->kid(2) : e->kid(1));
        b.elems.push_back(ge ? e->kid(1) : e->kid(2));
      }
      if (ok) {
        Solved sc = solve(c, false);
        if (sc.f) {
          Solved sa = solve(a, false);
          Solved sb = sa.f ? solve(b, false) : Solved{};
          if (sa.f && sb.f) {
            Formula f = tf::ifpos(*sc.f, *sa.f, *sb.f);
            if (accept(f, t)) return f;
          }
        }
      }
    }
    // sums: dot products first, then plain row sums
    if (auto g = guess_sum(t)) {
      if (g->kind == SumShape::Kind::Dot) {
        Solved a = solve(g->a, false);
        Solved b = a.f ? solve(g->b, false) : Solved{};
        if (a.f && b.f) {
          Formula f = tf::matmul(*a.f, *b.f);
          if (accept(f, t)) return f;
        }
      }
      SumShape plain;
      bool have_plain = g->kind == SumShape::Kind::Plain;
      if (!have_plain) {
        // a dot-shaped sum may still be a plain row sum
        Target rows;
        rows.shape = t.shape;
        while (!rows.shape.empty() && rows.shape.back() == 1) rows.shape.pop_back();
        rows.shape.push_back(static_cast<long long>(t.elems[0]->kids().size()));
        for (auto e : t.elems) {
          auto xs = ordered_addends(e);
          rows.elems.insert(rows.elems.end(), xs.begin(), xs.end());
        }
        plain.rows = rows;
        have_plain = true;
      } else {
        plain = *g;
      }
      if (have_plain) {
        Solved r = solve(plain.rows, false);
        if (r.f) {
          Formula f = tf::reduce_sum(*r.f);
          if (accept(f, t)) return f;
        }
      }
    }
    return std::nullopt;
  }

  // ---- bottom-up ----

  std::optional<Formula> bottom_up(const Target& t, size_t budget) {
    ++stats_.bottom_up_calls;
    Terminals term = terminals_of(spec_, t);
    const auto target_leaves = leaf_union(t.elems);
    std::unordered_set<Key, KeyHash> seen;
    std::vector<std::vector<Prog>> levels(1);
    size_t generated = 0;
    std::optional<Formula> found;

    // returns false to stop the search
    auto consider = [&](Formula f, std::vector<const Prog*> kids, std::vector<Prog>& level) -> bool {
      if (generated >= budget) budget_hit_ = true;
      if (generated >= budget || timed_out()) return false;
      ++generated;
      ++stats_.programs_enumerated;
      SymTensor val;
      if (kids.empty()) {
        try {
          val = tf::eval_sym(f, term.inputs);
        } catch (const Error&) {
          ++stats_.pruned_type;
          return true;
        }
      } else {
        std::vector<Shape> ks;
        for (auto* k : kids) ks.push_back(k->val.shape);
        if (!shape_ok(*f, ks)) {
          ++stats_.pruned_type;
          return true;
        }
        std::vector<SymTensor> vals;
        for (auto* k : kids) vals.push_back(k->val);
        val = tf::apply_sym(*f, std::move(vals));
      }
      Key key = key_of(val.shape, val.data);
      if (!seen.insert(key).second) {
        ++stats_.deduplicated;
        return true;
      }
      Prog p;
      p.f = f;
      p.constant = kids.empty() ? f->op == tf::Op::Const : std::all_of(kids.begin(), kids.end(), [](const Prog* k) {
        return k->constant;
      });
      p.leaves = leaf_union(val.data);
      if (cfg_.enable_value_prune) {
        if (!subset(p.leaves, target_leaves) || !prune_value_keep(val, t, cfg_.probe_position)) {
          ++stats_.pruned_value;
          return true;
        }
      }
      if (tf::fits(val.shape, t.shape)) {
        SymTensor m = tf::materialize(val, t.shape);
        if (m.data == t.elems) {
          found = f;
          return false;
        }
        if (probe_agrees(m.data, t.elems)) {
          CheckResult r = smt_equal(m.data, t.elems, spec_, cfg_, &stats_);
          if (r.verdict == Verdict::Accepted) {
            found = f;
            return false;
          }
        }
      }
      p.val = std::move(val);
      level.push_back(std::move(p));
      return true;
    };

    for (const auto& f : term.programs)
      if (!consider(f, {}, levels[0])) return found;

    static const tf::Op unary[] = {tf::Op::Neg, tf::Op::Fn, tf::Op::Max, tf::Op::Sum, tf::Op::Permute};
    static const tf::Op binary[] = {tf::Op::Add, tf::Op::Sub, tf::Op::Mul, tf::Op::Div, tf::Op::MatMul};
    for (int d = 1; d <= cfg_.max_depth; ++d) {
      std::vector<Prog> next;
      std::vector<const Prog*> prev, all;
      for (const auto& p : levels[d - 1]) prev.push_back(&p);
      for (int e = 0; e < d; ++e)
        for (const auto& p : levels[e]) all.push_back(&p);
      auto fresh = [&](const Prog* p) { return p >= levels[d - 1].data() && p < levels[d - 1].data() + levels[d - 1].size(); };

      for (auto op : unary) {
        std::vector<sym::FnName> fns = {sym::FnName::Exp};
        if (op == tf::Op::Fn) fns.assign(std::begin(sym::kAllFns), std::end(sym::kAllFns));
        for (auto fnm : fns)
          for (const Prog* a : prev) {
            if (a->constant) continue;
            Formula f;
            switch (op) {
              case tf::Op::Neg: f = tf::neg(a->f); break;
              case tf::Op::Fn: f = tf::fn(fnm, a->f); break;
              case tf::Op::Max: f = tf::reduce_max(a->f); break;
              case tf::Op::Sum: f = tf::reduce_sum(a->f); break;
              default: f = tf::transpose(a->f); break;
            }
            if (!consider(f, {a}, next)) return found;
          }
      }
      for (auto op : binary)
        for (const Prog* a : all)
          for (const Prog* b : all) {
            if (!fresh(a) && !fresh(b)) continue;
            if (a->constant && b->constant) continue;
            Formula f = op == tf::Op::MatMul ? tf::matmul(a->f, b->f) : tf::binary(op, a->f, b->f);
            if (!consider(f, {a, b}, next)) return found;
          }
      for (const Prog* c : all)
        for (const Prog* a : all)
          for (const Prog* b : all) {
            if (!fresh(c) && !fresh(a) && !fresh(b)) continue;
            if (c->constant && a->constant && b->constant) continue;
            if (c->constant) continue;  // a constant condition folds away
            if (!consider(tf::ifpos(c->f, a->f, b->f), {c, a, b}, next)) return found;
          }
      levels.push_back(std::move(next));
    }
    return found;
  }

  static bool shape_ok(const tf::Node& n, const std::vector<Shape>& ks) {
    switch (n.op) {
      case tf::Op::Permute: return ks[0].size() == 2;
      case tf::Op::Add:
      case tf::Op::Sub:
      case tf::Op::Mul:
      case tf::Op::Div: return tf::broadcast(ks[0], ks[1]).has_value();
      case tf::Op::MatMul: return ks[0].size() == 2 && ks[1].size() == 2 && ks[0][1] == ks[1][0];
      case tf::Op::IfPos: {
        auto b = tf::broadcast(ks[0], ks[1]);
        return b && tf::broadcast(*b, ks[2]).has_value();
      }
      default: return true;
    }
  }

  const LiftSpec& spec_;
  const SynthConfig& cfg_;
  SynthStats& stats_;
  std::map<std::string, SymTensor> inputs_;
  tf::ShapeMap shapes_;
  Clock::time_point deadline_;
  std::unordered_map<Key, Solved, KeyHash> memo_;
  bool budget_hit_ = false;
};

}  // namespace

SynthResult synthesize(const LiftSpec& spec, size_t output, const SynthConfig& cfg) {
  auto start = Clock::now();
  SynthResult res;
  Target t = target_of(spec.outputs.at(output));
  Engine eng(spec, cfg, res.stats);
  Solved s = eng.solve(t, true);
  res.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  if (s.f) {
    res.formula = s.f;
    res.phase = s.phase;
  } else {
    res.failure = eng.timed_out() ? "timeout" : eng.budget_hit() ? "program budget exhausted" : "depth exhausted";
  }
  return res;
}

// ---------------------------------------------------------------------------
// Regression counting

LevelCounts count_programs(const LiftSpec& spec, const std::vector<Rational>& consts, int depth) {
  struct P {
    Shape shape;
    bool constant;
  };
  LevelCounts out;
  std::vector<std::vector<P>> levels(1);
  for (const auto& in : spec.inputs) levels[0].push_back({in.dims, false});
  for (const auto& in : spec.inputs)
    if (in.dims.size() == 2) levels[0].push_back({{in.dims[1], in.dims[0]}, false});
  for (size_t i = 0; i < consts.size(); ++i) levels[0].push_back({{}, true});
  out.well_typed.push_back(levels[0].size());
  out.ill_typed.push_back(0);
  for (int d = 1; d <= depth; ++d) {
    std::vector<P> next;
    size_t bad = 0;
    std::vector<std::pair<const P*, bool>> all;
    for (int e = 0; e < d; ++e)
      for (const auto& p : levels[e]) all.push_back({&p, e == d - 1});
    auto add = [&](std::optional<Shape> s, bool c) {
      if (s)
        next.push_back({*s, c});
      else
        ++bad;
    };
    for (const auto& p : levels[d - 1]) {
      if (p.constant) continue;
      add(p.shape, false);  // neg
      for (size_t i = 0; i < std::size(sym::kAllFns); ++i) add(p.shape, false);
      Shape r = p.shape;
      if (!r.empty()) r.back() = 1;
      add(r, false);  // max
      add(r, false);  // sum
      add(p.shape.size() == 2 ? std::optional<Shape>(Shape{p.shape[1], p.shape[0]}) : std::nullopt, false);
    }
    for (int op = 0; op < 5; ++op)
      for (auto [a, af] : all)
        for (auto [b, bf] : all) {
          if (!af && !bf) continue;
          if (a->constant && b->constant) continue;
          if (op < 4) {
            add(tf::broadcast(a->shape, b->shape), false);
          } else {
            bool ok = a->shape.size() == 2 && b->shape.size() == 2 && a->shape[1] == b->shape[0];
            add(ok ? std::optional<Shape>(Shape{a->shape[0], b->shape[1]}) : std::nullopt, false);
          }
        }
    for (auto [c, cf] : all)
      for (auto [a, af] : all)
        for (auto [b, bf] : all) {
          if (!cf && !af && !bf) continue;
          if (c->constant) continue;
          auto s = tf::broadcast(c->shape, a->shape);
          if (s) s = tf::broadcast(*s, b->shape);
          add(s, false);
        }
    out.well_typed.push_back(next.size());
    out.ill_typed.push_back(bad);
    levels.push_back(std::move(next));
  }
  return out;
}

}  // namespace vlift::synth
