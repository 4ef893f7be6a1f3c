#include "vlift/simplifier.hpp"

#include "vlift/error.hpp"

#include "default_rules.hpp"

#include <cmath>

namespace vlift::simp {

using eg::ClassId;
using eg::EGraph;
using eg::ENode;
using tf::Op;

// ---------------------------------------------------------------------------
// Rules

std::vector<RewriteRule> parse_rules(std::string_view text) {
  std::vector<RewriteRule> out;
  std::string family = "default";
  for (const auto& e : parse_sexprs(text)) {
    if (e.headed("family") && e.size() == 2) {
      family = e[1].atom;
      continue;
    }
    if (!e.headed("rule") || e.size() < 4) throw Error("malformed rule " + e.str());
    RewriteRule r{e[1].atom, family, e[2], e[3], {}};
    for (size_t i = 4; i < e.size(); ++i) {
      const auto& g = e[i];
      if (!g.is_list || g.size() != 2 || !g[0].is_atom() || !g[1].is_atom())
        throw Error("malformed guard in rule " + r.name);
      static const std::set<std::string> preds = {"positive", "nonzero", "const", "lastdim1"};
      if (!preds.count(g[0].atom)) throw Error("unknown guard " + g[0].atom + " in rule " + r.name);
      r.guards.push_back({g[0].atom, g[1].atom});
    }
    out.push_back(std::move(r));
  }
  return out;
}

const std::vector<RewriteRule>& default_rules() {
  static const std::vector<RewriteRule> rules = parse_rules(kDefaultRules);
  return rules;
}

std::vector<RewriteRule> rules_in(const std::set<std::string>& families) {
  std::vector<RewriteRule> out;
  for (const auto& r : default_rules())
    if (families.count(r.family)) out.push_back(r);
  return out;
}

// ---------------------------------------------------------------------------
// Patterns

namespace {

struct Pat {
  enum class Kind { Var, Num, Node } kind = Kind::Node;
  std::string var;
  Rational num;
  ENode node;  // op, fn, name; kids unused
  std::vector<Pat> kids;
};

Pat compile(const SExpr& e) {
  Pat p;
  if (e.is_atom()) {
    if (!e.atom.empty() && e.atom[0] == '?') {
      p.kind = Pat::Kind::Var;
      p.var = e.atom;
      return p;
    }
    tf::Formula f = tf::from_sexpr(e);
    if (f->op != Op::Const) throw Error("pattern leaves must be ?vars or numbers: " + e.atom);
    p.kind = Pat::Kind::Num;
    p.num = f->value;
    return p;
  }
  if (e.headed("const")) {
    tf::Formula f = tf::from_sexpr(e);
    p.node.op = Op::NamedConst;
    p.node.name = f->name;
    p.node.value = f->value;
    return p;
  }
  // reuse the formula parser for operator names and arities
  std::vector<SExpr> probe{e[0]};
  for (size_t i = 1; i < e.size(); ++i) probe.push_back(SExpr("x"));
  tf::Formula f = tf::from_sexpr(SExpr::make_list(probe));
  p.node.op = f->op;
  p.node.fn = f->fn;
  for (size_t i = 1; i < e.size(); ++i) p.kids.push_back(compile(e[i]));
  return p;
}

using Subst = std::map<std::string, ClassId>;

void match(const EGraph& g, const Pat& p, ClassId c, const Subst& s, std::vector<Subst>& out) {
  c = g.find(c);
  switch (p.kind) {
    case Pat::Kind::Var: {
      auto it = s.find(p.var);
      if (it != s.end()) {
        if (g.find(it->second) == c) out.push_back(s);
        return;
      }
      Subst t = s;
      t[p.var] = c;
      out.push_back(std::move(t));
      return;
    }
    case Pat::Kind::Num: {
      const auto& d = g.data(c);
      if (d.constant && *d.constant == p.num) out.push_back(s);
      return;
    }
    case Pat::Kind::Node: break;
  }
  for (const auto& n : g.nodes(c)) {
    if (n.op != p.node.op) continue;
    if (n.op == Op::Fn && n.fn != p.node.fn) continue;
    if (n.op == Op::NamedConst && n.name != p.node.name) continue;
    std::vector<Subst> cur{s};
    for (size_t i = 0; i < p.kids.size() && !cur.empty(); ++i) {
      std::vector<Subst> next;
      for (const auto& cs : cur) match(g, p.kids[i], n.kids[i], cs, next);
      cur = std::move(next);
    }
    out.insert(out.end(), cur.begin(), cur.end());
  }
}

std::optional<tf::Shape> pattern_shape(const EGraph& g, const Pat& p, const Subst& s) {
  switch (p.kind) {
    case Pat::Kind::Var: return g.data(s.at(p.var)).shape;
    case Pat::Kind::Num: return tf::Shape{};
    case Pat::Kind::Node: break;
  }
  if (p.node.op == Op::NamedConst) return tf::Shape{};
  std::vector<tf::Shape> ks;
  for (const auto& k : p.kids) {
    auto sh = pattern_shape(g, k, s);
    if (!sh) return std::nullopt;
    ks.push_back(*sh);
  }
  return tf::result_shape(p.node.op, ks);
}

ClassId instantiate(EGraph& g, const Pat& p, const Subst& s) {
  switch (p.kind) {
    case Pat::Kind::Var: return s.at(p.var);
    case Pat::Kind::Num: {
      ENode n;
      n.value = p.num;
      return g.add(n);
    }
    case Pat::Kind::Node: break;
  }
  ENode n = p.node;
  for (const auto& k : p.kids) n.kids.push_back(instantiate(g, k, s));
  return g.add(std::move(n));
}

bool guard_holds(const EGraph& g, const Guard& gd, const Subst& s) {
  const auto& d = g.data(s.at(gd.var));
  if (gd.pred == "positive") return d.positive;
  if (gd.pred == "nonzero") return d.nonzero;
  if (gd.pred == "const") return d.constant.has_value();
  if (gd.pred == "lastdim1") return d.shape && (d.shape->empty() || d.shape->back() == 1);
  return false;
}

struct Compiled {
  const RewriteRule* rule;
  Pat lhs, rhs;
};

}  // namespace

SaturationReport saturate(EGraph& g, const std::vector<RewriteRule>& rules, const Limits& limits,
                          const std::function<void(const EGraph&)>& after_rebuild) {
  std::vector<Compiled> cs;
  for (const auto& r : rules) cs.push_back({&r, compile(r.lhs), compile(r.rhs)});
  SaturationReport rep;
  g.rebuild();
  if (after_rebuild) after_rebuild(g);
  for (int it = 0; it < limits.iterations; ++it) {
    rep.iterations = it + 1;
    struct Match {
      const Compiled* rule;
      ClassId cls;
      Subst subst;
    };
    std::vector<Match> ms;
    for (const auto& c : cs)
      for (auto id : g.classes()) {
        std::vector<Subst> out;
        match(g, c.lhs, id, {}, out);
        for (auto& s : out) ms.push_back({&c, id, std::move(s)});
      }
    size_t nodes_before = g.node_count();
    size_t merged = 0;
    for (const auto& m : ms) {
      bool ok = true;
      for (const auto& gd : m.rule->rule->guards) ok = ok && guard_holds(g, gd, m.subst);
      if (!ok) continue;
      auto want = g.data(m.cls).shape;
      auto have = pattern_shape(g, m.rule->rhs, m.subst);
      if (!want || !have || *want != *have) continue;
      ClassId r = instantiate(g, m.rule->rhs, m.subst);
      if (g.merge(m.cls, r)) ++merged;
      if (g.node_count() > limits.node_budget) {
        rep.incomplete = true;
        break;
      }
    }
    rep.applied += merged;
    g.rebuild();
    if (after_rebuild) after_rebuild(g);
    if (rep.incomplete) break;
    if (merged == 0 && g.node_count() == nodes_before) {
      rep.saturated = true;
      break;
    }
  }
  rep.nodes = g.node_count();
  rep.classes = g.class_count();
  return rep;
}

Saturated saturate(const tf::Formula& f, const std::vector<RewriteRule>& rules, const Limits& limits,
                   const tf::ShapeMap& shapes) {
  Saturated s{EGraph(shapes), 0, {}};
  s.root = s.graph.add_formula(f);
  s.report = saturate(s.graph, rules, limits);
  s.root = s.graph.find(s.root);
  return s;
}

// ---------------------------------------------------------------------------
// Extraction

double CostModel::weight(Op op) const {
  auto it = weights.find(op);
  double w = it == weights.end() ? 1.0 : it->second;
  if (op == Op::NamedConst) w -= named_constant_bonus;
  return w;
}

double CostModel::cost(const tf::Formula& f) const {
  double c = weight(f->op);
  for (const auto& k : f->kids) c += cost(k);
  return c;
}

tf::Formula extract(const EGraph& g, ClassId root, const CostModel& cost) {
  struct Best {
    double cost = 0;
    tf::Formula f;
    std::string text;
  };
  std::map<ClassId, Best> best;
  auto better = [](const Best& a, const Best& b) {
    if (std::fabs(a.cost - b.cost) > 1e-9) return a.cost < b.cost;
    if (a.f->op != b.f->op) return a.f->op < b.f->op;
    return a.text < b.text;
  };
  bool changed = true;
  while (changed) {
    changed = false;
    for (auto id : g.classes()) {
      for (const auto& n : g.nodes(id)) {
        Best cand;
        cand.cost = cost.weight(n.op);
        std::vector<tf::Formula> kids;
        bool ok = true;
        for (auto k : n.kids) {
          auto it = best.find(g.find(k));
          if (it == best.end()) {
            ok = false;
            break;
          }
          cand.cost += it->second.cost;
          kids.push_back(it->second.f);
        }
        if (!ok) continue;
        cand.f = EGraph::to_formula(n, std::move(kids));
        cand.text = tf::to_prefix(cand.f);
        auto it = best.find(id);
        if (it == best.end() || better(cand, it->second)) {
          best[id] = std::move(cand);
          changed = true;
        }
      }
    }
  }
  auto it = best.find(g.find(root));
  if (it == best.end()) throw Error("no finite term in the root class");
  return it->second.f;
}

// ---------------------------------------------------------------------------
// Constants

tf::Formula recover_constants(const tf::Formula& f, double tol) {
  if (f->op == Op::Const) {
    double v = f->value.convert_to<double>();
    if (v != 0)
      for (const auto& nc : tf::named_constants())
        if (std::fabs(v - nc.value) <= tol * std::fabs(nc.value)) return tf::named_constant(nc.key);
    return f;
  }
  if (f->kids.empty()) return f;
  std::vector<tf::Formula> kids;
  bool same = true;
  for (const auto& k : f->kids) {
    kids.push_back(recover_constants(k, tol));
    same = same && kids.back() == k;
  }
  if (same) return f;
  ENode n;
  n.op = f->op;
  n.name = f->name;
  n.value = f->value;
  n.fn = f->fn;
  return EGraph::to_formula(n, std::move(kids));
}

SimplifyResult simplify(const tf::Formula& f, const SimplifyOptions& opts) {
  SimplifyResult res;
  res.cost_before = opts.cost.cost(f);
  tf::Formula g0 = recover_constants(f, opts.constant_tol);
  std::set<std::string> fams = {"arithmetic", "functions"};
  if (opts.expand_tanh) fams.insert("tanh-expand");
  auto rules = rules_in(fams);
  EGraph g(opts.shapes, opts.trusted ? opts.positive_inputs : std::set<std::string>{});
  ClassId root = g.add_formula(g0);
  res.report = saturate(g, rules, opts.limits);
  res.formula = extract(g, g.find(root), opts.cost);
  res.cost_after = opts.cost.cost(res.formula);
  return res;
}

}  // namespace vlift::simp
