#include "vlift/egraph.hpp"

#include "vlift/error.hpp"

#include <algorithm>
#include <functional>

namespace vlift::eg {

using tf::Op;
using tf::Shape;

size_t ENodeHash::operator()(const ENode& n) const {
  size_t h = std::hash<int>()(static_cast<int>(n.op)) * 31 + static_cast<size_t>(n.fn);
  h ^= std::hash<std::string>()(n.name) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  for (auto k : n.kids) h = h * 1000003u ^ k;
  return h;
}

EGraph::EGraph(tf::ShapeMap shapes, std::set<std::string> positive_inputs)
    : shapes_(std::move(shapes)), positive_(std::move(positive_inputs)) {}

ClassId EGraph::find(ClassId c) const {
  while (parent_[c] != c) {
    parent_[c] = parent_[parent_[c]];
    c = parent_[c];
  }
  return c;
}

ENode EGraph::canonical(ENode n) const {
  for (auto& k : n.kids) k = find(k);
  return n;
}

ClassId EGraph::add(ENode n) {
  n = canonical(std::move(n));
  if (auto it = memo_.find(n); it != memo_.end()) return find(it->second);
  if (n.op == Op::Input && !shapes_.count(n.name)) shapes_[n.name] = Shape{next_symbol_--};
  auto id = static_cast<ClassId>(parent_.size());
  parent_.push_back(id);
  data_[id] = make_data(n);
  classes_[id] = {n};
  memo_[n] = id;
  if (n.op != Op::Const && data_[id].constant) {
    ENode c;
    c.value = *data_[id].constant;
    ClassId cid = add(c);
    merge(id, cid);
    return find(id);
  }
  return id;
}

ClassId EGraph::add_formula(const tf::Formula& f) {
  ENode n;
  n.op = f->op;
  n.name = f->name;
  n.value = f->value;
  n.fn = f->fn;
  for (const auto& k : f->kids) n.kids.push_back(add_formula(k));
  return add(std::move(n));
}

bool EGraph::merge(ClassId a, ClassId b) {
  a = find(a);
  b = find(b);
  if (a == b) return false;
  if (b < a) std::swap(a, b);
  parent_[b] = a;
  auto& into = classes_[a];
  auto& from = classes_[b];
  into.insert(into.end(), from.begin(), from.end());
  join(data_[a], data_[b]);
  classes_.erase(b);
  data_.erase(b);
  dirty_ = true;
  return true;
}

void EGraph::rebuild() {
  for (;;) {
    // congruence
    bool merged = true;
    while (merged) {
      merged = false;
      memo_.clear();
      std::vector<std::pair<ClassId, ClassId>> todo;
      for (auto id : classes()) {
        auto& ns = classes_[id];
        for (auto& n : ns) n = canonical(n);
        std::sort(ns.begin(), ns.end(), [](const ENode& x, const ENode& y) {
          return std::tie(x.op, x.name, x.fn, x.kids) < std::tie(y.op, y.name, y.fn, y.kids) ||
                 (std::tie(x.op, x.name, x.fn, x.kids) == std::tie(y.op, y.name, y.fn, y.kids) && x.value < y.value);
        });
        ns.erase(std::unique(ns.begin(), ns.end()), ns.end());
        for (const auto& n : ns) {
          auto [it, fresh] = memo_.emplace(n, id);
          if (!fresh && find(it->second) != id) todo.push_back({it->second, id});
        }
      }
      for (auto [a, b] : todo) merged |= merge(a, b);
    }
    // analyses to a fixpoint
    bool changed = true;
    while (changed) {
      changed = false;
      for (auto id : classes())
        for (const auto& n : classes_[id]) changed |= join(data_[id], make_data(n));
    }
    // constant folding
    bool folded = false;
    for (auto id : classes()) {
      if (find(id) != id) continue;
      const auto& d = data_[id];
      if (!d.constant) continue;
      const auto& ns = classes_[id];
      if (std::any_of(ns.begin(), ns.end(), [](const ENode& n) { return n.op == Op::Const; })) continue;
      ENode c;
      c.value = *d.constant;
      folded |= merge(id, add(c));
    }
    if (!folded) break;
  }
  dirty_ = false;
}

std::vector<ClassId> EGraph::classes() const {
  std::vector<ClassId> out;
  out.reserve(classes_.size());
  for (const auto& [id, ns] : classes_) out.push_back(id);
  std::sort(out.begin(), out.end());
  return out;
}

const std::vector<ENode>& EGraph::nodes(ClassId c) const { return classes_.at(find(c)); }
const ClassData& EGraph::data(ClassId c) const { return data_.at(find(c)); }

size_t EGraph::node_count() const {
  size_t n = 0;
  for (const auto& [id, ns] : classes_) n += ns.size();
  return n;
}

std::optional<ClassId> EGraph::lookup(const tf::Formula& f) const {
  ENode n;
  n.op = f->op;
  n.name = f->name;
  n.value = f->value;
  n.fn = f->fn;
  for (const auto& k : f->kids) {
    auto c = lookup(k);
    if (!c) return std::nullopt;
    n.kids.push_back(*c);
  }
  n = canonical(std::move(n));
  for (const auto& [id, ns] : classes_)
    for (const auto& m : ns)
      if (canonical(m) == n) return find(id);
  return std::nullopt;
}

bool EGraph::congruent() const {
  std::unordered_map<ENode, ClassId, ENodeHash> seen;
  for (const auto& [id, ns] : classes_)
    for (const auto& n : ns) {
      auto [it, fresh] = seen.emplace(canonical(n), find(id));
      if (!fresh && it->second != find(id)) return false;
    }
  return true;
}

std::optional<Shape> EGraph::shape_of(const ENode& n) const {
  switch (n.op) {
    case Op::Input: {
      auto it = shapes_.find(n.name);
      if (it == shapes_.end()) return std::nullopt;
      return it->second;
    }
    case Op::Const:
    case Op::NamedConst: return Shape{};
    default: break;
  }
  std::vector<Shape> ks;
  for (auto k : n.kids) {
    auto it = data_.find(find(k));
    if (it == data_.end() || !it->second.shape) return std::nullopt;
    ks.push_back(*it->second.shape);
  }
  return tf::result_shape(n.op, ks);
}

ClassData EGraph::make_data(const ENode& n) const {
  ClassData d;
  d.shape = shape_of(n);
  auto kd = [&](size_t i) -> const ClassData& { return data_.at(find(n.kids[i])); };
  switch (n.op) {
    case Op::Const:
      d.constant = n.value;
      break;
    case Op::NamedConst: d.positive = n.value > 0; break;
    case Op::Input: d.positive = positive_.count(n.name) > 0; break;
    case Op::Neg:
      if (kd(0).constant) d.constant = -*kd(0).constant;
      d.nonzero = kd(0).nonzero;
      break;
    case Op::Fn: d.positive = n.fn == sym::FnName::Exp; break;
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::Div: {
      const auto& a = kd(0);
      const auto& b = kd(1);
      if (a.constant && b.constant) {
        switch (n.op) {
          case Op::Add: d.constant = *a.constant + *b.constant; break;
          case Op::Sub: d.constant = *a.constant - *b.constant; break;
          case Op::Mul: d.constant = *a.constant * *b.constant; break;
          default:
            if (*b.constant != 0) d.constant = *a.constant / *b.constant;
        }
      }
      if (n.op != Op::Sub) d.positive = a.positive && b.positive;
      if (n.op == Op::Mul || n.op == Op::Div) d.nonzero = a.nonzero && b.nonzero;
      break;
    }
    case Op::Max:
    case Op::Sum: d.positive = kd(0).positive; break;
    case Op::IfPos: d.positive = kd(1).positive && kd(2).positive; break;
    default: break;
  }
  if (d.constant) {
    d.positive = *d.constant > 0;
    d.nonzero = *d.constant != 0;
  }
  d.nonzero = d.nonzero || d.positive;
  return d;
}

bool EGraph::join(ClassData& into, const ClassData& from) const {
  bool changed = false;
  if (!into.constant && from.constant) {
    into.constant = from.constant;
    changed = true;
  }
  if (!into.shape && from.shape) {
    into.shape = from.shape;
    changed = true;
  }
  if (!into.positive && from.positive) into.positive = changed = true;
  if (!into.nonzero && from.nonzero) into.nonzero = changed = true;
  return changed;
}

tf::Formula EGraph::to_formula(const ENode& n, std::vector<tf::Formula> k) {
  switch (n.op) {
    case Op::Input: return tf::input(n.name);
    case Op::Const: return tf::constant(n.value);
    case Op::NamedConst: return tf::named_constant(n.name);
    case Op::Permute: return tf::transpose(k[0]);
    case Op::Neg: return tf::neg(k[0]);
    case Op::Fn: return tf::fn(n.fn, k[0]);
    case Op::Max: return tf::reduce_max(k[0]);
    case Op::Sum: return tf::reduce_sum(k[0]);
    case Op::MatMul: return tf::matmul(k[0], k[1]);
    case Op::IfPos: return tf::ifpos(k[0], k[1], k[2]);
    default: return tf::binary(n.op, k[0], k[1]);
  }
}

}  // namespace vlift::eg
