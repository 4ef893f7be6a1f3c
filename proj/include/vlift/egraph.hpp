#pragma once

#include "vlift/formula.hpp"

#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

// E-graph over tensor formulas: union-find over class ids, a hashcons of
// canonical e-nodes, and per-class analyses (constant value, shape, sign).
namespace vlift::eg {

using ClassId = uint32_t;

struct ENode {
  tf::Op op = tf::Op::Const;
  std::string name;  // Input, NamedConst
  Rational value;    // Const, NamedConst
  sym::FnName fn = sym::FnName::Exp;
  std::vector<ClassId> kids;

  friend bool operator==(const ENode&, const ENode&) = default;
};

struct ENodeHash {
  size_t operator()(const ENode& n) const;
};

struct ClassData {
  std::optional<Rational> constant;
  std::optional<tf::Shape> shape;  // negative extents are symbolic
  bool positive = false;
  bool nonzero = false;
};

class EGraph {
 public:
  /// Inputs missing from `shapes` get a distinct symbolic 1-D shape.
  /// `positive_inputs` count as positive for guards.
  explicit EGraph(tf::ShapeMap shapes = {}, std::set<std::string> positive_inputs = {});

  ClassId add(ENode n);
  ClassId add_formula(const tf::Formula& f);
  ClassId find(ClassId c) const;
  /// Returns true if the classes were distinct.
  bool merge(ClassId a, ClassId b);
  /// Restores congruence closure and the analyses.
  void rebuild();

  std::vector<ClassId> classes() const;
  const std::vector<ENode>& nodes(ClassId c) const;
  const ClassData& data(ClassId c) const;
  size_t class_count() const { return classes_.size(); }
  size_t node_count() const;

  /// Class of `f` if every node of it is already represented.
  std::optional<ClassId> lookup(const tf::Formula& f) const;
  ENode canonical(ENode n) const;

  /// Congruence invariant: no two distinct classes hold the same canonical node.
  bool congruent() const;

  std::optional<tf::Shape> shape_of(const ENode& n) const;
  static tf::Formula to_formula(const ENode& n, std::vector<tf::Formula> kids);

 private:
  ClassData make_data(const ENode& n) const;
  bool join(ClassData& into, const ClassData& from) const;

  mutable std::vector<ClassId> parent_;
  std::unordered_map<ClassId, std::vector<ENode>> classes_;
  std::unordered_map<ClassId, ClassData> data_;
  std::unordered_map<ENode, ClassId, ENodeHash> memo_;
  tf::ShapeMap shapes_;
  std::set<std::string> positive_;
  long long next_symbol_ = -2;
  bool dirty_ = false;
};

}  // namespace vlift::eg
