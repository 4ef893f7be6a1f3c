#pragma once

#include "vlift/egraph.hpp"
#include "vlift/formula.hpp"
#include "vlift/sexpr.hpp"

#include <functional>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

// Equality saturation with declarative rewrite rules, cheapest-tree
// extraction and floating-point constant recovery.
namespace vlift::simp {

struct Guard {
  std::string pred;  // positive | nonzero | const | lastdim1
  std::string var;
};

struct RewriteRule {
  std::string name;
  std::string family;
  SExpr lhs, rhs;
  std::vector<Guard> guards;
};

/// Parses `(family NAME)` and `(rule NAME LHS RHS GUARD...)` forms.
std::vector<RewriteRule> parse_rules(std::string_view text);
/// The shipped rule file.
const std::vector<RewriteRule>& default_rules();
/// Rules of the default set in the given families.
std::vector<RewriteRule> rules_in(const std::set<std::string>& families);

struct Limits {
  int iterations = 30;
  size_t node_budget = 50000;
};

struct SaturationReport {
  int iterations = 0;
  bool saturated = false;   // reached a fixpoint
  bool incomplete = false;  // stopped by the node budget
  size_t applied = 0;       // merges that changed the graph
  size_t nodes = 0, classes = 0;
};

/// Runs rules to a fixpoint or a limit. `after_rebuild` sees the graph after
/// every rebuild.
SaturationReport saturate(eg::EGraph& g, const std::vector<RewriteRule>& rules, const Limits& limits = {},
                          const std::function<void(const eg::EGraph&)>& after_rebuild = {});

struct Saturated {
  eg::EGraph graph;
  eg::ClassId root = 0;
  SaturationReport report;
};
Saturated saturate(const tf::Formula& f, const std::vector<RewriteRule>& rules, const Limits& limits = {},
                   const tf::ShapeMap& shapes = {});

struct CostModel {
  std::map<tf::Op, double> weights;  // missing ops weigh 1
  /// Subtracted from a named constant's weight.
  double named_constant_bonus = 0.5;

  double weight(tf::Op op) const;
  double cost(const tf::Formula& f) const;
};

/// Minimum-cost tree of `root`; ties go to the smaller operator, then the
/// smaller prefix text.
tf::Formula extract(const eg::EGraph& g, eg::ClassId root, const CostModel& cost = {});

/// Replaces constants within relative `tol` of a named constant.
tf::Formula recover_constants(const tf::Formula& f, double tol = 1e-6);

struct SimplifyOptions {
  Limits limits;
  CostModel cost;
  tf::ShapeMap shapes;
  bool expand_tanh = false;
  /// Inputs the precondition declares positive; only used when `trusted`.
  std::set<std::string> positive_inputs;
  bool trusted = false;
  double constant_tol = 1e-6;
};

struct SimplifyResult {
  tf::Formula formula;
  SaturationReport report;
  double cost_before = 0, cost_after = 0;
};

SimplifyResult simplify(const tf::Formula& f, const SimplifyOptions& opts = {});

}  // namespace vlift::simp
