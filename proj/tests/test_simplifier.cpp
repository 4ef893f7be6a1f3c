#include "support.hpp"

#include "vlift/error.hpp"
#include "vlift/simplifier.hpp"
#include "vlift/synthesizer.hpp"

#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

using namespace vlift;
using namespace vlift::testing;
using namespace vlift::simp;

namespace {

tf::Formula lifted(const std::string& name) {
  auto k = kir::load_kernel_file(corpus_file(name));
  auto r = synth::synthesize(execute(k, default_shape(k)), 0, {});
  if (!r.formula) throw Error(name + ": " + r.failure);
  return *r.formula;
}

SimplifyOptions rows() {
  SimplifyOptions o;
  o.shapes = {{"x", {2, 4}}};
  return o;
}

// formulas exercised by the property tests
std::vector<std::pair<tf::Formula, tf::ShapeMap>> samples() {
  std::vector<std::pair<tf::Formula, tf::ShapeMap>> out;
  for (const char* f : {"(div (exp (sub x (max x))) (sum (exp (sub x (max x)))))",
                        "(sub (sub x (max x)) (log (sum (exp (sub x (max x))))))",
                        "(mul (div 1 (add 1 (exp (neg x)))) x)", "(add (mul 2 x) (mul x 3))",
                        "(neg (neg (sub x 0)))", "(ifpos x x (mul x 0.01))", "(div (mul x x) (sqrt (sum (mul x x))))",
                        "(tanh (add x (mul 0.044715 (mul x (mul x x)))))", "(mul (exp x) (exp (neg x)))"})
    out.push_back({tf::parse_formula(f), {{"x", {2, 4}}}});
  return out;
}

}  // namespace

TEST(Simplifier, SoftmaxDropsTheShift) {
  tf::Formula f = lifted("softmax");
  auto r = simplify(f, rows());
  EXPECT_EQ(tf::to_infix(r.formula), "exp(x) / sum(exp(x))");
  EXPECT_EQ(tf::node_count(f), 12u);
  EXPECT_EQ(tf::node_count(r.formula), 6u);
  EXPECT_LT(r.cost_after, r.cost_before);
}

TEST(Simplifier, LogSoftmax) {
  auto r = simplify(lifted("logsoftmax"), rows());
  EXPECT_EQ(tf::to_infix(r.formula), "x - log(sum(exp(x)))");
}

TEST(Simplifier, ShiftedAndPlainSoftmaxShareAClass) {
  tf::Formula f = lifted("softmax");
  auto s = saturate(f, default_rules(), {}, {{"x", {2, 4}}});
  auto plain = s.graph.lookup(tf::parse_formula("(div (exp x) (sum (exp x)))"));
  ASSERT_TRUE(plain.has_value());
  EXPECT_EQ(s.graph.find(*plain), s.graph.find(s.root));
  auto other = s.graph.lookup(tf::parse_formula("(exp x)"));
  ASSERT_TRUE(other.has_value());
  EXPECT_NE(s.graph.find(*other), s.graph.find(s.root));
}

TEST(Simplifier, ConstantRecovery) {
  auto log2e = simplify(tf::parse_formula("(mul x 1.4426950216293335)"));
  EXPECT_EQ(tf::to_infix(log2e.formula), "log2(e) * x");
  EXPECT_EQ(tf::to_infix(simplify(tf::parse_formula("(mul 0.01 x)")).formula), "0.01 * x");
  EXPECT_EQ(tf::to_infix(recover_constants(tf::parse_formula("(mul 0.044715 x)"))), "0.044715 * x");
  EXPECT_EQ(tf::to_infix(recover_constants(tf::parse_formula("(mul 0.5 x)"))), "0.5 * x");
  auto pi = recover_constants(tf::parse_formula("(add x 3.14159265358979)"));
  EXPECT_EQ(pi->kids[1]->op, tf::Op::NamedConst);
  EXPECT_EQ(pi->kids[1]->name, "pi");
}

TEST(Simplifier, RulesFileMatchesBuiltinSet) {
  std::ifstream in(VLIFT_RULES_PATH);
  std::stringstream ss;
  ss << in.rdbuf();
  auto file = parse_rules(ss.str());
  const auto& builtin = default_rules();
  ASSERT_EQ(file.size(), builtin.size());
  for (size_t i = 0; i < file.size(); ++i) {
    EXPECT_EQ(file[i].name, builtin[i].name);
    EXPECT_EQ(file[i].lhs, builtin[i].lhs) << file[i].name;
    EXPECT_EQ(file[i].rhs, builtin[i].rhs) << file[i].name;
  }
}

TEST(Simplifier, BadRuleText) {
  EXPECT_THROW(parse_rules("(rule r (add ?a 0) ?a (shiny ?a))"), Error);
  EXPECT_THROW(parse_rules("(rule r (add ?a 0)"), Error);
}

TEST(Simplifier, EmptyRuleSetIsAFixpoint) {
  tf::Formula f = tf::parse_formula("(add x (mul 0 x))");
  auto s = saturate(f, {}, {}, {{"x", {4}}});
  EXPECT_TRUE(s.report.saturated);
  EXPECT_EQ(s.report.applied, 0u);
  EXPECT_EQ(tf::to_prefix(extract(s.graph, s.root)), tf::to_prefix(f));
}

TEST(Simplifier, NodeBudgetMarksIncomplete) {
  Limits tight;
  tight.node_budget = 10;
  auto s = saturate(tf::parse_formula("(div (exp (sub x (max x))) (sum (exp (sub x (max x)))))"), default_rules(),
                    tight, {{"x", {2, 4}}});
  EXPECT_TRUE(s.report.incomplete);
  EXPECT_FALSE(s.report.saturated);
}

TEST(Simplifier, RebuildDoesNotAddClasses) {
  eg::EGraph g({{"x", {4}}, {"y", {4}}});
  auto a = g.add_formula(tf::parse_formula("(exp (add x y))"));
  auto b = g.add_formula(tf::parse_formula("(exp (add y x))"));
  auto ax = g.add_formula(tf::parse_formula("(add x y)"));
  auto bx = g.add_formula(tf::parse_formula("(add y x)"));
  size_t before = g.class_count();
  g.merge(ax, bx);
  g.rebuild();
  EXPECT_LE(g.class_count(), before);
  EXPECT_EQ(g.find(a), g.find(b));
  EXPECT_TRUE(g.congruent());
}

TEST(SimplifierProperty, EveryRuleIsSound) {
  for (const auto& r : default_rules()) {
    auto res = rule_soundness(r, 1000, 1e-9, 31);
    EXPECT_EQ(res.checked, 1000) << r.name;
    EXPECT_EQ(res.failures, 0) << res.first_failure;
  }
}

TEST(SimplifierProperty, CongruenceHoldsAfterEveryRebuild) {
  for (const auto& [f, shapes] : samples()) {
    auto r = congruence_throughout(f, shapes);
    EXPECT_GT(r.checked, 0);
    EXPECT_EQ(r.failures, 0) << tf::to_prefix(f) << ": " << r.first_failure;
  }
}

TEST(SimplifierProperty, CostNeverIncreasesAndValuesArePreserved) {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> d(-2, 2);
  auto cases = samples();
  for (const auto& c : golden_cases()) {
    tf::ShapeMap shapes;
    for (const auto& p : c.kernel.params)
      if (p.kind == kir::ParamKind::TensorIn) {
        auto env = default_shape(c.kernel);
        auto dims = env.tensor_dims(p);
        shapes[p.name] = tf::Shape(dims.begin(), dims.end());
      }
    cases.push_back({c.golden, shapes});
  }
  for (const auto& [f, shapes] : cases) {
    SimplifyOptions o;
    o.shapes = shapes;
    auto r = simplify(f, o);
    CostModel cost;
    EXPECT_LE(cost.cost(r.formula), cost.cost(f)) << tf::to_prefix(f);
    for (int t = 0; t < 20; ++t) {
      std::map<std::string, tf::Tensor<double>> in;
      for (const auto& [name, s] : shapes) {
        tf::Tensor<double> x{s, std::vector<double>(static_cast<size_t>(tf::numel(s)))};
        for (auto& v : x.data) v = d(rng);
        in[name] = x;
      }
      tf::Tensor<double> a, b;
      try {
        a = tf::eval_double(f, in);
      } catch (const DomainError&) {
        continue;
      }
      b = tf::materialize(tf::eval_double(r.formula, in), a.shape);
      for (size_t i = 0; i < a.data.size(); ++i)
        EXPECT_NEAR(a.data[i], b.data[i], 1e-9 * std::max(1.0, std::fabs(a.data[i])))
            << tf::to_prefix(f) << " -> " << tf::to_prefix(r.formula);
    }
  }
}
