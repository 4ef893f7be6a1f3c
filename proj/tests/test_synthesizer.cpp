#include "support.hpp"

#include "vlift/error.hpp"
#include "vlift/synthesizer.hpp"

#include <functional>

#include <gtest/gtest.h>

using namespace vlift;
using namespace vlift::testing;
using namespace vlift::synth;

namespace {

LiftSpec spec_of(const std::string& name) {
  auto k = kir::load_kernel_file(corpus_file(name));
  return execute(k, default_shape(k));
}

std::string sorted(const tf::Formula& f) { return tf::to_prefix(tf::sort_commutative(f)); }

tf::ShapeMap shapes_of(const LiftSpec& spec) {
  tf::ShapeMap m;
  for (const auto& in : spec.inputs) m[in.name] = tf::Shape(in.dims.begin(), in.dims.end());
  return m;
}

// Independent enumerator over formula trees: depth d uses at least one
// program of depth d - 1, typed by the formula shape checker.
struct Oracle {
  std::vector<std::vector<tf::Formula>> levels;
  std::vector<size_t> bad;

  Oracle(const LiftSpec& spec, const std::vector<Rational>& consts, int depth) {
    tf::ShapeMap shapes = shapes_of(spec);
    std::vector<tf::Formula> base;
    for (const auto& in : spec.inputs) base.push_back(tf::input(in.name));
    for (const auto& in : spec.inputs)
      if (in.dims.size() == 2) base.push_back(tf::transpose(tf::input(in.name)));
    for (const auto& c : consts) base.push_back(tf::constant(c));
    levels.push_back(base);
    bad.push_back(0);
    auto literal = [](const tf::Formula& f) { return f->op == tf::Op::Const; };
    for (int d = 1; d <= depth; ++d) {
      // (program, built at the previous depth)
      std::vector<std::pair<tf::Formula, bool>> all;
      for (int e = 0; e < d; ++e)
        for (const auto& f : levels[e]) all.push_back({f, e == d - 1});
      std::vector<tf::Formula> next;
      size_t ill = 0;
      auto keep = [&](const tf::Formula& f) {
        if (tf::infer_shape(f, shapes).shape)
          next.push_back(f);
        else
          ++ill;
      };
      for (const auto& p : levels[d - 1]) {
        if (literal(p)) continue;
        keep(tf::neg(p));
        for (auto fn : sym::kAllFns) keep(tf::fn(fn, p));
        keep(tf::reduce_max(p));
        keep(tf::reduce_sum(p));
        keep(tf::transpose(p));
      }
      for (auto mk : std::vector<std::function<tf::Formula(tf::Formula, tf::Formula)>>{tf::add, tf::sub, tf::mul,
                                                                                      tf::div, tf::matmul})
        for (const auto& [a, af] : all)
          for (const auto& [b, bf] : all)
            if ((af || bf) && !(literal(a) && literal(b))) keep(mk(a, b));
      for (const auto& [c, cf] : all)
        for (const auto& [a, af] : all)
          for (const auto& [b, bf] : all)
            if ((cf || af || bf) && !literal(c)) keep(tf::ifpos(c, a, b));
      levels.push_back(std::move(next));
      bad.push_back(ill);
    }
  }
};

}  // namespace

TEST(Synthesizer, Add) {
  auto r = synthesize(spec_of("add"), 0, {});
  ASSERT_TRUE(r.formula) << r.failure;
  EXPECT_EQ(sorted(*r.formula), "(add x1 x2)");
  EXPECT_EQ(r.phase, Phase::TopDown);
}

TEST(Synthesizer, Softmax) {
  auto r = synthesize(spec_of("softmax"), 0, {});
  ASSERT_TRUE(r.formula) << r.failure;
  EXPECT_EQ(tf::to_infix(*r.formula), "exp(x - max(x)) / sum(exp(x - max(x)))");
  EXPECT_LE(r.seconds, 30);
}

TEST(Synthesizer, LeakyRelu) {
  auto r = synthesize(spec_of("leakyrelu"), 0, {});
  ASSERT_TRUE(r.formula) << r.failure;
  EXPECT_EQ(sorted(*r.formula), sorted(tf::parse_formula("(ifpos x x (mul 0.01 x))")));
}

TEST(Synthesizer, BottomUpOnly) {
  SynthConfig cfg;
  cfg.enable_topdown = false;
  auto r = synthesize(spec_of("relu"), 0, cfg);
  ASSERT_TRUE(r.formula) << r.failure;
  EXPECT_EQ(r.phase, Phase::BottomUp);
  EXPECT_EQ(sorted(*r.formula), "(ifpos x x 0)");
  EXPECT_GT(r.stats.programs_enumerated, 0u);
}

TEST(Synthesizer, SplitByOperator) {
  auto add = target_of(spec_of("add").outputs[0]);
  auto s = split_by(add, SplitOp::Add);
  ASSERT_TRUE(s);
  EXPECT_EQ(s->left.elems[3], sym::elem(1, 3));
  EXPECT_EQ(s->right.elems[3], sym::elem(2, 3));
  EXPECT_FALSE(split_by(add, SplitOp::Mul));
  EXPECT_FALSE(split_by(add, SplitOp::Sub));
  auto sub = split_by(target_of(spec_of("sub").outputs[0]), SplitOp::Sub);
  ASSERT_TRUE(sub);
  EXPECT_EQ(sub->right.elems[0], sym::elem(2, 0));
  auto div = split_by(target_of(spec_of("softmax").outputs[0]), SplitOp::Div);
  ASSERT_TRUE(div);
  EXPECT_EQ(div->left.elems[0]->kind(), sym::Kind::Fn);
  EXPECT_EQ(div->right.elems[0], div->right.elems[3]);
}

TEST(Synthesizer, GuessSum) {
  auto plain = guess_sum(target_of(spec_of("sum").outputs[0]));
  ASSERT_TRUE(plain);
  EXPECT_EQ(plain->kind, SumShape::Kind::Plain);
  EXPECT_EQ(plain->rows.shape, (tf::Shape{2, 4}));
  for (uint32_t i = 0; i < 8; ++i) EXPECT_EQ(plain->rows.elems[i], sym::elem(1, i));
  auto dot = guess_sum(target_of(spec_of("matmul").outputs[0]));
  ASSERT_TRUE(dot);
  EXPECT_EQ(dot->kind, SumShape::Kind::Dot);
  EXPECT_EQ(dot->a.shape, (tf::Shape{4, 4}));
  EXPECT_EQ(dot->b.shape, (tf::Shape{4, 2}));
  EXPECT_FALSE(guess_sum(target_of(spec_of("exp").outputs[0])));
}

TEST(Synthesizer, GuessMax) {
  auto rows = guess_max(target_of(spec_of("max").outputs[0]));
  ASSERT_TRUE(rows);
  EXPECT_EQ(rows->shape, (tf::Shape{2, 4}));
  EXPECT_EQ(rows->elems[5], sym::elem(1, 5));
}

TEST(Synthesizer, ProgramCountsMatchIndependentEnumeration) {
  LiftSpec spec = spec_of("exp");
  ASSERT_EQ(spec.inputs.size(), 1u);
  ASSERT_EQ(spec.inputs[0].dims, (std::vector<long long>{8}));
  std::vector<Rational> consts{Rational(0), Rational(1)};
  auto counts = count_programs(spec, consts, 2);
  Oracle oracle(spec, consts, 2);
  for (int d = 0; d <= 2; ++d) {
    EXPECT_EQ(counts.well_typed[d], oracle.levels[d].size()) << "depth " << d;
    EXPECT_EQ(counts.ill_typed[d], oracle.bad[d]) << "depth " << d;
  }
  // frozen
  EXPECT_EQ(counts.well_typed[0], 3u);
  EXPECT_EQ(counts.well_typed[1], 39u);
  EXPECT_EQ(counts.ill_typed[1], 6u);
  EXPECT_EQ(counts.well_typed[2], 77961u);
  EXPECT_EQ(counts.ill_typed[2], 1794u);
}

TEST(Synthesizer, ProgramCountsWithMatrixInputs) {
  LiftSpec spec = spec_of("matmul");
  std::vector<Rational> consts{Rational(0)};
  auto counts = count_programs(spec, consts, 1);
  Oracle oracle(spec, consts, 1);
  EXPECT_EQ(counts.well_typed[1], oracle.levels[1].size());
  EXPECT_EQ(counts.ill_typed[1], oracle.bad[1]);
}

TEST(Synthesizer, TypePrune) {
  tf::ShapeMap shapes{{"x", {8}}};
  EXPECT_FALSE(prune_type_keep(tf::parse_formula("(matmul x x)"), shapes));
  EXPECT_TRUE(prune_type_keep(tf::parse_formula("(add x (sum x))"), shapes));
  EXPECT_FALSE(prune_type_keep(tf::parse_formula("(add x (transpose x))"), shapes));
}

TEST(Synthesizer, ValuePrune) {
  LiftSpec spec = spec_of("add");
  Target t = target_of(spec.outputs[0]);
  auto in = symbolic_inputs(spec);
  EXPECT_TRUE(prune_value_keep(tf::eval_sym(tf::parse_formula("x1"), in), t));
  EXPECT_TRUE(prune_value_keep(tf::eval_sym(tf::parse_formula("(mul x1 x2)"), in), t));
  EXPECT_FALSE(prune_value_keep(tf::eval_sym(tf::parse_formula("(sum x1)"), in), t));
}

TEST(Synthesizer, RejectionCarriesWitness) {
  LiftSpec spec = spec_of("add");
  auto r = check_candidate(tf::parse_formula("(sub x1 x2)"), spec, 0, {});
  ASSERT_EQ(r.verdict, Verdict::Rejected);
  bool nonzero = false;
  for (const auto& [name, v] : r.witness)
    if (name.rfind("x2[", 0) == 0 && v != Rational(0)) nonzero = true;
  EXPECT_TRUE(nonzero);
  EXPECT_EQ(check_candidate(tf::parse_formula("(add x2 x1)"), spec, 0, {}).verdict, Verdict::Accepted);
}

TEST(Synthesizer, SolverAcceptsNonSyntacticEquality) {
  auto r = check_candidate(tf::parse_formula("(sub (mul (add x1 x2) (add x1 1)) (mul (add x1 x2) x1))"), spec_of("add"), 0, {});
  EXPECT_EQ(r.verdict, Verdict::Accepted);
  EXPECT_FALSE(r.syntactic);
}

TEST(SynthesizerProperty, SynthesizedFormulasEqualTheSpec) {
  std::mt19937_64 rng(17);
  for (const auto& c : golden_cases()) {
    LiftSpec spec = execute(c.kernel, default_shape(c.kernel));
    auto r = synthesize(spec, 0, {});
    ASSERT_TRUE(r.formula) << c.name << ": " << r.failure;
    const auto& out = spec.outputs[0];
    auto value = tf::materialize(tf::eval_sym(*r.formula, symbolic_inputs(spec)), tf::Shape(out.dims.begin(), out.dims.end()));
    for (int t = 0; t < 10; ++t) {
      auto in = random_inputs(c.kernel, spec.env, rng);
      sym::Binding b;
      for (const auto& [param, values] : in)
        for (size_t i = 0; i < values.size(); ++i) b[{param, static_cast<uint32_t>(i)}] = values[i];
      for (size_t i = 0; i < out.elems.size(); ++i) {
        try {
          EXPECT_TRUE(numbers_close(sym::substitute(value.data[i], b), sym::substitute(out.elems[i], b), 1e-9))
              << c.name << "[" << i << "]";
        } catch (const DomainError&) {
        }
      }
    }
  }
}

TEST(SynthesizerProperty, PruningKeepsEveryGoldenSubterm) {
  for (const auto& c : golden_cases()) {
    LiftSpec spec = execute(c.kernel, default_shape(c.kernel));
    Target t = target_of(spec.outputs[0]);
    auto shapes = shapes_of(spec);
    auto in = symbolic_inputs(spec);
    std::function<void(const tf::Formula&)> walk = [&](const tf::Formula& f) {
      EXPECT_TRUE(prune_type_keep(f, shapes)) << c.name << ": " << tf::to_prefix(f);
      EXPECT_TRUE(prune_value_keep(tf::eval_sym(f, in), t)) << c.name << ": " << tf::to_prefix(f);
      for (const auto& k : f->kids) walk(k);
    };
    walk(c.golden);
  }
}
