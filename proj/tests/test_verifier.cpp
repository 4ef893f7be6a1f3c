#include "support.hpp"

#include "vlift/verifier.hpp"

#include <gtest/gtest.h>

using namespace vlift;
using namespace vlift::testing;
using namespace vlift::verify;

namespace {

struct Case {
  kir::KernelModule k;
  LiftSpec spec;
};

Case load(const std::string& path) {
  auto k = kir::load_kernel_file(path);
  return {k, execute(k, default_shape(k))};
}

VerifyResult run(const Case& c, const std::string& formula, bool pattern = true) {
  VerifyConfig cfg;
  cfg.use_pattern = pattern;
  return vlift::verify::verify(c.k, c.spec, c.k.outputs()[0], tf::parse_formula(formula), cfg);
}

}  // namespace

TEST(Verifier, Preconditions) {
  auto softmax = load(corpus_file("softmax"));
  auto a = gen_precondition(softmax.spec, tf::parse_formula("(div (exp x) (sum (exp x)))"));
  EXPECT_EQ(a.functions, (std::set<sym::FnName>{sym::FnName::Exp}));
  ASSERT_EQ(a.function_axioms.size(), 1u);
  EXPECT_EQ(a.function_axioms[0].str(), "(forall ((v Real)) (> (uf_exp v) 0.0))");

  auto rms = load(test_kernel("rmsnorm"));
  auto b = gen_precondition(rms.spec, tf::parse_formula("x"));
  ASSERT_EQ(b.param_assumptions.size(), 1u);
  EXPECT_EQ(b.param_assumptions[0].str(), "(> s_eps 0.0)");

  auto add = load(corpus_file("add"));
  auto c = gen_precondition(add.spec, tf::parse_formula("(add x1 x2)"));
  EXPECT_TRUE(c.function_axioms.empty());
  EXPECT_TRUE(c.param_assumptions.empty());
}

TEST(Verifier, Postconditions) {
  auto add = kir::load_kernel_file(corpus_file("add"));
  EXPECT_EQ(gen_postcondition(add, tf::parse_formula("(add x1 x2)"), 0).str(),
            "(forall ((i Int)) (=> (and (<= 0 i) (< i dim_N)) (= (select a_y i) (+ (select a_x1 i) (select a_x2 i)))))");
  auto sum = kir::load_kernel_file(corpus_file("sum"));
  EXPECT_EQ(gen_postcondition(sum, tf::parse_formula("(sum x)"), 0).str(),
            "(forall ((i Int)) (=> (and (<= 0 i) (< i dim_R)) (= (select a_y i) (+ (+ (+ (select a_x (* 4 i)) "
            "(select a_x (+ (* 4 i) 1))) (select a_x (+ (* 4 i) 2))) (select a_x (+ (* 4 i) 3))))))");
}

TEST(Verifier, ThreadEffectPattern) {
  auto add = kir::load_kernel_file(corpus_file("add"));
  auto te = abstract_thread_effect(add, 0);
  EXPECT_TRUE(te.pattern);
  EXPECT_EQ(te.stride, 4);
  ASSERT_EQ(te.stores.size(), 4u);
  EXPECT_EQ(te.stores[1].index.to_sexpr().str(), "(+ (* 4 pid) 1)");
  EXPECT_EQ(te.stores[1].value.str(), "(+ (select a_x1 (+ (* 4 pid) 1)) (select a_x2 (+ (* 4 pid) 1)))");
  auto sum = abstract_thread_effect(kir::load_kernel_file(corpus_file("sum")), 0);
  EXPECT_TRUE(sum.pattern);
  EXPECT_EQ(sum.stride, 1);
}

TEST(Verifier, AddVerifiesWithTheStrideTemplate) {
  auto r = run(load(corpus_file("add")), "(add x1 x2)");
  EXPECT_EQ(r.outcome, Outcome::Verified) << r.reason;
  EXPECT_EQ(r.a, 4);
  EXPECT_EQ(r.b, 0);
  EXPECT_TRUE(r.pattern);
  ASSERT_EQ(r.vcs.size(), 3u);
  for (const auto& v : r.vcs) EXPECT_EQ(v.status, smt::Status::Unsat) << v.id;
}

TEST(Verifier, SingleBlockGrid) {
  auto r = run(load(test_kernel("single_block")), "(exp x)");
  EXPECT_EQ(r.outcome, Outcome::Verified) << r.reason;
}

TEST(Verifier, ScalarLaneAndPositiveParameter) {
  EXPECT_EQ(run(load(test_kernel("scalar_lane")), "(mul 2 x)").outcome, Outcome::Verified);
  auto rms = run(load(test_kernel("rmsnorm")), "(div x (sqrt (add (div (sum (mul x x)) 4) eps)))");
  EXPECT_EQ(rms.outcome, Outcome::Verified) << rms.reason;
}

TEST(Verifier, FalseInvariantFailsOnlyInit) {
  VcInput in;
  in.base.declare_const("pid", "Int");
  in.cond = L({"<", "pid", "10"});
  in.inv = [](const SExpr&, bool) { return SExpr("false"); };
  in.post = SExpr("true");
  auto vcs = build_vcs(in);
  EXPECT_EQ(vcs[0].id, "init");
  auto solver = smt::default_solver_config();
  EXPECT_EQ(smt::check(vcs[0].script, solver).status, smt::Status::Sat);
  EXPECT_EQ(smt::check(vcs[1].script, solver).status, smt::Status::Unsat);
  EXPECT_EQ(smt::check(vcs[2].script, solver).status, smt::Status::Unsat);
}

TEST(Verifier, MatmulIsUnknown) {
  auto r = run(load(corpus_file("matmul")), "(matmul a b)");
  EXPECT_EQ(r.outcome, Outcome::Unknown);
  EXPECT_NE(r.reason.find("symbolic inner dimension"), std::string::npos) << r.reason;
}

TEST(Verifier, WrongFormulaIsRefutedWithAReproducingWitness) {
  auto c = load(corpus_file("add"));
  auto r = run(c, "(sub x1 x2)");
  ASSERT_EQ(r.outcome, Outcome::Refuted);
  ASSERT_FALSE(r.witness.empty());
  TensorValues<Number> in;
  for (auto idx : c.k.inputs()) in[idx] = std::vector<Number>(static_cast<size_t>(c.spec.env.tensor_size(c.k.param(idx))));
  for (const auto& [name, v] : r.witness) {
    auto open = name.find('[');
    ASSERT_NE(open, std::string::npos) << name;
    std::string tensor = name.substr(0, open);
    size_t i = std::stoul(name.substr(open + 1));
    for (auto idx : c.k.inputs())
      if (c.k.param(idx).name == tensor) in[idx].at(i) = v;
  }
  auto y = interpret(c.k, c.spec.env, in).at(0);
  bool differs = false;
  for (size_t i = 0; i < y.size(); ++i) differs |= !(y[i] == in.at(1)[i] - in.at(2)[i]);
  EXPECT_TRUE(differs);
}

TEST(VerifierProperty, BruteForceAgreesAtSeveralLengths) {
  int kernels = 0;
  for (const auto& c : golden_cases()) {
    if (c.kernel.shape_symbols().size() != 1 || c.name == "matmul" || c.name == "attention") continue;
    auto r = vc_bruteforce(c.kernel, c.golden, {4, 8, 12}, 5, 23);
    EXPECT_EQ(r.failures, 0) << r.first_failure;
    EXPECT_EQ(r.checked, 15) << c.name;
    ++kernels;
  }
  EXPECT_GE(kernels, 16);
}

TEST(VerifierProperty, PatternAndTemplateAgree) {
  for (auto [name, f] : std::vector<std::pair<std::string, std::string>>{
           {"add", "(add x1 x2)"}, {"neg", "(neg x)"}, {"relu", "(ifpos x x 0)"}, {"sum", "(sum x)"}, {"max", "(max x)"}}) {
    auto c = load(corpus_file(name));
    auto with = run(c, f, true);
    auto without = run(c, f, false);
    EXPECT_EQ(with.outcome, Outcome::Verified) << name << ": " << with.reason;
    EXPECT_EQ(with.outcome, without.outcome) << name << ": " << without.reason;
  }
}
