#include "support.hpp"

#include "vlift/error.hpp"
#include "vlift/synthesizer.hpp"

#include <filesystem>

#include <gtest/gtest.h>

using namespace vlift;
using namespace vlift::testing;
using sym::Term;

TEST(Executor, AddAtLengthFour) {
  auto k = kir::load_kernel_file(corpus_file("add"));
  auto env = make_shape_env(k, {{"N", 4}});
  EXPECT_EQ(env.grid, 1);
  auto spec = execute(k, env);
  ASSERT_EQ(spec.outputs.size(), 1u);
  ASSERT_EQ(spec.outputs[0].size(), 4u);
  for (uint32_t i = 0; i < 4; ++i) EXPECT_EQ(spec.outputs[0].elems[i], sym::add(sym::elem(1, i), sym::elem(2, i)));
}

TEST(Executor, SoftmaxRowOfThreeLiveColumns) {
  auto k = kir::load_kernel_file(test_kernel("softmax_live3"));
  auto spec = execute(k, make_shape_env(k, {{"R", 1}}));
  auto x = [](uint32_t i) { return sym::elem(1, i); };
  Term m = sym::max2(sym::max2(x(0), x(1)), x(2));
  std::vector<Term> e;
  for (uint32_t i = 0; i < 3; ++i) e.push_back(sym::fn(sym::FnName::Exp, sym::sub(x(i), m)));
  Term s = sym::add(sym::add(e[0], e[1]), e[2]);
  ASSERT_EQ(spec.outputs[0].size(), 3u);
  for (uint32_t i = 0; i < 3; ++i) EXPECT_EQ(spec.outputs[0].elems[i], sym::div(e[i], s));
}

TEST(Executor, DoubleWriteIsRejected) {
  auto k = kir::load_kernel_file(test_kernel("double_write"));
  EXPECT_THROW(execute(k, make_shape_env(k, {{"N", 8}})), ExecutionError);
}

TEST(Executor, OutOfBoundsAndUnwrittenOutputs) {
  auto k = kir::load_kernel_file(corpus_file("add"));
  // N = 6: the second thread reads past the end
  EXPECT_THROW(execute(k, make_shape_env(k, {{"N", 6}})), ExecutionError);
  // N = 9: the last element is never written
  EXPECT_THROW(execute(k, make_shape_env(k, {{"N", 9}})), ExecutionError);
}

TEST(Executor, DefaultShapes) {
  auto softmax = default_shape(kir::load_kernel_file(corpus_file("softmax")));
  EXPECT_EQ(softmax.dims.at("R"), 2);
  EXPECT_EQ(softmax.grid, 2);
  auto add = default_shape(kir::load_kernel_file(corpus_file("add")));
  EXPECT_EQ(add.dims.at("N"), 8);
  EXPECT_EQ(add.grid, 2);
  auto mk = kir::load_kernel_file(corpus_file("matmul"));
  auto mm = default_shape(mk);
  EXPECT_EQ(mm.tensor_dims(mk.param(1)), (std::vector<long long>{4, 4}));
  EXPECT_EQ(mm.tensor_dims(mk.param(2)), (std::vector<long long>{4, 2}));
}

TEST(Executor, TwoRowsDistinguishRowAndGlobalReductions) {
  // oracle: a row-sum and a sum over the first two rows agree on one row
  // and must differ at the default shape
  auto row = kir::load_kernel_file(corpus_file("sum"));
  auto all = kir::load_kernel_file(test_kernel("global_sum"));
  auto env = default_shape(row);
  EXPECT_EQ(env.dims.at("R"), 2);
  auto a = execute(row, env).outputs[0].elems;
  auto b = execute(all, env).outputs[0].elems;
  EXPECT_NE(a, b);
}

TEST(Executor, MatmulShapeDistinguishesTransposedOperand) {
  auto k = kir::load_kernel_file(corpus_file("matmul"));
  auto spec = execute(k, default_shape(k));
  synth::SynthConfig cfg;
  EXPECT_EQ(synth::check_candidate(tf::parse_formula("(matmul a b)"), spec, 0, cfg).verdict, synth::Verdict::Accepted);
  EXPECT_EQ(synth::check_candidate(tf::parse_formula("(matmul (transpose a) b)"), spec, 0, cfg).verdict,
            synth::Verdict::Rejected);
}

TEST(Executor, JsonDump) {
  auto k = kir::load_kernel_file(corpus_file("add"));
  auto j = to_json(execute(k, make_shape_env(k, {{"N", 4}})));
  ASSERT_TRUE(j.contains("y"));
  EXPECT_EQ(j["y"].size(), 4u);
  EXPECT_EQ(j["y"][2], "x1[2] + x2[2]");
}

TEST(ExecutorProperty, SymbolicMatchesConcreteOnCorpus) {
  int kernels = 0;
  for (const auto& f : std::filesystem::directory_iterator(VLIFT_CORPUS_DIR)) {
    if (f.path().extension() != ".klift") continue;
    auto k = kir::load_kernel_file(f.path().string());
    auto r = executor_soundness(k, 50, 3);
    EXPECT_EQ(r.checked, 50) << k.name;
    EXPECT_EQ(r.failures, 0) << r.first_failure;
    ++kernels;
  }
  EXPECT_GE(kernels, 16);
}

TEST(ExecutorProperty, ThreadOrderDoesNotChangeSpec) {
  for (const auto& c : golden_cases()) {
    auto env = default_shape(c.kernel);
    auto fwd = execute(c.kernel, env);
    auto rev = execute(c.kernel, env, ExecOptions{true});
    ASSERT_EQ(fwd.outputs.size(), rev.outputs.size());
    for (size_t o = 0; o < fwd.outputs.size(); ++o) EXPECT_EQ(fwd.outputs[o].elems, rev.outputs[o].elems) << c.name;
  }
}
