#include "support.hpp"

#include "vlift/pipeline.hpp"

#include <cstdlib>
#include <sys/wait.h>

#include <gtest/gtest.h>

using namespace vlift;
using namespace vlift::testing;
using namespace vlift::pipeline;

namespace {

int cli(const std::string& args) {
  std::string cmd = std::string(VLIFT_CLI) + " " + args + " >/dev/null 2>&1";
  int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

const CorpusSummary& unverified_corpus() {
  static const CorpusSummary s = [] {
    LiftFlags flags;
    flags.verify = false;
    return run_corpus(load_corpus(VLIFT_CORPUS_DIR), flags, 1);
  }();
  return s;
}

}  // namespace

TEST(Pipeline, SoftmaxLift) {
  auto r = lift_file(corpus_file("softmax"));
  ASSERT_TRUE(r.synthesis.success) << r.synthesis.failure;
  EXPECT_EQ(r.synthesis.formula, "exp(x - max(x)) / sum(exp(x - max(x)))");
  EXPECT_EQ(r.verification.outcome, "Verified") << r.verification.reason;
  ASSERT_EQ(r.verification.vcs.size(), 3u);
  for (const auto& v : r.verification.vcs) EXPECT_EQ(v.verdict, "unsat") << v.id;
  EXPECT_EQ(r.simplified.value_or(""), "exp(x) / sum(exp(x))");
  EXPECT_LE(r.seconds, 30);
}

TEST(Pipeline, RelativeError) {
  EXPECT_EQ(relative_error(0, 0), 0);
  EXPECT_DOUBLE_EQ(relative_error(1, 2), 0.5);
  EXPECT_DOUBLE_EQ(relative_error(-1, 1), 2);
}

TEST(Pipeline, DifferentialTestAndNegativeControl) {
  auto k = kir::load_kernel_file(corpus_file("add"));
  auto good = differential_test(k, tf::parse_formula("(add x1 x2)"), 100, 1e-5);
  EXPECT_TRUE(good.pass);
  EXPECT_EQ(good.trials, 100);
  EXPECT_LE(good.max_rel_error, 1e-12);
  auto bad = differential_test(k, tf::parse_formula("(sub x1 x2)"), 100, 1e-5);
  EXPECT_FALSE(bad.pass);
  EXPECT_GT(bad.max_rel_error, 1e-5);
}

TEST(Pipeline, DifferentialTestUsesPositiveInputsForLog) {
  auto k = kir::load_kernel_file(corpus_file("log"));
  auto r = differential_test(k, tf::parse_formula("(log x)"), 100, 1e-5);
  EXPECT_TRUE(r.pass);
  EXPECT_EQ(r.skipped, 0);
}

TEST(Pipeline, DeterministicReports) {
  LiftFlags flags;
  for (const char* name : {"add", "relu", "sum"}) {
    auto a = lift_file(corpus_file(name), flags).to_json(false);
    auto b = lift_file(corpus_file(name), flags).to_json(false);
    EXPECT_EQ(a.dump(), b.dump()) << name;
  }
}

TEST(Pipeline, JsonFields) {
  auto j = lift_file(corpus_file("add")).to_json();
  std::vector<std::string> keys;
  for (auto it = j.begin(); it != j.end(); ++it) keys.push_back(it.key());
  EXPECT_EQ(keys, (std::vector<std::string>{"kernel", "shape", "synthesis", "verification", "simplified",
                                            "differential", "time"}));
  EXPECT_EQ(j["shape"], "N=8");
  EXPECT_EQ(j["synthesis"]["phase"], "top-down");
  EXPECT_EQ(j["verification"]["template"]["a"], 4);
  EXPECT_EQ(j["verification"]["vcs"][0]["id"], "init");
  EXPECT_TRUE(j["differential"]["pass"].get<bool>());
  auto quiet = lift_file(corpus_file("add")).to_json(false);
  EXPECT_FALSE(quiet.contains("time"));
  EXPECT_FALSE(quiet["synthesis"].contains("time"));
}

TEST(Pipeline, CorpusGoldensAgree) {
  const auto& s = unverified_corpus();
  int compared = 0;
  for (size_t i = 0; i < s.entries.size(); ++i) {
    const auto& e = s.entries[i];
    const auto& r = s.reports[i];
    if (e.expect_synth) EXPECT_TRUE(r.synthesis.success) << e.name;
    if (!e.golden || !r.synthesis.success) continue;
    ASSERT_TRUE(r.simplified_prefix) << e.name;
    EXPECT_TRUE(matches_golden(tf::parse_formula(*r.simplified_prefix), tf::parse_formula(*e.golden)))
        << e.name << ": " << *r.simplified_prefix << " vs " << *e.golden;
    ++compared;
  }
  EXPECT_GE(compared, 20);
}

TEST(Pipeline, CorruptedGoldensAreCaught) {
  const auto& s = unverified_corpus();
  std::map<std::string, std::string> corrupt{{"add", "(sub x1 x2)"},
                                             {"softmax", "(div (exp x) (max (exp x)))"},
                                             {"leakyrelu", "(ifpos x x (mul 0.1 x))"},
                                             {"relu", "(ifpos x 0 x)"}};
  for (size_t i = 0; i < s.entries.size(); ++i) {
    auto it = corrupt.find(s.entries[i].name);
    if (it == corrupt.end()) continue;
    ASSERT_TRUE(s.reports[i].simplified_prefix);
    EXPECT_FALSE(matches_golden(tf::parse_formula(*s.reports[i].simplified_prefix), tf::parse_formula(it->second)))
        << it->first;
    corrupt.erase(it);
  }
  EXPECT_TRUE(corrupt.empty());
}

TEST(Pipeline, CommandLineExitCodes) {
  EXPECT_EQ(cli("lift " + corpus_file("add")), 0);
  EXPECT_EQ(cli("lift --timeout 0 " + corpus_file("softmax")), 2);
  EXPECT_EQ(cli("lift " + test_kernel("bad_ident")), 3);
}
