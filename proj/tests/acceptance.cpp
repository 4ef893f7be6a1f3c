// Acceptance suite: one PASS/FAIL line per criterion.
#include "support.hpp"

#include "vlift/pipeline.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <set>
#include <sstream>

using namespace vlift;
using namespace vlift::testing;
using namespace vlift::pipeline;

namespace {

using Clock = std::chrono::steady_clock;

int failures = 0;

void report(int n, bool ok, const std::string& what, const std::string& detail) {
  std::printf("[%s] %d %s: %s\n", ok ? "PASS" : "FAIL", n, what.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

double since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::string join(const std::set<std::string>& xs) {
  std::string out;
  for (const auto& x : xs) out += (out.empty() ? "" : ",") + x;
  return out.empty() ? "-" : out;
}

std::set<std::string> synthesized(const CorpusSummary& s) {
  std::set<std::string> out;
  for (size_t i = 0; i < s.entries.size(); ++i)
    if (s.reports[i].synthesis.success) out.insert(s.entries[i].name);
  return out;
}

std::set<std::string> verified(const CorpusSummary& s) {
  std::set<std::string> out;
  for (size_t i = 0; i < s.entries.size(); ++i)
    if (s.reports[i].verification.outcome == "Verified") out.insert(s.entries[i].name);
  return out;
}

bool strict_subset(const std::set<std::string>& a, const std::set<std::string>& b) {
  if (a.size() >= b.size()) return false;
  for (const auto& x : a)
    if (!b.count(x)) return false;
  return true;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

}  // namespace

int main() {
  auto start = Clock::now();
  auto entries = load_corpus(VLIFT_CORPUS_DIR);

  // 1
  {
    auto r = lift_file(corpus_file("softmax"));
    bool formula = r.synthesis.success &&
                   matches_golden(tf::parse_formula(r.synthesis.prefix),
                                  tf::parse_formula("(div (exp (sub x (max x))) (sum (exp (sub x (max x)))))"));
    int unsat = 0;
    for (const auto& v : r.verification.vcs) unsat += v.verdict == "unsat";
    bool ok = formula && r.verification.outcome == "Verified" && unsat == 3 &&
              r.simplified.value_or("") == "exp(x) / sum(exp(x))" && r.seconds <= 30;
    report(1, ok, "softmax lift",
           r.synthesis.formula + " | " + r.verification.outcome + " " + std::to_string(unsat) + "/3 unsat | " +
               r.simplified.value_or("-") + " | " + fmt(r.seconds) + "s");
  }

  LiftFlags full;
  auto base = run_corpus(entries, full);

  // 2
  {
    int ok_count = 0;
    std::set<std::string> slow;
    for (size_t i = 0; i < entries.size(); ++i) {
      const auto& r = base.reports[i];
      if (entries[i].expected_failure || !r.synthesis.success) continue;
      if (r.synthesis.seconds <= 60)
        ++ok_count;
      else
        slow.insert(entries[i].name);
    }
    report(2, ok_count >= 16 && slow.empty(), "synthesis coverage",
           std::to_string(ok_count) + " kernels within 60s (" + std::to_string(base.synthesized) + "/" +
               std::to_string(entries.size()) + " synthesized), slow: " + join(slow));
  }

  // 3
  auto v_full = verified(base);
  {
    std::set<std::string> missing;
    for (const char* k : {"add", "sub", "mul", "div", "neg", "reciprocal", "exp", "relu", "leakyrelu", "sigmoid",
                          "silu", "sum", "max", "softmax"})
      if (!v_full.count(k)) missing.insert(k);
    report(3, v_full.size() >= 12 && missing.empty(), "verification coverage",
           std::to_string(v_full.size()) + " verified, missing required: " + join(missing));
  }

  // 4
  {
    LiftFlags quick;
    quick.verify = false;
    auto plain = run_corpus(entries, quick);
    LiftFlags nt = quick;
    nt.topdown = false;
    auto no_topdown = run_corpus(entries, nt);
    auto s_plain = synthesized(plain), s_nt = synthesized(no_topdown);
    bool topdown_ok = strict_subset(s_nt, s_plain) && !s_nt.count("softmax");

    LiftFlags np = quick;
    np.prune = false;
    auto no_prune = run_corpus(entries, np);
    std::set<std::string> grew;
    for (size_t i = 0; i < entries.size(); ++i)
      if (no_prune.reports[i].synthesis.programs_enumerated > plain.reports[i].synthesis.programs_enumerated)
        grew.insert(entries[i].name);

    LiftFlags nv = full;
    nv.verify_pattern = false;
    auto v_np = verified(run_corpus(entries, nv));
    bool pattern_ok = strict_subset(v_np, v_full);

    std::set<std::string> lost;
    for (const auto& x : s_plain)
      if (!s_nt.count(x)) lost.insert(x);
    std::set<std::string> unproved;
    for (const auto& x : v_full)
      if (!v_np.count(x)) unproved.insert(x);
    report(4, topdown_ok && grew.size() >= 3 && pattern_ok, "ablations",
           "no-topdown " + std::to_string(s_nt.size()) + "/" + std::to_string(s_plain.size()) + " loses " +
               join(lost) + "; no-prune grows " + join(grew) + "; no-verify-pattern " + std::to_string(v_np.size()) +
               "/" + std::to_string(v_full.size()) + " loses " + join(unproved));
  }

  // 5
  {
    auto a = simp::simplify(tf::parse_formula("(mul x 1.4426950216293335)")).formula;
    bool named = false;
    std::function<void(const tf::Formula&)> walk = [&](const tf::Formula& f) {
      if (f->op == tf::Op::NamedConst && f->name == "log2e") named = true;
      for (const auto& k : f->kids) walk(k);
    };
    walk(a);
    auto b = tf::to_infix(simp::simplify(tf::parse_formula("(mul x 0.01)")).formula);
    report(5, named && b == "0.01 * x", "constant recovery", tf::to_infix(a) + " | " + b);
  }

  // 6
  {
    int passed = 0, checked = 0;
    double worst = 0;
    std::set<std::string> bad;
    for (size_t i = 0; i < entries.size(); ++i) {
      const auto& d = base.reports[i].differential;
      if (!d) continue;
      ++checked;
      worst = std::max(worst, d->max_rel_error);
      if (d->pass && d->trials == 100)
        ++passed;
      else
        bad.insert(entries[i].name);
    }
    auto k = kir::load_kernel_file(corpus_file("add"));
    auto control = differential_test(k, tf::parse_formula("(sub x1 x2)"), 100, 1e-5);
    report(6, checked > 0 && bad.empty() && !control.pass, "differential testing",
           std::to_string(passed) + "/" + std::to_string(checked) + " pass at 100 trials, max rel error " +
               fmt(worst) + ", failing: " + join(bad) + "; control x1 - x2 " +
               (control.pass ? "passed" : "failed"));
  }

  // 7
  {
    std::vector<std::string> notes;
    bool ok = true;
    auto note = [&](const std::string& name, const PropertyResult& r) {
      ok &= r.ok();
      notes.push_back(name + " " + std::to_string(r.checked) + (r.ok() ? "" : " FAIL(" + r.first_failure + ")"));
    };

    PropertyResult exec;
    for (const auto& f : std::filesystem::directory_iterator(VLIFT_CORPUS_DIR)) {
      if (f.path().extension() != ".klift") continue;
      auto r = executor_soundness(kir::load_kernel_file(f.path().string()), 50, 3);
      exec.checked += r.checked;
      if (r.failures && !exec.failures) exec.first_failure = r.first_failure;
      exec.failures += r.failures;
      if (r.checked != 50) {
        exec.failures += 1;
        exec.first_failure = f.path().stem().string() + " checked " + std::to_string(r.checked);
      }
    }
    note("executor", exec);

    PropertyResult rules;
    for (const auto& rule : simp::default_rules()) {
      auto r = rule_soundness(rule, 1000, 1e-9, 31);
      rules.checked += r.checked;
      if (r.failures && !rules.failures) rules.first_failure = r.first_failure;
      rules.failures += r.failures;
    }
    note("rules", rules);

    PropertyResult cong;
    for (const auto& c : golden_cases()) {
      auto env = default_shape(c.kernel);
      tf::ShapeMap shapes;
      for (auto idx : c.kernel.inputs()) {
        const auto& p = c.kernel.param(idx);
        auto dims = env.tensor_dims(p);
        shapes[p.name] = tf::Shape(dims.begin(), dims.end());
      }
      auto r = congruence_throughout(c.golden, shapes);
      cong.checked += r.checked;
      if (r.failures && !cong.failures) cong.first_failure = c.name + ": " + r.first_failure;
      cong.failures += r.failures;
    }
    note("congruence", cong);

    PropertyResult brute;
    for (const auto& c : golden_cases()) {
      if (!v_full.count(c.name) || c.kernel.shape_symbols().size() != 1) continue;
      auto r = vc_bruteforce(c.kernel, c.golden, {4, 8, 12}, 5, 23);
      brute.checked += r.checked;
      if (r.failures && !brute.failures) brute.first_failure = r.first_failure;
      brute.failures += r.failures;
    }
    note("vc-bruteforce", brute);

    double total = since(start);
    ok &= total <= 600;
    std::string detail;
    for (const auto& n : notes) detail += n + "; ";
    report(7, ok, "property suites", detail + "total " + fmt(total) + "s");
  }

  return failures == 0 ? 0 : 1;
}
