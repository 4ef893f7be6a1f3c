// vlift: lift kernels to tensor formulas, run the corpus, simplify formulas.
#include "vlift/error.hpp"
#include "vlift/pipeline.hpp"
#include "vlift/simplifier.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace vlift;

namespace {

constexpr int kSynthFailure = 2;
constexpr int kParseError = 3;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void print_report(const pipeline::LiftReport& r) {
  std::cout << "kernel      " << r.kernel << " (" << r.shape << ")\n";
  if (!r.error.empty()) std::cout << "error       " << r.error << "\n";
  if (!r.synthesis.success) {
    std::cout << "synthesis   failed: " << r.synthesis.failure << "\n";
    return;
  }
  std::printf("synthesis   %s  [%s, %zu programs, %.2fs]\n", r.synthesis.formula.c_str(), r.synthesis.phase.c_str(),
              r.synthesis.programs_enumerated, r.synthesis.seconds);
  if (r.verification.attempted) {
    const auto& v = r.verification;
    std::printf("verify      %s%s%s  [%.2fs]\n", v.outcome.c_str(), v.reason.empty() ? "" : ": ", v.reason.c_str(),
                v.seconds);
    for (const auto& c : v.vcs) std::printf("  %-13s %s  [%.2fs]\n", c.id.c_str(), c.verdict.c_str(), c.seconds);
    for (const auto& w : v.warnings) std::cout << "  warning: " << w << "\n";
  }
  if (r.simplified) std::cout << "simplified  " << *r.simplified << "\n";
  if (r.differential)
    std::printf("diff-test   %s, %d trials, max rel error %.3g\n", r.differential->pass ? "pass" : "FAIL",
                r.differential->trials, r.differential->max_rel_error);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Verified lifting of tensor kernels"};
  app.require_subcommand(1);

  auto* lift = app.add_subcommand("lift", "Synthesize, verify and simplify one kernel");
  std::string file;
  bool json = false, no_verify = false;
  double timeout = 60;
  std::string solver;
  lift->add_option("file", file, "Kernel source (.klift)")->required();
  lift->add_flag("--json", json, "Print the report as JSON");
  lift->add_flag("--no-verify", no_verify, "Skip verification");
  lift->add_option("--timeout", timeout, "Synthesis budget in seconds");
  lift->add_option("--solver", solver, "Solver command line (default: $VLIFT_SOLVER or z3 -in)");

  auto* corpus = app.add_subcommand("corpus", "Operator corpus");
  corpus->require_subcommand(1);
  auto* run = corpus->add_subcommand("run", "Lift every corpus kernel");
  std::string dir = std::getenv("VLIFT_CORPUS") ? std::getenv("VLIFT_CORPUS") : "corpus";
  bool no_topdown = false, no_prune = false, no_pattern = false;
  unsigned workers = 0;
  run->add_option("--dir", dir, "Corpus directory holding manifest.json");
  run->add_flag("--no-topdown", no_topdown, "Disable top-down splitting");
  run->add_flag("--no-prune", no_prune, "Disable type and value pruning");
  run->add_flag("--no-verify-pattern", no_pattern, "Disable the block-pattern invariant");
  run->add_flag("--no-verify", no_verify, "Skip verification");
  run->add_flag("--json", json, "Print the summary as JSON");
  run->add_option("--workers", workers, "Parallel kernels (0: all cores)");
  run->add_option("--solver", solver, "Solver command line");

  auto* simp = app.add_subcommand("simplify", "Simplify a formula written in prefix syntax");
  std::string formula_file;
  bool latex = false, tanh = false;
  simp->add_option("formula-file", formula_file, "File holding one formula")->required();
  simp->add_flag("--latex", latex, "Also print LaTeX");
  simp->add_flag("--expand-tanh", tanh, "Enable the tanh expansion rules");

  CLI11_PARSE(app, argc, argv);

  try {
    if (lift->parsed()) {
      pipeline::LiftFlags fl;
      fl.verify = !no_verify;
      fl.synth_timeout_s = timeout;
      fl.solver = solver;
      pipeline::LiftReport r;
      try {
        r = pipeline::lift_file(file, fl);
      } catch (const kir::ParseError& e) {
        for (const auto& d : e.diagnostics()) std::cerr << d.str() << "\n";
        return kParseError;
      }
      if (json)
        std::cout << r.to_json().dump(2) << "\n";
      else
        print_report(r);
      return r.synthesis.success ? 0 : kSynthFailure;
    }
    if (run->parsed()) {
      pipeline::LiftFlags fl;
      fl.verify = !no_verify;
      fl.topdown = !no_topdown;
      fl.prune = !no_prune;
      fl.verify_pattern = !no_pattern;
      fl.solver = solver;
      auto entries = pipeline::load_corpus(dir);
      auto s = pipeline::run_corpus(entries, fl, workers);
      if (json)
        std::cout << s.to_json().dump(2) << "\n";
      else
        std::cout << s.table();
      return 0;
    }
    if (simp->parsed()) {
      tf::Formula f;
      try {
        f = tf::parse_formula(read_file(formula_file));
      } catch (const kir::ParseError&) {
        throw;
      } catch (const Error& e) {
        std::cerr << formula_file << ": " << e.what() << "\n";
        return kParseError;
      }
      simp::SimplifyOptions so;
      so.expand_tanh = tanh;
      auto r = simp::simplify(f, so);
      std::cout << tf::to_infix(r.formula) << "\n";
      if (latex) std::cout << tf::to_latex(r.formula) << "\n";
      return 0;
    }
  } catch (const kir::ParseError& e) {
    for (const auto& d : e.diagnostics()) std::cerr << d.str() << "\n";
    return kParseError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
