#pragma once

#include "vlift/executor.hpp"
#include "vlift/formula.hpp"
#include "vlift/kernel_ir.hpp"
#include "vlift/simplifier.hpp"

#include <random>
#include <string>
#include <vector>

// Shared fixtures and the property checks used by both the unit tests and
// the acceptance binary.
namespace vlift::testing {

std::string corpus_file(const std::string& name);
std::string test_kernel(const std::string& name);

/// k/100 for uniform k, so values stay short and exact.
Rational random_rational(std::mt19937_64& rng, double lo, double hi);

/// Exact when both sides are exact, relative `tol` otherwise.
bool numbers_close(const Number& a, const Number& b, double tol = 1e-12);

/// Symbolic element tensors of a LiftSpec's inputs, keyed by name.
std::map<std::string, tf::SymTensor> symbolic_inputs(const LiftSpec& spec);

/// Random exact inputs for every input parameter. Kernels using log or sqrt
/// get positive values.
TensorValues<Number> random_inputs(const kir::KernelModule& k, const ShapeEnv& env, std::mt19937_64& rng);

struct PropertyResult {
  int checked = 0;
  int failures = 0;
  std::string first_failure;
  bool ok() const { return checked > 0 && failures == 0; }
};

/// Symbolic executor vs concrete interpreter on random rational inputs.
PropertyResult executor_soundness(const kir::KernelModule& k, int trials, uint64_t seed);

/// Numeric soundness of one rule on random guard-satisfying bindings:
/// |lhs - rhs| <= tol * max(1, |lhs|).
PropertyResult rule_soundness(const simp::RewriteRule& r, int bindings, double tol, uint64_t seed);

/// Saturates `f` with the default rules and checks congruence after every
/// rebuild. `checked` counts rebuilds.
PropertyResult congruence_throughout(const tf::Formula& f, const tf::ShapeMap& shapes);

/// Concrete-instance check of a verified formula: for each flat length of
/// the first input, random exact inputs through the interpreter must match
/// the formula. Lengths no shape binding reaches are skipped.
PropertyResult vc_bruteforce(const kir::KernelModule& k, const tf::Formula& f, const std::vector<long long>& lengths,
                             int trials, uint64_t seed);

/// Formulas of the corpus manifest with a golden, paired with their kernels.
struct GoldenCase {
  std::string name;
  kir::KernelModule kernel;
  tf::Formula golden;
};
std::vector<GoldenCase> golden_cases();

}  // namespace vlift::testing
