#pragma once

#include "vlift/executor.hpp"
#include "vlift/formula.hpp"
#include "vlift/kernel_ir.hpp"
#include "vlift/smt.hpp"

#include <array>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

// Hoare-style verification of a lifted formula against its kernel for every
// input size: precondition axioms, pointwise postconditions, the invariant
// template  forall i. 0 <= i < a*pid + b ==> P(i),  and the three loop VCs.
namespace vlift::verify {

// ---- SMT naming shared with the synthesizer's candidate checks ----
/// Array holding tensor `name`.
std::string array_name(const std::string& tensor);
/// Real constant for one element of tensor `name` (bounded checks).
std::string element_name(const std::string& tensor, long long index);
/// Real constant for a scalar real parameter.
std::string scalar_name(const std::string& param);

// ---- preconditions ----
struct AxiomOptions {
  bool exp_monotone = false;
};

struct AxiomSet {
  std::set<sym::FnName> functions;
  std::vector<SExpr> function_axioms;
  std::vector<SExpr> param_assumptions;
  std::vector<std::string> warnings;

  /// Declares the uninterpreted functions and asserts every axiom.
  void apply(smt::Script& s) const;
};

std::set<sym::FnName> functions_in(sym::Term t);
std::set<sym::FnName> functions_in(const tf::Formula& f);
AxiomSet function_axioms(const std::set<sym::FnName>& fns, const AxiomOptions& opts = {});
/// Axioms for every function used by the LiftSpec or the formula, plus the
/// `positive` parameter assumptions.
AxiomSet gen_precondition(const LiftSpec& spec, const tf::Formula& f, const AxiomOptions& opts = {});

// ---- symbolic index arithmetic ----
/// c + sum(coef[v] * v) over integer SMT variables (pid, shape symbols, ...).
struct Affine {
  long long c = 0;
  std::map<std::string, long long> coef;

  static Affine constant(long long v) { return Affine{v, {}}; }
  static Affine var(const std::string& v, long long k = 1) { return Affine{0, {{v, k}}}; }
  bool is_const() const { return coef.empty(); }
  SExpr to_sexpr() const;
  friend Affine operator+(const Affine& a, const Affine& b);
  friend Affine operator-(const Affine& a, const Affine& b);
  friend Affine operator*(const Affine& a, long long k);
  friend bool operator==(const Affine& a, const Affine& b) = default;
};

/// Shape-symbol dimension variable.
std::string dim_name(const std::string& symbol);

// ---- postconditions ----
/// Pointwise value of output element `i` (an Int SMT term) of formula `f`.
/// Inputs are read through their arrays. Throws Error when the indexing is
/// not expressible (symbolic inner dimensions).
SExpr gen_postcondition_value(const kir::KernelModule& k, const tf::Formula& f, uint32_t output, const SExpr& i);
/// forall i. 0 <= i < len(output) ==> select(y, i) = F(i)
SExpr gen_postcondition(const kir::KernelModule& k, const tf::Formula& f, uint32_t output);

// ---- one thread ----
struct LaneStore {
  Affine index;
  SExpr value;
};

struct ThreadEffect {
  bool pattern = false;   // stores are exactly y[n*pid + k], k = 0..n-1
  long long stride = 0;   // n
  std::vector<LaneStore> stores;
  std::string failure;    // why the pattern does not apply
};

/// Executes one thread with a symbolic `pid` and collects its stores into
/// `output`.
ThreadEffect abstract_thread_effect(const kir::KernelModule& k, uint32_t output);

// ---- VCs ----
struct VcInput {
  smt::Script base;  // declarations, axioms, assumptions
  SExpr pre = SExpr("true");
  SExpr cond;        // loop condition C(pid)
  /// I(pid) on the state before (`after` = false) or after one iteration.
  std::function<SExpr(const SExpr& pid, bool after)> inv;
  SExpr post;        // Q
};

struct Vc {
  std::string id;  // init | preservation | exit
  smt::Script script;
};

/// VC1: P /\ not I(0);  VC2: I(pid) /\ C /\ not I'(pid + 1);  VC3: I(pid) /\ not C /\ not Q.
/// Each is valid iff its script is unsat.
std::array<Vc, 3> build_vcs(const VcInput& in);

// ---- driver ----
struct VerifyConfig {
  smt::SolverConfig solver = smt::default_solver_config();
  double vc_timeout_s = 30;
  double total_budget_s = 120;
  bool use_pattern = true;
  AxiomOptions axioms;
  std::string artifacts_dir;  // empty: do not persist scripts
};

enum class Outcome { Verified, Refuted, Unknown };
std::string outcome_name(Outcome o);

struct VcReport {
  std::string id;
  smt::Status status = smt::Status::Unknown;
  double seconds = 0;
  std::string reason;
};

struct VerifyResult {
  Outcome outcome = Outcome::Unknown;
  std::string reason;
  std::map<std::string, Rational> witness;  // Refuted: element -> value
  long long a = 0, b = 0;                   // accepted template
  bool pattern = false;
  std::vector<VcReport> vcs;                // accepted (or last attempted) VCs
  std::vector<VcReport> lane_checks;
  std::vector<std::string> warnings;
  int templates_tried = 0;
  double seconds = 0;
};

/// Verifies one output of `k` against `f`. `spec` is the bounded LiftSpec
/// used for the initial refutation check.
VerifyResult verify(const kir::KernelModule& k, const LiftSpec& spec, uint32_t output, const tf::Formula& f,
                    const VerifyConfig& cfg);

}  // namespace vlift::verify
