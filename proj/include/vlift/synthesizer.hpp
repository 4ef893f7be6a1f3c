#pragma once

#include "vlift/executor.hpp"
#include "vlift/formula.hpp"
#include "vlift/smt.hpp"
#include "vlift/verifier.hpp"

#include <optional>
#include <string>
#include <vector>

// Top-down splitting of output terms by their shared root, with pruned
// bottom-up enumeration as the fallback and an SMT check on every candidate.
namespace vlift::synth {

struct SynthConfig {
  int max_depth = 4;
  double time_budget_s = 60;
  bool enable_topdown = true;
  bool enable_value_prune = true;
  bool enable_type_prune = true;
  /// Programs one bottom-up call may generate before giving up.
  size_t max_programs = 60000;
  /// Output position used by value pruning; negative counts from the end.
  long long probe_position = -1;
  smt::SolverConfig solver = smt::default_solver_config();
  double check_timeout_s = 10;
  verify::AxiomOptions axioms;
};

/// An output tensor to synthesize: shape plus one term per element.
struct Target {
  tf::Shape shape;
  std::vector<sym::Term> elems;
};

Target target_of(const SymbolicTensor& t);

enum class Phase { None, TopDown, BottomUp };
std::string phase_name(Phase p);

struct SynthStats {
  size_t programs_enumerated = 0;
  size_t pruned_type = 0;
  size_t pruned_value = 0;
  size_t deduplicated = 0;
  size_t solver_calls = 0;
  size_t bottom_up_calls = 0;
};

struct SynthResult {
  std::optional<tf::Formula> formula;
  Phase phase = Phase::None;
  std::string failure;
  SynthStats stats;
  double seconds = 0;
};

enum class Verdict { Accepted, Rejected, Unknown };
std::string verdict_name(Verdict v);

struct CheckResult {
  Verdict verdict = Verdict::Unknown;
  bool syntactic = false;
  /// Rejected by the solver: element name (x[3]) -> value.
  std::map<std::string, Rational> witness;
  std::string reason;
};

/// Accepts f iff it is equal to every element of output `output` of the
/// LiftSpec: syntactically after canonicalization, or by an unsat disequality.
CheckResult check_candidate(const tf::Formula& f, const LiftSpec& spec, size_t output, const SynthConfig& cfg);
CheckResult check_candidate(const tf::Formula& f, const LiftSpec& spec, const Target& target,
                            const SynthConfig& cfg);

/// Synthesizes output `output` of the LiftSpec.
SynthResult synthesize(const LiftSpec& spec, size_t output, const SynthConfig& cfg);

// ---- the pieces of the top-down phase ----
enum class SplitOp { Add, Sub, Mul, Div };

struct Split {
  Target left, right;
};
/// Some iff every element's root is the operator. + and * chains split first
/// child vs the rest; `last` instead splits all-but-last vs last. Sub splits an
/// addition whose right part is negated everywhere (right is returned
/// un-negated).
std::optional<Split> split_by(const Target& t, SplitOp op, bool last = false);
/// Some(inner) iff every element is fn(inner).
std::optional<Target> split_fn(const Target& t, sym::FnName f);
std::optional<Target> split_neg(const Target& t);

struct SumShape {
  enum class Kind { Plain, Dot } kind = Kind::Plain;
  Target rows;       // Plain: [outer..., k]
  Target a, b;       // Dot: [n, k] and [k, m]
};
std::optional<SumShape> guess_sum(const Target& t);
/// Rows [outer..., k] whose max fold (nested ite(a > b, a, b)) is t.
std::optional<Target> guess_max(const Target& t);

// ---- bottom-up ----
/// Leaf names and shapes for pruning and evaluation.
struct Terminals {
  std::vector<tf::Formula> programs;
  std::map<std::string, tf::SymTensor> inputs;
};
Terminals terminals_of(const LiftSpec& spec, const Target& t);

/// Keeps p unless it is ill-typed.
bool prune_type_keep(const tf::Formula& p, const tf::ShapeMap& shapes);
/// Drops p if, at the probe position, it mentions an input element that the
/// target does not mention there.
bool prune_value_keep(const tf::SymTensor& value, const Target& t, long long probe_position = -1);

struct LevelCounts {
  std::vector<size_t> well_typed;  // per depth
  std::vector<size_t> ill_typed;
};
/// Exhaustive generation without pruning or deduplication, for regression
/// counts. Terminals are the LiftSpec inputs, their transposes and `consts`.
LevelCounts count_programs(const LiftSpec& spec, const std::vector<Rational>& consts, int depth);

}  // namespace vlift::synth
