#pragma once

#include "vlift/executor.hpp"
#include "vlift/formula.hpp"
#include "vlift/kernel_ir.hpp"
#include "vlift/verifier.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <vector>

// parse -> execute -> synthesize -> verify -> simplify, the differential
// tester, and corpus runs with the ablation switches.
namespace vlift::pipeline {

struct InputRange {
  double lo = -2, hi = 2;
};

struct LiftFlags {
  bool verify = true;
  bool topdown = true;
  bool prune = true;
  bool verify_pattern = true;
  bool simplify = true;
  double synth_timeout_s = 60;
  double vc_timeout_s = 30;
  double verify_budget_s = 120;
  std::string solver;  // command line; empty: VLIFT_SOLVER or "z3 -in"
  int diff_trials = 100;
  double diff_tol = 1e-5;
  uint64_t seed = 1;
  /// Sampling range; nullopt picks [-2, 2], shifted positive when the kernel
  /// uses log or sqrt.
  std::optional<InputRange> range;
};

struct SynthesisOutcome {
  bool success = false;
  std::string formula;  // infix
  std::string prefix;
  double seconds = 0;
  std::string phase = "none";
  size_t programs_enumerated = 0;
  std::string failure;
};

struct VcOutcome {
  std::string id;
  std::string verdict;  // unsat | sat | unknown
  double seconds = 0;
};

struct VerificationOutcome {
  bool attempted = false;
  std::string outcome;  // Verified | Refuted | Unknown
  std::string reason;
  bool pattern = false;
  long long a = 0, b = 0;
  std::vector<VcOutcome> vcs;
  std::vector<std::string> warnings;
  double seconds = 0;
};

struct DiffResult {
  bool pass = false;
  int trials = 0;   // completed
  int skipped = 0;  // gave up after repeated domain errors
  double max_rel_error = 0;
  std::vector<std::string> notes;
};

struct LiftReport {
  std::string kernel;
  std::string shape;  // binding used for synthesis, e.g. "R=2"
  std::string error;  // parse or execution failure
  SynthesisOutcome synthesis;
  VerificationOutcome verification;
  std::optional<std::string> simplified;
  std::optional<std::string> simplified_prefix;
  std::optional<DiffResult> differential;
  double seconds = 0;

  /// Deterministic field order. Without `times` every wall time is omitted.
  nlohmann::ordered_json to_json(bool times = true) const;
};

/// |a - b| / max(|a|, |b|), 0 when both are 0.
double relative_error(double a, double b);

/// Runs the kernel by concrete interpretation and `f` by reference
/// evaluation on `trials` random inputs.
DiffResult differential_test(const kir::KernelModule& k, const tf::Formula& f, int trials, double tol,
                             uint64_t seed = 1, std::optional<InputRange> range = std::nullopt);

LiftReport lift(const kir::KernelModule& k, const LiftFlags& flags = {});
/// Throws kir::ParseError when the file does not parse.
LiftReport lift_file(const std::string& path, const LiftFlags& flags = {});

struct CorpusEntry {
  std::string name;
  std::string file;  // absolute
  std::optional<std::string> golden;  // prefix text
  bool expect_synth = true;
  std::string expect_verify;  // Verified | Unknown | ...
  bool expected_failure = false;
  std::optional<InputRange> range;
  std::string note;
};

/// Reads `manifest.json` in `dir`. Throws Error when a kernel or a golden
/// does not parse.
std::vector<CorpusEntry> load_corpus(const std::string& dir);

struct CorpusSummary {
  std::vector<CorpusEntry> entries;
  std::vector<LiftReport> reports;  // same order as entries
  size_t synthesized = 0, verified = 0;

  nlohmann::ordered_json to_json(bool times = true) const;
  std::string table() const;
};

/// Lifts every entry, `workers` at a time (0: hardware concurrency).
CorpusSummary run_corpus(const std::vector<CorpusEntry>& entries, const LiftFlags& flags, unsigned workers = 0);

/// Golden agreement: equal after sorting commutative operands.
bool matches_golden(const tf::Formula& f, const tf::Formula& golden);

}  // namespace vlift::pipeline
