#pragma once

#include "vlift/rational.hpp"
#include "vlift/sexpr.hpp"
#include "vlift/term.hpp"

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

// SMT-LIB2 scripts and a one-process-per-check solver driver.
namespace vlift::smt {

struct Script {
  std::string logic = "ALL";
  std::vector<std::string> comments;
  std::vector<SExpr> decls;
  std::vector<SExpr> asserts;
  bool want_model = false;

  void declare_const(const std::string& name, const std::string& sort);
  void declare_fun(const std::string& name, const std::vector<std::string>& args, const std::string& ret);
  void add(SExpr assertion) { asserts.push_back(std::move(assertion)); }

  /// Byte-stable serialization. `timeout_ms` > 0 adds a solver timeout option.
  std::string str(unsigned timeout_ms = 0) const;
};

enum class Status { Sat, Unsat, Unknown, Crash };
std::string status_name(Status s);

struct Verdict {
  Status status = Status::Unknown;
  std::string reason;
  /// Nullary Real/Int definitions from the model (exact values only).
  std::map<std::string, Rational> model;
  double seconds = 0;
};

struct SolverConfig {
  /// Command line; the script is fed on stdin. "z3 -in" by default.
  std::string command = "z3 -in";
  double timeout_s = 30;
};

/// Reads VLIFT_SOLVER (a command line) and falls back to "z3 -in".
SolverConfig default_solver_config();

/// Runs the solver in a fresh process. The process is killed once the
/// timeout (plus one second of grace) elapses.
Verdict check(const Script& s, const SolverConfig& cfg);

/// Parses solver stdout ("sat" / "unsat" / "unknown", optional model).
Verdict parse_output(const std::string& out);

// ---- encoding helpers ----
SExpr real(const Rational& q);
SExpr integer(long long v);
std::string uf_name(sym::FnName f);
/// Encodes a term; element leaves are rendered by `leaf`.
SExpr encode(sym::Term t, const std::function<SExpr(sym::ElemRef)>& leaf);
SExpr conj(std::vector<SExpr> xs);
SExpr disj(std::vector<SExpr> xs);

// ---- reference evaluation of quantifier-free assertions ----
using QfValue = std::variant<Rational, bool>;
/// Evaluates a quantifier-free real/int/bool expression with + - * / ite,
/// comparisons and boolean connectives. Throws Error on anything else.
QfValue eval_qf(const SExpr& e, const std::map<std::string, Rational>& env);
std::optional<Rational> parse_value(const SExpr& e);

}  // namespace vlift::smt
