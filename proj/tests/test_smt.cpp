#include "vlift/smt.hpp"
#include "vlift/verifier.hpp"

#include <gtest/gtest.h>

using namespace vlift;
using namespace vlift::smt;

namespace {

Script positive_x() {
  Script s;
  s.declare_const("x", "Real");
  s.add(L({">", "x", "0"}));
  return s;
}

}  // namespace

TEST(Smt, FalseIsUnsat) {
  Script s;
  s.add(SExpr("false"));
  EXPECT_EQ(check(s, default_solver_config()).status, Status::Unsat);
}

TEST(Smt, SatWithModelThatSatisfiesTheScript) {
  Script s = positive_x();
  s.want_model = true;
  Verdict v = check(s, default_solver_config());
  ASSERT_EQ(v.status, Status::Sat);
  ASSERT_TRUE(v.model.count("x"));
  EXPECT_GT(v.model.at("x"), Rational(0));
  for (const auto& a : s.asserts) EXPECT_EQ(std::get<bool>(eval_qf(a, v.model)), true);
}

TEST(Smt, SerializationIsStable) {
  Script s = positive_x();
  EXPECT_EQ(s.str(1000), "(set-option :timeout 1000)\n(set-logic ALL)\n(declare-const x Real)\n(assert (> x 0))\n"
                         "(check-sat)\n(exit)\n");
  EXPECT_EQ(s.str(1000), positive_x().str(1000));
  EXPECT_EQ(check(s, default_solver_config()).status, check(s, default_solver_config()).status);
}

TEST(Smt, ExpAxiomText) {
  auto ax = verify::function_axioms({sym::FnName::Exp});
  ASSERT_EQ(ax.function_axioms.size(), 1u);
  EXPECT_EQ(ax.function_axioms[0].str(), "(forall ((v Real)) (> (uf_exp v) 0.0))");
}

TEST(Smt, ParseOutput) {
  EXPECT_EQ(parse_output("unsat\n").status, Status::Unsat);
  EXPECT_EQ(parse_output("unknown\n").status, Status::Unknown);
  auto v = parse_output("sat\n(\n  (define-fun x () Real (/ 1.0 2.0))\n  (define-fun y () Real (- 3.0))\n)\n");
  ASSERT_EQ(v.status, Status::Sat);
  EXPECT_EQ(v.model.at("x"), Rational(1, 2));
  EXPECT_EQ(v.model.at("y"), Rational(-3));
  EXPECT_EQ(parse_output("garbage").status, Status::Crash);
}

TEST(Smt, EvalQf) {
  std::map<std::string, Rational> env{{"a", Rational(3)}, {"b", Rational(1, 2)}};
  EXPECT_EQ(std::get<Rational>(eval_qf(parse_sexpr("(ite (> a b) (* a b) (- b))"), env)), Rational(3, 2));
  EXPECT_EQ(std::get<bool>(eval_qf(parse_sexpr("(and (<= b a) (not (= a b)))"), env)), true);
}

TEST(Smt, HardScriptTimesOutWithinGrace) {
  // x^3 + y^3 = z^3 over positive integers
  Script s;
  for (const char* v : {"x", "y", "z"}) {
    s.declare_const(v, "Int");
    s.add(L({">", v, "0"}));
  }
  s.add(L({"=", L({"+", L({"*", "x", "x", "x"}), L({"*", "y", "y", "y"})}), L({"*", "z", "z", "z"})}));
  SolverConfig cfg = default_solver_config();
  cfg.timeout_s = 2;
  Verdict v = check(s, cfg);
  EXPECT_EQ(v.status, Status::Unknown);
  EXPECT_LE(v.seconds, cfg.timeout_s + 1.0);
}

TEST(Smt, MissingSolverIsACrash) {
  SolverConfig cfg;
  cfg.command = "/nonexistent/solver -in";
  EXPECT_EQ(check(positive_x(), cfg).status, Status::Crash);
}
