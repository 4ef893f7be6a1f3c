#pragma once

#include "vlift/rational.hpp"
#include "vlift/sexpr.hpp"
#include "vlift/term.hpp"

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

// High-level tensor formulas: the lifted artifact.
//
//   f ::= x | transpose(f) | c | named-const | f op f | -f | fn(f)
//       | max(f) | sum(f) | matmul(f, f) | ifpos(f, f, f)
//
// Elementwise operators broadcast numpy-style. Reductions run along the last
// axis and keep it with extent 1. ifpos(c, t, e) selects t where c > 0.
namespace vlift::tf {

enum class Op : uint8_t { Input, Permute, Const, NamedConst, Add, Sub, Mul, Div, Neg, Fn, Max, Sum, MatMul, IfPos };

struct Node;
using Formula = std::shared_ptr<const Node>;

struct Node {
  Op op = Op::Const;
  std::string name;  // Input: tensor name; NamedConst: dictionary key
  Rational value;    // Const; NamedConst: its rational approximation
  sym::FnName fn = sym::FnName::Exp;
  std::vector<Formula> kids;
};

Formula input(const std::string& name);
Formula transpose(Formula f);
Formula constant(const Rational& v);
/// Keys: log2e, ln2, e, pi, sqrt_2_over_pi, inv_sqrt_2pi.
Formula named_constant(const std::string& key);
Formula binary(Op op, Formula a, Formula b);
Formula add(Formula a, Formula b);
Formula sub(Formula a, Formula b);
Formula mul(Formula a, Formula b);
Formula div(Formula a, Formula b);
Formula neg(Formula a);
Formula fn(sym::FnName f, Formula a);
Formula reduce_max(Formula a);
Formula reduce_sum(Formula a);
Formula matmul(Formula a, Formula b);
Formula ifpos(Formula c, Formula t, Formula e);

bool is_binary(Op op);
bool is_elementwise(Op op);

struct NamedConstant {
  std::string key;
  double value;
  std::string text;   // infix rendering
  std::string latex;
};
const std::vector<NamedConstant>& named_constants();
const NamedConstant* find_named_constant(const std::string& key);

using Shape = std::vector<long long>;
using ShapeMap = std::map<std::string, Shape>;

/// numpy-style broadcast of two shapes; nullopt when incompatible.
std::optional<Shape> broadcast(const Shape& a, const Shape& b);
long long numel(const Shape& s);

struct ShapeResult {
  std::optional<Shape> shape;
  std::string error;  // set when ill-typed
};
ShapeResult infer_shape(const Formula& f, const ShapeMap& inputs);
/// Shape of a non-leaf operator applied to operands of the given shapes.
std::optional<Shape> result_shape(Op op, const std::vector<Shape>& kids);

/// True if a value of shape `have` can stand for an output of shape `want`:
/// identical, broadcastable to it, or equal up to extent-1 axes.
bool fits(const Shape& have, const Shape& want);

/// Dense row-major tensor over a scalar type.
template <class T>
struct Tensor {
  Shape shape;
  std::vector<T> data;
};

using SymTensor = Tensor<sym::Term>;

/// Symbolic evaluation over input element terms; uses the same folds as the
/// symbolic executor (left-to-right sums, nested max2). Throws Error if the
/// formula is ill-typed.
SymTensor eval_sym(const Formula& f, const std::map<std::string, SymTensor>& inputs);
/// Evaluates one non-leaf node from its already evaluated operands.
SymTensor apply_sym(const Node& n, std::vector<SymTensor> kids);
/// Machine evaluation; partial functions outside their domain throw DomainError.
Tensor<double> eval_double(const Formula& f, const std::map<std::string, Tensor<double>>& inputs);

/// Repeats / reshapes `t` to the shape `want` (see `fits`).
template <class T>
Tensor<T> materialize(const Tensor<T>& t, const Shape& want);

// ---- text ----
/// Prefix form: (div (exp (sub x (max x))) (sum (exp (sub x (max x))))).
std::string to_prefix(const Formula& f);
Formula from_sexpr(const SExpr& e);
Formula parse_formula(const std::string& text);
/// Infix form: exp(x - max(x)) / sum(exp(x - max(x))).
std::string to_infix(const Formula& f);
std::string to_latex(const Formula& f);

size_t node_count(const Formula& f);
int depth(const Formula& f);
bool equal(const Formula& a, const Formula& b);
/// Sorts the operands of + and * so that formulas equal up to commutativity
/// print identically.
Formula sort_commutative(const Formula& f);
/// Input tensor names in first-occurrence order.
std::vector<std::string> input_names(const Formula& f);

}  // namespace vlift::tf
