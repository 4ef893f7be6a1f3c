#pragma once

#include "vlift/rational.hpp"

#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

// Scalar symbolic terms over input-tensor elements. Terms are hash-consed:
// structurally equal terms are the same pointer, so `a == b` is structural
// equality. Smart constructors always return canonical terms.
namespace vlift::sym {

/// Node kinds. The declaration order is the canonical sort rank used when
/// ordering the children of commutative chains (constants sort last).
enum class Kind : uint8_t { Elem, Mul, Div, Fn, Add, Ite, Cmp, Neg, Const };

enum class FnName : uint8_t { Exp, Log, Sin, Cos, Sqrt, Tanh, Abs };
inline constexpr FnName kAllFns[] = {FnName::Exp,  FnName::Log,  FnName::Sin, FnName::Cos,
                                     FnName::Sqrt, FnName::Tanh, FnName::Abs};

enum class Rel : uint8_t { Gt, Ge, Lt, Le, Eq };

std::string fn_name(FnName f);
std::optional<FnName> parse_fn_name(std::string_view s);
std::string rel_symbol(Rel r);

/// Element `index` (row-major flat) of the tensor parameter at position `tensor`.
struct ElemRef {
  uint32_t tensor = 0;
  uint32_t index = 0;
  friend auto operator<=>(const ElemRef&, const ElemRef&) = default;
};

class Node;
using Term = const Node*;

class Node {
 public:
  Kind kind() const { return kind_; }
  const std::vector<Term>& kids() const { return kids_; }
  Term kid(size_t i) const { return kids_[i]; }
  const Rational& value() const { return value_; }
  ElemRef elem() const { return elem_; }
  FnName fn() const { return fn_; }
  Rel rel() const { return rel_; }
  /// Interning id; unique per distinct structure, assigned in creation order.
  uint64_t id() const { return id_; }
  size_t hash() const { return hash_; }
  /// Value under a fixed pseudo-random assignment of every element in
  /// [-2, 2]; NaN where a partial function is undefined. Used as a cheap
  /// inequality filter, never as a proof of equality.
  double probe() const { return probe_; }
  /// Sorted, duplicate-free element leaves reachable from this node.
  const std::vector<ElemRef>& elems() const { return elems_; }
  bool is_const() const { return kind_ == Kind::Const; }

 private:
  friend class Interner;
  Kind kind_ = Kind::Const;
  std::vector<Term> kids_;
  Rational value_;
  ElemRef elem_;
  FnName fn_ = FnName::Exp;
  Rel rel_ = Rel::Gt;
  uint64_t id_ = 0;
  size_t hash_ = 0;
  double probe_ = 0.0;
  std::vector<ElemRef> elems_;
};

// ---- smart (canonicalizing) constructors ----
Term constant(const Rational& v);
Term constant(long long v);
Term elem(uint32_t tensor, uint32_t index);
Term add(std::vector<Term> terms);
Term add(Term a, Term b);
Term sub(Term a, Term b);
Term mul(std::vector<Term> terms);
Term mul(Term a, Term b);
Term div(Term a, Term b);
Term neg(Term a);
Term fn(FnName f, Term a);
Term cmp(Rel r, Term a, Term b);
Term ite(Term cond, Term then_t, Term else_t);
/// max(a, b) encoded as ite(a > b, a, b).
Term max2(Term a, Term b);

/// Builds a node exactly as given, without canonicalization. For tests and
/// for callers that need to represent non-canonical input to `canon`.
Term raw(Kind k, std::vector<Term> kids, const Rational& value = 0, ElemRef e = {},
         FnName f = FnName::Exp, Rel r = Rel::Gt);

/// Local, semantics-preserving normalization: constant folding, flattening and
/// sorting of + and * chains, x - y => x + (-y). Idempotent.
Term canon(Term t);

/// Total order on terms used to sort commutative chains: kind rank first,
/// then (tensor position, flat index) for elements and value for constants,
/// then children lexicographically. Returns <0, 0, >0.
int compare(Term a, Term b);

struct LeafSet {
  std::set<ElemRef> elems;
  std::set<Rational> consts;
};
LeafSet leaves(Term t);

using Binding = std::map<ElemRef, Number>;
/// Numeric value of `t` under `binding`. Exact while no transcendental function
/// is involved. Throws DomainError for division by zero, log of a non-positive
/// value, sqrt of a negative value, or an unbound element.
Number substitute(Term t, const Binding& binding);

/// Fast double evaluation; partial functions yield NaN rather than throwing.
double evaluate(Term t, const std::function<double(ElemRef)>& value_of);

/// Reference real-valued implementations of the uninterpreted functions.
double apply_fn(FnName f, double x);
/// Exact/inexact variant; throws DomainError outside the domain.
Number apply_fn(FnName f, const Number& x);

using Naming = std::function<std::string(ElemRef)>;
std::string to_string(Term t, const Naming& naming = {});

/// Number of distinct interned nodes (diagnostics).
size_t interned_count();

}  // namespace vlift::sym
