#pragma once

#include "vlift/error.hpp"
#include "vlift/kernel_ir.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

// Generic single-thread interpreter for kernel bodies. The value domain is a
// template parameter so the same code drives symbolic execution, concrete
// execution and SMT encoding of one thread.
//
// A Domain provides:
//   types Int, Real, Bool
//   Int  int_lit(long long); int_add/int_sub/int_mul/int_div/int_mod(Int, Int); int_neg(Int)
//   Real real_lit(const Rational&); Real to_real(Int)
//   Real add/sub/mul/div(Real, Real); Real neg(Real); Real fn(sym::FnName, Real)
//   Bool cmp(sym::Rel, Real, Real); Real select(Bool, Real, Real)
//   Int  program_id(); Int int_param(uint32_t); Real real_param(uint32_t)
//   Real load(uint32_t tensor, Int offset); void store(uint32_t tensor, Int offset, Real v)
namespace vlift::interp {

enum class VType { Int, Real, Bool, Ptr };

template <class D>
struct Value {
  VType type = VType::Int;
  bool block = false;
  uint32_t tensor = 0;  // Ptr
  std::vector<std::optional<typename D::Int>> ints;  // Int lanes; Ptr offsets
  std::vector<std::optional<typename D::Real>> reals;
  std::vector<std::optional<typename D::Bool>> bools;

  size_t lanes() const {
    switch (type) {
      case VType::Real: return reals.size();
      case VType::Bool: return bools.size();
      default: return ints.size();
    }
  }
};

template <class D>
class Interpreter {
 public:
  using Int = typename D::Int;
  using Real = typename D::Real;
  using Bool = typename D::Bool;
  using V = Value<D>;

  /// `live` lanes of each block take part in loads, stores and reductions;
  /// lanes at or past it are dead.
  Interpreter(const kir::KernelModule& k, D& dom, long long live) : k_(k), dom_(dom), live_(live) {}

  void run() {
    locals_.clear();
    for (const auto& s : k_.body) {
      if (s.kind == kir::Stmt::Kind::Assign) {
        locals_[s.local] = eval(*s.value);
      } else {
        V addr = eval(*s.address);
        V val = eval(*s.value);
        store(addr, val, s.loc);
      }
    }
  }

  V eval(const kir::Expr& e) {
    using kir::ExprKind;
    switch (e.kind) {
      case ExprKind::IntLit: return int_scalar(dom_.int_lit(e.int_value));
      case ExprKind::RealLit: return real_scalar(dom_.real_lit(e.real_value));
      case ExprKind::ProgramId: return int_scalar(dom_.program_id());
      case ExprKind::Ref: return ref(e);
      case ExprKind::Arange: {
        V v;
        v.type = VType::Int;
        v.block = true;
        for (long long i = e.int_value; i < e.int_hi; ++i) v.ints.push_back(dom_.int_lit(i));
        return v;
      }
      case ExprKind::Load: return load(eval(*e.args[0]), e.loc);
      case ExprKind::Binary: return binary(e.op, eval(*e.args[0]), eval(*e.args[1]), e.loc);
      case ExprKind::Neg: {
        V a = eval(*e.args[0]);
        if (a.type == VType::Int) return map_int(a, [&](const Int& x) { return dom_.int_neg(x); });
        return map_real(as_real(a, e.loc), [&](const Real& x) { return dom_.neg(x); });
      }
      case ExprKind::MathFn:
        return map_real(as_real(eval(*e.args[0]), e.loc), [&](const Real& x) { return dom_.fn(e.fn, x); });
      case ExprKind::Reduce: return reduce(e.reduce, as_real(eval(*e.args[0]), e.loc), e.loc);
      case ExprKind::Compare: {
        V a = as_real(eval(*e.args[0]), e.loc);
        V b = as_real(eval(*e.args[1]), e.loc);
        V out;
        out.type = VType::Bool;
        out.block = a.block || b.block;
        size_t n = std::max(a.lanes(), b.lanes());
        for (size_t i = 0; i < n; ++i) {
          const auto& x = a.reals[a.block ? i : 0];
          const auto& y = b.reals[b.block ? i : 0];
          if (x && y)
            out.bools.push_back(dom_.cmp(e.rel, *x, *y));
          else
            out.bools.push_back(std::nullopt);
        }
        return out;
      }
      case ExprKind::Where: {
        V c = eval(*e.args[0]);
        if (c.type != VType::Bool) fail(e.loc, "where condition must be a comparison");
        V a = as_real(eval(*e.args[1]), e.loc);
        V b = as_real(eval(*e.args[2]), e.loc);
        check_lanes(c, a, e.loc);
        check_lanes(c, b, e.loc);
        check_lanes(a, b, e.loc);
        V out;
        out.type = VType::Real;
        out.block = c.block || a.block || b.block;
        size_t n = std::max({c.lanes(), a.lanes(), b.lanes()});
        for (size_t i = 0; i < n; ++i) {
          const auto& cc = c.bools[c.block ? i : 0];
          const auto& x = a.reals[a.block ? i : 0];
          const auto& y = b.reals[b.block ? i : 0];
          if (cc && x && y)
            out.reals.push_back(dom_.select(*cc, *x, *y));
          else
            out.reals.push_back(std::nullopt);
        }
        return out;
      }
    }
    fail(e.loc, "unsupported expression");
  }

 private:
  [[noreturn]] static void fail(kir::SourceLoc loc, const std::string& msg) {
    throw ExecutionError(std::to_string(loc.line) + ":" + std::to_string(loc.col) + ": " + msg);
  }

  static V int_scalar(Int x) {
    V v;
    v.type = VType::Int;
    v.ints.push_back(std::move(x));
    return v;
  }
  static V real_scalar(Real x) {
    V v;
    v.type = VType::Real;
    v.reals.push_back(std::move(x));
    return v;
  }

  V ref(const kir::Expr& e) {
    if (auto it = locals_.find(e.name); it != locals_.end()) return it->second;
    auto idx = k_.param_index(e.name);
    if (!idx) fail(e.loc, "unknown identifier " + e.name);
    const auto& p = k_.param(*idx);
    switch (p.kind) {
      case kir::ParamKind::TensorIn:
      case kir::ParamKind::TensorOut: {
        V v;
        v.type = VType::Ptr;
        v.tensor = *idx;
        v.ints.push_back(dom_.int_lit(0));
        return v;
      }
      case kir::ParamKind::ScalarInt: return int_scalar(dom_.int_param(*idx));
      case kir::ParamKind::ScalarReal: return real_scalar(dom_.real_param(*idx));
    }
    fail(e.loc, "bad parameter");
  }

  void check_lanes(const V& a, const V& b, kir::SourceLoc loc) {
    if (a.block && b.block && a.lanes() != b.lanes()) fail(loc, "block size mismatch");
  }

  V as_real(const V& a, kir::SourceLoc loc) {
    if (a.type == VType::Real) return a;
    if (a.type != VType::Int) fail(loc, "expected a numeric value");
    V out;
    out.type = VType::Real;
    out.block = a.block;
    for (const auto& x : a.ints) {
      if (x)
        out.reals.push_back(dom_.to_real(*x));
      else
        out.reals.push_back(std::nullopt);
    }
    return out;
  }

  template <class F>
  V map_int(const V& a, F f) {
    V out = a;
    for (auto& x : out.ints)
      if (x) x = f(*x);
    return out;
  }

  template <class F>
  V map_real(const V& a, F f) {
    V out = a;
    for (auto& x : out.reals)
      if (x) x = f(*x);
    return out;
  }

  template <class T, class F>
  static std::vector<std::optional<T>> zip(const std::vector<std::optional<T>>& a, bool ablock,
                                           const std::vector<std::optional<T>>& b, bool bblock, F f) {
    size_t n = std::max(a.size(), b.size());
    std::vector<std::optional<T>> out;
    out.reserve(n);
    for (size_t i = 0; i < n; ++i) {
      const auto& x = a[ablock ? i : 0];
      const auto& y = b[bblock ? i : 0];
      if (x && y)
        out.push_back(f(*x, *y));
      else
        out.push_back(std::nullopt);
    }
    return out;
  }

  Int int_op(kir::BinOp op, const Int& a, const Int& b) {
    switch (op) {
      case kir::BinOp::Add: return dom_.int_add(a, b);
      case kir::BinOp::Sub: return dom_.int_sub(a, b);
      case kir::BinOp::Mul: return dom_.int_mul(a, b);
      case kir::BinOp::Div: return dom_.int_div(a, b);
      case kir::BinOp::Mod: return dom_.int_mod(a, b);
    }
    return a;
  }

  V binary(kir::BinOp op, const V& a, const V& b, kir::SourceLoc loc) {
    check_lanes(a, b, loc);
    V out;
    out.block = a.block || b.block;
    if (a.type == VType::Ptr || b.type == VType::Ptr) {
      if (a.type == VType::Ptr && b.type == VType::Ptr) fail(loc, "cannot combine two pointers");
      const V& p = a.type == VType::Ptr ? a : b;
      const V& o = a.type == VType::Ptr ? b : a;
      if (o.type != VType::Int) fail(loc, "pointer offset must be an integer");
      if (op != kir::BinOp::Add && !(op == kir::BinOp::Sub && a.type == VType::Ptr))
        fail(loc, "only pointer + offset is allowed");
      out.type = VType::Ptr;
      out.tensor = p.tensor;
      out.ints = zip(p.ints, p.block, o.ints, o.block, [&](const Int& x, const Int& y) {
        return op == kir::BinOp::Add ? dom_.int_add(x, y) : dom_.int_sub(x, y);
      });
      return out;
    }
    if (a.type == VType::Int && b.type == VType::Int) {
      out.type = VType::Int;
      out.ints = zip(a.ints, a.block, b.ints, b.block, [&](const Int& x, const Int& y) { return int_op(op, x, y); });
      return out;
    }
    if (op == kir::BinOp::Mod) fail(loc, "% applies to integers only");
    V ra = as_real(a, loc);
    V rb = as_real(b, loc);
    out.type = VType::Real;
    out.reals = zip(ra.reals, ra.block, rb.reals, rb.block, [&](const Real& x, const Real& y) {
      switch (op) {
        case kir::BinOp::Add: return dom_.add(x, y);
        case kir::BinOp::Sub: return dom_.sub(x, y);
        case kir::BinOp::Mul: return dom_.mul(x, y);
        default: return dom_.div(x, y);
      }
    });
    return out;
  }

  bool lane_live(const V& v, size_t i) const { return !v.block || static_cast<long long>(i) < live_; }

  V load(const V& p, kir::SourceLoc loc) {
    if (p.type != VType::Ptr) fail(loc, "load expects a pointer");
    V out;
    out.type = VType::Real;
    out.block = p.block;
    for (size_t i = 0; i < p.ints.size(); ++i) {
      if (lane_live(p, i) && p.ints[i])
        out.reals.push_back(dom_.load(p.tensor, *p.ints[i]));
      else
        out.reals.push_back(std::nullopt);
    }
    return out;
  }

  void store(const V& p, const V& val, kir::SourceLoc loc) {
    if (p.type != VType::Ptr) fail(loc, "store expects a pointer");
    if (k_.param(p.tensor).kind != kir::ParamKind::TensorOut)
      fail(loc, "store to non-output tensor " + k_.param(p.tensor).name);
    V v = as_real(val, loc);
    if (v.block && !p.block) fail(loc, "cannot store a block through a scalar pointer");
    check_lanes(p, v, loc);
    for (size_t i = 0; i < p.ints.size(); ++i) {
      if (!lane_live(p, i)) continue;
      const auto& x = v.reals[v.block ? i : 0];
      if (!p.ints[i] || !x) fail(loc, "store of an undefined lane");
      dom_.store(p.tensor, *p.ints[i], *x);
    }
  }

  V reduce(kir::ReduceOp op, const V& a, kir::SourceLoc loc) {
    if (!a.block) return a;
    std::optional<Real> acc;
    for (size_t i = 0; i < a.reals.size(); ++i) {
      if (!lane_live(a, i)) continue;
      if (!a.reals[i]) fail(loc, "reduction over an undefined lane");
      const Real& x = *a.reals[i];
      if (!acc) {
        acc = x;
      } else if (op == kir::ReduceOp::Sum) {
        acc = dom_.add(*acc, x);
      } else {
        acc = dom_.select(dom_.cmp(sym::Rel::Gt, *acc, x), *acc, x);
      }
    }
    if (!acc) fail(loc, "reduction over an empty block");
    return real_scalar(*acc);
  }

  const kir::KernelModule& k_;
  D& dom_;
  long long live_;
  std::map<std::string, V> locals_;
};

/// Floor division / modulo on machine integers.
inline long long floor_div(long long a, long long b) {
  if (b == 0) throw ExecutionError("integer division by zero");
  long long q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}
inline long long floor_mod(long long a, long long b) { return a - floor_div(a, b) * b; }

}  // namespace vlift::interp
