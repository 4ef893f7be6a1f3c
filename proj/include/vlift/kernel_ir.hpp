#pragma once

#include "vlift/error.hpp"
#include "vlift/rational.hpp"
#include "vlift/term.hpp"

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

// Textual kernel DSL (`.klift`): one kernel per file, statement per line,
// tensors addressed as flat buffers through explicit pointer arithmetic.
//
//   kernel add(y: out[N], x1: in[N], x2: in[N]) grid(N / 4) block(4) {
//     offs = program_id * 4 + arange(0, 4)
//     store(y + offs, load(x1 + offs) + load(x2 + offs))
//   }
namespace vlift::kir {

struct SourceLoc {
  int line = 0;
  int col = 0;
};

struct Diagnostic {
  std::string file;
  SourceLoc loc;
  std::string message;
  /// `file:line:col: message`
  std::string str() const;
};

class ParseError : public Error {
 public:
  explicit ParseError(std::vector<Diagnostic> diags);
  const std::vector<Diagnostic>& diagnostics() const { return diags_; }

 private:
  std::vector<Diagnostic> diags_;
};

enum class ExprKind { Ref, ProgramId, IntLit, RealLit, Arange, Load, Binary, Neg, MathFn, Reduce, Where, Compare };
enum class BinOp { Add, Sub, Mul, Div, Mod };
enum class ReduceOp { Max, Sum };

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
  ExprKind kind = ExprKind::IntLit;
  std::string name;        // Ref
  long long int_value = 0; // IntLit; Arange lower bound
  long long int_hi = 0;    // Arange upper bound
  Rational real_value;     // RealLit
  BinOp op = BinOp::Add;
  sym::FnName fn = sym::FnName::Exp;
  ReduceOp reduce = ReduceOp::Sum;
  sym::Rel rel = sym::Rel::Gt;
  std::vector<ExprPtr> args;
  SourceLoc loc;
};

/// Structural equality ignoring source locations.
bool equal(const Expr& a, const Expr& b);
std::string to_string(const Expr& e);

enum class ParamKind { TensorIn, TensorOut, ScalarInt, ScalarReal };

/// A shape dimension: an integer literal or a shape symbol such as `N`.
struct Dim {
  std::string symbol;
  long long value = 0;
  bool is_symbol() const { return !symbol.empty(); }
  friend bool operator==(const Dim&, const Dim&) = default;
};

struct Param {
  std::string name;
  ParamKind kind = ParamKind::TensorIn;
  std::vector<Dim> dims;       // tensors
  ExprPtr int_value;           // scalar-int: value as an expression over shape symbols
  bool positive = false;       // scalar-real: assumed > 0
  SourceLoc loc;

  bool is_tensor() const { return kind == ParamKind::TensorIn || kind == ParamKind::TensorOut; }
};

struct Stmt {
  enum class Kind { Assign, Store } kind = Kind::Assign;
  std::string local;  // Assign
  ExprPtr address;    // Store
  ExprPtr value;
  SourceLoc loc;
};

struct KernelModule {
  std::string name;
  std::vector<Param> params;
  ExprPtr grid;
  long long block_size = 1;
  ExprPtr live;  // optional number of live lanes per block; defaults to block_size
  std::vector<Stmt> body;

  std::optional<uint32_t> param_index(std::string_view name) const;
  const Param& param(uint32_t index) const { return params[index]; }
  /// Tensor-out parameter positions in declaration order.
  std::vector<uint32_t> outputs() const;
  std::vector<uint32_t> inputs() const;
  /// Shape symbols in order of first appearance.
  std::vector<std::string> shape_symbols() const;
};

bool equal(const KernelModule& a, const KernelModule& b);

/// Parses one kernel. Throws ParseError carrying every diagnostic found.
KernelModule parse_kernel(std::string_view text, const std::string& file = "<input>");
KernelModule load_kernel_file(const std::string& path);

/// Canonical source text; parse(pretty_print(k)) is structurally equal to k.
std::string pretty_print(const KernelModule& k);

/// The grid launch viewed as one sequential loop:
///   pid = 0; while pid < bound: body[program_id := pid]; pid += 1
struct HostLoop {
  std::string pid = "pid";
  ExprPtr bound;
  std::vector<Stmt> body;
  std::string to_string() const;
};

HostLoop sequentialize(const KernelModule& k);

/// Evaluates an integer expression (grid, int params, live) under bindings of
/// shape symbols and int params. `/` is floor division.
long long eval_int(const Expr& e, const std::map<std::string, long long>& env);

}  // namespace vlift::kir
