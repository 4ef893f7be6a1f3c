#pragma once

#include "vlift/kernel_ir.hpp"
#include "vlift/rational.hpp"
#include "vlift/term.hpp"

#include <nlohmann/json.hpp>

#include <map>
#include <string>
#include <vector>

namespace vlift {

/// A concrete binding of a kernel's shape symbols, with everything derived
/// from it (int params, grid size, live lanes).
struct ShapeEnv {
  std::map<std::string, long long> dims;
  std::map<std::string, long long> ints;  // shape symbols and int params
  long long grid = 1;
  long long live = 1;

  std::vector<long long> tensor_dims(const kir::Param& p) const;
  long long tensor_size(const kir::Param& p) const;
};

/// Evaluates int params, grid and live lanes. Throws Error if a symbol is
/// unbound, the grid is not positive or live lanes fall outside 1..block.
ShapeEnv make_shape_env(const kir::KernelModule& k, const std::map<std::string, long long>& dims);

struct SymbolicTensor {
  uint32_t param = 0;
  std::string name;
  std::vector<long long> dims;  // empty for scalar real params
  std::vector<sym::Term> elems;
  bool positive = false;  // scalar real param declared `positive`
  size_t size() const { return elems.size(); }
};

struct LiftSpec {
  std::string kernel;
  std::vector<SymbolicTensor> inputs;
  std::vector<SymbolicTensor> outputs;
  long long block_size = 1;
  ShapeEnv env;

  const SymbolicTensor* input_by_param(uint32_t param) const;
  /// Prints element leaves as `x[5]` (flat index).
  sym::Naming naming() const;
};

struct ExecOptions {
  bool reverse_order = false;
};

/// Symbolic execution of every thread at the given shape. Throws
/// ExecutionError on out-of-bounds access, a write to one output element from
/// two threads, a read of an unwritten output, or an output element that is
/// never written.
LiftSpec execute(const kir::KernelModule& k, const ShapeEnv& env, const ExecOptions& opts = {});

/// Smallest binding of the shape symbols (by sum, then lexicographic) that
/// launches at least two threads and executes cleanly.
ShapeEnv default_shape(const kir::KernelModule& k);

/// Concrete inputs keyed by parameter position; scalar real params hold one value.
template <class T>
using TensorValues = std::map<uint32_t, std::vector<T>>;

/// Exact concrete execution. Throws DomainError / ExecutionError.
TensorValues<Number> interpret(const kir::KernelModule& k, const ShapeEnv& env, const TensorValues<Number>& inputs,
                               const ExecOptions& opts = {});
/// Machine-double concrete execution. Partial functions outside their domain
/// throw DomainError.
TensorValues<double> interpret(const kir::KernelModule& k, const ShapeEnv& env, const TensorValues<double>& inputs,
                               const ExecOptions& opts = {});

/// tensor name -> array of pretty-printed element terms.
nlohmann::json to_json(const LiftSpec& spec);

}  // namespace vlift
