#include "vlift/executor.hpp"

#include "vlift/interp.hpp"

#include <cmath>
#include <functional>
#include <numeric>

namespace vlift {

std::vector<long long> ShapeEnv::tensor_dims(const kir::Param& p) const {
  std::vector<long long> out;
  for (const auto& d : p.dims) {
    if (!d.is_symbol()) {
      out.push_back(d.value);
      continue;
    }
    auto it = dims.find(d.symbol);
    if (it == dims.end()) throw Error("unbound shape symbol " + d.symbol);
    out.push_back(it->second);
  }
  return out;
}

long long ShapeEnv::tensor_size(const kir::Param& p) const {
  auto d = tensor_dims(p);
  return std::accumulate(d.begin(), d.end(), 1LL, std::multiplies<>());
}

ShapeEnv make_shape_env(const kir::KernelModule& k, const std::map<std::string, long long>& dims) {
  ShapeEnv env;
  env.dims = dims;
  for (const auto& s : k.shape_symbols()) {
    auto it = dims.find(s);
    if (it == dims.end()) throw Error("unbound shape symbol " + s);
    if (it->second < 1) throw Error("shape symbol " + s + " must be positive");
  }
  env.ints = dims;
  for (const auto& p : k.params)
    if (p.kind == kir::ParamKind::ScalarInt) env.ints[p.name] = kir::eval_int(*p.int_value, env.ints);
  env.grid = kir::eval_int(*k.grid, env.ints);
  if (env.grid < 1) throw Error("grid size must be positive");
  env.live = k.live ? kir::eval_int(*k.live, env.ints) : k.block_size;
  if (env.live < 1 || env.live > k.block_size) throw Error("live lanes must lie in 1..block");
  return env;
}

const SymbolicTensor* LiftSpec::input_by_param(uint32_t param) const {
  for (const auto& t : inputs)
    if (t.param == param) return &t;
  return nullptr;
}

sym::Naming LiftSpec::naming() const {
  std::map<uint32_t, std::pair<std::string, bool>> names;
  for (const auto& t : inputs) names[t.param] = {t.name, t.dims.empty()};
  return [names](sym::ElemRef e) {
    auto it = names.find(e.tensor);
    if (it == names.end()) return "t" + std::to_string(e.tensor) + "[" + std::to_string(e.index) + "]";
    if (it->second.second) return it->second.first;
    return it->second.first + "[" + std::to_string(e.index) + "]";
  };
}

namespace {

// Flat buffers with the race / bounds bookkeeping shared by every concrete
// and symbolic domain.
template <class Real>
class Memory {
 public:
  Memory(const kir::KernelModule& k, const ShapeEnv& env) : k_(k) {
    for (uint32_t i = 0; i < k.params.size(); ++i) {
      const auto& p = k.params[i];
      if (!p.is_tensor() && p.kind != kir::ParamKind::ScalarReal) continue;
      auto n = p.is_tensor() ? static_cast<size_t>(env.tensor_size(p)) : size_t{1};
      cells_[i].assign(n, std::nullopt);
      writer_[i].assign(n, -1);
    }
  }

  void fill(uint32_t tensor, std::vector<Real> values) {
    auto& c = cells_.at(tensor);
    if (values.size() != c.size())
      throw Error("input " + k_.param(tensor).name + " expects " + std::to_string(c.size()) + " values");
    for (size_t i = 0; i < c.size(); ++i) c[i] = std::move(values[i]);
  }

  const Real& load(uint32_t tensor, long long off) {
    auto& c = cells_.at(tensor);
    const auto& name = k_.param(tensor).name;
    if (off < 0 || off >= static_cast<long long>(c.size()))
      throw ExecutionError("out-of-bounds load " + name + "[" + std::to_string(off) + "]");
    if (!c[off]) throw ExecutionError("load of unwritten output " + name + "[" + std::to_string(off) + "]");
    return *c[off];
  }

  void store(uint32_t tensor, long long off, Real v, long long pid) {
    auto& c = cells_.at(tensor);
    const auto& name = k_.param(tensor).name;
    if (off < 0 || off >= static_cast<long long>(c.size()))
      throw ExecutionError("out-of-bounds store " + name + "[" + std::to_string(off) + "]");
    auto& w = writer_.at(tensor)[off];
    if (w >= 0 && w != pid)
      throw ExecutionError("threads " + std::to_string(w) + " and " + std::to_string(pid) + " both write " + name +
                           "[" + std::to_string(off) + "] (threads must be effect-disjoint)");
    w = pid;
    c[off] = std::move(v);
  }

  std::vector<Real> collect(uint32_t tensor) const {
    const auto& c = cells_.at(tensor);
    std::vector<Real> out;
    out.reserve(c.size());
    for (size_t i = 0; i < c.size(); ++i) {
      if (!c[i]) throw ExecutionError("output " + k_.param(tensor).name + "[" + std::to_string(i) + "] is never written");
      out.push_back(*c[i]);
    }
    return out;
  }

 private:
  const kir::KernelModule& k_;
  std::map<uint32_t, std::vector<std::optional<Real>>> cells_;
  std::map<uint32_t, std::vector<long long>> writer_;
};

// Integer side shared by the concrete domains.
template <class RealT, class BoolT>
struct IntDomain {
  using Int = long long;
  using Real = RealT;
  using Bool = BoolT;

  IntDomain(const kir::KernelModule& k, const ShapeEnv& env) : k(k), env(env), mem(k, env) {}

  Int int_lit(long long v) { return v; }
  Int int_add(Int a, Int b) { return a + b; }
  Int int_sub(Int a, Int b) { return a - b; }
  Int int_mul(Int a, Int b) { return a * b; }
  Int int_div(Int a, Int b) { return interp::floor_div(a, b); }
  Int int_mod(Int a, Int b) { return interp::floor_mod(a, b); }
  Int int_neg(Int a) { return -a; }
  Int program_id() { return pid; }
  Int int_param(uint32_t i) { return env.ints.at(k.param(i).name); }
  Real load(uint32_t t, Int off) { return mem.load(t, off); }
  void store(uint32_t t, Int off, Real v) { mem.store(t, off, std::move(v), pid); }
  Real real_param(uint32_t i) { return mem.load(i, 0); }

  const kir::KernelModule& k;
  const ShapeEnv& env;
  Memory<Real> mem;
  long long pid = 0;
};

struct SymDomain : IntDomain<sym::Term, sym::Term> {
  using IntDomain::IntDomain;
  Real real_lit(const Rational& q) { return sym::constant(q); }
  Real to_real(Int a) { return sym::constant(a); }
  Real add(Real a, Real b) { return sym::add(a, b); }
  Real sub(Real a, Real b) { return sym::sub(a, b); }
  Real mul(Real a, Real b) { return sym::mul(a, b); }
  Real div(Real a, Real b) { return sym::div(a, b); }
  Real neg(Real a) { return sym::neg(a); }
  Real fn(sym::FnName f, Real a) { return sym::fn(f, a); }
  Bool cmp(sym::Rel r, Real a, Real b) { return sym::cmp(r, a, b); }
  Real select(Bool c, Real a, Real b) { return sym::ite(c, a, b); }
};

bool holds(sym::Rel r, int c) {
  switch (r) {
    case sym::Rel::Gt: return c > 0;
    case sym::Rel::Ge: return c >= 0;
    case sym::Rel::Lt: return c < 0;
    case sym::Rel::Le: return c <= 0;
    case sym::Rel::Eq: return c == 0;
  }
  return false;
}

struct ExactDomain : IntDomain<Number, bool> {
  using IntDomain::IntDomain;
  Real real_lit(const Rational& q) { return Number(q); }
  Real to_real(Int a) { return Number(Rational(a)); }
  Real add(const Real& a, const Real& b) { return a + b; }
  Real sub(const Real& a, const Real& b) { return a - b; }
  Real mul(const Real& a, const Real& b) { return a * b; }
  Real div(const Real& a, const Real& b) { return a / b; }
  Real neg(const Real& a) { return -a; }
  Real fn(sym::FnName f, const Real& a) { return sym::apply_fn(f, a); }
  Bool cmp(sym::Rel r, const Real& a, const Real& b) { return holds(r, a < b ? -1 : (a == b ? 0 : 1)); }
  Real select(Bool c, const Real& a, const Real& b) { return c ? a : b; }
};

struct DoubleDomain : IntDomain<double, bool> {
  using IntDomain::IntDomain;
  Real real_lit(const Rational& q) { return to_double(q); }
  Real to_real(Int a) { return static_cast<double>(a); }
  Real add(Real a, Real b) { return a + b; }
  Real sub(Real a, Real b) { return a - b; }
  Real mul(Real a, Real b) { return a * b; }
  Real div(Real a, Real b) {
    if (b == 0.0) throw DomainError("division by zero");
    return a / b;
  }
  Real neg(Real a) { return -a; }
  Real fn(sym::FnName f, Real a) {
    double r = sym::apply_fn(f, a);
    if (std::isnan(r) && !std::isnan(a)) throw DomainError(sym::fn_name(f) + " outside its domain");
    return r;
  }
  Bool cmp(sym::Rel r, Real a, Real b) { return holds(r, a < b ? -1 : (a == b ? 0 : 1)); }
  Real select(Bool c, Real a, Real b) { return c ? a : b; }
};

template <class D>
void run_all(const kir::KernelModule& k, const ShapeEnv& env, D& dom, const ExecOptions& opts) {
  interp::Interpreter<D> in(k, dom, env.live);
  for (long long i = 0; i < env.grid; ++i) {
    dom.pid = opts.reverse_order ? env.grid - 1 - i : i;
    in.run();
  }
}

template <class D, class T>
TensorValues<T> interpret_in(const kir::KernelModule& k, const ShapeEnv& env, const TensorValues<T>& inputs,
                             const ExecOptions& opts) {
  D dom(k, env);
  for (auto idx : k.inputs()) {
    auto it = inputs.find(idx);
    if (it == inputs.end()) throw Error("missing input " + k.param(idx).name);
    dom.mem.fill(idx, it->second);
  }
  run_all(k, env, dom, opts);
  TensorValues<T> out;
  for (auto idx : k.outputs()) out[idx] = dom.mem.collect(idx);
  return out;
}

}  // namespace

LiftSpec execute(const kir::KernelModule& k, const ShapeEnv& env, const ExecOptions& opts) {
  SymDomain dom(k, env);
  LiftSpec spec;
  spec.kernel = k.name;
  spec.block_size = k.block_size;
  spec.env = env;
  for (auto idx : k.inputs()) {
    const auto& p = k.param(idx);
    SymbolicTensor t;
    t.param = idx;
    t.name = p.name;
    t.positive = p.positive;
    if (p.is_tensor()) t.dims = env.tensor_dims(p);
    size_t n = p.is_tensor() ? static_cast<size_t>(env.tensor_size(p)) : 1;
    for (size_t i = 0; i < n; ++i) t.elems.push_back(sym::elem(idx, static_cast<uint32_t>(i)));
    dom.mem.fill(idx, t.elems);
    spec.inputs.push_back(std::move(t));
  }
  run_all(k, env, dom, opts);
  for (auto idx : k.outputs()) {
    SymbolicTensor t;
    t.param = idx;
    t.name = k.param(idx).name;
    t.dims = env.tensor_dims(k.param(idx));
    t.elems = dom.mem.collect(idx);
    spec.outputs.push_back(std::move(t));
  }
  return spec;
}

ShapeEnv default_shape(const kir::KernelModule& k) {
  auto syms = k.shape_symbols();
  const long long hi = 2 * k.block_size;
  const long long n = static_cast<long long>(syms.size());
  for (long long total = n; total <= n * hi; ++total) {
    // every tuple in 1..hi with the given sum, in lexicographic order
    std::vector<long long> v(syms.size(), 1);
    std::function<std::optional<ShapeEnv>(size_t, long long)> rec =
        [&](size_t at, long long left) -> std::optional<ShapeEnv> {
      if (at + 1 == syms.size() || syms.empty()) {
        if (!syms.empty()) {
          if (left < 1 || left > hi) return std::nullopt;
          v[at] = left;
        }
        std::map<std::string, long long> dims;
        for (size_t i = 0; i < syms.size(); ++i) dims[syms[i]] = v[i];
        try {
          ShapeEnv env = make_shape_env(k, dims);
          if (env.grid < 2) return std::nullopt;
          execute(k, env);
          return env;
        } catch (const Error&) {
          return std::nullopt;
        }
      }
      for (long long x = 1; x <= std::min(hi, left - 1); ++x) {
        v[at] = x;
        if (auto r = rec(at + 1, left - x)) return r;
      }
      return std::nullopt;
    };
    if (auto r = rec(0, total)) return *r;
    if (syms.empty()) break;
  }
  // no binding launches two threads: fall back to the smallest valid one
  std::map<std::string, long long> dims;
  for (const auto& s : syms) dims[s] = k.block_size;
  return make_shape_env(k, dims);
}

TensorValues<Number> interpret(const kir::KernelModule& k, const ShapeEnv& env, const TensorValues<Number>& inputs,
                               const ExecOptions& opts) {
  return interpret_in<ExactDomain>(k, env, inputs, opts);
}

TensorValues<double> interpret(const kir::KernelModule& k, const ShapeEnv& env, const TensorValues<double>& inputs,
                               const ExecOptions& opts) {
  return interpret_in<DoubleDomain>(k, env, inputs, opts);
}

nlohmann::json to_json(const LiftSpec& spec) {
  nlohmann::json j = nlohmann::json::object();
  auto naming = spec.naming();
  for (const auto& t : spec.outputs) {
    auto arr = nlohmann::json::array();
    for (auto e : t.elems) arr.push_back(sym::to_string(e, naming));
    j[t.name] = arr;
  }
  return j;
}

}  // namespace vlift
