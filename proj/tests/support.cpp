#include "support.hpp"

#include "vlift/egraph.hpp"
#include "vlift/error.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

namespace vlift::testing {

std::string corpus_file(const std::string& name) { return std::string(VLIFT_CORPUS_DIR) + "/" + name + ".klift"; }
std::string test_kernel(const std::string& name) { return std::string(VLIFT_TEST_KERNELS) + "/" + name + ".klift"; }

Rational random_rational(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_int_distribution<long long> d(static_cast<long long>(std::ceil(lo * 100)),
                                             static_cast<long long>(std::floor(hi * 100)));
  return Rational(d(rng), 100);
}

bool numbers_close(const Number& a, const Number& b, double tol) {
  if (a.exact() && b.exact()) return a.rational() == b.rational();
  double x = a.to_double(), y = b.to_double();
  if (x == y) return true;
  return std::fabs(x - y) <= tol * std::max({1.0, std::fabs(x), std::fabs(y)});
}

std::map<std::string, tf::SymTensor> symbolic_inputs(const LiftSpec& spec) {
  std::map<std::string, tf::SymTensor> out;
  for (const auto& in : spec.inputs) out[in.name] = tf::SymTensor{tf::Shape(in.dims.begin(), in.dims.end()), in.elems};
  return out;
}

namespace {

bool uses_partial(const kir::Expr& e) {
  if (e.kind == kir::ExprKind::MathFn && (e.fn == sym::FnName::Log || e.fn == sym::FnName::Sqrt)) return true;
  for (const auto& a : e.args)
    if (uses_partial(*a)) return true;
  return false;
}

bool kernel_uses_partial(const kir::KernelModule& k) {
  for (const auto& s : k.body)
    if (uses_partial(*s.value) || (s.address && uses_partial(*s.address))) return true;
  return false;
}

}  // namespace

TensorValues<Number> random_inputs(const kir::KernelModule& k, const ShapeEnv& env, std::mt19937_64& rng) {
  bool positive = kernel_uses_partial(k);
  TensorValues<Number> in;
  for (auto idx : k.inputs()) {
    const auto& p = k.param(idx);
    long long n = p.is_tensor() ? env.tensor_size(p) : 1;
    bool pos = positive || p.positive;
    std::vector<Number> v;
    for (long long i = 0; i < n; ++i) v.emplace_back(random_rational(rng, pos ? 0.1 : -2, pos ? 4.1 : 2));
    in[idx] = std::move(v);
  }
  return in;
}

PropertyResult executor_soundness(const kir::KernelModule& k, int trials, uint64_t seed) {
  PropertyResult res;
  ShapeEnv env = default_shape(k);
  LiftSpec spec = execute(k, env);
  std::mt19937_64 rng(seed);
  // domain errors are redrawn, up to 10x the requested trials
  for (int t = 0; t < 10 * trials && res.checked < trials; ++t) {
    auto in = random_inputs(k, env, rng);
    sym::Binding b;
    for (const auto& [param, values] : in)
      for (size_t i = 0; i < values.size(); ++i) b[{param, static_cast<uint32_t>(i)}] = values[i];
    TensorValues<Number> out;
    try {
      out = interpret(k, env, in);
    } catch (const DomainError&) {
      continue;
    }
    ++res.checked;
    for (const auto& o : spec.outputs) {
      const auto& concrete = out.at(o.param);
      for (size_t i = 0; i < o.elems.size(); ++i) {
        Number s = sym::substitute(o.elems[i], b);
        if (!numbers_close(s, concrete[i])) {
          if (res.failures++ == 0)
            res.first_failure = k.name + " " + o.name + "[" + std::to_string(i) + "]: " + s.to_string() +
                                " vs " + concrete[i].to_string();
        }
      }
    }
  }
  return res;
}

namespace {

void pattern_vars(const SExpr& e, std::set<std::string>& out) {
  if (e.is_atom()) {
    if (!e.atom.empty() && e.atom[0] == '?') out.insert(e.atom);
    return;
  }
  for (const auto& k : e.list) pattern_vars(k, out);
}

SExpr strip_vars(const SExpr& e) {
  if (e.is_atom()) return !e.atom.empty() && e.atom[0] == '?' ? SExpr("v_" + e.atom.substr(1)) : e;
  std::vector<SExpr> kids;
  for (const auto& k : e.list) kids.push_back(strip_vars(k));
  return SExpr::make_list(kids);
}

}  // namespace

PropertyResult rule_soundness(const simp::RewriteRule& r, int bindings, double tol, uint64_t seed) {
  PropertyResult res;
  std::set<std::string> vars;
  pattern_vars(r.lhs, vars);
  std::map<std::string, std::set<std::string>> guards;
  for (const auto& g : r.guards) guards[g.var].insert(g.pred);
  tf::Formula lhs = tf::from_sexpr(strip_vars(r.lhs));
  tf::Formula rhs = tf::from_sexpr(strip_vars(r.rhs));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> any(-2, 2), pos(0.05, 3), sign(0, 1);
  for (int t = 0; t < bindings; ++t) {
    std::map<std::string, tf::Tensor<double>> in;
    for (const auto& v : vars) {
      const auto& g = guards[v];
      size_t n = g.count("lastdim1") || g.count("const") ? 1 : 4;
      tf::Tensor<double> x{{static_cast<long long>(n)}, std::vector<double>(n)};
      double c = any(rng);
      for (auto& e : x.data) {
        if (g.count("positive")) {
          e = pos(rng);
        } else if (g.count("nonzero")) {
          e = pos(rng) * (sign(rng) < 0.5 ? -1 : 1);
        } else {
          e = g.count("const") ? c : any(rng);
        }
      }
      in["v_" + v.substr(1)] = std::move(x);
    }
    tf::Tensor<double> a, b;
    try {
      a = tf::eval_double(lhs, in);
      b = tf::eval_double(rhs, in);
    } catch (const DomainError& e) {
      if (res.failures++ == 0) res.first_failure = r.name + ": domain error " + e.what();
      continue;
    }
    if (b.shape != a.shape) b = tf::materialize(b, a.shape);
    ++res.checked;
    for (size_t i = 0; i < a.data.size(); ++i) {
      double x = a.data[i], y = b.data[i];
      bool ok = std::isfinite(x) && std::isfinite(y) && std::fabs(x - y) <= tol * std::max(1.0, std::fabs(x));
      if (!ok && res.failures++ == 0) {
        std::ostringstream os;
        os.precision(17);
        os << r.name << ": " << x << " vs " << y;
        res.first_failure = os.str();
      }
    }
  }
  return res;
}

PropertyResult congruence_throughout(const tf::Formula& f, const tf::ShapeMap& shapes) {
  PropertyResult res;
  eg::EGraph g(shapes);
  g.add_formula(f);
  simp::saturate(g, simp::default_rules(), {}, [&](const eg::EGraph& h) {
    ++res.checked;
    if (!h.congruent() && res.failures++ == 0) res.first_failure = "congruence broken after rebuild " + std::to_string(res.checked);
  });
  return res;
}

PropertyResult vc_bruteforce(const kir::KernelModule& k, const tf::Formula& f, const std::vector<long long>& lengths,
                             int trials, uint64_t seed) {
  PropertyResult res;
  auto syms = k.shape_symbols();
  auto ins = k.inputs();
  std::mt19937_64 rng(seed);
  for (long long len : lengths) {
    std::optional<ShapeEnv> env;
    if (syms.size() == 1) {
      for (long long v = 1; v <= len && !env; ++v) {
        try {
          ShapeEnv e = make_shape_env(k, {{syms[0], v}});
          if (e.tensor_size(k.param(ins[0])) == len) {
            execute(k, e);
            env = e;
          }
        } catch (const Error&) {
        }
      }
    }
    if (!env) continue;
    LiftSpec spec = execute(k, *env);
    auto sym_in = symbolic_inputs(spec);
    const auto& out = k.param(k.outputs()[0]);
    auto dims = env->tensor_dims(out);
    tf::Shape want(dims.begin(), dims.end());
    tf::SymTensor value = tf::materialize(tf::eval_sym(f, sym_in), want);
    for (int t = 0; t < trials; ++t) {
      auto in = random_inputs(k, *env, rng);
      sym::Binding b;
      for (const auto& [param, values] : in)
        for (size_t i = 0; i < values.size(); ++i) b[{param, static_cast<uint32_t>(i)}] = values[i];
      std::vector<Number> concrete;
      try {
        concrete = interpret(k, *env, in).at(k.outputs()[0]);
      } catch (const DomainError&) {
        continue;
      }
      ++res.checked;
      for (size_t i = 0; i < concrete.size(); ++i) {
        Number expect = sym::substitute(value.data[i], b);
        if (!numbers_close(expect, concrete[i], 1e-9) && res.failures++ == 0)
          res.first_failure = k.name + " length " + std::to_string(len) + " element " + std::to_string(i) + ": " +
                              expect.to_string() + " vs " + concrete[i].to_string();
      }
    }
  }
  return res;
}

std::vector<GoldenCase> golden_cases() {
  std::ifstream in(std::string(VLIFT_CORPUS_DIR) + "/manifest.json");
  auto m = nlohmann::json::parse(in);
  std::vector<GoldenCase> out;
  for (const auto& e : m.at("kernels")) {
    if (!e.contains("golden")) continue;
    out.push_back({e.at("name"), kir::load_kernel_file(std::string(VLIFT_CORPUS_DIR) + "/" + e.at("file").get<std::string>()),
                   tf::parse_formula(e.at("golden"))});
  }
  return out;
}

}  // namespace vlift::testing
