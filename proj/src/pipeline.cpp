#include "vlift/pipeline.hpp"

#include "vlift/error.hpp"
#include "vlift/simplifier.hpp"
#include "vlift/synthesizer.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

namespace vlift::pipeline {

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

bool uses_partial_fn(const kir::Expr& e) {
  if (e.kind == kir::ExprKind::MathFn && (e.fn == sym::FnName::Log || e.fn == sym::FnName::Sqrt)) return true;
  return std::any_of(e.args.begin(), e.args.end(), [](const kir::ExprPtr& a) { return uses_partial_fn(*a); });
}

InputRange pick_range(const kir::KernelModule& k, std::optional<InputRange> range) {
  if (range) return *range;
  for (const auto& s : k.body)
    if ((s.value && uses_partial_fn(*s.value)) || (s.address && uses_partial_fn(*s.address))) return {0.1, 4.1};
  return {};
}

std::string shape_text(const ShapeEnv& env) {
  std::string s;
  for (const auto& [k, v] : env.dims) s += (s.empty() ? "" : ", ") + k + "=" + std::to_string(v);
  return s;
}

std::string smt_verdict(smt::Status s) {
  switch (s) {
    case smt::Status::Unsat: return "unsat";
    case smt::Status::Sat: return "sat";
    default: return "unknown";
  }
}

DiffResult merge(DiffResult a, const DiffResult& b) {
  a.pass = a.pass && b.pass;
  a.trials = std::min(a.trials, b.trials);
  a.skipped += b.skipped;
  a.max_rel_error = std::max(a.max_rel_error, b.max_rel_error);
  a.notes.insert(a.notes.end(), b.notes.begin(), b.notes.end());
  return a;
}

}  // namespace

double relative_error(double a, double b) {
  if (a == b) return 0;
  if (std::isnan(a) || std::isnan(b)) return INFINITY;
  double d = std::max(std::fabs(a), std::fabs(b));
  return std::fabs(a - b) / d;
}

DiffResult differential_test(const kir::KernelModule& k, const tf::Formula& f, int trials, double tol,
                             uint64_t seed, std::optional<InputRange> range) {
  DiffResult res;
  InputRange r = pick_range(k, range);
  ShapeEnv env = default_shape(k);
  auto outs = k.outputs();
  if (outs.empty()) throw Error("kernel has no output");
  const kir::Param& out = k.param(outs[0]);
  auto out_dims = env.tensor_dims(out);
  tf::Shape want(out_dims.begin(), out_dims.end());
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> sample(r.lo, r.hi);
  std::uniform_real_distribution<double> positive(0.1, r.hi > 0.1 ? r.hi : 2.0);

  for (int t = 0; t < trials; ++t) {
    bool done = false;
    for (int attempt = 0; attempt < 10 && !done; ++attempt) {
      TensorValues<double> kin;
      std::map<std::string, tf::Tensor<double>> fin;
      for (auto idx : k.inputs()) {
        const auto& p = k.param(idx);
        tf::Tensor<double> v;
        if (p.is_tensor()) {
          auto dims = env.tensor_dims(p);
          v.shape.assign(dims.begin(), dims.end());
          v.data.resize(static_cast<size_t>(env.tensor_size(p)));
          for (auto& x : v.data) x = sample(rng);
        } else {
          v.data = {p.positive ? positive(rng) : sample(rng)};
        }
        kin[idx] = v.data;
        fin[p.name] = std::move(v);
      }
      std::vector<double> got, ref;
      try {
        got = interpret(k, env, kin).at(outs[0]);
        auto value = tf::eval_double(f, fin);
        ref = tf::materialize(value, want).data;
      } catch (const DomainError&) {
        continue;
      }
      if (got.size() != ref.size()) throw Error("formula and kernel disagree on the output size");
      for (size_t i = 0; i < got.size(); ++i) res.max_rel_error = std::max(res.max_rel_error, relative_error(got[i], ref[i]));
      done = true;
    }
    if (done) {
      ++res.trials;
    } else {
      ++res.skipped;
      res.notes.push_back("trial " + std::to_string(t) + " skipped after 10 domain errors");
    }
  }
  res.pass = res.trials > 0 && res.max_rel_error <= tol;
  return res;
}

LiftReport lift(const kir::KernelModule& k, const LiftFlags& flags) {
  auto t0 = Clock::now();
  LiftReport rep;
  rep.kernel = k.name;
  auto finish = [&]() -> LiftReport {
    rep.seconds = since(t0);
    return rep;
  };

  smt::SolverConfig solver = smt::default_solver_config();
  if (!flags.solver.empty()) solver.command = flags.solver;

  LiftSpec spec;
  uint32_t output = 0;
  try {
    ShapeEnv env = default_shape(k);
    rep.shape = shape_text(env);
    spec = execute(k, env);
    output = k.outputs().at(0);
  } catch (const std::exception& e) {
    rep.error = e.what();
    rep.synthesis.failure = "symbolic execution failed";
    return finish();
  }

  synth::SynthConfig sc;
  sc.time_budget_s = flags.synth_timeout_s;
  sc.enable_topdown = flags.topdown;
  sc.enable_type_prune = flags.prune;
  sc.enable_value_prune = flags.prune;
  sc.solver = solver;
  auto sr = synth::synthesize(spec, 0, sc);
  rep.synthesis.seconds = sr.seconds;
  rep.synthesis.phase = synth::phase_name(sr.phase);
  rep.synthesis.programs_enumerated = sr.stats.programs_enumerated;
  rep.synthesis.failure = sr.failure;
  if (!sr.formula) return finish();
  const tf::Formula& f = *sr.formula;
  rep.synthesis.success = true;
  rep.synthesis.formula = tf::to_infix(f);
  rep.synthesis.prefix = tf::to_prefix(f);

  bool verified = false;
  if (flags.verify) {
    verify::VerifyConfig vc;
    vc.solver = solver;
    vc.vc_timeout_s = flags.vc_timeout_s;
    vc.total_budget_s = flags.verify_budget_s;
    vc.use_pattern = flags.verify_pattern;
    auto vr = verify::verify(k, spec, output, f, vc);
    auto& v = rep.verification;
    v.attempted = true;
    v.outcome = verify::outcome_name(vr.outcome);
    v.reason = vr.reason;
    v.pattern = vr.pattern;
    v.a = vr.a;
    v.b = vr.b;
    v.warnings = vr.warnings;
    v.seconds = vr.seconds;
    for (const auto& c : vr.vcs) v.vcs.push_back({c.id, smt_verdict(c.status), c.seconds});
    verified = vr.outcome == verify::Outcome::Verified;
  }

  tf::Formula final = f;
  if (flags.simplify) {
    simp::SimplifyOptions so;
    for (const auto& in : spec.inputs) {
      so.shapes[in.name] = tf::Shape(in.dims.begin(), in.dims.end());
      if (in.positive) so.positive_inputs.insert(in.name);
    }
    so.trusted = verified;
    try {
      final = simp::simplify(f, so).formula;
      rep.simplified = tf::to_infix(final);
      rep.simplified_prefix = tf::to_prefix(final);
    } catch (const std::exception& e) {
      rep.error = std::string("simplification failed: ") + e.what();
    }
  }

  if (flags.diff_trials > 0) {
    try {
      DiffResult d = differential_test(k, f, flags.diff_trials, flags.diff_tol, flags.seed, flags.range);
      if (rep.simplified) d = merge(d, differential_test(k, final, flags.diff_trials, flags.diff_tol, flags.seed, flags.range));
      rep.differential = d;
    } catch (const std::exception& e) {
      DiffResult d;
      d.notes.push_back(e.what());
      rep.differential = d;
    }
  }
  return finish();
}

LiftReport lift_file(const std::string& path, const LiftFlags& flags) {
  return lift(kir::load_kernel_file(path), flags);
}

nlohmann::ordered_json LiftReport::to_json(bool times) const {
  using J = nlohmann::ordered_json;
  J j;
  j["kernel"] = kernel;
  j["shape"] = shape;
  if (!error.empty()) j["error"] = error;
  J s;
  s["success"] = synthesis.success;
  s["formula"] = synthesis.success ? J(synthesis.formula) : J(nullptr);
  s["prefix"] = synthesis.success ? J(synthesis.prefix) : J(nullptr);
  s["phase"] = synthesis.phase;
  s["programs_enumerated"] = synthesis.programs_enumerated;
  if (!synthesis.failure.empty()) s["failure"] = synthesis.failure;
  if (times) s["time"] = synthesis.seconds;
  j["synthesis"] = s;
  if (verification.attempted) {
    J v;
    v["outcome"] = verification.outcome;
    if (!verification.reason.empty()) v["reason"] = verification.reason;
    v["pattern"] = verification.pattern;
    v["template"] = {{"a", verification.a}, {"b", verification.b}};
    J vcs = J::array();
    for (const auto& c : verification.vcs) {
      J e{{"id", c.id}, {"verdict", c.verdict}};
      if (times) e["time"] = c.seconds;
      vcs.push_back(e);
    }
    v["vcs"] = vcs;
    if (!verification.warnings.empty()) v["warnings"] = verification.warnings;
    if (times) v["time"] = verification.seconds;
    j["verification"] = v;
  } else {
    j["verification"] = nullptr;
  }
  j["simplified"] = simplified ? J(*simplified) : J(nullptr);
  if (differential) {
    J d;
    d["pass"] = differential->pass;
    d["trials"] = differential->trials;
    d["skipped"] = differential->skipped;
    d["max_rel_error"] = differential->max_rel_error;
    if (!differential->notes.empty()) d["notes"] = differential->notes;
    j["differential"] = d;
  } else {
    j["differential"] = nullptr;
  }
  if (times) j["time"] = seconds;
  return j;
}

std::vector<CorpusEntry> load_corpus(const std::string& dir) {
  namespace fs = std::filesystem;
  fs::path root = fs::absolute(dir);
  std::ifstream in(root / "manifest.json");
  if (!in) throw Error("cannot read " + (root / "manifest.json").string());
  auto m = nlohmann::json::parse(in);
  std::vector<CorpusEntry> out;
  for (const auto& e : m.at("kernels")) {
    CorpusEntry c;
    c.name = e.at("name");
    c.file = (root / e.at("file").get<std::string>()).string();
    if (e.contains("golden")) c.golden = e["golden"].get<std::string>();
    c.expect_synth = e.value("expect_synth", true);
    c.expect_verify = e.value("expect_verify", std::string("Verified"));
    c.expected_failure = e.value("expected_failure", false);
    if (e.contains("range")) c.range = InputRange{e["range"].at(0), e["range"].at(1)};
    c.note = e.value("note", std::string());
    kir::load_kernel_file(c.file);
    if (c.golden) tf::parse_formula(*c.golden);
    out.push_back(std::move(c));
  }
  return out;
}

CorpusSummary run_corpus(const std::vector<CorpusEntry>& entries, const LiftFlags& flags, unsigned workers) {
  CorpusSummary sum;
  sum.entries = entries;
  sum.reports.resize(entries.size());
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  std::atomic<size_t> next{0};
  auto work = [&] {
    for (size_t i; (i = next++) < entries.size();) {
      LiftFlags fl = flags;
      if (entries[i].range) fl.range = entries[i].range;
      try {
        sum.reports[i] = lift_file(entries[i].file, fl);
      } catch (const std::exception& e) {
        sum.reports[i].kernel = entries[i].name;
        sum.reports[i].error = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < std::min<size_t>(workers, entries.size()); ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  for (const auto& r : sum.reports) {
    sum.synthesized += r.synthesis.success;
    sum.verified += r.verification.outcome == "Verified";
  }
  return sum;
}

nlohmann::ordered_json CorpusSummary::to_json(bool times) const {
  nlohmann::ordered_json j;
  j["synthesized"] = synthesized;
  j["verified"] = verified;
  j["total"] = reports.size();
  auto arr = nlohmann::ordered_json::array();
  for (size_t i = 0; i < reports.size(); ++i) {
    auto r = reports[i].to_json(times);
    r["name"] = entries[i].name;
    if (entries[i].golden && reports[i].simplified_prefix)
      r["golden_match"] = matches_golden(tf::parse_formula(*reports[i].simplified_prefix), tf::parse_formula(*entries[i].golden));
    arr.push_back(std::move(r));
  }
  j["kernels"] = arr;
  return j;
}

std::string CorpusSummary::table() const {
  std::ostringstream os;
  auto pad = [](std::string s, size_t w) {
    if (s.size() < w) s.append(w - s.size(), ' ');
    return s;
  };
  os << pad("kernel", 14) << pad("S", 3) << pad("V", 10) << pad("time", 8) << "formula\n";
  for (size_t i = 0; i < reports.size(); ++i) {
    const auto& r = reports[i];
    char t[32];
    std::snprintf(t, sizeof t, "%.2f", r.seconds);
    std::string v = r.verification.attempted ? r.verification.outcome : "-";
    std::string f = r.simplified ? *r.simplified : (r.synthesis.success ? r.synthesis.formula : r.synthesis.failure);
    os << pad(entries[i].name, 14) << pad(r.synthesis.success ? "y" : "n", 3) << pad(v, 10) << pad(t, 8) << f << "\n";
  }
  os << "synthesized " << synthesized << "/" << reports.size() << ", verified " << verified << "\n";
  return os.str();
}

bool matches_golden(const tf::Formula& f, const tf::Formula& golden) {
  return tf::to_prefix(tf::sort_commutative(f)) == tf::to_prefix(tf::sort_commutative(golden));
}

}  // namespace vlift::pipeline
