#include "vlift/smt.hpp"

#include "vlift/error.hpp"

#include <cerrno>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <cstring>
#include <sstream>

#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

namespace vlift::smt {

void Script::declare_const(const std::string& name, const std::string& sort) {
  decls.push_back(L({"declare-const", name, sort}));
}

void Script::declare_fun(const std::string& name, const std::vector<std::string>& args, const std::string& ret) {
  std::vector<SExpr> sorts;
  for (const auto& a : args) sorts.emplace_back(a);
  decls.push_back(L({"declare-fun", name, SExpr::make_list(std::move(sorts)), ret}));
}

std::string Script::str(unsigned timeout_ms) const {
  std::string out;
  for (const auto& c : comments) out += "; " + c + "\n";
  if (timeout_ms > 0) out += "(set-option :timeout " + std::to_string(timeout_ms) + ")\n";
  if (want_model) out += "(set-option :produce-models true)\n";
  out += "(set-logic " + logic + ")\n";
  for (const auto& d : decls) out += d.str() + "\n";
  for (const auto& a : asserts) out += L({"assert", a}).str() + "\n";
  out += "(check-sat)\n";
  if (want_model) out += "(get-model)\n";
  out += "(exit)\n";
  return out;
}

std::string status_name(Status s) {
  switch (s) {
    case Status::Sat: return "sat";
    case Status::Unsat: return "unsat";
    case Status::Unknown: return "unknown";
    case Status::Crash: return "crash";
  }
  return "?";
}

SolverConfig default_solver_config() {
  SolverConfig cfg;
  if (const char* env = std::getenv("VLIFT_SOLVER"); env && *env) cfg.command = env;
  return cfg;
}

std::optional<Rational> parse_value(const SExpr& e) {
  if (e.is_atom()) return parse_decimal(e.atom);
  if (e.headed("-") && e.size() == 2) {
    auto v = parse_value(e[1]);
    if (v) return Rational(-*v);
    return std::nullopt;
  }
  if (e.headed("/") && e.size() == 3) {
    auto n = parse_value(e[1]);
    auto d = parse_value(e[2]);
    if (n && d && *d != 0) return Rational(*n / *d);
  }
  return std::nullopt;
}

Verdict parse_output(const std::string& out) {
  Verdict v;
  std::vector<SExpr> items;
  try {
    items = parse_sexprs(out);
  } catch (const Error& e) {
    v.status = Status::Crash;
    v.reason = std::string("malformed solver output: ") + e.what();
    return v;
  }
  size_t i = 0;
  for (; i < items.size(); ++i) {
    const auto& it = items[i];
    if (it.is_atom() && (it.atom == "sat" || it.atom == "unsat" || it.atom == "unknown")) break;
    if (it.headed("error")) {
      v.status = Status::Crash;
      v.reason = it.size() > 1 ? it[1].atom : "solver error";
      return v;
    }
  }
  if (i == items.size()) {
    v.status = Status::Crash;
    v.reason = "no verdict in solver output";
    return v;
  }
  const std::string& word = items[i].atom;
  v.status = word == "sat" ? Status::Sat : (word == "unsat" ? Status::Unsat : Status::Unknown);
  if (v.status == Status::Unknown) v.reason = "unknown";
  for (size_t j = i + 1; j < items.size(); ++j) {
    const SExpr& m = items[j];
    if (!m.is_list) continue;
    for (const auto& d : m.list) {
      if (!d.headed("define-fun") || d.size() != 5 || !d[2].is_list || d[2].size() != 0) continue;
      if (auto val = parse_value(d[4])) v.model[d[1].atom] = *val;
    }
  }
  return v;
}

namespace {

std::vector<std::string> split_command(const std::string& cmd) {
  std::istringstream in(cmd);
  std::vector<std::string> out;
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

}  // namespace

Verdict check(const Script& s, const SolverConfig& cfg) {
  using clock = std::chrono::steady_clock;
  auto start = clock::now();
  auto argv_s = split_command(cfg.command);
  Verdict v;
  if (argv_s.empty()) {
    v.status = Status::Crash;
    v.reason = "no solver configured";
    return v;
  }
  auto timeout_ms = static_cast<unsigned>(cfg.timeout_s * 1000);
  std::string input = s.str(timeout_ms);

  int in_pipe[2], out_pipe[2], err_pipe[2];
  if (pipe(in_pipe) != 0 || pipe(out_pipe) != 0 || pipe(err_pipe) != 0) throw Error("pipe failed");
  pid_t child = fork();
  if (child < 0) throw Error("fork failed");
  if (child == 0) {
    dup2(in_pipe[0], STDIN_FILENO);
    dup2(out_pipe[1], STDOUT_FILENO);
    dup2(err_pipe[1], STDERR_FILENO);
    for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1], err_pipe[0], err_pipe[1]}) close(fd);
    std::vector<char*> argv;
    for (auto& a : argv_s) argv.push_back(a.data());
    argv.push_back(nullptr);
    execvp(argv[0], argv.data());
    _exit(127);
  }
  close(in_pipe[0]);
  close(out_pipe[1]);
  close(err_pipe[1]);
  fcntl(in_pipe[1], F_SETFL, O_NONBLOCK);
  signal(SIGPIPE, SIG_IGN);

  std::string out, err;
  size_t written = 0;
  int wfd = in_pipe[1];
  bool out_open = true, err_open = true;
  bool timed_out = false;
  auto deadline = start + std::chrono::milliseconds(timeout_ms + 1000);
  while (out_open || err_open) {
    auto now = clock::now();
    if (now >= deadline) {
      timed_out = true;
      break;
    }
    std::vector<pollfd> fds;
    if (out_open) fds.push_back({out_pipe[0], POLLIN, 0});
    if (err_open) fds.push_back({err_pipe[0], POLLIN, 0});
    if (wfd >= 0) fds.push_back({wfd, POLLOUT, 0});
    int left = static_cast<int>(std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count());
    int rc = poll(fds.data(), fds.size(), std::max(left, 1));
    if (rc < 0) {
      if (errno == EINTR) continue;
      break;
    }
    for (const auto& p : fds) {
      if (p.revents == 0) continue;
      if (p.fd == wfd) {
        ssize_t n = write(wfd, input.data() + written, input.size() - written);
        if (n > 0) written += static_cast<size_t>(n);
        if (n < 0 && errno != EAGAIN) written = input.size();
        if (written >= input.size()) {
          close(wfd);
          wfd = -1;
        }
        continue;
      }
      char buf[4096];
      ssize_t n = read(p.fd, buf, sizeof buf);
      if (n <= 0) {
        if (p.fd == out_pipe[0]) out_open = false;
        else err_open = false;
      } else if (p.fd == out_pipe[0]) {
        out.append(buf, static_cast<size_t>(n));
      } else {
        err.append(buf, static_cast<size_t>(n));
      }
    }
  }
  if (wfd >= 0) close(wfd);
  close(out_pipe[0]);
  close(err_pipe[0]);
  int status = 0;
  if (timed_out) kill(child, SIGKILL);
  waitpid(child, &status, 0);
  v.seconds = std::chrono::duration<double>(clock::now() - start).count();

  if (timed_out) {
    v.status = Status::Unknown;
    v.reason = "timeout";
    return v;
  }
  if (WIFEXITED(status) && WEXITSTATUS(status) == 127 && out.empty()) {
    v.status = Status::Crash;
    v.reason = "solver not found: " + argv_s[0];
    return v;
  }
  Verdict parsed = parse_output(out);
  parsed.seconds = v.seconds;
  if (parsed.status == Status::Unknown) {
    // z3 reports its own timeout as "unknown" with reason "timeout" / "canceled"
    if (v.seconds * 1000 >= timeout_ms * 0.95) parsed.reason = "timeout";
  }
  if (parsed.status == Status::Crash && !err.empty()) parsed.reason += ": " + err.substr(0, 200);
  if (parsed.status != Status::Crash && WIFSIGNALED(status)) {
    parsed.status = Status::Crash;
    parsed.reason = "solver killed by signal " + std::to_string(WTERMSIG(status));
  }
  return parsed;
}

SExpr real(const Rational& q) { return parse_sexpr(to_smt_real(q)); }

SExpr integer(long long v) {
  if (v < 0) return L({"-", std::to_string(-v)});
  return SExpr(std::to_string(v));
}

std::string uf_name(sym::FnName f) { return "uf_" + sym::fn_name(f); }

SExpr encode(sym::Term t, const std::function<SExpr(sym::ElemRef)>& leaf) {
  using sym::Kind;
  auto kids = [&](const char* head) {
    std::vector<SExpr> xs{SExpr(head)};
    for (auto k : t->kids()) xs.push_back(encode(k, leaf));
    return SExpr::make_list(std::move(xs));
  };
  switch (t->kind()) {
    case Kind::Const: return real(t->value());
    case Kind::Elem: return leaf(t->elem());
    case Kind::Add: return kids("+");
    case Kind::Mul: return kids("*");
    case Kind::Div: return kids("/");
    case Kind::Neg: return L({"-", encode(t->kid(0), leaf)});
    case Kind::Fn: return L({uf_name(t->fn()), encode(t->kid(0), leaf)});
    case Kind::Ite: return kids("ite");
    case Kind::Cmp: {
      const char* op = "=";
      switch (t->rel()) {
        case sym::Rel::Gt: op = ">"; break;
        case sym::Rel::Ge: op = ">="; break;
        case sym::Rel::Lt: op = "<"; break;
        case sym::Rel::Le: op = "<="; break;
        case sym::Rel::Eq: op = "="; break;
      }
      return kids(op);
    }
  }
  throw Error("cannot encode term");
}

SExpr conj(std::vector<SExpr> xs) {
  if (xs.empty()) return SExpr("true");
  if (xs.size() == 1) return xs[0];
  xs.insert(xs.begin(), SExpr("and"));
  return SExpr::make_list(std::move(xs));
}

SExpr disj(std::vector<SExpr> xs) {
  if (xs.empty()) return SExpr("false");
  if (xs.size() == 1) return xs[0];
  xs.insert(xs.begin(), SExpr("or"));
  return SExpr::make_list(std::move(xs));
}

QfValue eval_qf(const SExpr& e, const std::map<std::string, Rational>& env) {
  auto num = [&](const SExpr& x) {
    auto v = eval_qf(x, env);
    if (!std::holds_alternative<Rational>(v)) throw Error("expected a number: " + x.str());
    return std::get<Rational>(v);
  };
  auto boolean = [&](const SExpr& x) {
    auto v = eval_qf(x, env);
    if (!std::holds_alternative<bool>(v)) throw Error("expected a boolean: " + x.str());
    return std::get<bool>(v);
  };
  if (e.is_atom()) {
    if (e.atom == "true") return true;
    if (e.atom == "false") return false;
    if (auto q = parse_decimal(e.atom)) return *q;
    auto it = env.find(e.atom);
    if (it == env.end()) throw Error("unbound symbol " + e.atom);
    return it->second;
  }
  if (e.size() == 0 || !e[0].is_atom()) throw Error("bad expression " + e.str());
  const std::string& h = e[0].atom;
  size_t n = e.size();
  if (h == "+" || h == "*") {
    Rational acc = h == "+" ? 0 : 1;
    for (size_t i = 1; i < n; ++i) acc = h == "+" ? Rational(acc + num(e[i])) : Rational(acc * num(e[i]));
    return acc;
  }
  if (h == "-") {
    if (n == 2) return Rational(-num(e[1]));
    Rational acc = num(e[1]);
    for (size_t i = 2; i < n; ++i) acc -= num(e[i]);
    return acc;
  }
  if (h == "/") {
    Rational acc = num(e[1]);
    for (size_t i = 2; i < n; ++i) {
      Rational d = num(e[i]);
      if (d == 0) throw DomainError("division by zero");
      acc /= d;
    }
    return acc;
  }
  if (h == "ite") return boolean(e[1]) ? eval_qf(e[2], env) : eval_qf(e[3], env);
  if (h == "not") return !boolean(e[1]);
  if (h == "and" || h == "or") {
    bool acc = h == "and";
    for (size_t i = 1; i < n; ++i) acc = h == "and" ? (acc && boolean(e[i])) : (acc || boolean(e[i]));
    return acc;
  }
  if (h == "=>") return !boolean(e[1]) || boolean(e[2]);
  if (h == "<" || h == "<=" || h == ">" || h == ">=" || h == "=" || h == "distinct") {
    if (h == "distinct") {
      for (size_t i = 1; i < n; ++i)
        for (size_t j = i + 1; j < n; ++j)
          if (eval_qf(e[i], env) == eval_qf(e[j], env)) return false;
      return true;
    }
    for (size_t i = 1; i + 1 < n; ++i) {
      if (h == "=") {
        if (eval_qf(e[i], env) != eval_qf(e[i + 1], env)) return false;
        continue;
      }
      Rational a = num(e[i]), b = num(e[i + 1]);
      bool ok = h == "<" ? a < b : h == "<=" ? a <= b : h == ">" ? a > b : a >= b;
      if (!ok) return false;
    }
    return true;
  }
  throw Error("unsupported operator in quantifier-free evaluation: " + h);
}

}  // namespace vlift::smt
