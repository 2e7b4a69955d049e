#include "qctn/optimizers.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <deque>
#include <fstream>
#include <map>
#include <random>
#include <tuple>

namespace qctn {

namespace {

using Clock = std::chrono::steady_clock;

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

double norm_inf(const std::vector<double>& a) {
  double m = 0.0;
  for (double x : a) m = std::max(m, std::abs(x));
  return m;
}

bool relative_change_below(double prev, double cur, double tol) {
  const double denom = std::abs(prev) > 0.0 ? std::abs(prev) : 1.0;
  return std::abs(cur - prev) / denom < tol;
}

struct Point {
  double alpha = 0.0;
  double f = 0.0;
  double dphi = 0.0;
  std::vector<double> x, g;
};

class LineSearch {
 public:
  LineSearch(const FlatFunction& f, const std::vector<double>& x, double fx, const std::vector<double>& p, double dphi0,
             double c1, double c2)
      : f_(f), x_(x), fx_(fx), p_(p), dphi0_(dphi0), c1_(c1), c2_(c2) {}

  std::optional<Point> run(double alpha0) {
    Point prev{0.0, fx_, dphi0_, x_, {}};
    double alpha = alpha0;
    for (int i = 0; i < 25; ++i) {
      Point cur = eval(alpha);
      if (!std::isfinite(cur.f)) {
        alpha *= 0.5;
        continue;
      }
      if (cur.f > fx_ + c1_ * alpha * dphi0_ || (i > 0 && cur.f >= prev.f)) return zoom(prev, cur);
      if (std::abs(cur.dphi) <= -c2_ * dphi0_) return cur;
      if (cur.dphi >= 0.0) return zoom(cur, prev);
      prev = std::move(cur);
      alpha *= 2.0;
    }
    return prev.alpha > 0.0 ? std::optional<Point>(prev) : std::nullopt;
  }

 private:
  Point eval(double alpha) {
    Point pt;
    pt.alpha = alpha;
    pt.x = x_;
    for (std::size_t i = 0; i < x_.size(); ++i) pt.x[i] += alpha * p_[i];
    pt.g.assign(x_.size(), 0.0);
    pt.f = f_(pt.x, pt.g);
    pt.dphi = dot(pt.g, p_);
    return pt;
  }

  std::optional<Point> zoom(Point lo, Point hi) {
    for (int j = 0; j < 30; ++j) {
      const double a = lo.alpha, b = hi.alpha;
      const double width = std::abs(b - a);
      if (width < 1e-14 * std::max(1.0, std::abs(a))) break;
      double trial = cubic_min(lo, hi);
      const double low = std::min(a, b) + 0.1 * width, high = std::max(a, b) - 0.1 * width;
      if (!std::isfinite(trial) || trial < low || trial > high) trial = 0.5 * (a + b);
      Point cur = eval(trial);
      if (!std::isfinite(cur.f) || cur.f > fx_ + c1_ * trial * dphi0_ || cur.f >= lo.f) {
        hi = std::move(cur);
      } else {
        if (std::abs(cur.dphi) <= -c2_ * dphi0_) return cur;
        if (cur.dphi * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
        lo = std::move(cur);
      }
    }
    // lo always satisfies sufficient decrease; accept it if it moved.
    if (lo.alpha > 0.0 && lo.f < fx_) return lo;
    return std::nullopt;
  }

  static double cubic_min(const Point& p, const Point& q) {
    const double d1 = p.dphi + q.dphi - 3.0 * (p.f - q.f) / (p.alpha - q.alpha);
    const double disc = d1 * d1 - p.dphi * q.dphi;
    if (disc < 0.0) return std::nan("");
    const double d2 = std::copysign(std::sqrt(disc), q.alpha - p.alpha);
    return q.alpha - (q.alpha - p.alpha) * (q.dphi + d2 - d1) / (q.dphi - p.dphi + 2.0 * d2);
  }

  const FlatFunction& f_;
  const std::vector<double>& x_;
  double fx_;
  const std::vector<double>& p_;
  double dphi0_, c1_, c2_;
};

void maybe_checkpoint(const OptimizerConfig& cfg, const AnsatzDescriptor& a, const OptimizationTrace& trace, bool final) {
  if (cfg.checkpoint_prefix.empty()) return;
  const int it = trace.iterations();
  if (!final && (cfg.checkpoint_every <= 0 || it % cfg.checkpoint_every != 0)) return;
  save_descriptor(a, cfg.checkpoint_prefix + ".json");
  write_trace_csv(trace, cfg.checkpoint_prefix + "_trace.csv");
}

// Parity of the layer index decides a brick-wall layer's positions, so
// layers can only be shifted by even amounts in those families.
bool parity_sensitive(Family f) { return f == Family::qmps_b || f == Family::qmps_m || f == Family::qmera_b; }

}  // namespace

std::string method_name(Method m) {
  switch (m) {
    case Method::local_sweep: return "local-sweep";
    case Method::cg: return "cg";
    case Method::lbfgs: return "lbfgs";
  }
  return "";
}

Method parse_method(const std::string& name) {
  for (Method m : {Method::local_sweep, Method::cg, Method::lbfgs}) {
    if (method_name(m) == name) return m;
  }
  throw std::invalid_argument("unknown optimizer method '" + name + "'");
}

std::string status_name(Status s) {
  switch (s) {
    case Status::converged: return "converged";
    case Status::budget_exhausted: return "budget_exhausted";
    case Status::line_search_failure: return "line_search_failure";
  }
  return "";
}

FlatResult minimize_flat(const FlatFunction& f, std::vector<double> x, const OptimizerConfig& cfg, const IterationHook& hook) {
  if (!(cfg.rel_energy_tol > 0.0)) throw std::invalid_argument("rel_energy_tol must be positive");
  if (cfg.method == Method::local_sweep) throw std::invalid_argument("minimize_flat needs cg or lbfgs");
  const auto start = Clock::now();
  auto seconds = [&] { return std::chrono::duration<double>(Clock::now() - start).count(); };
  const bool lbfgs = cfg.method == Method::lbfgs;
  const double c1 = 1e-4, c2 = lbfgs ? 0.9 : 0.1;

  FlatResult res;
  std::vector<double> g(x.size(), 0.0);
  double fx = f(x, g);
  res.trace.entries.push_back({0, fx, norm2(g), seconds()});
  res.trace.status = Status::budget_exhausted;
  if (hook) hook(x, res.trace);

  std::deque<std::pair<std::vector<double>, std::vector<double>>> memory;  // (s, y)
  std::vector<double> p(x.size()), g_prev;
  double alpha_prev = 0.0, slope_prev = 0.0;
  bool restart = true;

  for (int it = 1; it <= cfg.max_iterations; ++it) {
    if (norm_inf(g) == 0.0) {
      res.trace.status = Status::converged;
      break;
    }
    // Search direction.
    if (lbfgs) {
      std::vector<double> q = g;
      std::vector<double> rho(memory.size()), al(memory.size());
      for (std::size_t i = memory.size(); i-- > 0;) {
        rho[i] = 1.0 / dot(memory[i].second, memory[i].first);
        al[i] = rho[i] * dot(memory[i].first, q);
        for (std::size_t k = 0; k < q.size(); ++k) q[k] -= al[i] * memory[i].second[k];
      }
      if (!memory.empty()) {
        const double gamma = dot(memory.back().first, memory.back().second) / dot(memory.back().second, memory.back().second);
        for (double& v : q) v *= gamma;
      }
      for (std::size_t i = 0; i < memory.size(); ++i) {
        const double b = rho[i] * dot(memory[i].second, q);
        for (std::size_t k = 0; k < q.size(); ++k) q[k] += (al[i] - b) * memory[i].first[k];
      }
      for (std::size_t k = 0; k < q.size(); ++k) p[k] = -q[k];
    } else {
      double beta = 0.0;
      if (!restart && !g_prev.empty()) {
        double num = 0.0;
        for (std::size_t k = 0; k < g.size(); ++k) num += g[k] * (g[k] - g_prev[k]);
        beta = std::max(0.0, num / dot(g_prev, g_prev));
      }
      for (std::size_t k = 0; k < p.size(); ++k) p[k] = -g[k] + beta * p[k];
    }
    double slope = dot(g, p);
    if (!(slope < 0.0)) {
      memory.clear();
      for (std::size_t k = 0; k < p.size(); ++k) p[k] = -g[k];
      slope = dot(g, p);
    }
    double alpha0;
    if (lbfgs && !memory.empty()) alpha0 = 1.0;
    else if (!lbfgs && alpha_prev > 0.0) alpha0 = std::min(1.0, alpha_prev * slope_prev / slope * 1.01);
    else alpha0 = std::min(1.0, 0.1 / norm_inf(g));

    auto found = LineSearch(f, x, fx, p, slope, c1, c2).run(alpha0);
    if (!found) {
      // Fall back to steepest descent with half the trial step.
      memory.clear();
      for (std::size_t k = 0; k < p.size(); ++k) p[k] = -g[k];
      slope = dot(g, p);
      found = LineSearch(f, x, fx, p, slope, c1, c2).run(0.5 * alpha0);
      if (!found) {
        res.trace.status = Status::line_search_failure;
        break;
      }
      restart = true;
    } else {
      restart = false;
    }
    Point& pt = *found;
    std::vector<double> s(x.size()), y(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) {
      s[k] = pt.x[k] - x[k];
      y[k] = pt.g[k] - g[k];
    }
    if (lbfgs && dot(s, y) > 1e-12 * norm2(s) * norm2(y)) {
      memory.emplace_back(std::move(s), std::move(y));
      if (static_cast<int>(memory.size()) > std::max(1, cfg.lbfgs_memory)) memory.pop_front();
    }
    g_prev = g;
    alpha_prev = pt.alpha;
    slope_prev = slope;
    const double f_old = fx;
    x = std::move(pt.x);
    g = std::move(pt.g);
    fx = pt.f;
    if (!lbfgs && it % static_cast<int>(std::max<std::size_t>(x.size(), 1)) == 0) restart = true;
    res.trace.entries.push_back({it, fx, norm2(g), seconds()});
    if (hook) hook(x, res.trace);
    if (relative_change_below(f_old, fx, cfg.rel_energy_tol)) {
      res.trace.status = Status::converged;
      break;
    }
  }
  res.x = std::move(x);
  return res;
}

OptimizationResult gradient_minimize(const AnsatzDescriptor& a, const Objective& obj, const OptimizerConfig& cfg) {
  if (cfg.method == Method::local_sweep) throw std::invalid_argument("gradient_minimize needs cg or lbfgs");
  AnsatzDescriptor work = a;
  const long evals_before = obj.evaluations->load();
  const FlatFunction f = [&](const std::vector<double>& x, std::vector<double>& grad) {
    work.set_flat_parameters(x);
    ObjectiveValue v = evaluate(work, obj, true, cfg.path);
    grad = std::move(*v.gradient);
    return v.value;
  };
  const IterationHook hook = [&](const std::vector<double>& x, const OptimizationTrace& trace) {
    if (cfg.checkpoint_prefix.empty()) return;
    AnsatzDescriptor snap = a;
    snap.set_flat_parameters(x);
    maybe_checkpoint(cfg, snap, trace, false);
  };
  FlatResult r = minimize_flat(f, a.flat_parameters(), cfg, hook);
  OptimizationResult out{a, std::move(r.trace)};
  out.ansatz.set_flat_parameters(r.x);
  out.trace.evaluations = obj.evaluations->load() - evals_before;
  maybe_checkpoint(cfg, out.ansatz, out.trace, true);
  return out;
}

OptimizationResult local_sweep_optimize(const AnsatzDescriptor& a, const Objective& obj, const OptimizerConfig& cfg) {
  if (!(cfg.rel_energy_tol > 0.0)) throw std::invalid_argument("rel_energy_tol must be positive");
  const auto start = Clock::now();
  auto seconds = [&] { return std::chrono::duration<double>(Clock::now() - start).count(); };
  const long evals_before = obj.evaluations->load();
  const bool energy = obj.kind == ObjectiveKind::energy;
  Objective sweep_obj = energy ? Objective::energy(concave_shift(obj.hamiltonian), obj.path) : obj;
  if (energy) sweep_obj.evaluations = obj.evaluations;

  OptimizationResult out{a, {}};
  AnsatzDescriptor& cur = out.ansatz;
  OptimizationTrace& trace = out.trace;
  ObjectiveValue v0 = evaluate(cur, obj, true, cfg.path);
  trace.entries.push_back({0, v0.value, norm2(*v0.gradient), seconds()});
  double shift = 0.0;
  if (energy) shift = v0.value - evaluate(cur, sweep_obj, false, cfg.path).value;

  std::vector<std::size_t> order;
  for (std::size_t g = 0; g < cur.gates.size(); ++g) order.push_back(g);
  for (std::size_t g = cur.gates.size(); g-- > 0;) order.push_back(g);

  trace.status = Status::budget_exhausted;
  double prev = v0.value;
  for (int it = 1; it <= cfg.max_iterations; ++it) {
    for (std::size_t g : order) {
      const GateDerivatives d = gate_derivatives(cur, sweep_obj, cfg.path);
      if (cfg.record_updates) trace.update_values.push_back(d.value + shift);
      const Eigen::MatrixXd target = energy ? Eigen::MatrixXd(-d.d_gate[g])
                                            : Eigen::MatrixXd((d.overlap < 0.0 ? -1.0 : 1.0) * d.d_gate[g]);
      const Eigen::MatrixXd w = best_special_orthogonal(target);
      try {
        cur.gates[g].params = angles_from_orthogonal(w, cur.gates[g].params.m);
      } catch (const LogBranchError&) {
        ++trace.log_branch_failures;
      }
    }
    ObjectiveValue v = evaluate(cur, obj, true, cfg.path);
    if (cfg.record_updates) trace.update_values.push_back(v.value);
    trace.entries.push_back({it, v.value, norm2(*v.gradient), seconds()});
    maybe_checkpoint(cfg, cur, trace, false);
    if (relative_change_below(prev, v.value, cfg.rel_energy_tol)) {
      trace.status = Status::converged;
      break;
    }
    prev = v.value;
  }
  trace.evaluations = obj.evaluations->load() - evals_before;
  maybe_checkpoint(cfg, cur, trace, true);
  return out;
}

OptimizationResult optimize(const AnsatzDescriptor& a, const Objective& obj, const OptimizerConfig& cfg) {
  return cfg.method == Method::local_sweep ? local_sweep_optimize(a, obj, cfg) : gradient_minimize(a, obj, cfg);
}

double mean_gate_gradient_norm(const AnsatzDescriptor& a, const std::vector<double>& gradient) {
  if (a.gates.empty()) return 0.0;
  double total = 0.0;
  std::size_t i = 0;
  for (const auto& g : a.gates) {
    double m = 0.0;
    for (std::size_t k = 0; k < g.params.theta.size(); ++k) m = std::max(m, std::abs(gradient.at(i + k)));
    i += g.params.theta.size();
    total += m;
  }
  return total / static_cast<double>(a.gates.size());
}

AnsatzDescriptor adaptive_grow(const AnsatzDescriptor& optimized, int target_tau, std::optional<double> perturbation,
                               std::uint64_t seed, const Objective* obj) {
  if (target_tau <= optimized.tau) throw AnsatzError("target depth must exceed the optimized depth");
  if (optimized.family == Family::dense_block_mera) throw AnsatzError("dense-block-MERA has no depth to grow");
  if (optimized.source_family) throw AnsatzError("grow the original QC descriptor, not its regrouped view");
  const int delta = target_tau - optimized.tau;
  const int shift = is_qc(optimized.family) ? 0 : delta;
  if (parity_sensitive(optimized.family) && shift % 2 != 0) {
    throw AnsatzError("brick-wall layers must be prepended in pairs (even depth increase)");
  }
  AnsatzDescriptor grown = build_ansatz(optimized.family, optimized.L, optimized.q, target_tau, optimized.q_m);
  std::map<std::tuple<int, int, std::vector<int>>, std::size_t> index;
  for (std::size_t g = 0; g < grown.gates.size(); ++g) {
    const auto& p = grown.gates[g];
    index.emplace(std::make_tuple(p.unit, p.layer, p.wires), g);
  }
  for (const auto& p : optimized.gates) {
    auto it = index.find(std::make_tuple(p.unit, p.layer + shift, p.wires));
    if (it == index.end()) throw AnsatzError("optimized descriptor does not embed into the grown structure");
    grown.gates[it->second].params = p.params;
  }
  double scale = 0.0;
  if (perturbation) {
    if (*perturbation < 0.0) throw std::invalid_argument("perturbation must be non-negative");
    scale = *perturbation;
  } else {
    if (obj == nullptr) throw std::invalid_argument("automatic perturbation needs an objective");
    const ObjectiveValue v = evaluate(grown, *obj, true);
    scale = mean_gate_gradient_norm(grown, *v.gradient);
  }
  if (scale > 0.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-scale, scale);
    for (auto& g : grown.gates) {
      for (double& t : g.params.theta) t += dist(rng);
    }
  }
  return grown;
}

void write_trace_csv(const OptimizationTrace& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "iteration,value,grad_norm,seconds\n";
  char buf[128];
  for (const auto& e : trace.entries) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.6f\n", e.iteration, e.value, e.grad_norm, e.seconds);
    out << buf;
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace qctn
