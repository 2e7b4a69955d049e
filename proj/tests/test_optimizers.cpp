#include "qctn/optimizers.hpp"
#include "qctn/oracle.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

namespace {

using qctn::Family;
using qctn::Method;
using qctn::Model;
using qctn::ModelSpec;
using qctn::Status;

qctn::Objective heisenberg(int L) { return qctn::Objective::energy(qctn::build_terms(ModelSpec{Model::heisenberg_1d, L})); }

qctn::AnsatzDescriptor random_ansatz(Family f, int L, int q, int tau, double scale, std::uint64_t seed) {
  auto a = qctn::build_ansatz(f, L, q, tau, 1);
  qctn::randomize_parameters(a, scale, seed);
  return a;
}

TEST(Optimizers, NamesRoundTrip) {
  for (auto m : {Method::local_sweep, Method::cg, Method::lbfgs}) EXPECT_EQ(qctn::parse_method(qctn::method_name(m)), m);
  EXPECT_THROW(qctn::parse_method("adam"), std::invalid_argument);
  EXPECT_EQ(qctn::status_name(Status::converged), "converged");
  EXPECT_EQ(qctn::status_name(Status::budget_exhausted), "budget_exhausted");
}

class QuadraticTest : public ::testing::TestWithParam<Method> {};

TEST_P(QuadraticTest, ConvexQuadraticReachesMinimizer) {
  std::mt19937_64 rng(3);
  const int n = 12;
  const Eigen::MatrixXd m = oracle::random_matrix(n, n, rng);
  const Eigen::MatrixXd a = m * m.transpose() + Eigen::MatrixXd::Identity(n, n);
  const Eigen::VectorXd b = oracle::random_matrix(n, 1, rng);
  const Eigen::VectorXd xs = a.ldlt().solve(b);
  const double fmin = -0.5 * b.dot(xs);
  qctn::FlatFunction f = [&](const std::vector<double>& x, std::vector<double>& g) {
    const Eigen::Map<const Eigen::VectorXd> xv(x.data(), n);
    const Eigen::VectorXd ax = a * xv;
    g.assign(ax.data(), ax.data() + n);
    for (int i = 0; i < n; ++i) g[i] -= b(i);
    return 0.5 * xv.dot(ax) - b.dot(xv);
  };
  qctn::OptimizerConfig cfg;
  cfg.method = GetParam();
  cfg.max_iterations = 200;
  cfg.rel_energy_tol = 1e-15;
  const auto r = qctn::minimize_flat(f, std::vector<double>(n, 0.0), cfg);
  EXPECT_NE(r.trace.status, Status::budget_exhausted);
  EXPECT_NEAR(r.trace.final_value(), fmin, 1e-10 * std::abs(fmin));
  EXPECT_LT((Eigen::Map<const Eigen::VectorXd>(r.x.data(), n) - xs).norm(), 1e-5);
  EXPECT_LE(r.trace.iterations(), 60);
  for (std::size_t i = 1; i < r.trace.entries.size(); ++i)
    EXPECT_LE(r.trace.entries[i].value, r.trace.entries[i - 1].value + 1e-14);
}

INSTANTIATE_TEST_SUITE_P(Methods, QuadraticTest, ::testing::Values(Method::lbfgs, Method::cg));

TEST(Optimizers, RosenbrockLbfgs) {
  qctn::FlatFunction f = [](const std::vector<double>& x, std::vector<double>& g) {
    const double a = 1.0 - x[0], b = x[1] - x[0] * x[0];
    g = {-2.0 * a - 400.0 * x[0] * b, 200.0 * b};
    return a * a + 100.0 * b * b;
  };
  qctn::OptimizerConfig cfg;
  cfg.max_iterations = 500;
  cfg.rel_energy_tol = 1e-300;
  const auto r = qctn::minimize_flat(f, {-1.2, 1.0}, cfg);
  EXPECT_NEAR(r.x[0], 1.0, 1e-5);
  EXPECT_NEAR(r.x[1], 1.0, 1e-5);
}

TEST(Optimizers, IterationBudgetAndTraceLayout) {
  const auto obj = heisenberg(6);
  const auto a = random_ansatz(Family::qc_b, 6, 0, 4, 0.5, 1);
  qctn::OptimizerConfig cfg;
  cfg.max_iterations = 3;
  cfg.rel_energy_tol = 1e-300;
  for (auto m : {Method::lbfgs, Method::cg, Method::local_sweep}) {
    cfg.method = m;
    const auto r = qctn::optimize(a, obj, cfg);
    EXPECT_EQ(r.trace.status, Status::budget_exhausted) << qctn::method_name(m);
    ASSERT_EQ(r.trace.entries.size(), 4u);
    EXPECT_EQ(r.trace.entries[0].iteration, 0);
    EXPECT_NEAR(r.trace.entries[0].value, qctn::evaluate(a, obj, false).value, 1e-13);
    EXPECT_NEAR(r.trace.final_value(), qctn::evaluate(r.ansatz, obj, false).value, 1e-12);
    EXPECT_EQ(r.trace.iterations(), 3);
    EXPECT_GT(r.trace.evaluations, 0);
  }
}

TEST(Optimizers, ConvergenceRuleStopsOnRelativeChange) {
  const auto obj = heisenberg(6);
  const auto a = random_ansatz(Family::qc_b, 6, 0, 2, 0.5, 2);
  qctn::OptimizerConfig cfg;
  cfg.max_iterations = 2000;
  cfg.rel_energy_tol = 1e-6;
  for (auto m : {Method::lbfgs, Method::local_sweep}) {
    cfg.method = m;
    const auto r = qctn::optimize(a, obj, cfg);
    ASSERT_EQ(r.trace.status, Status::converged) << qctn::method_name(m);
    const auto& e = r.trace.entries;
    ASSERT_GE(e.size(), 2u);
    const double last = std::abs(e.back().value - e[e.size() - 2].value) / std::abs(e[e.size() - 2].value);
    EXPECT_LT(last, 1e-6);
    for (std::size_t i = 1; i + 1 < e.size(); ++i)
      EXPECT_GE(std::abs(e[i].value - e[i - 1].value) / std::abs(e[i - 1].value), 1e-6) << i;
  }
}

TEST(Optimizers, LocalSweepIsMonotoneForEnergy) {
  const int L = 8;
  const auto obj = heisenberg(L);
  const double e0 = qctn::ed_ground_state(ModelSpec{Model::heisenberg_1d, L}).ground_energy;
  for (Family f : {Family::qc_b, Family::qmps_b, Family::qmera_b}) {
    const auto a = random_ansatz(f, L, 2, f == Family::qc_b ? 4 : 2, 0.3, 5);
    qctn::OptimizerConfig cfg;
    cfg.method = Method::local_sweep;
    cfg.max_iterations = 4;
    cfg.record_updates = true;
    const auto r = qctn::local_sweep_optimize(a, obj, cfg);
    ASSERT_FALSE(r.trace.update_values.empty());
    double prev = r.trace.entries[0].value;
    for (double v : r.trace.update_values) {
      EXPECT_LE(v, prev + 1e-11) << qctn::family_name(f);
      EXPECT_GE(v, e0 - 1e-10);
      prev = v;
    }
    EXPECT_LT(r.trace.final_value(), r.trace.entries[0].value);
    EXPECT_EQ(r.trace.log_branch_failures, 0);
  }
}

TEST(Optimizers, LocalSweepIsMonotoneForInfidelity) {
  const auto target = random_ansatz(Family::qmps_b, 6, 2, 2, 1.0, 8);
  const auto obj = qctn::Objective::infidelity(qctn::qmps_to_dense_mps(target));
  const auto a = random_ansatz(Family::qmps_b, 6, 2, 2, 0.1, 9);
  qctn::OptimizerConfig cfg;
  cfg.method = Method::local_sweep;
  cfg.max_iterations = 30;
  cfg.rel_energy_tol = 1e-300;
  cfg.record_updates = true;
  const auto r = qctn::local_sweep_optimize(a, obj, cfg);
  double prev = r.trace.entries[0].value;
  for (double v : r.trace.update_values) {
    EXPECT_LE(v, prev + 1e-12);
    EXPECT_GE(v, -1e-12);
    prev = v;
  }
  EXPECT_LT(r.trace.final_value(), 0.5 * r.trace.entries[0].value);
}

TEST(Optimizers, GradientMethodsStayAboveGroundEnergy) {
  const int L = 8;
  const auto obj = heisenberg(L);
  const double e0 = qctn::ed_ground_state(ModelSpec{Model::heisenberg_1d, L}).ground_energy;
  const auto a = random_ansatz(Family::qc_b, L, 0, 4, 0.1, 4);
  qctn::OptimizerConfig cfg;
  cfg.max_iterations = 150;
  for (auto m : {Method::lbfgs, Method::cg}) {
    cfg.method = m;
    const auto r = qctn::gradient_minimize(a, obj, cfg);
    EXPECT_GE(r.trace.final_value(), e0 - 1e-10);
    EXPECT_LT((r.trace.final_value() - e0) / std::abs(e0), 0.1) << qctn::method_name(m);
  }
}

TEST(Optimizers, GradientSmallAtConvergence) {
  const auto obj = heisenberg(4);
  const auto a = random_ansatz(Family::qc_b, 4, 0, 3, 0.3, 12);
  qctn::OptimizerConfig cfg;
  cfg.max_iterations = 1000;
  cfg.rel_energy_tol = 1e-13;
  const auto r = qctn::gradient_minimize(a, obj, cfg);
  const auto v = qctn::evaluate(r.ansatz, obj, true);
  double gmax = 0.0;
  for (double g : *v.gradient) gmax = std::max(gmax, std::abs(g));
  EXPECT_LT(gmax, 1e-4);
  EXPECT_NEAR(r.trace.entries.back().grad_norm, std::sqrt(std::inner_product(v.gradient->begin(), v.gradient->end(),
                                                                            v.gradient->begin(), 0.0)),
              1e-9);
}

TEST(Optimizers, Deterministic) {
  const auto obj = heisenberg(6);
  const auto a = random_ansatz(Family::qmps_l, 6, 2, 2, 0.2, 21);
  for (auto m : {Method::lbfgs, Method::local_sweep}) {
    qctn::OptimizerConfig cfg;
    cfg.method = m;
    cfg.max_iterations = 10;
    const auto r1 = qctn::optimize(a, obj, cfg);
    const auto r2 = qctn::optimize(a, obj, cfg);
    EXPECT_EQ(r1.ansatz.flat_parameters(), r2.ansatz.flat_parameters());
    ASSERT_EQ(r1.trace.entries.size(), r2.trace.entries.size());
    for (std::size_t i = 0; i < r1.trace.entries.size(); ++i)
      EXPECT_EQ(r1.trace.entries[i].value, r2.trace.entries[i].value);
  }
}

TEST(Optimizers, CheckpointFiles) {
  const auto dir = std::filesystem::temp_directory_path() / "qctn_opt_ckpt";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  qctn::OptimizerConfig cfg;
  cfg.max_iterations = 6;
  cfg.checkpoint_prefix = (dir / "run").string();
  cfg.checkpoint_every = 2;
  const auto r = qctn::gradient_minimize(random_ansatz(Family::qc_b, 6, 0, 2, 0.3, 1), heisenberg(6), cfg);
  ASSERT_TRUE(std::filesystem::exists(dir / "run.json"));
  ASSERT_TRUE(std::filesystem::exists(dir / "run_trace.csv"));
  std::ifstream in(dir / "run_trace.csv");
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "iteration,value,grad_norm,seconds");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, static_cast<int>(r.trace.entries.size()));
  std::filesystem::remove_all(dir);
}

TEST(Optimizers, GrowWithoutPerturbationPreservesState) {
  const int L = 8;
  const auto obj = heisenberg(L);
  struct Case {
    Family f;
    int q, tau, target;
  };
  for (auto c : {Case{Family::qmps_b, 2, 2, 4}, Case{Family::qmps_l, 2, 1, 3}, Case{Family::qmps_m, 2, 2, 4},
                 Case{Family::qc_b, 0, 3, 5}, Case{Family::qc_l, 0, 2, 3}, Case{Family::qmera_b, 2, 2, 4}}) {
    const auto a = random_ansatz(c.f, L, c.q, c.tau, 0.8, 31);
    const auto g = qctn::adaptive_grow(a, c.target, 0.0, 1);
    EXPECT_EQ(g.tau, c.target);
    EXPECT_EQ(g.gates.size(), qctn::build_ansatz(c.f, L, c.q, c.target, 1).gates.size());
    EXPECT_NEAR(qctn::evaluate(g, obj, false).value, qctn::evaluate(a, obj, false).value, 1e-12)
        << qctn::family_name(c.f);
    EXPECT_LT((oracle::circuit_state(g) - oracle::circuit_state(a)).norm(), 1e-12);
  }
}

TEST(Optimizers, GrowPerturbation) {
  const auto obj = heisenberg(8);
  const auto a = random_ansatz(Family::qmps_b, 8, 2, 2, 0.5, 41);
  const auto g = qctn::adaptive_grow(a, 4, 0.05, 2);
  const auto base = qctn::adaptive_grow(a, 4, 0.0, 2);
  const auto x = g.flat_parameters(), y = base.flat_parameters();
  double dmax = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) dmax = std::max(dmax, std::abs(x[i] - y[i]));
  EXPECT_GT(dmax, 0.0);
  EXPECT_LE(dmax, 0.05);

  const auto grad = *qctn::evaluate(base, obj, true).gradient;
  const double expected = qctn::mean_gate_gradient_norm(base, grad);
  EXPECT_GT(expected, 0.0);
  const auto autog = qctn::adaptive_grow(a, 4, std::nullopt, 2, &obj);
  const auto z = autog.flat_parameters();
  double amax = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) amax = std::max(amax, std::abs(z[i] - y[i]));
  EXPECT_GT(amax, 0.0);
  EXPECT_LE(amax, expected + 1e-15);
}

TEST(Optimizers, GrowRejectsBadRequests) {
  const auto a = random_ansatz(Family::qmps_b, 8, 2, 2, 0.5, 1);
  EXPECT_THROW(qctn::adaptive_grow(a, 2, 0.0, 1), qctn::AnsatzError);
  EXPECT_THROW(qctn::adaptive_grow(a, 3, 0.0, 1), qctn::AnsatzError);
  EXPECT_THROW(qctn::adaptive_grow(a, 4, -1.0, 1), std::invalid_argument);
  EXPECT_THROW(qctn::adaptive_grow(a, 4, std::nullopt, 1), std::invalid_argument);
  const auto d = qctn::build_ansatz(Family::dense_block_mera, 8, 2, 1);
  EXPECT_THROW(qctn::adaptive_grow(d, 2, 0.0, 1), qctn::AnsatzError);
  const auto r = qctn::regroup_qc_as_qmps(qctn::build_ansatz(Family::qc_b, 8, 0, 3));
  EXPECT_THROW(qctn::adaptive_grow(r, 5, 0.0, 1), qctn::AnsatzError);
}

TEST(Optimizers, GrownStartBeatsShallowOptimum) {
  const auto obj = heisenberg(8);
  qctn::OptimizerConfig cfg;
  cfg.max_iterations = 80;
  const auto shallow = qctn::gradient_minimize(random_ansatz(Family::qc_b, 8, 0, 2, 0.1, 3), obj, cfg);
  const auto grown = qctn::adaptive_grow(shallow.ansatz, 4, 1e-3, 4);
  const auto deep = qctn::gradient_minimize(grown, obj, cfg);
  EXPECT_LE(deep.trace.final_value(), shallow.trace.final_value() + 1e-10);
}

}  // namespace
