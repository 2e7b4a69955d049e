#include "qctn/dmrg.hpp"
#include "qctn/lanczos.hpp"
#include "qctn/oracle.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

namespace {

using qctn::Model;
using qctn::ModelSpec;

TEST(Oracle, SmallAnalyticChains) {
  EXPECT_NEAR(qctn::ed_ground_state(ModelSpec{Model::heisenberg_1d, 2}).ground_energy, -0.75, 1e-14);
  EXPECT_NEAR(qctn::ed_ground_state(ModelSpec{Model::heisenberg_1d, 3}).ground_energy, -1.0, 1e-14);
}

TEST(Oracle, ResultInvariants) {
  for (int L : {4, 9, 10}) {
    const auto r = qctn::ed_ground_state(ModelSpec{Model::heisenberg_1d, L});
    EXPECT_EQ(r.qubit_count, L);
    double nrm = 0.0;
    for (double x : r.ground_vector) nrm += x * x;
    EXPECT_NEAR(nrm, 1.0, 1e-12);
    EXPECT_LT(r.residual, 1e-9);
    const auto t = qctn::build_terms(ModelSpec{Model::heisenberg_1d, L});
    EXPECT_NEAR(r.ground_energy, oracle::ground_energy(qctn::densify(t)), 1e-10);
  }
}

TEST(Oracle, LanczosPathAgreesWithDmrg) {
  // 14 qubits takes the iterative path.
  const ModelSpec s{Model::heisenberg_1d, 14};
  const auto r = qctn::ed_ground_state(s);
  qctn::DmrgOptions opt;
  opt.max_bond = 64;
  const auto d = qctn::dmrg_ground_state(qctn::terms_to_mpo(qctn::build_terms(s)), opt);
  EXPECT_NEAR(r.ground_energy, d.energy, 1e-9);
  EXPECT_LT(r.residual, 1e-9);
  EXPECT_FALSE(r.degenerate);
  EXPECT_GT(r.gap, 1e-3);
}

TEST(Oracle, TenSitesCrossCheckedWithDmrg) {
  const ModelSpec s{Model::heisenberg_1d, 10};
  qctn::DmrgOptions opt;
  opt.max_bond = 64;
  const auto d = qctn::dmrg_ground_state(qctn::terms_to_mpo(qctn::build_terms(s)), opt);
  EXPECT_NEAR(qctn::ed_ground_state(s).ground_energy, d.energy, 1e-9);
}

TEST(Oracle, DegeneracyIsFlagged) {
  // Odd chains have a Kramers-like doublet (S = 1/2).
  EXPECT_TRUE(qctn::ed_ground_state(ModelSpec{Model::heisenberg_1d, 5}).degenerate);
  EXPECT_TRUE(qctn::ed_ground_state(ModelSpec{Model::heisenberg_1d, 11}).degenerate);
  EXPECT_FALSE(qctn::ed_ground_state(ModelSpec{Model::heisenberg_1d, 6}).degenerate);
}

TEST(Oracle, SizeRefusal) {
  EXPECT_THROW(qctn::ed_ground_state(ModelSpec{Model::heisenberg_1d, qctn::kMaxEdQubits + 1}), qctn::SizeLimitError);
}

TEST(Oracle, Expectations) {
  const ModelSpec two{Model::heisenberg_1d, 2};
  const auto r = qctn::ed_ground_state(two);
  qctn::TermList id;
  id.qubit_count = 2;
  id.add(qctn::make_term(1.0, std::vector<std::pair<int, qctn::Op>>{}));
  EXPECT_NEAR(qctn::ed_expectation(r, id), 1.0, 1e-14);
  EXPECT_NEAR(qctn::ed_expectation(r, qctn::spin_correlation_terms(two, 0, 1)), -0.75, 1e-12);
  EXPECT_THROW(qctn::ed_expectation(r, qctn::build_terms(ModelSpec{Model::heisenberg_1d, 3})), std::invalid_argument);
}

TEST(Oracle, CorrelationAgainstDenseOperator) {
  const ModelSpec s{Model::heisenberg_1d, 10};
  const auto r = qctn::ed_ground_state(s);
  const Eigen::Map<const Eigen::VectorXd> v(r.ground_vector.data(), static_cast<Eigen::Index>(r.ground_vector.size()));
  EXPECT_NEAR(qctn::ed_expectation(r, qctn::spin_correlation_terms(s, 0, 5)), v.dot(oracle::exchange(0, 5, 10) * v),
              1e-12);
}

TEST(Oracle, HubbardGroundState) {
  ModelSpec s;
  s.model = Model::fermi_hubbard_1d;
  s.L = 4;
  const auto r = qctn::ed_ground_state(s);
  EXPECT_NEAR(r.ground_energy, oracle::ground_energy(oracle::hubbard(4, 1.0, 3.0, 0.3)), 1e-10);
}

TEST(Oracle, LanczosOnDiagonalMatrix) {
  const int n = 200;
  const qctn::MatVec apply = [&](std::span<const double> x, std::span<double> y) {
    for (int i = 0; i < n; ++i) y[static_cast<std::size_t>(i)] = (i + 1.0) * x[static_cast<std::size_t>(i)];
  };
  std::vector<double> start(n, 1.0);
  const auto r = qctn::lanczos_lowest(apply, start, {});
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.value, 1.0, 1e-10);
}

}  // namespace
