#include "qctn/dmrg.hpp"
#include "qctn/hamiltonians.hpp"
#include "qctn/mps.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

namespace {

using qctn::CanonicalForm;
using qctn::Family;

Eigen::VectorXd as_vector(const std::vector<double>& v) { return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())); }

/// State of an MPS by explicit summation over all bond indices (no library contraction).
Eigen::VectorXd brute_state(const qctn::MPS& m) {
  const std::size_t L = m.length();
  Eigen::VectorXd psi(Eigen::Index{1} << L);
  for (std::size_t idx = 0; idx < (std::size_t{1} << L); ++idx) {
    Eigen::RowVectorXd row = Eigen::RowVectorXd::Ones(1);
    for (std::size_t s = 0; s < L; ++s) {
      const auto& t = m.sites[s];
      const std::size_t p = (idx >> (L - 1 - s)) & 1U;
      Eigen::MatrixXd a(t.dim(0), t.dim(2));
      for (std::size_t l = 0; l < t.dim(0); ++l)
        for (std::size_t r = 0; r < t.dim(2); ++r) a(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(r)) = t.at({l, p, r});
      row = row * a;
    }
    psi(static_cast<Eigen::Index>(idx)) = row(0);
  }
  return psi;
}

qctn::MPS singlet() {
  // (|01> - |10>) / sqrt 2
  std::vector<double> psi{0.0, 1.0 / std::sqrt(2.0), -1.0 / std::sqrt(2.0), 0.0};
  return qctn::from_statevector(psi, 2, 2);
}

TEST(Mps, BoundaryBondsAreTrivial) {
  const auto m = qctn::random_mps(6, 4, 1);
  EXPECT_EQ(m.sites.front().dim(0), 1u);
  EXPECT_EQ(m.sites.back().dim(2), 1u);
  EXPECT_LE(m.max_bond(), 4u);
}

TEST(Mps, ToStatevectorMatchesBruteForce) {
  const auto m = qctn::random_mps(6, 3, 2);
  EXPECT_LT((as_vector(qctn::to_statevector(m)) - brute_state(m)).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(Mps, CanonicalizeProductState) {
  const auto p = qctn::product_state({0, 1, 0, 0});
  const auto c = qctn::canonicalize(p, CanonicalForm::right);
  EXPECT_NEAR(std::abs(qctn::overlap(p, c)), 1.0, 1e-14);
  for (std::size_t s = 0; s < 4; ++s) EXPECT_LT((p.sites[s] - c.sites[s]).max_abs() * (p.sites[s] + c.sites[s]).max_abs(), 1e-14);
}

TEST(Mps, CanonicalFormsSatisfyIsometry) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto m = qctn::random_mps(6, 4, seed);
    const double nrm = qctn::norm(m);
    for (auto form : {CanonicalForm::left, CanonicalForm::right, CanonicalForm::mixed}) {
      const int center = 3;
      const auto c = qctn::canonicalize(m, form, center);
      EXPECT_EQ(c.form, form);
      for (int s = 0; s < 6; ++s) {
        const bool left = form == CanonicalForm::left ? s < 5 : (form == CanonicalForm::mixed && s < center);
        const bool right = form == CanonicalForm::right ? s > 0 : (form == CanonicalForm::mixed && s > center);
        if (left) {
          EXPECT_LT(qctn::isometry_residual(c.sites[static_cast<std::size_t>(s)], qctn::Side::left), 1e-10);
        }
        if (right) {
          EXPECT_LT(qctn::isometry_residual(c.sites[static_cast<std::size_t>(s)], qctn::Side::right), 1e-10);
        }
      }
      EXPECT_NEAR(qctn::norm(c), 1.0, 1e-12);
      EXPECT_NEAR(std::abs(qctn::overlap(m, c)) / nrm, 1.0, 1e-10);
    }
  }
}

TEST(Mps, OverlapBasics) {
  const auto a = qctn::canonicalize(qctn::random_mps(5, 3, 4), CanonicalForm::right);
  EXPECT_NEAR(qctn::overlap(a, a), 1.0, 1e-12);
  EXPECT_EQ(qctn::overlap(qctn::product_state({0, 0, 0}), qctn::product_state({1, 0, 0})), 0.0);
  EXPECT_THROW(qctn::overlap(qctn::product_state({0, 0}), qctn::product_state({0, 0, 0})), std::invalid_argument);
}

TEST(Mps, OverlapMatchesDenseDot) {
  const auto a = qctn::canonicalize(qctn::random_mps(8, 4, 5), CanonicalForm::right);
  const auto b = qctn::canonicalize(qctn::random_mps(8, 3, 6), CanonicalForm::left);
  EXPECT_NEAR(qctn::overlap(a, b), brute_state(a).dot(brute_state(b)), 1e-12);
}

TEST(Mps, MpoExpectationOracles) {
  const auto mpo2 = qctn::terms_to_mpo(qctn::build_terms({qctn::Model::heisenberg_1d, 2}));
  EXPECT_NEAR(qctn::mpo_expectation(singlet(), mpo2), -0.75, 1e-14);
  const auto all_up = qctn::product_state(std::vector<int>(8, 0));
  EXPECT_NEAR(qctn::mpo_expectation(all_up, qctn::terms_to_mpo(qctn::build_terms({qctn::Model::heisenberg_1d, 8}))),
              1.75, 1e-14);
  const auto m = qctn::canonicalize(qctn::random_mps(6, 4, 7), CanonicalForm::right);
  const Eigen::VectorXd v = brute_state(m);
  const auto h = qctn::terms_to_mpo(qctn::build_terms({qctn::Model::heisenberg_1d, 6}));
  EXPECT_NEAR(qctn::mpo_expectation(m, h), v.dot(oracle::heisenberg_chain(6) * v), 1e-11);
}

TEST(Mps, ProductExpectation) {
  const auto m = qctn::random_mps(5, 3, 8);
  const Eigen::VectorXd v = brute_state(m);
  Eigen::Matrix2d a, b;
  a << 0.3, 1.2, -0.5, 2.0;
  b << 1.0, 0.0, 0.7, -1.0;
  const Eigen::MatrixXd op = oracle::site_op(a, 1, 5) * oracle::site_op(b, 4, 5);
  EXPECT_NEAR(qctn::product_expectation(m, {{1, a}, {4, b}}), v.dot(op * v) / v.squaredNorm(), 1e-12);
}

TEST(Mps, FromStatevectorRoundTrip) {
  std::mt19937_64 rng(9);
  Eigen::VectorXd psi = oracle::random_matrix(64, 1, rng);
  psi.normalize();
  const std::vector<double> v(psi.data(), psi.data() + 64);
  const auto m = qctn::from_statevector(v, 6, 8);
  EXPECT_LT((brute_state(m) - psi).cwiseAbs().maxCoeff(), 1e-12);
  const auto small = qctn::from_statevector(v, 6, 2);
  EXPECT_LE(small.max_bond(), 2u);
}

TEST(Mps, CompressIsRightCanonical) {
  const auto m = qctn::random_mps(7, 6, 10);
  const auto c = qctn::compress(m, 64, 1e-14);
  for (std::size_t s = 1; s < c.length(); ++s) EXPECT_LT(qctn::isometry_residual(c.sites[s], qctn::Side::right), 1e-10);
  EXPECT_NEAR(std::abs(qctn::overlap(m, c)) / qctn::norm(m), 1.0, 1e-10);
}

TEST(Mps, QmpsIdentityGivesTrivialBonds) {
  const auto m = qctn::qmps_to_dense_mps(qctn::build_ansatz(Family::qmps_b, 8, 2, 2));
  for (auto d : m.bond_dims()) EXPECT_EQ(d, 1u);
  EXPECT_NEAR(qctn::to_statevector(m)[0], 1.0, 1e-14);
}

TEST(Mps, QmpsConversionMatchesStatevector) {
  std::uint64_t seed = 20;
  for (Family f : {Family::qmps_b, Family::qmps_l, Family::qmps_m}) {
    for (int q : {1, 2, 3}) {
      auto a = qctn::build_ansatz(f, 8, q, 2, 1);
      qctn::randomize_parameters(a, 1.0, seed++);
      const auto m = qctn::qmps_to_dense_mps(a);
      EXPECT_LE(m.max_bond(), std::size_t{1} << q);
      EXPECT_LT((brute_state(m) - oracle::circuit_state(a)).cwiseAbs().maxCoeff(), 1e-12);
      for (std::size_t s = 1; s < m.length(); ++s) EXPECT_LT(qctn::isometry_residual(m.sites[s], qctn::Side::right), 1e-10);
    }
  }
}

TEST(Mps, QmpsEnergyMatchesDenseAtTenSites) {
  auto a = qctn::build_ansatz(Family::qmps_b, 10, 2, 3);
  qctn::randomize_parameters(a, 1.0, 30);
  const auto m = qctn::qmps_to_dense_mps(a);
  const Eigen::VectorXd v = oracle::circuit_state(a);
  const auto t = qctn::build_terms({qctn::Model::heisenberg_1d, 10});
  EXPECT_NEAR(qctn::mpo_expectation(m, qctn::terms_to_mpo(t)), v.dot(qctn::densify(t) * v), 1e-11);
  EXPECT_THROW(qctn::qmps_to_dense_mps(qctn::build_ansatz(Family::qc_b, 6, 0, 2)), std::invalid_argument);
}

TEST(Mps, CircuitToMpsAllFamilies) {
  std::uint64_t seed = 40;
  for (Family f : {Family::qmera_b, Family::qc_b, Family::qc_l, Family::dense_block_mera, Family::qmps_l}) {
    auto a = qctn::build_ansatz(f, 8, 2, 3, 1);
    qctn::randomize_parameters(a, 1.0, seed++);
    const auto m = qctn::circuit_to_mps(a);
    EXPECT_LT((brute_state(m) - oracle::circuit_state(a)).cwiseAbs().maxCoeff(), 1e-12) << qctn::family_name(f);
  }
}

TEST(Mps, SaveLoadRoundTrip) {
  const auto m = qctn::random_mps(5, 3, 50);
  const auto path = (std::filesystem::temp_directory_path() / "qctn_mps_rt.bin").string();
  qctn::save_mps(m, path);
  const auto back = qctn::load_mps(path);
  ASSERT_EQ(back.length(), m.length());
  for (std::size_t s = 0; s < m.length(); ++s) EXPECT_EQ(back.sites[s], m.sites[s]);
  {
    std::ofstream bad(path, std::ios::binary);
    bad << "not an mps";
  }
  EXPECT_THROW(qctn::load_mps(path), std::runtime_error);
  std::filesystem::remove(path);
}

TEST(Dmrg, TwoAndThreeSites) {
  qctn::DmrgOptions opt;
  opt.max_bond = 2;
  auto r = qctn::dmrg_ground_state(qctn::terms_to_mpo(qctn::build_terms({qctn::Model::heisenberg_1d, 2})), opt);
  EXPECT_NEAR(r.energy, -0.75, 1e-12);
  r = qctn::dmrg_ground_state(qctn::terms_to_mpo(qctn::build_terms({qctn::Model::heisenberg_1d, 3})), opt);
  EXPECT_NEAR(r.energy, -1.0, 1e-12);
}

TEST(Dmrg, MatchesDenseGroundStateAtTenSites) {
  const auto t = qctn::build_terms({qctn::Model::heisenberg_1d, 10});
  qctn::DmrgOptions opt;
  opt.max_bond = 32;
  const auto r = qctn::dmrg_ground_state(qctn::terms_to_mpo(t), opt);
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.energy, oracle::ground_energy(oracle::heisenberg_chain(10)), 1e-9);
  for (std::size_t k = 1; k < r.energy_trace.size(); ++k) EXPECT_LE(r.energy_trace[k], r.energy_trace[k - 1] + 1e-12);
  EXPECT_NEAR(qctn::mpo_expectation(r.state, qctn::terms_to_mpo(t)), r.energy, 1e-9);
}

TEST(Dmrg, EnergyDecreasesWithBond) {
  const auto h = qctn::terms_to_mpo(qctn::build_terms({qctn::Model::heisenberg_1d, 10}));
  const double exact = oracle::ground_energy(oracle::heisenberg_chain(10));
  double prev = 1e300;
  for (std::size_t d : {2u, 4u, 8u, 16u}) {
    qctn::DmrgOptions opt;
    opt.max_bond = d;
    const auto r = qctn::dmrg_ground_state(h, opt);
    EXPECT_LE(r.energy, prev + 1e-12);
    EXPECT_GE(r.energy, exact - 1e-10);
    EXPECT_LE(r.state.max_bond(), d);
    prev = r.energy;
  }
}

TEST(Dmrg, HubbardMatchesJordanWignerOracle) {
  qctn::ModelSpec s;
  s.model = qctn::Model::fermi_hubbard_1d;
  s.L = 3;
  qctn::DmrgOptions opt;
  opt.max_bond = 32;
  const auto r = qctn::dmrg_ground_state(qctn::terms_to_mpo(qctn::build_terms(s)), opt);
  EXPECT_NEAR(r.energy, oracle::ground_energy(oracle::hubbard(3, 1.0, 3.0, 0.3)), 1e-9);
}

}  // namespace
