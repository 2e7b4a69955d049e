#include "qctn/ansatz.hpp"
#include "qctn/mps.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <set>

namespace {

using qctn::Family;

double max_diff(const std::vector<double>& a, const Eigen::VectorXd& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b(static_cast<Eigen::Index>(i))));
  return m;
}

std::vector<std::vector<int>> wires_of(const qctn::AnsatzDescriptor& a) {
  std::vector<std::vector<int>> w;
  for (const auto& g : a.gates) w.push_back(g.wires);
  return w;
}

TEST(Ansatz, FamilyNamesRoundTrip) {
  for (Family f : {Family::qmps_b, Family::qmps_l, Family::qmps_m, Family::qmera_b, Family::qc_b, Family::qc_l,
                   Family::dense_block_mera}) {
    EXPECT_EQ(qctn::parse_family(qctn::family_name(f)), f);
  }
  EXPECT_THROW(qctn::parse_family("MPS"), std::invalid_argument);
}

TEST(Ansatz, BrickwallCircuitCounts) {
  const auto a = qctn::build_ansatz(Family::qc_b, 8, 0, 2);
  EXPECT_EQ(a.gates.size(), 7u);
  EXPECT_EQ(qctn::count_parameters(a), 42u);
  const std::vector<std::vector<int>> expected{{0, 1}, {2, 3}, {4, 5}, {6, 7}, {1, 2}, {3, 4}, {5, 6}};
  EXPECT_EQ(wires_of(a), expected);
  for (const auto& g : a.gates) EXPECT_EQ(g.params, qctn::GateParams::identity(2));
}

TEST(Ansatz, LadderCircuitCounts) {
  const auto a = qctn::build_ansatz(Family::qc_l, 6, 0, 3);
  EXPECT_EQ(a.gates.size(), 15u);
  EXPECT_EQ(a.gates[0].wires, (std::vector<int>{0, 1}));
  EXPECT_EQ(a.gates[4].wires, (std::vector<int>{4, 5}));
  EXPECT_EQ(a.gates[5].layer, 1);
}

TEST(Ansatz, QmpsBlockStructure) {
  const auto a = qctn::build_ansatz(Family::qmps_b, 32, 4, 4);
  // (L - q) blocks on q + 1 wires; each brick-wall layer pair holds q gates.
  EXPECT_EQ(a.blocks.size(), 28u);
  EXPECT_EQ(a.gates.size(), 28u * 8u);
  EXPECT_EQ(qctn::count_parameters(a), 6u * a.gates.size());
  EXPECT_EQ(a.blocks.front().lo, 0);
  EXPECT_EQ(a.blocks.front().hi, 4);
  EXPECT_EQ(a.blocks.back().hi, 31);
  const auto l = qctn::build_ansatz(Family::qmps_l, 32, 4, 4);
  EXPECT_EQ(l.gates.size(), 28u * 16u);
}

TEST(Ansatz, GateCountScaling) {
  // Exact counts: brick-wall tau q (L - q) / 2, ladder tau q (L - q). Relative to
  // tau L (q + 1) they approach q / (q + 1) of {1/2, 1} as L grows.
  for (int L : {32, 64, 128}) {
    for (int q : {2, 4, 8}) {
      const int tau = 4;
      const auto b = qctn::build_ansatz(Family::qmps_b, L, q, tau);
      const auto l = qctn::build_ansatz(Family::qmps_l, L, q, tau);
      EXPECT_EQ(b.gates.size(), static_cast<std::size_t>(tau * q * (L - q) / 2));
      EXPECT_EQ(l.gates.size(), static_cast<std::size_t>(tau * q * (L - q)));
      const double law = tau * L * (q + 1.0);
      const double limit = static_cast<double>(q) / (q + 1) * (L - q) / L;
      EXPECT_NEAR(b.gates.size() / law, 0.5 * limit, 1e-12);
      EXPECT_NEAR(l.gates.size() / law, limit, 1e-12);
    }
  }
}

TEST(Ansatz, LocalMeraCountMatchesEnumeration) {
  // q = 3, q_m = 1: four coarse sites, MERA pairs (0,2) (0,1) (2,3) (1,2).
  const auto a = qctn::build_ansatz(Family::qmps_m, 6, 3, 2, 1);
  ASSERT_EQ(a.blocks.size(), 3u);
  const auto& first = a.blocks[0].gates;
  ASSERT_EQ(first.size(), 4u);  // four 2-wire tensors, tau = 2 -> one gate each
  EXPECT_EQ(a.gates[first[0]].wires, (std::vector<int>{0, 2}));
  EXPECT_EQ(a.gates[first[1]].wires, (std::vector<int>{0, 1}));
  EXPECT_EQ(a.gates[first[2]].wires, (std::vector<int>{2, 3}));
  EXPECT_EQ(a.gates[first[3]].wires, (std::vector<int>{1, 2}));
  std::set<int> units;
  for (const auto& g : a.gates) units.insert(g.unit);
  EXPECT_EQ(units.size(), 12u);
}

TEST(Ansatz, BinaryMeraFixture) {
  const auto a = qctn::build_ansatz(Family::qmera_b, 8, 1, 1);
  const std::vector<std::vector<int>> expected{{0, 4},                                  // top
                                               {0, 2}, {4, 6}, {2, 4},                  // scale 2
                                               {0, 1}, {2, 3}, {4, 5}, {6, 7},          // isometries
                                               {1, 2}, {3, 4}, {5, 6}};                 // disentanglers
  EXPECT_EQ(wires_of(a), expected);
  const auto q2 = qctn::build_ansatz(Family::qmera_b, 8, 2, 2);
  // four coarse sites of two wires; every tensor is a brick-wall on four wires
  EXPECT_EQ(q2.gates.size(), 4u * 3u);
  EXPECT_EQ(q2.gates[0].wires, (std::vector<int>{0, 1}));
  EXPECT_EQ(q2.gates[1].wires, (std::vector<int>{4, 5}));
}

TEST(Ansatz, DenseBlockMera) {
  const auto a = qctn::build_ansatz(Family::dense_block_mera, 8, 2, 1);
  ASSERT_EQ(a.gates.size(), 4u);  // top, two isometries, one disentangler
  for (const auto& g : a.gates) {
    EXPECT_TRUE(g.dense);
    EXPECT_EQ(g.params.m, 4);
  }
  EXPECT_EQ(qctn::count_parameters(a), 4u * 120u);
}

TEST(Ansatz, InvalidCombinationsAreRejected) {
  EXPECT_THROW(qctn::build_ansatz(Family::qmera_b, 12, 1, 1), qctn::AnsatzError);
  EXPECT_THROW(qctn::build_ansatz(Family::qmera_b, 8, 3, 1), qctn::AnsatzError);
  EXPECT_THROW(qctn::build_ansatz(Family::qc_b, 8, 0, 0), qctn::AnsatzError);
  EXPECT_THROW(qctn::build_ansatz(Family::qmps_b, 4, 4, 2), qctn::AnsatzError);
  EXPECT_THROW(qctn::build_ansatz(Family::qmps_b, 8, 0, 2), qctn::AnsatzError);
  EXPECT_THROW(qctn::build_ansatz(Family::qmps_m, 8, 3, 2, 0), qctn::AnsatzError);
  EXPECT_THROW(qctn::build_ansatz(Family::dense_block_mera, 16, 4, 1), qctn::AnsatzError);
  EXPECT_THROW(qctn::build_ansatz(Family::qc_l, 1, 0, 1), qctn::AnsatzError);
}

TEST(Ansatz, DenseMpsParameterFormula) {
  EXPECT_EQ(qctn::dense_mps_parameter_count(32, 16), 12032);
  EXPECT_EQ(qctn::dense_mps_parameter_count(8, 2), 40);
}

TEST(Ansatz, IdentityGatesRealizeAllZeros) {
  for (Family f : {Family::qmps_b, Family::qmps_l, Family::qmps_m, Family::qmera_b, Family::qc_b, Family::qc_l,
                   Family::dense_block_mera}) {
    const auto a = qctn::build_ansatz(f, 8, 2, 2, 1);
    const auto psi = qctn::realize_statevector(a);
    EXPECT_EQ(psi[0], 1.0);
    for (std::size_t i = 1; i < psi.size(); ++i) ASSERT_EQ(psi[i], 0.0);
  }
}

TEST(Ansatz, StatevectorMatchesKroneckerOracle) {
  std::uint64_t seed = 1;
  for (Family f : {Family::qmps_b, Family::qmps_l, Family::qmps_m, Family::qmera_b, Family::qc_b, Family::qc_l,
                   Family::dense_block_mera}) {
    auto a = qctn::build_ansatz(f, 8, 2, 3, 1);
    qctn::randomize_parameters(a, 1.0, seed++);
    const auto psi = qctn::realize_statevector(a);
    EXPECT_LT(max_diff(psi, oracle::circuit_state(a)), 1e-12) << qctn::family_name(f);
    double nrm = 0.0;
    for (double x : psi) nrm += x * x;
    EXPECT_NEAR(nrm, 1.0, 1e-12);
  }
}

TEST(Ansatz, SingleGateOnLastBlock) {
  auto a = qctn::build_ansatz(Family::qmps_b, 4, 1, 1);
  ASSERT_EQ(a.blocks.size(), 3u);
  const int g = a.blocks.back().gates.back();
  a.gates[static_cast<std::size_t>(g)].params = qctn::perturbed_identity(2, 1.0, 3);
  Eigen::VectorXd e0 = Eigen::VectorXd::Zero(16);
  e0(0) = 1.0;
  const Eigen::VectorXd expected =
      oracle::embed(qctn::realize_gate_matrix(a.gates[static_cast<std::size_t>(g)].params), {2, 3}, 4) * e0;
  EXPECT_LT(max_diff(qctn::realize_statevector(a), expected), 1e-14);
}

TEST(Ansatz, StatevectorSizeLimit) {
  const auto a = qctn::build_ansatz(Family::qc_b, qctn::kMaxStatevectorQubits + 1, 0, 1);
  EXPECT_THROW(qctn::realize_statevector(a), qctn::AnsatzError);
}

TEST(Ansatz, RegroupBondQubits) {
  EXPECT_EQ(qctn::regroup_qc_as_qmps(qctn::build_ansatz(Family::qc_b, 8, 0, 3)).q, 2);
  EXPECT_EQ(qctn::regroup_qc_as_qmps(qctn::build_ansatz(Family::qc_l, 6, 0, 2)).q, 2);
  EXPECT_EQ(qctn::regroup_qc_as_qmps(qctn::build_ansatz(Family::qc_b, 8, 0, 1)).q, 0);
  for (int tau = 2; tau <= 4; ++tau) {
    EXPECT_EQ(qctn::regroup_qc_as_qmps(qctn::build_ansatz(Family::qc_b, 10, 0, tau)).q, tau - 1);
    EXPECT_EQ(qctn::regroup_qc_as_qmps(qctn::build_ansatz(Family::qc_l, 10, 0, tau)).q, tau);
  }
  EXPECT_THROW(qctn::regroup_qc_as_qmps(qctn::build_ansatz(Family::qmps_b, 8, 2, 2)), qctn::AnsatzError);
}

TEST(Ansatz, RegroupPreservesStateThroughBlocks) {
  std::uint64_t seed = 100;
  for (Family f : {Family::qc_b, Family::qc_l}) {
    for (int tau = 1; tau <= 4; ++tau) {
      auto a = qctn::build_ansatz(f, 8, 0, tau);
      qctn::randomize_parameters(a, 1.0, seed++);
      const auto r = qctn::regroup_qc_as_qmps(a);
      EXPECT_TRUE(r.source_family.has_value());
      const auto psi = qctn::to_statevector(qctn::qmps_to_dense_mps(r));
      EXPECT_LT(max_diff(psi, oracle::circuit_state(a)), 1e-12) << qctn::family_name(f) << " tau=" << tau;
    }
  }
}

TEST(Ansatz, FlatParametersRoundTrip) {
  auto a = qctn::build_ansatz(Family::qmps_l, 6, 2, 2);
  qctn::randomize_parameters(a, 0.5, 7);
  const auto x = a.flat_parameters();
  EXPECT_EQ(x.size(), a.parameter_count());
  auto b = qctn::build_ansatz(Family::qmps_l, 6, 2, 2);
  b.set_flat_parameters(x);
  EXPECT_EQ(b.flat_parameters(), x);
  EXPECT_THROW(b.set_flat_parameters(std::vector<double>(3)), std::invalid_argument);
}

TEST(Ansatz, JsonRoundTrip) {
  for (Family f : {Family::qmps_m, Family::qmera_b, Family::qc_l, Family::dense_block_mera}) {
    auto a = qctn::build_ansatz(f, 8, 2, 2, 1);
    qctn::randomize_parameters(a, 0.3, 11);
    const auto b = qctn::descriptor_from_json(qctn::to_json(a));
    EXPECT_EQ(b.family, a.family);
    EXPECT_EQ(b.flat_parameters(), a.flat_parameters());
    EXPECT_EQ(wires_of(b), wires_of(a));
    EXPECT_EQ(b.blocks.size(), a.blocks.size());
    for (std::size_t g = 0; g < a.gates.size(); ++g) {
      EXPECT_EQ(b.gates[g].layer, a.gates[g].layer);
      EXPECT_EQ(b.gates[g].unit, a.gates[g].unit);
    }
  }
  const auto path = (std::filesystem::temp_directory_path() / "qctn_ansatz_rt.json").string();
  auto a = qctn::build_ansatz(Family::qmps_b, 6, 2, 2);
  qctn::randomize_parameters(a, 0.3, 12);
  qctn::save_descriptor(a, path, {{"note", "x"}});
  EXPECT_EQ(qctn::load_descriptor(path).flat_parameters(), a.flat_parameters());
  std::filesystem::remove(path);
}

TEST(Ansatz, ValidateCatchesBrokenDescriptors) {
  auto a = qctn::build_ansatz(Family::qc_b, 4, 0, 1);
  a.gates[0].wires = {0, 0};
  EXPECT_THROW(qctn::validate(a), qctn::AnsatzError);
  a = qctn::build_ansatz(Family::qc_b, 4, 0, 1);
  a.gates[0].wires = {3, 4};
  EXPECT_THROW(qctn::validate(a), qctn::AnsatzError);
  auto m = qctn::build_ansatz(Family::qmps_b, 6, 2, 2);
  std::swap(m.blocks[0], m.blocks[1]);
  EXPECT_THROW(qctn::validate(m), qctn::AnsatzError);
}

}  // namespace
