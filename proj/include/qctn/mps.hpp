#pragma once

#include "qctn/ansatz.hpp"
#include "qctn/tensor.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace qctn {

enum class CanonicalForm { none, left, right, mixed };

/// Site tensors are (left bond, physical, right bond).
struct MPS {
  std::vector<Tensor> sites;
  std::size_t phys_dim = 2;
  CanonicalForm form = CanonicalForm::none;
  int center = -1;  // mixed form only

  std::size_t length() const { return sites.size(); }
  std::size_t max_bond() const;
  std::vector<std::size_t> bond_dims() const;
};

/// Site tensors are (left bond, physical out, physical in, right bond).
struct MPO {
  std::vector<Tensor> sites;

  std::size_t length() const { return sites.size(); }
  std::size_t max_bond() const;
  std::vector<std::size_t> bond_dims() const;
};

MPS product_state(const std::vector<int>& bits);
MPS random_mps(std::size_t L, std::size_t D, std::uint64_t seed, std::size_t d = 2);

/// QR/LQ sweeps; the result is normalized. `center` is used for mixed form.
MPS canonicalize(const MPS& m, CanonicalForm form, int center = 0);

/// Max-abs deviation of a site tensor from the left (sum over l,p) or right
/// (sum over p,r) isometry condition.
double isometry_residual(const Tensor& site, Side side);

double overlap(const MPS& a, const MPS& b);
double norm(const MPS& m);

/// <m|H|m> by exact transfer contraction.
double mpo_expectation(const MPS& m, const MPO& h);

/// One transfer step of <m|H|m>: env is (bra bond, MPO bond, ket bond).
Tensor mpo_env_left(const Tensor& env, const Tensor& site, const Tensor& w);
Tensor mpo_env_right(const Tensor& env, const Tensor& site, const Tensor& w);

/// <m| prod_k ops_k |m> / <m|m> for single-site 2x2 operators at distinct sites.
double product_expectation(const MPS& m, const std::vector<std::pair<int, Eigen::Matrix2d>>& ops);

std::vector<double> to_statevector(const MPS& m);
MPS from_statevector(const std::vector<double>& psi, std::size_t L, std::size_t max_bond, double cutoff = 1e-14);
Eigen::MatrixXd mpo_to_dense(const MPO& h);

/// Drops bond directions whose singular values fall below cutoff * s_max and
/// returns a right-canonical, normalized MPS.
MPS compress(const MPS& m, std::size_t max_bond, double cutoff);

/// Compresses an MPO bond by bond (treating each site as a d^2 physical index).
MPO compress_mpo(const MPO& h, double cutoff);

/// Geometry of a block window inside a block sequence.
struct BlockShape {
  int lo = 0;
  int hi = 0;
  int n = 0;         // wires in the window
  int bond_in = 0;   // wires arriving from the previous block
  int fresh = 0;     // wires starting in |0>
  int emitted = 0;   // wires leaving as physical sites
  int bond_out = 0;  // wires handed to the next block
};
std::vector<BlockShape> block_shapes(const std::vector<Block>& blocks, int L);

/// Block unitary restricted to its |0> inputs: 2^n x 2^bond_in, stored
/// row-major as [output basis][input column].
std::vector<double> block_columns(const AnsatzDescriptor& a, const Block& block, const BlockShape& shape);

/// Block tensor (2^bond_in, 2^emitted, 2^bond_out) from block_columns.
Tensor block_tensor(const std::vector<double>& columns, const BlockShape& shape);

/// Dense MPS of a qMPS descriptor, right-canonical with trivial bonds trimmed.
MPS qmps_to_dense_mps(const AnsatzDescriptor& a);

/// Applies every gate of any family to |0...0> as an MPS without truncation
/// (only numerically zero singular values are dropped). Gates may span at most
/// kMaxGateSpan wires.
inline constexpr int kMaxGateSpan = 22;
MPS circuit_to_mps(const AnsatzDescriptor& a);

/// Binary checkpoint: magic, L, d, then per site three extents and the data,
/// all little-endian (uint64 extents, float64 data).
void save_mps(const MPS& m, const std::string& path);
MPS load_mps(const std::string& path);

}  // namespace qctn
