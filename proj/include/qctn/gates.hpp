#pragma once

#include "qctn/tensor.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

namespace qctn {

/// Angles of a real orthogonal gate on `m` qubits. The gate is
/// exp(sum_i theta_i A_i) where A_i = E(c,r) - E(r,c) for the i-th pair
/// r < c in lexicographic order, so the gate always lies in SO(2^m).
struct GateParams {
  int m = 2;
  std::vector<double> theta;

  static GateParams identity(int m);
  bool operator==(const GateParams&) const = default;
};

/// 2^(m-1) (2^m - 1); six for a two-qubit gate.
std::size_t gate_param_count(int m);

/// (row, col) of each generator, row < col, lexicographic.
std::vector<std::pair<int, int>> generator_pairs(int m);

/// Antisymmetric generator matrix sum_i theta_i A_i.
Eigen::MatrixXd generator_matrix(const GateParams& p);

/// Matrix exponential by scaling and squaring with a Taylor series.
Eigen::MatrixXd expm(const Eigen::MatrixXd& a);

Tensor realize_gate(const GateParams& p);
Eigen::MatrixXd realize_gate_matrix(const GateParams& p);

/// Partial derivatives dG/dtheta_i, one 2^m x 2^m tensor per angle.
std::vector<Tensor> gate_jacobian(const GateParams& p);

/// Chain rule through the exponential map: returns sum_ab env_ab dG_ab/dtheta_i
/// for every i, using one exponential of a doubled matrix.
std::vector<double> pullback_gradient(const GateParams& p, const Eigen::MatrixXd& env);

/// Angles drawn uniformly from [-strength, strength].
GateParams perturbed_identity(int m, double strength, std::uint64_t seed);

class LogBranchError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Recovers angles with realize_gate(result) == w for w in SO(2^m).
/// Eigenvalue -1 pairs are resolved explicitly; if the round trip still
/// fails the matrix is conjugated by random rotations before giving up.
GateParams angles_from_orthogonal(const Eigen::MatrixXd& w, int m);

/// argmax over W in SO(n) of tr(W^T x), via the SVD of x.
Eigen::MatrixXd best_special_orthogonal(const Eigen::MatrixXd& x);

}  // namespace qctn
