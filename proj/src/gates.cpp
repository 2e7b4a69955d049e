#include "qctn/gates.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>
#include <random>

namespace qctn {

namespace {

int gate_dim(int m) {
  if (m < 1 || m > 6) throw std::invalid_argument("gate qubit count must be in [1, 6]");
  return 1 << m;
}

void check_params(const GateParams& p) {
  if (p.theta.size() != gate_param_count(p.m)) {
    throw std::invalid_argument("gate on " + std::to_string(p.m) + " qubits needs " +
                                std::to_string(gate_param_count(p.m)) + " angles, got " +
                                std::to_string(p.theta.size()));
  }
}

Eigen::MatrixXd antisymmetric_from_theta(const std::vector<double>& theta, int m) {
  const int n = gate_dim(m);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  std::size_t i = 0;
  for (int r = 0; r < n; ++r) {
    for (int c = r + 1; c < n; ++c, ++i) {
      a(c, r) = theta[i];
      a(r, c) = -theta[i];
    }
  }
  return a;
}

std::vector<double> theta_from_antisymmetric(const Eigen::MatrixXd& a) {
  const int n = static_cast<int>(a.rows());
  std::vector<double> theta;
  theta.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (int r = 0; r < n; ++r) {
    for (int c = r + 1; c < n; ++c) theta.push_back(0.5 * (a(c, r) - a(r, c)));
  }
  return theta;
}

// Frechet derivative of exp at `a` in direction `e` (upper-right block of
// the exponential of [[a, e], [0, a]]).
Eigen::MatrixXd expm_frechet(const Eigen::MatrixXd& a, const Eigen::MatrixXd& e) {
  const Eigen::Index n = a.rows();
  Eigen::MatrixXd big = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  big.topLeftCorner(n, n) = a;
  big.bottomRightCorner(n, n) = a;
  big.topRightCorner(n, n) = e;
  return expm(big).topRightCorner(n, n);
}

// Real logarithm of an orthogonal matrix with det +1.
Eigen::MatrixXd log_special_orthogonal(const Eigen::MatrixXd& w) {
  const Eigen::Index n = w.rows();
  Eigen::RealSchur<Eigen::MatrixXd> schur(w);
  const Eigen::MatrixXd& t = schur.matrixT();
  const Eigen::MatrixXd& u = schur.matrixU();
  Eigen::MatrixXd logt = Eigen::MatrixXd::Zero(n, n);
  std::vector<Eigen::Index> minus_one;
  for (Eigen::Index i = 0; i < n;) {
    const bool block = i + 1 < n && std::abs(t(i + 1, i)) > 0.0;
    if (block) {
      const double c = t(i, i) / 2.0 + t(i + 1, i + 1) / 2.0;
      const double s = 0.5 * (t(i + 1, i) - t(i, i + 1));
      const double phi = std::atan2(s, c);
      logt(i + 1, i) = phi;
      logt(i, i + 1) = -phi;
      i += 2;
    } else {
      if (t(i, i) < 0.0) minus_one.push_back(i);
      i += 1;
    }
  }
  if (minus_one.size() % 2 != 0) throw LogBranchError("matrix is not in SO(n): odd number of -1 eigenvalues");
  for (std::size_t k = 0; k < minus_one.size(); k += 2) {
    logt(minus_one[k + 1], minus_one[k]) = std::numbers::pi;
    logt(minus_one[k], minus_one[k + 1]) = -std::numbers::pi;
  }
  Eigen::MatrixXd a = u * logt * u.transpose();
  return 0.5 * (a - a.transpose());
}

}  // namespace

GateParams GateParams::identity(int m) { return GateParams{m, std::vector<double>(gate_param_count(m), 0.0)}; }

std::size_t gate_param_count(int m) {
  const std::size_t n = static_cast<std::size_t>(gate_dim(m));
  return n * (n - 1) / 2;
}

std::vector<std::pair<int, int>> generator_pairs(int m) {
  const int n = gate_dim(m);
  std::vector<std::pair<int, int>> pairs;
  for (int r = 0; r < n; ++r) {
    for (int c = r + 1; c < n; ++c) pairs.emplace_back(r, c);
  }
  return pairs;
}

Eigen::MatrixXd generator_matrix(const GateParams& p) {
  check_params(p);
  return antisymmetric_from_theta(p.theta, p.m);
}

Eigen::MatrixXd expm(const Eigen::MatrixXd& a) {
  const Eigen::Index n = a.rows();
  const double norm1 = a.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm1 > 0.25) squarings = static_cast<int>(std::ceil(std::log2(norm1 / 0.25)));
  const Eigen::MatrixXd b = a / std::ldexp(1.0, squarings);

  Eigen::MatrixXd result = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd term = Eigen::MatrixXd::Identity(n, n);
  for (int k = 1; k < 40; ++k) {
    term = term * b / static_cast<double>(k);
    result += term;
    if (term.cwiseAbs().maxCoeff() < 1e-18) break;
  }
  for (int i = 0; i < squarings; ++i) result = result * result;
  return result;
}

Eigen::MatrixXd realize_gate_matrix(const GateParams& p) { return expm(generator_matrix(p)); }

Tensor realize_gate(const GateParams& p) { return Tensor::from_matrix(realize_gate_matrix(p)); }

std::vector<Tensor> gate_jacobian(const GateParams& p) {
  const Eigen::MatrixXd a = generator_matrix(p);
  const int n = static_cast<int>(a.rows());
  std::vector<Tensor> out;
  out.reserve(p.theta.size());
  for (auto [r, c] : generator_pairs(p.m)) {
    Eigen::MatrixXd e = Eigen::MatrixXd::Zero(n, n);
    e(c, r) = 1.0;
    e(r, c) = -1.0;
    out.push_back(Tensor::from_matrix(expm_frechet(a, e)));
  }
  return out;
}

std::vector<double> pullback_gradient(const GateParams& p, const Eigen::MatrixXd& env) {
  const Eigen::MatrixXd a = generator_matrix(p);
  // <env, L(a, e)> = <L(a^T, env), e>
  const Eigen::MatrixXd g = expm_frechet(a.transpose(), env);
  std::vector<double> grad;
  grad.reserve(p.theta.size());
  for (auto [r, c] : generator_pairs(p.m)) grad.push_back(g(c, r) - g(r, c));
  return grad;
}

GateParams perturbed_identity(int m, double strength, std::uint64_t seed) {
  if (!(strength >= 0.0)) throw std::invalid_argument("perturbation strength must be non-negative");
  GateParams p = GateParams::identity(m);
  if (strength == 0.0) return p;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-strength, strength);
  for (double& t : p.theta) t = dist(rng);
  return p;
}

GateParams angles_from_orthogonal(const Eigen::MatrixXd& w, int m) {
  const int n = gate_dim(m);
  if (w.rows() != n || w.cols() != n) throw std::invalid_argument("matrix size does not match qubit count");
  std::mt19937_64 rng(0x5eed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd rot = Eigen::MatrixXd::Identity(n, n);
  for (int attempt = 0; attempt < 4; ++attempt) {
    const Eigen::MatrixXd conj = rot * w * rot.transpose();
    try {
      const Eigen::MatrixXd a = rot.transpose() * log_special_orthogonal(conj) * rot;
      GateParams p{m, theta_from_antisymmetric(0.5 * (a - a.transpose()))};
      if ((realize_gate_matrix(p) - w).cwiseAbs().maxCoeff() < 1e-10) return p;
    } catch (const LogBranchError&) {
      if (attempt == 3) throw;
    }
    Eigen::MatrixXd g(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) g(i, j) = normal(rng);
    rot = Eigen::HouseholderQR<Eigen::MatrixXd>(g).householderQ();
  }
  throw LogBranchError("could not extract gate angles from orthogonal matrix");
}

Eigen::MatrixXd best_special_orthogonal(const Eigen::MatrixXd& x) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::MatrixXd u = svd.matrixU();
  const Eigen::MatrixXd v = svd.matrixV();
  if ((u * v.transpose()).determinant() < 0.0) u.col(u.cols() - 1) *= -1.0;
  return u * v.transpose();
}

}  // namespace qctn
