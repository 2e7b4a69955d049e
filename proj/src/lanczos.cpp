#include "qctn/lanczos.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace qctn {

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void axpy(double alpha, const std::vector<double>& x, std::vector<double>& y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

double normalize(std::vector<double>& v) {
  const double n = std::sqrt(dot(v, v));
  if (n > 0.0) {
    for (double& x : v) x /= n;
  }
  return n;
}

void orthogonalize(std::vector<double>& v, const std::vector<std::vector<double>>& basis) {
  for (int pass = 0; pass < 2; ++pass) {
    for (const auto& b : basis) axpy(-dot(b, v), b, v);
  }
}

}  // namespace

LanczosResult lanczos_lowest(const MatVec& apply, std::vector<double> start, const LanczosOptions& options,
                             const std::vector<std::vector<double>>& deflate) {
  const std::size_t n = start.size();
  if (n == 0) throw std::invalid_argument("Lanczos start vector is empty");
  LanczosResult result;
  std::vector<double> w(n);
  orthogonalize(start, deflate);
  if (normalize(start) < 1e-300) {
    std::mt19937_64 rng(12345);
    std::normal_distribution<double> normal;
    for (double& x : start) x = normal(rng);
    orthogonalize(start, deflate);
    normalize(start);
  }
  const int kmax = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(options.krylov_dim), n));
  for (int restart = 0; restart <= options.max_restarts; ++restart) {
    std::vector<std::vector<double>> basis{start};
    std::vector<double> alpha, beta;
    for (int k = 0; k < kmax; ++k) {
      apply(basis[static_cast<std::size_t>(k)], w);
      ++result.matvecs;
      alpha.push_back(dot(w, basis[static_cast<std::size_t>(k)]));
      orthogonalize(w, deflate);
      orthogonalize(w, basis);
      const double b = normalize(w);
      if (k + 1 == kmax || b < 1e-13) break;
      beta.push_back(b);
      basis.push_back(w);
    }
    const Eigen::Index m = static_cast<Eigen::Index>(alpha.size());
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
      t(i, i) = alpha[static_cast<std::size_t>(i)];
      if (i + 1 < m) t(i, i + 1) = t(i + 1, i) = beta[static_cast<std::size_t>(i)];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
    const Eigen::VectorXd y = es.eigenvectors().col(0);
    std::vector<double> x(n, 0.0);
    for (Eigen::Index i = 0; i < m; ++i) axpy(y(i), basis[static_cast<std::size_t>(i)], x);
    orthogonalize(x, deflate);
    normalize(x);
    apply(x, w);
    ++result.matvecs;
    const double theta = dot(x, w);
    axpy(-theta, x, w);
    orthogonalize(w, deflate);
    result.value = theta;
    result.vector = x;
    result.residual = std::sqrt(dot(w, w));
    if (result.residual < options.tolerance) {
      result.converged = true;
      break;
    }
    start = std::move(x);
  }
  return result;
}

}  // namespace qctn
