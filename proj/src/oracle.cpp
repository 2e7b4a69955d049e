#include "qctn/oracle.hpp"

#include "qctn/lanczos.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <random>

namespace qctn {

namespace {

double residual_inf(const TermList& h, const std::vector<double>& v, double e) {
  std::vector<double> hv(v.size());
  apply_terms(h, v, hv);
  double r = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) r = std::max(r, std::abs(hv[i] - e * v[i]));
  return r;
}

// Fixes the overall sign so the largest-magnitude amplitude is positive.
void fix_sign(std::vector<double>& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (std::abs(v[i]) > std::abs(v[best]) + 1e-12) best = i;
  }
  if (v[best] < 0.0) {
    for (double& x : v) x = -x;
  }
}

}  // namespace

EDResult ed_ground_state(const TermList& h) {
  if (h.qubit_count > kMaxEdQubits) {
    throw SizeLimitError("exact diagonalization is limited to " + std::to_string(kMaxEdQubits) + " qubits, got " +
                         std::to_string(h.qubit_count));
  }
  EDResult r;
  r.qubit_count = h.qubit_count;
  const std::size_t dim = std::size_t{1} << h.qubit_count;
  if (h.qubit_count <= kMaxDenseEdQubits) {
    const Eigen::MatrixXd m = densify(h);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()));
    r.ground_energy = es.eigenvalues()(0);
    r.ground_vector.assign(es.eigenvectors().col(0).data(), es.eigenvectors().col(0).data() + dim);
    r.gap = dim > 1 ? es.eigenvalues()(1) - es.eigenvalues()(0) : 0.0;
  } else {
    const MatVec apply = [&h](std::span<const double> x, std::span<double> y) { apply_terms(h, x, y); };
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> normal;
    std::vector<double> start(dim);
    for (double& x : start) x = normal(rng);
    LanczosOptions opt;
    opt.krylov_dim = static_cast<int>(std::clamp<std::size_t>((std::size_t{1} << 27) / (8 * dim), 8, 60));
    opt.tolerance = 1e-11;
    opt.max_restarts = 500;
    const LanczosResult ground = lanczos_lowest(apply, start, opt);
    r.ground_energy = ground.value;
    r.ground_vector = ground.vector;
    for (double& x : start) x = normal(rng);
    opt.tolerance = 1e-6;
    const LanczosResult next = lanczos_lowest(apply, start, opt, {ground.vector});
    r.gap = next.value - ground.value;
  }
  fix_sign(r.ground_vector);
  r.degenerate = r.gap < 1e-8;
  r.residual = residual_inf(h, r.ground_vector, r.ground_energy);
  return r;
}

EDResult ed_ground_state(const ModelSpec& spec) { return ed_ground_state(build_terms(spec)); }

double dense_expectation(const std::vector<double>& v, const TermList& observable) {
  if (v.size() != (std::size_t{1} << observable.qubit_count)) {
    throw SizeLimitError("vector length does not match the observable's qubit count");
  }
  std::vector<double> ov(v.size());
  apply_terms(observable, v, ov);
  double s = 0.0, n = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    s += v[i] * ov[i];
    n += v[i] * v[i];
  }
  return s / n;
}

double ed_expectation(const EDResult& result, const TermList& observable) {
  if (observable.qubit_count != result.qubit_count) throw SizeLimitError("observable and ground state qubit counts differ");
  return dense_expectation(result.ground_vector, observable);
}

}  // namespace qctn
