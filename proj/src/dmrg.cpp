#include "qctn/dmrg.hpp"

#include "qctn/lanczos.hpp"

#include <cmath>
#include <limits>

namespace qctn {

namespace {

Tensor apply_two_site(const Tensor& left, const Tensor& w1, const Tensor& w2, const Tensor& right, const Tensor& theta) {
  const Tensor x = contract_pair(left, theta, {{2, 0}});            // (bra, m, d1, d2, r)
  const Tensor y = contract_pair(x, w1, {{1, 0}, {2, 2}});          // (bra, d2, r, o1, m1)
  const Tensor z = contract_pair(y, w2, {{4, 0}, {1, 2}});          // (bra, r, o1, o2, m2)
  const Tensor out = contract_pair(z, right, {{4, 1}, {1, 2}});     // (bra, o1, o2, r')
  return out;
}

}  // namespace

DmrgResult dmrg_ground_state(const MPO& h, const DmrgOptions& options) {
  if (options.max_bond < 1) throw std::invalid_argument("DMRG bond dimension must be >= 1");
  const std::size_t L = h.length();
  DmrgResult result;
  if (L == 1) {
    const Eigen::MatrixXd m = mpo_to_dense(h);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()));
    Tensor site({1, static_cast<std::size_t>(m.rows()), 1});
    for (Eigen::Index i = 0; i < m.rows(); ++i) site[static_cast<std::size_t>(i)] = es.eigenvectors()(i, 0);
    result.state.sites.push_back(site);
    result.energy = es.eigenvalues()(0);
    result.energy_trace = {result.energy};
    result.converged = true;
    return result;
  }
  MPS psi = canonicalize(random_mps(L, std::min(options.initial_bond, options.max_bond), options.seed), CanonicalForm::right);
  std::vector<Tensor> left(L + 1), right(L + 1);
  left[0] = Tensor({1, 1, 1}, {1.0});
  right[L] = Tensor({1, 1, 1}, {1.0});
  for (std::size_t i = L; i-- > 1;) right[i] = mpo_env_right(right[i + 1], psi.sites[i], h.sites[i]);

  LanczosOptions lopt;
  lopt.krylov_dim = 30;
  lopt.tolerance = 1e-10;
  lopt.max_restarts = 50;

  double energy = std::numeric_limits<double>::infinity();
  auto optimize = [&](std::size_t i, bool moving_right) {
    const Tensor theta0 = contract_pair(psi.sites[i], psi.sites[i + 1], {{2, 0}});
    const Shape shape = theta0.shape();
    const MatVec apply = [&](std::span<const double> x, std::span<double> y) {
      const Tensor t(shape, std::vector<double>(x.begin(), x.end()));
      const Tensor r = apply_two_site(left[i], h.sites[i], h.sites[i + 1], right[i + 2], t);
      std::copy(r.storage().begin(), r.storage().end(), y.begin());
    };
    const LanczosResult lr = lanczos_lowest(apply, theta0.storage(), lopt);
    energy = lr.value;
    auto svd = svd_truncated(Tensor(shape, lr.vector), {{0, 1}, {2, 3}}, options.max_bond, options.cutoff);
    double kept = 0.0;
    for (double s : svd.s) kept += s * s;
    result.max_discarded_weight = std::max(result.max_discarded_weight, svd.discarded_weight / (kept + svd.discarded_weight));
    const std::size_t k = svd.s.size();
    const double scale = 1.0 / std::sqrt(kept);
    if (moving_right) {
      Tensor sv = std::move(svd.vt);
      const std::size_t cols = sv.size() / k;
      for (std::size_t r = 0; r < k; ++r)
        for (std::size_t c = 0; c < cols; ++c) sv[r * cols + c] *= svd.s[r] * scale;
      psi.sites[i] = std::move(svd.u);
      psi.sites[i + 1] = std::move(sv);
      left[i + 1] = mpo_env_left(left[i], psi.sites[i], h.sites[i]);
    } else {
      Tensor us = std::move(svd.u);
      const std::size_t rows = us.size() / k;
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < k; ++c) us[r * k + c] *= svd.s[c] * scale;
      psi.sites[i] = std::move(us);
      psi.sites[i + 1] = std::move(svd.vt);
      right[i + 1] = mpo_env_right(right[i + 2], psi.sites[i + 1], h.sites[i + 1]);
    }
  };

  for (int sweep = 0; sweep < options.max_sweeps; ++sweep) {
    result.max_discarded_weight = 0.0;
    for (std::size_t i = 0; i + 1 < L; ++i) optimize(i, true);
    for (std::size_t i = L - 1; i-- > 0;) optimize(i, false);
    const double prev = result.energy_trace.empty() ? std::numeric_limits<double>::infinity() : result.energy_trace.back();
    result.energy_trace.push_back(energy);
    if (std::isfinite(prev) && std::abs(energy - prev) <= options.tol * std::abs(prev)) {
      result.converged = true;
      break;
    }
  }
  psi.form = CanonicalForm::right;
  result.state = std::move(psi);
  result.energy = energy;
  return result;
}

}  // namespace qctn
