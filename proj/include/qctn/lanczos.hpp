#pragma once

#include <functional>
#include <span>
#include <vector>

namespace qctn {

using MatVec = std::function<void(std::span<const double>, std::span<double>)>;

struct LanczosOptions {
  int krylov_dim = 40;
  int max_restarts = 200;
  double tolerance = 1e-10;  // on the residual 2-norm ||H x - theta x||
};

struct LanczosResult {
  double value = 0.0;
  std::vector<double> vector;
  double residual = 0.0;
  int matvecs = 0;
  bool converged = false;
};

/// Lowest eigenpair of a symmetric operator by restarted Lanczos with full
/// reorthogonalization. The search is kept orthogonal to `deflate`
/// (orthonormal vectors), which yields the next eigenpair.
LanczosResult lanczos_lowest(const MatVec& apply, std::vector<double> start, const LanczosOptions& options,
                             const std::vector<std::vector<double>>& deflate = {});

}  // namespace qctn
