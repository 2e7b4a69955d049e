#pragma once

#include "qctn/mps.hpp"

#include <cstdint>
#include <vector>

namespace qctn {

struct DmrgOptions {
  std::size_t max_bond = 32;
  int max_sweeps = 40;
  double tol = 1e-10;        // relative energy change between sweeps
  double cutoff = 1e-12;     // singular values below cutoff * s_max are dropped
  std::size_t initial_bond = 4;
  std::uint64_t seed = 7;
};

struct DmrgResult {
  MPS state;
  double energy = 0.0;
  std::vector<double> energy_trace;  // one entry per full sweep
  bool converged = false;
  double max_discarded_weight = 0.0;  // over the final sweep
};

/// Two-site DMRG with Lanczos local solves.
DmrgResult dmrg_ground_state(const MPO& h, const DmrgOptions& options);

}  // namespace qctn
