#pragma once

#include "qctn/hamiltonians.hpp"

#include <stdexcept>
#include <vector>

namespace qctn {

class SizeLimitError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct EDResult {
  double ground_energy = 0.0;
  std::vector<double> ground_vector;
  int qubit_count = 0;
  bool degenerate = false;
  double gap = 0.0;       // to the next eigenvalue
  double residual = 0.0;  // ||H v - E v||_inf
};

inline constexpr int kMaxDenseEdQubits = 10;
inline constexpr int kMaxEdQubits = 22;

/// Dense diagonalization up to kMaxDenseEdQubits, restarted Lanczos above.
EDResult ed_ground_state(const TermList& h);
EDResult ed_ground_state(const ModelSpec& spec);

double ed_expectation(const EDResult& result, const TermList& observable);

/// <v|O|v> for any vector of matching length.
double dense_expectation(const std::vector<double>& v, const TermList& observable);

}  // namespace qctn
