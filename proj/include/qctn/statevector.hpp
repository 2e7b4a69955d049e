#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <vector>

/// Dense amplitude arrays. Qubit 0 is the most significant bit of the basis
/// index. A batch of `batch` vectors is stored interleaved as [basis][batch],
/// which is how block unitaries are pushed through their gates.
namespace qctn::sv {

std::vector<double> basis_state(int n_qubits, std::size_t index = 0);

/// data <- G data on `wires` (wires[0] is the most significant local bit).
void apply_gate(std::span<double> data, int n_qubits, std::span<const int> wires, const Eigen::MatrixXd& g,
                std::size_t batch = 1);

/// data <- G^T data.
void apply_gate_transpose(std::span<double> data, int n_qubits, std::span<const int> wires,
                          const Eigen::MatrixXd& g, std::size_t batch = 1);

/// out += G in on `wires` (single vectors only).
void apply_add(std::span<const double> in, std::span<double> out, int n_qubits, std::span<const int> wires,
               const Eigen::MatrixXd& g);

/// env(o, i) += scale * sum over other qubits and batch of out(o, ...) in(i, ...).
void accumulate_environment(std::span<const double> out_side, std::span<const double> in_side, int n_qubits,
                            std::span<const int> wires, Eigen::MatrixXd& env, double scale = 1.0,
                            std::size_t batch = 1);

double dot(std::span<const double> a, std::span<const double> b);

}  // namespace qctn::sv
