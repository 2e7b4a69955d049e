#include "qctn/statevector.hpp"

#include <algorithm>
#include <stdexcept>

namespace qctn::sv {

namespace {

struct GateLayout {
  std::vector<std::size_t> offsets;  // local basis index -> global offset
  std::vector<int> positions;        // sorted bit positions of gate wires
  std::size_t rest_count = 0;
};

GateLayout layout(int n, std::span<const int> wires) {
  const int m = static_cast<int>(wires.size());
  GateLayout g;
  for (int w : wires) {
    if (w < 0 || w >= n) throw std::out_of_range("gate wire outside register");
    g.positions.push_back(n - 1 - w);
  }
  std::vector<int> sorted = g.positions;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw std::invalid_argument("gate wires must be distinct");
  }
  g.offsets.resize(std::size_t{1} << m);
  for (std::size_t j = 0; j < g.offsets.size(); ++j) {
    std::size_t off = 0;
    for (int k = 0; k < m; ++k) {
      if ((j >> (m - 1 - k)) & 1U) off |= std::size_t{1} << g.positions[static_cast<std::size_t>(k)];
    }
    g.offsets[j] = off;
  }
  g.positions = sorted;
  g.rest_count = std::size_t{1} << (n - m);
  return g;
}

inline std::size_t deposit(std::size_t r, const std::vector<int>& sorted_positions) {
  for (int p : sorted_positions) {
    const std::size_t low = r & ((std::size_t{1} << p) - 1);
    r = ((r >> p) << (p + 1)) | low;
  }
  return r;
}

// Single-vector fast path with the gate size known at compile time.
template <std::size_t Dim, bool Transpose>
void apply_small(std::span<double> data, const GateLayout& lay, const Eigen::MatrixXd& g) {
  double gm[Dim * Dim];
  for (std::size_t o = 0; o < Dim; ++o) {
    for (std::size_t i = 0; i < Dim; ++i) {
      gm[o * Dim + i] = Transpose ? g(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(o))
                                  : g(static_cast<Eigen::Index>(o), static_cast<Eigen::Index>(i));
    }
  }
  std::size_t off[Dim];
  std::copy(lay.offsets.begin(), lay.offsets.end(), off);
  double in[Dim];
  for (std::size_t r = 0; r < lay.rest_count; ++r) {
    double* base = data.data() + deposit(r, lay.positions);
    for (std::size_t j = 0; j < Dim; ++j) in[j] = base[off[j]];
    for (std::size_t o = 0; o < Dim; ++o) {
      double acc = 0.0;
      for (std::size_t i = 0; i < Dim; ++i) acc += gm[o * Dim + i] * in[i];
      base[off[o]] = acc;
    }
  }
}

template <bool Transpose>
void apply_impl(std::span<double> data, int n, std::span<const int> wires, const Eigen::MatrixXd& g,
                std::size_t batch) {
  const std::size_t dim = std::size_t{1} << wires.size();
  if (static_cast<std::size_t>(g.rows()) != dim || static_cast<std::size_t>(g.cols()) != dim) {
    throw std::invalid_argument("gate matrix size does not match wire count");
  }
  if (data.size() != (std::size_t{1} << n) * batch) throw std::invalid_argument("amplitude array has wrong size");
  const GateLayout lay = layout(n, wires);
  if (batch == 1) {
    switch (dim) {
      case 2: return apply_small<2, Transpose>(data, lay, g);
      case 4: return apply_small<4, Transpose>(data, lay, g);
      case 8: return apply_small<8, Transpose>(data, lay, g);
      default: break;
    }
  }
  std::vector<double> in(dim * batch), out(dim * batch);
  for (std::size_t r = 0; r < lay.rest_count; ++r) {
    const std::size_t base = deposit(r, lay.positions);
    for (std::size_t j = 0; j < dim; ++j) {
      const double* src = data.data() + (base + lay.offsets[j]) * batch;
      std::copy(src, src + batch, in.data() + j * batch);
    }
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t o = 0; o < dim; ++o) {
      double* dst = out.data() + o * batch;
      for (std::size_t i = 0; i < dim; ++i) {
        const double c = Transpose ? g(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(o))
                                   : g(static_cast<Eigen::Index>(o), static_cast<Eigen::Index>(i));
        if (c == 0.0) continue;
        const double* s = in.data() + i * batch;
        for (std::size_t b = 0; b < batch; ++b) dst[b] += c * s[b];
      }
    }
    for (std::size_t j = 0; j < dim; ++j) {
      std::copy(out.data() + j * batch, out.data() + (j + 1) * batch, data.data() + (base + lay.offsets[j]) * batch);
    }
  }
}

}  // namespace

std::vector<double> basis_state(int n_qubits, std::size_t index) {
  std::vector<double> v(std::size_t{1} << n_qubits, 0.0);
  v.at(index) = 1.0;
  return v;
}

void apply_gate(std::span<double> data, int n, std::span<const int> wires, const Eigen::MatrixXd& g,
                std::size_t batch) {
  apply_impl<false>(data, n, wires, g, batch);
}

void apply_gate_transpose(std::span<double> data, int n, std::span<const int> wires, const Eigen::MatrixXd& g,
                          std::size_t batch) {
  apply_impl<true>(data, n, wires, g, batch);
}

namespace {

template <std::size_t Dim>
void environment_small(std::span<const double> out_side, std::span<const double> in_side, const GateLayout& lay,
                       Eigen::MatrixXd& env, double scale) {
  double acc[Dim * Dim] = {};
  std::size_t off[Dim];
  std::copy(lay.offsets.begin(), lay.offsets.end(), off);
  for (std::size_t r = 0; r < lay.rest_count; ++r) {
    const std::size_t base = deposit(r, lay.positions);
    const double* a = out_side.data() + base;
    const double* b = in_side.data() + base;
    for (std::size_t o = 0; o < Dim; ++o) {
      const double ao = a[off[o]];
      for (std::size_t i = 0; i < Dim; ++i) acc[o * Dim + i] += ao * b[off[i]];
    }
  }
  for (std::size_t o = 0; o < Dim; ++o) {
    for (std::size_t i = 0; i < Dim; ++i) {
      env(static_cast<Eigen::Index>(o), static_cast<Eigen::Index>(i)) += scale * acc[o * Dim + i];
    }
  }
}

template <std::size_t Dim>
void apply_add_small(std::span<const double> in, std::span<double> out, const GateLayout& lay,
                     const Eigen::MatrixXd& g) {
  double gm[Dim * Dim];
  for (std::size_t o = 0; o < Dim; ++o) {
    for (std::size_t i = 0; i < Dim; ++i) gm[o * Dim + i] = g(static_cast<Eigen::Index>(o), static_cast<Eigen::Index>(i));
  }
  std::size_t off[Dim];
  std::copy(lay.offsets.begin(), lay.offsets.end(), off);
  double x[Dim];
  for (std::size_t r = 0; r < lay.rest_count; ++r) {
    const std::size_t base = deposit(r, lay.positions);
    for (std::size_t j = 0; j < Dim; ++j) x[j] = in[base + off[j]];
    for (std::size_t o = 0; o < Dim; ++o) {
      double acc = 0.0;
      for (std::size_t i = 0; i < Dim; ++i) acc += gm[o * Dim + i] * x[i];
      out[base + off[o]] += acc;
    }
  }
}

}  // namespace

void apply_add(std::span<const double> in, std::span<double> out, int n, std::span<const int> wires,
               const Eigen::MatrixXd& g) {
  const std::size_t dim = std::size_t{1} << wires.size();
  if (static_cast<std::size_t>(g.rows()) != dim || static_cast<std::size_t>(g.cols()) != dim) {
    throw std::invalid_argument("operator size does not match wire count");
  }
  const std::size_t full = std::size_t{1} << n;
  if (in.size() != full || out.size() != full) throw std::invalid_argument("amplitude array has wrong size");
  const GateLayout lay = layout(n, wires);
  switch (dim) {
    case 2: return apply_add_small<2>(in, out, lay, g);
    case 4: return apply_add_small<4>(in, out, lay, g);
    case 8: return apply_add_small<8>(in, out, lay, g);
    default: break;
  }
  std::vector<double> x(dim);
  for (std::size_t r = 0; r < lay.rest_count; ++r) {
    const std::size_t base = deposit(r, lay.positions);
    for (std::size_t j = 0; j < dim; ++j) x[j] = in[base + lay.offsets[j]];
    for (std::size_t o = 0; o < dim; ++o) {
      double acc = 0.0;
      for (std::size_t i = 0; i < dim; ++i) acc += g(static_cast<Eigen::Index>(o), static_cast<Eigen::Index>(i)) * x[i];
      out[base + lay.offsets[o]] += acc;
    }
  }
}

void accumulate_environment(std::span<const double> out_side, std::span<const double> in_side, int n,
                            std::span<const int> wires, Eigen::MatrixXd& env, double scale, std::size_t batch) {
  const std::size_t dim = std::size_t{1} << wires.size();
  if (static_cast<std::size_t>(env.rows()) != dim || static_cast<std::size_t>(env.cols()) != dim) {
    throw std::invalid_argument("environment size does not match wire count");
  }
  const GateLayout lay = layout(n, wires);
  if (batch == 1) {
    switch (dim) {
      case 2: return environment_small<2>(out_side, in_side, lay, env, scale);
      case 4: return environment_small<4>(out_side, in_side, lay, env, scale);
      case 8: return environment_small<8>(out_side, in_side, lay, env, scale);
      default: break;
    }
  }
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  for (std::size_t r = 0; r < lay.rest_count; ++r) {
    const std::size_t base = deposit(r, lay.positions);
    for (std::size_t o = 0; o < dim; ++o) {
      const double* a = out_side.data() + (base + lay.offsets[o]) * batch;
      for (std::size_t i = 0; i < dim; ++i) {
        const double* b = in_side.data() + (base + lay.offsets[i]) * batch;
        double s = 0.0;
        for (std::size_t k = 0; k < batch; ++k) s += a[k] * b[k];
        acc(static_cast<Eigen::Index>(o), static_cast<Eigen::Index>(i)) += s;
      }
    }
  }
  env += scale * acc;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot product of vectors with different lengths");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace qctn::sv
