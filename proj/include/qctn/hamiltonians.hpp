#pragma once

#include "qctn/mps.hpp"

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace qctn {

/// Real single-qubit operators. |0> is spin up and an empty fermion mode.
/// iSy is the real matrix i*S^y; A / Ad annihilate / create a fermion mode
/// without the Jordan-Wigner string.
enum class Op { I, X, Z, Sx, iSy, Sz, Sp, Sm, N, A, Ad };

Eigen::Matrix2d op_matrix(Op op);

class ModelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// One factor of a product term: a 2x2 matrix acting on one qubit.
struct Factor {
  int site = 0;
  Eigen::Matrix2d matrix;
};

/// coefficient * prod factors, with at most one factor per site (sorted).
/// An empty factor list is a constant.
struct Term {
  double coefficient = 0.0;
  std::vector<Factor> factors;

  std::vector<int> support() const;
};

/// Builds a term from an operator product written left to right; factors on
/// the same site are multiplied in that order.
Term make_term(double coefficient, const std::vector<std::pair<int, Op>>& product);
Term make_term(double coefficient, const std::vector<Factor>& product);

struct TermList {
  int qubit_count = 0;
  std::vector<Term> terms;

  void add(Term t);
  void append(const TermList& other, double scale = 1.0);
};

enum class Model { heisenberg_1d, heisenberg_2d_snake, fermi_hubbard_1d };

std::string model_name(Model m);
Model parse_model(const std::string& name);

struct ModelSpec {
  Model model = Model::heisenberg_1d;
  int L = 0;   // chain sites (1D models)
  int Lx = 0;  // 2D geometry
  int Ly = 0;
  double J = 1.0;
  double t = 1.0;
  double U = 3.0;
  std::optional<double> mu{};  // defaults to U / 10

  double chemical_potential() const { return mu.value_or(U / 10.0); }
  int site_count() const;
  int qubit_count() const;
};

nlohmann::json to_json(const ModelSpec& s);
ModelSpec model_from_json(const nlohmann::json& j);

/// Snake order through an Lx x Ly lattice: rows in sequence, odd rows reversed.
int snake_index(int x, int y, int Lx);
std::pair<int, int> snake_coords(int index, int Lx);

TermList build_terms(const ModelSpec& spec);

/// S_i . S_j between two spin sites (qubits for spin models, the two-qubit
/// fermion sites for Hubbard), as a qubit term list.
TermList spin_correlation_terms(const ModelSpec& spec, int i, int j);

/// Exact MPO: one channel per term, then SVD compression at the cutoff.
MPO terms_to_mpo(const TermList& t, double cutoff = 1e-12);

/// y = H x over the full 2^N basis.
void apply_terms(const TermList& t, std::span<const double> x, std::span<double> y);

inline constexpr int kMaxDenseQubits = 12;
Eigen::MatrixXd densify(const TermList& t);

/// Terms acting on the same set of qubits combined into one dense matrix.
struct LocalTerm {
  std::vector<int> sites;  // sorted
  Eigen::MatrixXd matrix;  // 2^|sites| square, first site most significant
};
std::vector<LocalTerm> group_local_terms(const TermList& t);

/// Adds minus the largest eigenvalue of every local group as an identity term
/// on the same support, so each group becomes negative semidefinite.
TermList concave_shift(const TermList& t);

}  // namespace qctn
