#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace qctn {

using Shape = std::vector<std::size_t>;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ContractionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Dense real tensor, row-major. Rank-0 tensors hold a single scalar.
class Tensor {
 public:
  Tensor();
  explicit Tensor(Shape shape);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor scalar(double value);
  static Tensor identity(std::size_t n);
  static Tensor from_matrix(const RowMatrix& m);
  static Tensor from_matrix(const Eigen::MatrixXd& m);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::vector<double>& storage() { return data_; }
  const std::vector<double>& storage() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double& at(std::span<const std::size_t> index);
  double at(std::span<const std::size_t> index) const;
  double& at(std::initializer_list<std::size_t> index) {
    return at(std::span<const std::size_t>(index.begin(), index.size()));
  }
  double at(std::initializer_list<std::size_t> index) const {
    return at(std::span<const std::size_t>(index.begin(), index.size()));
  }

  const std::vector<std::string>& labels() const { return labels_; }
  void set_labels(std::vector<std::string> labels);

  /// Same data with a new shape of equal total size.
  Tensor reshaped(Shape shape) const;

  /// View as a rows x (size/rows) row-major matrix.
  MatrixMap as_matrix(std::size_t rows);
  ConstMatrixMap as_matrix(std::size_t rows) const;

  /// Matrix with the first `row_axes` axes grouped as rows.
  RowMatrix to_matrix(std::size_t row_axes) const;

  double norm() const;
  double max_abs() const;
  bool all_finite() const;

  Tensor& operator*=(double alpha);
  Tensor& operator+=(const Tensor& other);
  Tensor& operator-=(const Tensor& other);
  friend Tensor operator*(double alpha, Tensor t) { return t *= alpha; }
  friend Tensor operator+(Tensor a, const Tensor& b) { return a += b; }
  friend Tensor operator-(Tensor a, const Tensor& b) { return a -= b; }

  bool operator==(const Tensor& other) const = default;

 private:
  Shape shape_;
  std::vector<double> data_;
  std::vector<std::string> labels_;
};

struct AxisPair {
  std::size_t a;
  std::size_t b;
};

/// Contract `a` and `b` over the listed axis pairs. Result axes are the
/// unpaired axes of `a` (in order) followed by those of `b`.
Tensor contract_pair(const Tensor& a, const Tensor& b, std::span<const AxisPair> pairs);
inline Tensor contract_pair(const Tensor& a, const Tensor& b, std::initializer_list<AxisPair> pairs) {
  return contract_pair(a, b, std::span<const AxisPair>(pairs.begin(), pairs.size()));
}

/// Contract every pair of axes that carry the same label.
Tensor contract_labeled(const Tensor& a, const Tensor& b);

Tensor permute(const Tensor& t, std::span<const std::size_t> perm);
inline Tensor permute(const Tensor& t, std::initializer_list<std::size_t> perm) {
  return permute(t, std::span<const std::size_t>(perm.begin(), perm.size()));
}

/// Permute axes, then regroup into `new_shape` (same total size).
Tensor permute_reshape(const Tensor& t, std::span<const std::size_t> perm, Shape new_shape);
inline Tensor permute_reshape(const Tensor& t, std::initializer_list<std::size_t> perm, Shape new_shape) {
  return permute_reshape(t, std::span<const std::size_t>(perm.begin(), perm.size()), std::move(new_shape));
}

/// Partition of a tensor's axes into matrix rows and columns.
struct AxisSplit {
  std::vector<std::size_t> rows;
  std::vector<std::size_t> cols;
};

enum class Side { left, right };

struct Factorization {
  Tensor first;   // left: Q (row axes..., k); right: L (row axes..., k)
  Tensor second;  // left: R (k, col axes...); right: Q (k, col axes...)
};

/// Left mode: t = Q R with Q column-isometric. Right mode: t = L Q with Q row-isometric.
Factorization qr_or_lq(const Tensor& t, const AxisSplit& split, Side side);

struct TruncatedSvd {
  Tensor u;                  // (row axes..., k), orthonormal columns
  std::vector<double> s;     // descending, non-negative
  Tensor vt;                 // (k, col axes...), orthonormal rows
  double discarded_weight = 0.0;
};

/// Keeps at most `max_rank` singular values and drops those below
/// `cutoff * s_max`. At least one value is always kept.
TruncatedSvd svd_truncated(const Tensor& t, const AxisSplit& split, std::size_t max_rank, double cutoff);

}  // namespace qctn
