#include "qctn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace qctn {

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ')';
  return os.str();
}

Tensor::Tensor() : data_(1, 0.0) {}

Tensor::Tensor(Shape shape) : shape_(std::move(shape)), data_(shape_size(shape_), 0.0) {}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_size(shape_) != data_.size()) {
    throw ShapeError("tensor shape " + shape_string(shape_) + " does not match data length " +
                     std::to_string(data_.size()));
  }
}

Tensor Tensor::scalar(double value) { return Tensor({}, {value}); }

Tensor Tensor::identity(std::size_t n) {
  Tensor t({n, n});
  for (std::size_t i = 0; i < n; ++i) t[i * n + i] = 1.0;
  return t;
}

Tensor Tensor::from_matrix(const RowMatrix& m) {
  Tensor t({static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())});
  MatrixMap(t.data_.data(), m.rows(), m.cols()) = m;
  return t;
}

Tensor Tensor::from_matrix(const Eigen::MatrixXd& m) { return from_matrix(RowMatrix(m)); }

namespace {

std::size_t flat_offset(const Shape& shape, std::span<const std::size_t> index) {
  if (index.size() != shape.size()) throw ShapeError("index rank mismatch");
  std::size_t off = 0;
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] >= shape[i]) throw ShapeError("index out of range");
    off = off * shape[i] + index[i];
  }
  return off;
}

}  // namespace

double& Tensor::at(std::span<const std::size_t> index) { return data_[flat_offset(shape_, index)]; }

double Tensor::at(std::span<const std::size_t> index) const { return data_[flat_offset(shape_, index)]; }

void Tensor::set_labels(std::vector<std::string> labels) {
  if (!labels.empty() && labels.size() != shape_.size()) {
    throw ShapeError("label count " + std::to_string(labels.size()) + " does not match rank " +
                     std::to_string(shape_.size()));
  }
  labels_ = std::move(labels);
}

Tensor Tensor::reshaped(Shape shape) const {
  if (shape_size(shape) != data_.size()) {
    throw ShapeError("cannot reshape " + shape_string(shape_) + " into " + shape_string(shape));
  }
  return Tensor(std::move(shape), data_);
}

MatrixMap Tensor::as_matrix(std::size_t rows) {
  const std::size_t cols = rows ? data_.size() / rows : 0;
  if (rows * cols != data_.size()) throw ShapeError("matrix view does not divide tensor size");
  return MatrixMap(data_.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

ConstMatrixMap Tensor::as_matrix(std::size_t rows) const {
  const std::size_t cols = rows ? data_.size() / rows : 0;
  if (rows * cols != data_.size()) throw ShapeError("matrix view does not divide tensor size");
  return ConstMatrixMap(data_.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

RowMatrix Tensor::to_matrix(std::size_t row_axes) const {
  std::size_t rows = 1;
  for (std::size_t i = 0; i < row_axes; ++i) rows *= shape_.at(i);
  return as_matrix(rows);
}

double Tensor::norm() const {
  double s = 0.0;
  for (double x : data_) s += x * x;
  return std::sqrt(s);
}

double Tensor::max_abs() const {
  double m = 0.0;
  for (double x : data_) m = std::max(m, std::abs(x));
  return m;
}

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

Tensor& Tensor::operator*=(double alpha) {
  for (double& x : data_) x *= alpha;
  return *this;
}

Tensor& Tensor::operator+=(const Tensor& other) {
  if (other.shape_ != shape_) throw ShapeError("shape mismatch in addition");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Tensor& Tensor::operator-=(const Tensor& other) {
  if (other.shape_ != shape_) throw ShapeError("shape mismatch in subtraction");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

Tensor permute(const Tensor& t, std::span<const std::size_t> perm) {
  const std::size_t r = t.rank();
  if (perm.size() != r) throw ShapeError("permutation length does not match rank");
  std::vector<bool> seen(r, false);
  for (std::size_t p : perm) {
    if (p >= r || seen[p]) throw ShapeError("invalid axis permutation");
    seen[p] = true;
  }
  bool trivial = true;
  for (std::size_t i = 0; i < r; ++i) trivial = trivial && perm[i] == i;

  Shape out_shape(r);
  for (std::size_t i = 0; i < r; ++i) out_shape[i] = t.dim(perm[i]);
  if (trivial) {
    Tensor out(out_shape, t.storage());
    return out;
  }

  std::vector<std::size_t> src_stride(r, 1);
  for (std::size_t i = r; i-- > 1;) src_stride[i - 1] = src_stride[i] * t.dim(i);
  std::vector<std::size_t> stride(r);
  for (std::size_t i = 0; i < r; ++i) stride[i] = src_stride[perm[i]];

  Tensor out(out_shape);
  const std::size_t n = out.size();
  if (n == 0) return out;
  auto src = t.data();
  auto dst = out.data();

  // Innermost destination axis is copied with a fixed source stride.
  const std::size_t inner = out_shape[r - 1];
  const std::size_t inner_stride = stride[r - 1];
  std::vector<std::size_t> idx(r, 0);
  std::size_t off = 0;
  for (std::size_t base = 0; base < n; base += inner) {
    for (std::size_t k = 0; k < inner; ++k) dst[base + k] = src[off + k * inner_stride];
    for (std::size_t ax = r - 1; ax-- > 0;) {
      ++idx[ax];
      off += stride[ax];
      if (idx[ax] < out_shape[ax]) break;
      off -= stride[ax] * idx[ax];
      idx[ax] = 0;
    }
  }
  return out;
}

Tensor permute_reshape(const Tensor& t, std::span<const std::size_t> perm, Shape new_shape) {
  Tensor p = permute(t, perm);
  if (shape_size(new_shape) != p.size()) {
    throw ShapeError("grouping " + shape_string(new_shape) + " inconsistent with permuted shape " +
                     shape_string(p.shape()));
  }
  return p.reshaped(std::move(new_shape));
}

Tensor contract_pair(const Tensor& a, const Tensor& b, std::span<const AxisPair> pairs) {
  std::vector<bool> a_used(a.rank(), false), b_used(b.rank(), false);
  std::size_t k = 1;
  for (const auto& p : pairs) {
    if (p.a >= a.rank() || p.b >= b.rank()) {
      throw ContractionError("contraction axis out of range: (" + std::to_string(p.a) + "," +
                             std::to_string(p.b) + ")");
    }
    if (a_used[p.a] || b_used[p.b]) throw ContractionError("axis contracted twice");
    if (a.dim(p.a) != b.dim(p.b)) {
      throw ContractionError("dimension mismatch contracting axis " + std::to_string(p.a) + " of " +
                             shape_string(a.shape()) + " with axis " + std::to_string(p.b) + " of " +
                             shape_string(b.shape()));
    }
    a_used[p.a] = b_used[p.b] = true;
    k *= a.dim(p.a);
  }

  std::vector<std::size_t> pa, pb;
  Shape out_shape;
  std::vector<std::string> out_labels;
  const bool labeled = !a.labels().empty() && !b.labels().empty();
  std::size_t m = 1, n = 1;
  for (std::size_t i = 0; i < a.rank(); ++i) {
    if (!a_used[i]) {
      pa.push_back(i);
      out_shape.push_back(a.dim(i));
      m *= a.dim(i);
      if (labeled) out_labels.push_back(a.labels()[i]);
    }
  }
  for (const auto& p : pairs) pa.push_back(p.a);
  for (const auto& p : pairs) pb.push_back(p.b);
  for (std::size_t i = 0; i < b.rank(); ++i) {
    if (!b_used[i]) {
      pb.push_back(i);
      out_shape.push_back(b.dim(i));
      n *= b.dim(i);
      if (labeled) out_labels.push_back(b.labels()[i]);
    }
  }

  const Tensor ap = permute(a, pa);
  const Tensor bp = permute(b, pb);
  Tensor out(out_shape);
  if (m && n) {
    ConstMatrixMap am(ap.data().data(), static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(k));
    ConstMatrixMap bm(bp.data().data(), static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(n));
    MatrixMap om(out.data().data(), static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
    if (k == 0) {
      om.setZero();
    } else {
      om.noalias() = am * bm;
    }
  }
  if (labeled) out.set_labels(std::move(out_labels));
  return out;
}

Tensor contract_labeled(const Tensor& a, const Tensor& b) {
  if (a.labels().empty() || b.labels().empty()) throw ContractionError("labeled contraction needs labels");
  std::vector<AxisPair> pairs;
  for (std::size_t i = 0; i < a.rank(); ++i) {
    for (std::size_t j = 0; j < b.rank(); ++j) {
      if (a.labels()[i] == b.labels()[j]) pairs.push_back({i, j});
    }
  }
  return contract_pair(a, b, pairs);
}

namespace {

struct MatrixView {
  RowMatrix m;
  Shape row_shape;
  Shape col_shape;
};

MatrixView matricize(const Tensor& t, const AxisSplit& split) {
  std::vector<std::size_t> perm;
  perm.insert(perm.end(), split.rows.begin(), split.rows.end());
  perm.insert(perm.end(), split.cols.begin(), split.cols.end());
  if (perm.size() != t.rank()) throw ShapeError("axis split must cover every axis exactly once");
  MatrixView v;
  std::size_t rows = 1, cols = 1;
  for (std::size_t a : split.rows) {
    v.row_shape.push_back(t.dim(a));
    rows *= t.dim(a);
  }
  for (std::size_t a : split.cols) {
    v.col_shape.push_back(t.dim(a));
    cols *= t.dim(a);
  }
  if (rows == 0 || cols == 0) throw ShapeError("cannot factorize a tensor with a zero dimension");
  Tensor p = permute(t, perm);
  v.m = ConstMatrixMap(p.data().data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  return v;
}

Tensor with_trailing(const RowMatrix& m, Shape lead) {
  lead.push_back(static_cast<std::size_t>(m.cols()));
  Tensor t(lead);
  MatrixMap(t.data().data(), m.rows(), m.cols()) = m;
  return t;
}

Tensor with_leading(const RowMatrix& m, const Shape& tail) {
  Shape s{static_cast<std::size_t>(m.rows())};
  s.insert(s.end(), tail.begin(), tail.end());
  Tensor t(s);
  MatrixMap(t.data().data(), m.rows(), m.cols()) = m;
  return t;
}

}  // namespace

Factorization qr_or_lq(const Tensor& t, const AxisSplit& split, Side side) {
  MatrixView v = matricize(t, split);
  RowMatrix a = side == Side::left ? RowMatrix(v.m) : RowMatrix(v.m.transpose());
  const Eigen::Index rows = a.rows(), cols = a.cols();
  const Eigen::Index k = std::min(rows, cols);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  RowMatrix q = qr.householderQ() * Eigen::MatrixXd::Identity(rows, k);
  RowMatrix r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  if (side == Side::left) {
    return {with_trailing(q, v.row_shape), with_leading(r, v.col_shape)};
  }
  // a = t^T = q r  =>  t = r^T q^T = L Q
  RowMatrix l = r.transpose();
  RowMatrix qt = q.transpose();
  return {with_trailing(l, v.row_shape), with_leading(qt, v.col_shape)};
}

namespace {

struct ThinSvd {
  Eigen::MatrixXd u;
  Eigen::VectorXd s;
  Eigen::MatrixXd v;
};

// Eigen 3.4's divide-and-conquer SVD returns NaNs on some rank-deficient
// structured inputs (sum-of-products MPO sites), so it is only used above
// kJacobiSvdLimit and is checked against a reconstruction; Jacobi otherwise.
constexpr Eigen::Index kJacobiSvdLimit = 128;

ThinSvd thin_svd(const Eigen::MatrixXd& a) {
  if (std::min(a.rows(), a.cols()) > kJacobiSvdLimit) {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    ThinSvd out{svd.matrixU(), svd.singularValues(), svd.matrixV()};
    const double err = (out.u * out.s.asDiagonal() * out.v.transpose() - a).norm();
    if (std::isfinite(err) && err <= 1e-12 * std::max(1.0, a.norm())) return out;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return ThinSvd{svd.matrixU(), svd.singularValues(), svd.matrixV()};
}

}  // namespace

TruncatedSvd svd_truncated(const Tensor& t, const AxisSplit& split, std::size_t max_rank, double cutoff) {
  if (max_rank < 1) throw std::invalid_argument("svd_truncated: max_rank must be >= 1");
  if (cutoff < 0.0) throw std::invalid_argument("svd_truncated: cutoff must be >= 0");
  MatrixView v = matricize(t, split);
  const Eigen::MatrixXd a = v.m;
  const ThinSvd svd = thin_svd(a);
  const Eigen::VectorXd& sv = svd.s;
  const std::size_t full = static_cast<std::size_t>(sv.size());
  std::size_t keep = std::min(full, max_rank);
  const double smax = full ? sv(0) : 0.0;
  while (keep > 1 && sv(static_cast<Eigen::Index>(keep - 1)) <= cutoff * smax) --keep;
  keep = std::max<std::size_t>(keep, 1);

  TruncatedSvd out;
  for (std::size_t i = 0; i < full; ++i) {
    if (i < keep) {
      out.s.push_back(sv(static_cast<Eigen::Index>(i)));
    } else {
      out.discarded_weight += sv(static_cast<Eigen::Index>(i)) * sv(static_cast<Eigen::Index>(i));
    }
  }
  const auto kk = static_cast<Eigen::Index>(keep);
  RowMatrix u = svd.u.leftCols(kk);
  RowMatrix vt = svd.v.leftCols(kk).transpose();
  out.u = with_trailing(u, v.row_shape);
  out.vt = with_leading(vt, v.col_shape);
  return out;
}

}  // namespace qctn
