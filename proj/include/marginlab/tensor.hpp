#ifndef MARGINLAB_TENSOR_HPP
#define MARGINLAB_TENSOR_HPP

#include <Eigen/Dense>

#include <initializer_list>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace marginlab {

using Index = Eigen::Index;
using Shape = std::vector<Index>;

/// Raised when tensor extents do not line up; the message names the shapes.
class ShapeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline Index shape_size(const Shape& s) {
  Index n = 1;
  for (Index e : s) n *= e;
  return n;
}

inline std::string shape_string(const Shape& s) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) os << 'x';
    os << s[i];
  }
  os << ']';
  return os.str();
}

/// Dense n-dimensional array with row-major layout over flat Eigen storage.
/// A rank-0 tensor (empty shape) holds a single scalar.
template <typename Scalar>
class TensorT {
 public:
  using Storage = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
  using MatrixRM =
      Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using MatrixMap = Eigen::Map<MatrixRM>;
  using ConstMatrixMap = Eigen::Map<const MatrixRM>;
  using VectorMap = Eigen::Map<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>;
  using ConstVectorMap = Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>;

  TensorT() : shape_{}, data_(Storage::Zero(1)) {}

  explicit TensorT(Shape shape)
      : shape_(std::move(shape)), data_(Storage::Zero(checked_size(shape_))) {}

  TensorT(Shape shape, Storage data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != checked_size(shape_))
      throw ShapeError("tensor data of length " + std::to_string(data_.size()) +
                       " does not fill shape " + shape_string(shape_));
  }

  static TensorT scalar(Scalar v) {
    TensorT t{Shape{}};
    t.data_[0] = v;
    return t;
  }

  static TensorT zeros(Shape shape) { return TensorT(std::move(shape)); }

  static TensorT constant(Shape shape, Scalar v) {
    TensorT t(std::move(shape));
    t.data_.setConstant(v);
    return t;
  }

  static TensorT ones(Shape shape) { return constant(std::move(shape), Scalar(1)); }

  static TensorT from(Shape shape, std::initializer_list<Scalar> values) {
    TensorT t(std::move(shape));
    if (static_cast<Index>(values.size()) != t.size())
      throw ShapeError("initializer of length " + std::to_string(values.size()) +
                       " does not fill shape " + shape_string(t.shape_));
    Index i = 0;
    for (Scalar v : values) t.data_[i++] = v;
    return t;
  }

  const Shape& shape() const { return shape_; }
  Index rank() const { return static_cast<Index>(shape_.size()); }
  Index size() const { return data_.size(); }
  Index extent(Index axis) const { return shape_.at(static_cast<std::size_t>(axis)); }
  bool same_shape(const TensorT& o) const { return shape_ == o.shape_; }

  Scalar& operator[](Index i) { return data_[i]; }
  Scalar operator[](Index i) const { return data_[i]; }

  Scalar& operator()(Index i, Index j) { return data_[i * shape_[1] + j]; }
  Scalar operator()(Index i, Index j) const { return data_[i * shape_[1] + j]; }

  Scalar& operator()(Index n, Index y, Index x, Index c) {
    return data_[((n * shape_[1] + y) * shape_[2] + x) * shape_[3] + c];
  }
  Scalar operator()(Index n, Index y, Index x, Index c) const {
    return data_[((n * shape_[1] + y) * shape_[2] + x) * shape_[3] + c];
  }

  /// The single element of a size-1 tensor.
  Scalar value() const {
    if (size() != 1)
      throw ShapeError("value() on non-scalar tensor of shape " + shape_string(shape_));
    return data_[0];
  }

  Storage& array() { return data_; }
  const Storage& array() const { return data_; }

  VectorMap vec() { return VectorMap(data_.data(), data_.size()); }
  ConstVectorMap vec() const { return ConstVectorMap(data_.data(), data_.size()); }

  MatrixMap mat() {
    require_rank2();
    return MatrixMap(data_.data(), shape_[0], shape_[1]);
  }
  ConstMatrixMap mat() const {
    require_rank2();
    return ConstMatrixMap(data_.data(), shape_[0], shape_[1]);
  }

  /// Arbitrary rows-by-cols view of the flat storage.
  MatrixMap mat(Index rows, Index cols) {
    if (rows * cols != size())
      throw ShapeError("cannot view " + shape_string(shape_) + " as " +
                       std::to_string(rows) + "x" + std::to_string(cols));
    return MatrixMap(data_.data(), rows, cols);
  }
  ConstMatrixMap mat(Index rows, Index cols) const {
    if (rows * cols != size())
      throw ShapeError("cannot view " + shape_string(shape_) + " as " +
                       std::to_string(rows) + "x" + std::to_string(cols));
    return ConstMatrixMap(data_.data(), rows, cols);
  }

  TensorT reshaped(Shape shape) const {
    if (shape_size(shape) != size())
      throw ShapeError("cannot reshape " + shape_string(shape_) + " to " +
                       shape_string(shape));
    return TensorT(std::move(shape), data_);
  }

 private:
  static Index checked_size(const Shape& s) {
    for (Index e : s)
      if (e <= 0) throw ShapeError("non-positive extent in shape " + shape_string(s));
    return shape_size(s);
  }

  void require_rank2() const {
    if (rank() != 2)
      throw ShapeError("expected rank-2 tensor, got " + shape_string(shape_));
  }

  Shape shape_;
  Storage data_;
};

using Tensor = TensorT<double>;

template <typename Scalar>
bool all_finite(const TensorT<Scalar>& t) {
  return t.array().isFinite().all();
}

}  // namespace marginlab

#endif  // MARGINLAB_TENSOR_HPP
