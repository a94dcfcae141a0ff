#pragma once

// Unit-sphere primitives shared by every other part of the library:
// normalized vectors, prototype / embedding matrices with unit rows,
// cosine scores, a max-shifted log-sum-exp and angles.
//
// All math is double precision.

#include <cstddef>
#include <span>
#include <vector>

namespace gbcos {

/// Inputs whose L2 norm is at or below this are rejected by normalize().
inline constexpr double kNormEpsilon = 1e-12;

/// Rows are validated against this tolerance on construction.
inline constexpr double kUnitTolerance = 1e-9;

class UnitVector {
 public:
  std::size_t dim() const noexcept { return coords_.size(); }
  std::span<const double> coords() const noexcept { return coords_; }
  double operator[](std::size_t i) const { return coords_[i]; }

  friend bool operator==(const UnitVector&, const UnitVector&) = default;

 private:
  friend UnitVector normalize(std::span<const double> v);
  explicit UnitVector(std::vector<double> coords) : coords_(std::move(coords)) {}

  std::vector<double> coords_;
};

/// v / ||v||. Throws ZeroVector when ||v|| <= kNormEpsilon and
/// InvalidArgument when v has fewer than two coordinates.
///
/// Vectors already unit-norm to within a few ulps are returned unchanged,
/// which makes normalize bitwise idempotent.
UnitVector normalize(std::span<const double> v);

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> v);

/// Dense row-major matrix.
class RowMatrix {
 public:
  RowMatrix() = default;
  RowMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  RowMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }
  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }

  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }

  const std::vector<double>& data() const noexcept { return data_; }

  friend bool operator==(const RowMatrix&, const RowMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// n identity prototypes, one unit row each.
class PrototypeMatrix {
 public:
  /// Normalizes every row of `raw`. Labels default to 0..n-1.
  static PrototypeMatrix from_rows(const RowMatrix& raw, std::vector<int> labels = {});

  std::size_t size() const noexcept { return rows_.rows(); }
  std::size_t dim() const noexcept { return rows_.cols(); }
  std::span<const double> row(std::size_t i) const { return rows_.row(i); }
  const RowMatrix& rows() const noexcept { return rows_; }
  const std::vector<int>& labels() const noexcept { return labels_; }

  /// Replaces row i by normalize(v).
  void retract_row(std::size_t i, std::span<const double> v);

  friend bool operator==(const PrototypeMatrix&, const PrototypeMatrix&) = default;

 private:
  RowMatrix rows_;
  std::vector<int> labels_;
};

/// b unit-norm embeddings with identity labels in [0, num_classes).
class SphereBatch {
 public:
  SphereBatch() = default;
  /// Rows must already be unit norm within kUnitTolerance.
  SphereBatch(RowMatrix embeddings, std::vector<int> labels, std::size_t num_classes);
  /// Normalizes every row first.
  static SphereBatch from_raw(const RowMatrix& raw, std::vector<int> labels, std::size_t num_classes);

  std::size_t size() const noexcept { return embeddings_.rows(); }
  std::size_t dim() const noexcept { return embeddings_.cols(); }
  std::size_t num_classes() const noexcept { return num_classes_; }
  std::span<const double> row(std::size_t i) const { return embeddings_.row(i); }
  int label(std::size_t i) const { return labels_[i]; }
  const RowMatrix& embeddings() const noexcept { return embeddings_; }
  const std::vector<int>& labels() const noexcept { return labels_; }

  void retract_row(std::size_t i, std::span<const double> v);

  friend bool operator==(const SphereBatch&, const SphereBatch&) = default;

 private:
  RowMatrix embeddings_;
  std::vector<int> labels_;
  std::size_t num_classes_ = 0;
};

/// Cosine of x against every prototype row, clamped to [-1, 1].
std::vector<double> cosine_scores(const UnitVector& x, const PrototypeMatrix& protos);
std::vector<double> cosine_scores(std::span<const double> x, const PrototypeMatrix& protos);

/// (1/scale) * log sum_k exp(scale * vals[k]), evaluated with the max shift.
double logsumexp(std::span<const double> vals, double scale);

/// Angle in [0, pi] between two unit vectors.
double angle_between(const UnitVector& a, const UnitVector& b);

inline double clamp_cosine(double c) noexcept { return c < -1.0 ? -1.0 : (c > 1.0 ? 1.0 : c); }

}  // namespace gbcos
