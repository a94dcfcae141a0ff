#include "gbcos/sphere.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>

#include "gbcos/error.hpp"

namespace gbcos {

namespace {

void require_same_dim(std::size_t a, std::size_t b) {
  if (a != b) {
    throw Error(ErrorCode::DimensionMismatch,
                "dimension " + std::to_string(a) + " vs " + std::to_string(b));
  }
}

void require_unit_rows(const RowMatrix& m, const char* what) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    if (std::abs(norm(m.row(i)) - 1.0) > kUnitTolerance) {
      throw Error(ErrorCode::InvalidArgument,
                  std::string(what) + " row " + std::to_string(i) + " is not unit norm");
    }
  }
}

}  // namespace

double dot(std::span<const double> a, std::span<const double> b) {
  require_same_dim(a.size(), b.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double norm(std::span<const double> v) {
  double scale = 0.0;
  for (double x : v) scale = std::max(scale, std::abs(x));
  if (scale == 0.0 || !std::isfinite(scale)) return scale;
  double acc = 0.0;
  for (double x : v) {
    const double y = x / scale;
    acc += y * y;
  }
  return scale * std::sqrt(acc);
}

UnitVector normalize(std::span<const double> v) {
  if (v.size() < 2) {
    throw Error(ErrorCode::InvalidArgument, "unit vectors need dimension >= 2");
  }
  const double n = norm(v);
  if (!std::isfinite(n)) throw Error(ErrorCode::NonFiniteInput, "vector has non-finite entries");
  if (n <= kNormEpsilon) throw Error(ErrorCode::ZeroVector, "norm below epsilon");

  std::vector<double> coords(v.begin(), v.end());
  // Already unit up to rounding: keep the input bits.
  if (std::abs(n - 1.0) <= 8.0 * std::numeric_limits<double>::epsilon()) {
    return UnitVector(std::move(coords));
  }
  for (double& x : coords) x /= n;
  return UnitVector(std::move(coords));
}

RowMatrix::RowMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw Error(ErrorCode::DimensionMismatch, "matrix data size does not match shape");
  }
}

PrototypeMatrix PrototypeMatrix::from_rows(const RowMatrix& raw, std::vector<int> labels) {
  if (raw.rows() < 2) throw Error(ErrorCode::InvalidArgument, "need at least two prototypes");
  if (labels.empty()) {
    labels.resize(raw.rows());
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<int>(i);
  }
  require_same_dim(labels.size(), raw.rows());
  if (std::set<int>(labels.begin(), labels.end()).size() != labels.size()) {
    throw Error(ErrorCode::InvalidArgument, "prototype labels must be unique");
  }
  PrototypeMatrix out;
  out.rows_ = RowMatrix(raw.rows(), raw.cols());
  out.labels_ = std::move(labels);
  for (std::size_t i = 0; i < raw.rows(); ++i) out.retract_row(i, raw.row(i));
  return out;
}

void PrototypeMatrix::retract_row(std::size_t i, std::span<const double> v) {
  const UnitVector u = normalize(v);
  require_same_dim(u.dim(), rows_.cols());
  std::ranges::copy(u.coords(), rows_.row(i).begin());
}

SphereBatch::SphereBatch(RowMatrix embeddings, std::vector<int> labels, std::size_t num_classes)
    : embeddings_(std::move(embeddings)), labels_(std::move(labels)), num_classes_(num_classes) {
  require_same_dim(labels_.size(), embeddings_.rows());
  require_unit_rows(embeddings_, "embedding");
  for (int l : labels_) {
    if (l < 0 || static_cast<std::size_t>(l) >= num_classes_) {
      throw Error(ErrorCode::InvalidArgument, "label " + std::to_string(l) + " out of range");
    }
  }
}

SphereBatch SphereBatch::from_raw(const RowMatrix& raw, std::vector<int> labels,
                                  std::size_t num_classes) {
  RowMatrix unit(raw.rows(), raw.cols());
  for (std::size_t i = 0; i < raw.rows(); ++i) {
    std::ranges::copy(normalize(raw.row(i)).coords(), unit.row(i).begin());
  }
  return SphereBatch(std::move(unit), std::move(labels), num_classes);
}

void SphereBatch::retract_row(std::size_t i, std::span<const double> v) {
  const UnitVector u = normalize(v);
  require_same_dim(u.dim(), embeddings_.cols());
  std::ranges::copy(u.coords(), embeddings_.row(i).begin());
}

std::vector<double> cosine_scores(std::span<const double> x, const PrototypeMatrix& protos) {
  require_same_dim(x.size(), protos.dim());
  std::vector<double> out(protos.size());
  for (std::size_t i = 0; i < protos.size(); ++i) out[i] = clamp_cosine(dot(x, protos.row(i)));
  return out;
}

std::vector<double> cosine_scores(const UnitVector& x, const PrototypeMatrix& protos) {
  return cosine_scores(x.coords(), protos);
}

double logsumexp(std::span<const double> vals, double scale) {
  if (vals.empty()) throw Error(ErrorCode::EmptyInput, "logsumexp of an empty vector");
  if (!(scale > 0.0)) throw Error(ErrorCode::InvalidArgument, "logsumexp scale must be positive");
  const double top = *std::ranges::max_element(vals);
  double acc = 0.0;
  for (double v : vals) acc += std::exp(scale * (v - top));
  return top + std::log(acc) / scale;
}

double angle_between(const UnitVector& a, const UnitVector& b) {
  return std::acos(clamp_cosine(dot(a.coords(), b.coords())));
}

}  // namespace gbcos
