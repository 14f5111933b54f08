#include "attnet/matrix.hpp"

#include <Eigen/Dense>

#include <cmath>

namespace attnet {

namespace {

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using EMap = Eigen::Map<EMat>;
using ECMap = Eigen::Map<const EMat>;

ECMap map_of(const Matrix& m) {
  return ECMap(m.data(), static_cast<Eigen::Index>(m.rows()), static_cast<Eigen::Index>(m.cols()));
}

EMap map_of(Matrix& m) {
  return EMap(m.data(), static_cast<Eigen::Index>(m.rows()), static_cast<Eigen::Index>(m.cols()));
}

}  // namespace

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::from_rows(const std::vector<Vec>& rows) {
  if (rows.empty()) return {};
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    require(rows[r].size() == m.cols(), Err::ShapeMismatch, "ragged row list");
    m.set_row(r, rows[r]);
  }
  return m;
}

void Matrix::set_row(std::size_t r, std::span<const double> v) {
  require(v.size() == cols_, Err::ShapeMismatch, "row length mismatch");
  std::copy(v.begin(), v.end(), data_.begin() + static_cast<std::ptrdiff_t>(r * cols_));
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.rows(), Err::ShapeMismatch, "matmul inner dimensions differ");
  Matrix c(a.rows(), b.cols());
  map_of(c).noalias() = map_of(a) * map_of(b);
  return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.cols(), Err::ShapeMismatch, "matmul_nt inner dimensions differ");
  Matrix c(a.rows(), b.rows());
  map_of(c).noalias() = map_of(a) * map_of(b).transpose();
  return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  require(a.rows() == b.rows(), Err::ShapeMismatch, "matmul_tn inner dimensions differ");
  Matrix c(a.cols(), b.cols());
  map_of(c).noalias() = map_of(a).transpose() * map_of(b);
  return c;
}

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  map_of(t) = map_of(a).transpose();
  return t;
}

void add_scaled(Matrix& a, const Matrix& b, double s) {
  require(a.same_shape(b), Err::ShapeMismatch, "add_scaled shape mismatch");
  double* pa = a.data();
  const double* pb = b.data();
  for (std::size_t i = 0; i < a.size(); ++i) pa[i] += s * pb[i];
}

void add_scaled(Vec& a, const Vec& b, double s) {
  require(a.size() == b.size(), Err::ShapeMismatch, "add_scaled length mismatch");
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += s * b[i];
}

void mask_rows(Matrix& m, std::span<const double> mask) {
  require(mask.size() == m.rows(), Err::ShapeMismatch, "mask length != row count");
  for (std::size_t r = 0; r < m.rows(); ++r) {
    if (mask[r] == 0.0) {
      auto row = m.row(r);
      std::fill(row.begin(), row.end(), 0.0);
    }
  }
}

double frobenius_norm_sq(const Matrix& m) {
  double s = 0.0;
  const double* p = m.data();
  for (std::size_t i = 0; i < m.size(); ++i) s += p[i] * p[i];
  return s;
}

double l2_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double l2_distance(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), Err::LengthMismatch, "l2_distance length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

bool all_finite(const Matrix& m) {
  const double* p = m.data();
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (!std::isfinite(p[i])) return false;
  }
  return true;
}

const char* err_name(Err code) noexcept {
  switch (code) {
    case Err::WrongMagic: return "WrongMagic";
    case Err::TruncatedFile: return "TruncatedFile";
    case Err::ZeroCount: return "ZeroCount";
    case Err::LabelOutOfRange: return "LabelOutOfRange";
    case Err::NotMultipleOfRecordSize: return "NotMultipleOfRecordSize";
    case Err::WrongInputShape: return "WrongInputShape";
    case Err::CountMismatch: return "CountMismatch";
    case Err::SubsetTooLarge: return "SubsetTooLarge";
    case Err::ShapeMismatch: return "ShapeMismatch";
    case Err::NonFiniteActivation: return "NonFiniteActivation";
    case Err::DegenerateProbability: return "DegenerateProbability";
    case Err::AsymmetricArch: return "AsymmetricArch";
    case Err::StageDiverged: return "StageDiverged";
    case Err::IoError: return "IoError";
    case Err::BadMagic: return "BadMagic";
    case Err::VersionUnsupported: return "VersionUnsupported";
    case Err::ChecksumMismatch: return "ChecksumMismatch";
    case Err::ZeroVariance: return "ZeroVariance";
    case Err::LengthMismatch: return "LengthMismatch";
    case Err::NonSquare: return "NonSquare";
    case Err::ConvergenceFailure: return "ConvergenceFailure";
    case Err::NotAFixedPoint: return "NotAFixedPoint";
    case Err::SingleClassTruth: return "SingleClassTruth";
    case Err::EmptyDataset: return "EmptyDataset";
    case Err::ConfigError: return "ConfigError";
    case Err::UsageError: return "UsageError";
  }
  return "UnknownError";
}

}  // namespace attnet
