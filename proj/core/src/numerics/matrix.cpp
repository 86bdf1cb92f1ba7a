#include "rdfl/numerics/matrix.hpp"

#include <algorithm>
#include <cmath>

#include "rdfl/error.hpp"

namespace rdfl {

namespace {

void check_same_size(std::size_t a, std::size_t b, const char* what) {
  if (a != b) fail(ErrorCode::kShapeMismatch, what);
}

}  // namespace

Vector& Vector::operator+=(const Vector& other) {
  check_same_size(size(), other.size(), "vector += size mismatch");
  for (std::size_t i = 0; i < size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Vector& Vector::operator-=(const Vector& other) {
  check_same_size(size(), other.size(), "vector -= size mismatch");
  for (std::size_t i = 0; i < size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

Vector& Vector::operator*=(double alpha) noexcept {
  for (double& v : data_) v *= alpha;
  return *this;
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows)
    : rows_(rows.size()), cols_(rows.size() ? rows.begin()->size() : 0) {
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    check_same_size(r.size(), cols_, "ragged matrix initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::diagonal(const Vector& d) {
  Matrix m(d.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
  return m;
}

Vector Matrix::column(std::size_t j) const {
  Vector c(rows_);
  for (std::size_t i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
  return c;
}

Matrix Matrix::transpose() const {
  Matrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

Matrix Matrix::top_rows(std::size_t count) const {
  if (count > rows_) fail(ErrorCode::kShapeMismatch, "top_rows out of range");
  Matrix out(count, cols_);
  std::copy_n(data_.begin(), count * cols_, out.data_.begin());
  return out;
}

Matrix Matrix::left_cols(std::size_t count) const {
  if (count > cols_) fail(ErrorCode::kShapeMismatch, "left_cols out of range");
  Matrix out(rows_, count);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < count; ++j) out(i, j) = (*this)(i, j);
  return out;
}

Matrix& Matrix::operator+=(const Matrix& other) {
  if (rows_ != other.rows_ || cols_ != other.cols_)
    fail(ErrorCode::kShapeMismatch, "matrix += shape mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Matrix& Matrix::operator-=(const Matrix& other) {
  if (rows_ != other.rows_ || cols_ != other.cols_)
    fail(ErrorCode::kShapeMismatch, "matrix -= shape mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

Matrix& Matrix::operator*=(double alpha) noexcept {
  for (double& v : data_) v *= alpha;
  return *this;
}

Vector operator+(Vector a, const Vector& b) { return a += b; }
Vector operator-(Vector a, const Vector& b) { return a -= b; }
Vector operator*(double alpha, Vector v) { return v *= alpha; }
Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
Matrix operator*(double alpha, Matrix m) { return m *= alpha; }

Matrix operator*(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) fail(ErrorCode::kShapeMismatch, "matmul shape mismatch");
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto ci = c.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      auto bk = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) ci[j] += aik * bk[j];
    }
  }
  return c;
}

Vector operator*(const Matrix& a, const Vector& x) {
  if (a.cols() != x.size()) fail(ErrorCode::kShapeMismatch, "matvec shape mismatch");
  Vector y(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto ai = a.row(i);
    double s = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) s += ai[j] * x[j];
    y[i] = s;
  }
  return y;
}

Vector transpose_times(const Matrix& a, const Vector& x) {
  if (a.rows() != x.size())
    fail(ErrorCode::kShapeMismatch, "transpose_times shape mismatch");
  Vector y(a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double xi = x[i];
    if (xi == 0.0) continue;
    auto ai = a.row(i);
    for (std::size_t j = 0; j < a.cols(); ++j) y[j] += ai[j] * xi;
  }
  return y;
}

double dot(const Vector& a, const Vector& b) {
  check_same_size(a.size(), b.size(), "dot size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(const Vector& v) noexcept {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double norm_inf(const Vector& v) noexcept {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double norm_inf(const Matrix& m) noexcept {
  double best = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double s = 0.0;
    for (double x : m.row(i)) s += std::abs(x);
    best = std::max(best, s);
  }
  return best;
}

double max_abs(const Matrix& m) noexcept {
  double best = 0.0;
  for (double x : m.span()) best = std::max(best, std::abs(x));
  return best;
}

double frobenius(const Matrix& m) noexcept {
  double s = 0.0;
  for (double x : m.span()) s += x * x;
  return std::sqrt(s);
}

Vector hadamard(const Vector& a, const Vector& b) {
  check_same_size(a.size(), b.size(), "hadamard size mismatch");
  Vector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

Vector concat(const Vector& a, const Vector& b) {
  Vector out(a.size() + b.size());
  std::copy(a.begin(), a.end(), out.begin());
  std::copy(b.begin(), b.end(), out.begin() + static_cast<std::ptrdiff_t>(a.size()));
  return out;
}

Vector slice(const Vector& v, std::size_t first, std::size_t count) {
  if (first + count > v.size()) fail(ErrorCode::kShapeMismatch, "slice out of range");
  return Vector(v.span().subspan(first, count));
}

bool all_finite(const Vector& v) noexcept {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

bool all_finite(const Matrix& m) noexcept {
  auto s = m.span();
  return std::all_of(s.begin(), s.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace rdfl
