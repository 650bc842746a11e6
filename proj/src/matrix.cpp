#include "conex/matrix.hpp"

#include <cmath>

#include "conex/errors.hpp"

namespace conex {

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  require(data_.size() == rows_ * cols_, "DenseMatrix: data length " + std::to_string(data_.size()) +
                                             " != rows*cols " + std::to_string(rows_ * cols_));
}

DenseMatrix DenseMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
  const std::size_t cols = rows.empty() ? 0 : rows.front().size();
  DenseMatrix m(rows.size(), cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    require(rows[i].size() == cols, "DenseMatrix::from_rows: ragged row " + std::to_string(i));
    std::copy(rows[i].begin(), rows[i].end(), m.row(i).begin());
  }
  return m;
}

std::vector<double> DenseMatrix::column(std::size_t j) const {
  std::vector<double> out(rows_);
  for (std::size_t i = 0; i < rows_; ++i) out[i] = (*this)(i, j);
  return out;
}

DenseMatrix DenseMatrix::transposed() const {
  DenseMatrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

DenseMatrix DenseMatrix::row_slice(std::size_t begin, std::size_t end) const {
  require(begin <= end && end <= rows_, "row_slice out of range");
  return DenseMatrix(end - begin, cols_,
                     std::vector<double>(data_.begin() + static_cast<std::ptrdiff_t>(begin * cols_),
                                         data_.begin() + static_cast<std::ptrdiff_t>(end * cols_)));
}

bool DenseMatrix::all_finite() const noexcept {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

bool DenseMatrix::all_nonnegative() const noexcept {
  for (double v : data_)
    if (!(v >= 0.0)) return false;
  return true;
}

double DenseMatrix::frobenius_sq() const noexcept {
  double s = 0.0;
  for (double v : data_) s += v * v;
  return s;
}

void require(bool condition, const std::string& what) {
  if (!condition) throw PreconditionError(what);
}

std::string shape_str(const DenseMatrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace conex
