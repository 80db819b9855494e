#include "pmiemb/sparse_matrix.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "pmiemb/error.h"

namespace pmiemb {

SparseMatrix::SparseMatrix(std::size_t n_rows, std::size_t n_cols,
                           std::vector<std::size_t> row_offsets,
                           std::vector<std::size_t> col_indices, std::vector<double> values)
    : n_rows_(n_rows),
      n_cols_(n_cols),
      row_offsets_(std::move(row_offsets)),
      col_indices_(std::move(col_indices)),
      values_(std::move(values)) {
  if (row_offsets_.size() != n_rows_ + 1 || row_offsets_.front() != 0 ||
      row_offsets_.back() != values_.size() || col_indices_.size() != values_.size()) {
    throw ArgumentError("inconsistent CSR array sizes");
  }
  for (std::size_t i = 0; i < n_rows_; ++i) {
    if (row_offsets_[i] > row_offsets_[i + 1]) throw ArgumentError("row offsets not monotone");
    for (std::size_t p = row_offsets_[i]; p < row_offsets_[i + 1]; ++p) {
      if (col_indices_[p] >= n_cols_) throw ArgumentError("column index out of range");
      if (p > row_offsets_[i] && col_indices_[p] <= col_indices_[p - 1]) {
        throw ArgumentError("column indices not strictly increasing in row " +
                            std::to_string(i));
      }
      if (!std::isfinite(values_[p])) throw ArgumentError("non-finite matrix value");
    }
  }
}

SparseMatrix SparseMatrix::from_triplets(std::size_t n_rows, std::size_t n_cols,
                                         std::vector<Triplet> triplets) {
  std::sort(triplets.begin(), triplets.end(), [](const Triplet &a, const Triplet &b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  std::vector<std::size_t> offsets(n_rows + 1, 0);
  std::vector<std::size_t> cols;
  std::vector<double> values;
  cols.reserve(triplets.size());
  values.reserve(triplets.size());
  std::vector<std::size_t> rows;
  rows.reserve(triplets.size());
  for (const Triplet &t : triplets) {
    if (t.row >= n_rows || t.col >= n_cols) throw ArgumentError("triplet out of range");
    if (!rows.empty() && rows.back() == t.row && cols.back() == t.col) {
      values.back() += t.value;
    } else {
      rows.push_back(t.row);
      cols.push_back(t.col);
      values.push_back(t.value);
    }
  }
  std::vector<std::size_t> kept_cols;
  std::vector<double> kept_values;
  for (std::size_t p = 0; p < values.size(); ++p) {
    if (values[p] == 0.0) continue;
    kept_cols.push_back(cols[p]);
    kept_values.push_back(values[p]);
    ++offsets[rows[p] + 1];
  }
  for (std::size_t i = 0; i < n_rows; ++i) offsets[i + 1] += offsets[i];
  return SparseMatrix(n_rows, n_cols, std::move(offsets), std::move(kept_cols),
                      std::move(kept_values));
}

SparseMatrix SparseMatrix::from_dense(const Eigen::MatrixXd &dense) {
  const auto n_rows = static_cast<std::size_t>(dense.rows());
  const auto n_cols = static_cast<std::size_t>(dense.cols());
  std::vector<std::size_t> offsets(n_rows + 1, 0);
  std::vector<std::size_t> cols;
  std::vector<double> values;
  for (std::size_t i = 0; i < n_rows; ++i) {
    for (std::size_t j = 0; j < n_cols; ++j) {
      const double v = dense(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      if (v == 0.0) continue;
      cols.push_back(j);
      values.push_back(v);
    }
    offsets[i + 1] = values.size();
  }
  return SparseMatrix(n_rows, n_cols, std::move(offsets), std::move(cols), std::move(values));
}

double SparseMatrix::get(std::size_t i, std::size_t j) const {
  if (i >= n_rows_ || j >= n_cols_) throw ArgumentError("matrix index out of range");
  const auto begin = col_indices_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[i]);
  const auto end = col_indices_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[i + 1]);
  auto it = std::lower_bound(begin, end, j);
  if (it == end || *it != j) return 0.0;
  return values_[static_cast<std::size_t>(it - col_indices_.begin())];
}

Eigen::MatrixXd SparseMatrix::to_dense() const {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_rows_),
                                              static_cast<Eigen::Index>(n_cols_));
  for (std::size_t i = 0; i < n_rows_; ++i) {
    for (std::size_t p = row_offsets_[i]; p < row_offsets_[i + 1]; ++p) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(col_indices_[p])) = values_[p];
    }
  }
  return out;
}

SparseMatrix SparseMatrix::transpose() const {
  std::vector<std::size_t> offsets(n_cols_ + 1, 0);
  for (std::size_t c : col_indices_) ++offsets[c + 1];
  for (std::size_t j = 0; j < n_cols_; ++j) offsets[j + 1] += offsets[j];
  std::vector<std::size_t> cols(values_.size());
  std::vector<double> values(values_.size());
  std::vector<std::size_t> next(offsets.begin(), offsets.end() - 1);
  for (std::size_t i = 0; i < n_rows_; ++i) {
    for (std::size_t p = row_offsets_[i]; p < row_offsets_[i + 1]; ++p) {
      const std::size_t q = next[col_indices_[p]]++;
      cols[q] = i;
      values[q] = values_[p];
    }
  }
  return SparseMatrix(n_cols_, n_rows_, std::move(offsets), std::move(cols), std::move(values));
}

double SparseMatrix::frobenius_norm_squared() const {
  double s = 0.0;
  for (double v : values_) s += v * v;
  return s;
}

double SparseMatrix::sum() const {
  double s = 0.0;
  for (double v : values_) s += v;
  return s;
}

bool SparseMatrix::is_symmetric() const {
  if (n_rows_ != n_cols_) return false;
  for (std::size_t i = 0; i < n_rows_; ++i) {
    for (std::size_t p = row_offsets_[i]; p < row_offsets_[i + 1]; ++p) {
      if (get(col_indices_[p], i) != values_[p]) return false;
    }
  }
  return true;
}

Eigen::MatrixXd SparseMatrix::multiply(const Eigen::MatrixXd &x) const {
  if (static_cast<std::size_t>(x.rows()) != n_cols_) {
    throw ArgumentError("dimension mismatch in sparse multiply");
  }
  Eigen::MatrixXd y(static_cast<Eigen::Index>(n_rows_), x.cols());
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    const double *xc = x.col(c).data();
    double *yc = y.col(c).data();
    for (std::size_t i = 0; i < n_rows_; ++i) {
      double acc = 0.0;
      for (std::size_t p = row_offsets_[i]; p < row_offsets_[i + 1]; ++p) {
        acc += values_[p] * xc[col_indices_[p]];
      }
      yc[i] = acc;
    }
  }
  return y;
}

Eigen::MatrixXd SparseMatrix::multiply_transpose(const Eigen::MatrixXd &x) const {
  if (static_cast<std::size_t>(x.rows()) != n_rows_) {
    throw ArgumentError("dimension mismatch in sparse transpose multiply");
  }
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_cols_), x.cols());
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    const double *xc = x.col(c).data();
    double *yc = y.col(c).data();
    for (std::size_t i = 0; i < n_rows_; ++i) {
      const double xi = xc[i];
      if (xi == 0.0) continue;
      for (std::size_t p = row_offsets_[i]; p < row_offsets_[i + 1]; ++p) {
        yc[col_indices_[p]] += values_[p] * xi;
      }
    }
  }
  return y;
}

// ---------------------------------------------------------------------------
// File formats

namespace {

constexpr char kMagic[4] = {'P', 'P', 'M', 'I'};

template <typename T>
void write_le(std::ostream &out, T value) {
  static_assert(sizeof(T) == 8);
  auto bits = std::bit_cast<std::uint64_t>(value);
  unsigned char bytes[8];
  for (int k = 0; k < 8; ++k) bytes[k] = static_cast<unsigned char>(bits >> (8 * k));
  out.write(reinterpret_cast<const char *>(bytes), 8);
}

template <typename T>
T read_le(std::istream &in, const std::string &path) {
  static_assert(sizeof(T) == 8);
  unsigned char bytes[8];
  if (!in.read(reinterpret_cast<char *>(bytes), 8)) {
    throw IoError(path, "truncated binary matrix");
  }
  std::uint64_t bits = 0;
  for (int k = 7; k >= 0; --k) bits = (bits << 8) | bytes[k];
  return std::bit_cast<T>(bits);
}

SparseMatrix load_binary(std::istream &in, const std::string &path) {
  const auto n_rows = read_le<std::uint64_t>(in, path);
  const auto n_cols = read_le<std::uint64_t>(in, path);
  const auto nnz = read_le<std::uint64_t>(in, path);
  std::vector<std::size_t> offsets(n_rows + 1);
  for (auto &o : offsets) o = read_le<std::uint64_t>(in, path);
  std::vector<std::size_t> cols(nnz);
  for (auto &c : cols) c = read_le<std::uint64_t>(in, path);
  std::vector<double> values(nnz);
  for (auto &v : values) v = read_le<double>(in, path);
  try {
    return SparseMatrix(n_rows, n_cols, std::move(offsets), std::move(cols), std::move(values));
  } catch (const ArgumentError &e) {
    throw IoError(path, std::string("corrupt binary matrix (") + e.what() + ")");
  }
}

SparseMatrix load_text(std::istream &in) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw ParseError(1, "missing header");
  std::istringstream header(line);
  std::size_t n_rows, n_cols, nnz;
  if (!(header >> n_rows >> n_cols >> nnz)) {
    throw ParseError(1, "expected `n_rows n_cols nnz` header");
  }
  std::vector<SparseMatrix::Triplet> triplets;
  triplets.reserve(nnz);
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    SparseMatrix::Triplet t{};
    if (!(fields >> t.row >> t.col >> t.value)) throw ParseError(line_no, "expected `i j value`");
    if (t.row >= n_rows || t.col >= n_cols) throw ParseError(line_no, "index out of range");
    triplets.push_back(t);
  }
  if (triplets.size() != nnz) throw ParseError(line_no, "entry count does not match header");
  return SparseMatrix::from_triplets(n_rows, n_cols, std::move(triplets));
}

}  // namespace

void save_matrix_text(const SparseMatrix &m, const std::string &path) {
  std::ofstream out(path);
  if (!out) throw IoError(path, "cannot write matrix");
  out << m.rows() << ' ' << m.cols() << ' ' << m.nnz() << '\n';
  out << std::setprecision(17);
  const auto offsets = m.row_offsets();
  const auto cols = m.col_indices();
  const auto values = m.values();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t p = offsets[i]; p < offsets[i + 1]; ++p) {
      out << i << ' ' << cols[p] << ' ' << values[p] << '\n';
    }
  }
  if (!out) throw IoError(path, "error writing matrix");
}

void save_matrix_binary(const SparseMatrix &m, const std::string &path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path, "cannot write matrix");
  out.write(kMagic, 4);
  write_le<std::uint64_t>(out, m.rows());
  write_le<std::uint64_t>(out, m.cols());
  write_le<std::uint64_t>(out, m.nnz());
  for (std::size_t o : m.row_offsets()) write_le<std::uint64_t>(out, o);
  for (std::size_t c : m.col_indices()) write_le<std::uint64_t>(out, c);
  for (double v : m.values()) write_le<double>(out, v);
  if (!out) throw IoError(path, "error writing matrix");
}

SparseMatrix load_matrix(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path, "cannot open matrix");
  char magic[4] = {};
  in.read(magic, 4);
  if (in.gcount() == 4 && std::memcmp(magic, kMagic, 4) == 0) return load_binary(in, path);
  in.clear();
  in.seekg(0);
  return load_text(in);
}

void save_dense_binary(const Eigen::MatrixXd &m, const std::string &path) {
  save_matrix_binary(SparseMatrix::from_dense(m), path);
}

Eigen::MatrixXd load_dense(const std::string &path) { return load_matrix(path).to_dense(); }

}  // namespace pmiemb
