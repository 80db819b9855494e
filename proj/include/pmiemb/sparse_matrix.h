// Compressed sparse row matrix and its on-disk formats.

#ifndef PMIEMB_SPARSE_MATRIX_H_
#define PMIEMB_SPARSE_MATRIX_H_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace pmiemb {

class SparseMatrix {
 public:
  struct Triplet {
    std::size_t row;
    std::size_t col;
    double value;
  };

  SparseMatrix() = default;
  // Validates the CSR invariants: monotone offsets, strictly increasing
  // column indices within a row, finite values.
  SparseMatrix(std::size_t n_rows, std::size_t n_cols, std::vector<std::size_t> row_offsets,
               std::vector<std::size_t> col_indices, std::vector<double> values);

  // Duplicates are summed; exact zeros are not stored.
  static SparseMatrix from_triplets(std::size_t n_rows, std::size_t n_cols,
                                    std::vector<Triplet> triplets);
  static SparseMatrix from_dense(const Eigen::MatrixXd &dense);

  std::size_t rows() const { return n_rows_; }
  std::size_t cols() const { return n_cols_; }
  std::size_t nnz() const { return values_.size(); }

  std::span<const std::size_t> row_offsets() const { return row_offsets_; }
  std::span<const std::size_t> col_indices() const { return col_indices_; }
  std::span<const double> values() const { return values_; }

  double get(std::size_t i, std::size_t j) const;
  Eigen::MatrixXd to_dense() const;
  SparseMatrix transpose() const;

  double frobenius_norm_squared() const;
  double sum() const;
  bool is_symmetric() const;

  // A * x and A^T * x for dense blocks x.
  Eigen::MatrixXd multiply(const Eigen::MatrixXd &x) const;
  Eigen::MatrixXd multiply_transpose(const Eigen::MatrixXd &x) const;

  bool operator==(const SparseMatrix &other) const = default;

 private:
  std::size_t n_rows_ = 0;
  std::size_t n_cols_ = 0;
  std::vector<std::size_t> row_offsets_{0};
  std::vector<std::size_t> col_indices_;
  std::vector<double> values_;
};

// Text coordinate format: header `n_rows n_cols nnz`, then `i j value` lines
// with 17 significant digits.
void save_matrix_text(const SparseMatrix &m, const std::string &path);

// Little-endian binary: magic `PPMI`, three u64 (n_rows, n_cols, nnz), then
// u64 row_offsets[n_rows + 1], u64 col_indices[nnz], f64 values[nnz].
void save_matrix_binary(const SparseMatrix &m, const std::string &path);

// Detects the format by the magic bytes.
SparseMatrix load_matrix(const std::string &path);

// Dense factors travel through the same binary format with exact zeros
// omitted.
void save_dense_binary(const Eigen::MatrixXd &m, const std::string &path);
Eigen::MatrixXd load_dense(const std::string &path);

}  // namespace pmiemb

#endif  // PMIEMB_SPARSE_MATRIX_H_
