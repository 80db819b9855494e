// Rank-d approximations of a sparse matrix: truncated SVD, QR with column
// pivoting, and non-negative matrix factorization.

#ifndef PMIEMB_FACTORIZE_H_
#define PMIEMB_FACTORIZE_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "pmiemb/sparse_matrix.h"

namespace pmiemb {

// Matrix-free access to a linear map, used by the iterative SVD.
class LinearOperator {
 public:
  virtual ~LinearOperator() = default;
  virtual std::size_t rows() const = 0;
  virtual std::size_t cols() const = 0;
  virtual Eigen::MatrixXd apply(const Eigen::MatrixXd &x) const = 0;
  virtual Eigen::MatrixXd apply_transpose(const Eigen::MatrixXd &y) const = 0;
};

class SparseOperator final : public LinearOperator {
 public:
  explicit SparseOperator(const SparseMatrix &a) : a_(a) {}
  std::size_t rows() const override { return a_.rows(); }
  std::size_t cols() const override { return a_.cols(); }
  Eigen::MatrixXd apply(const Eigen::MatrixXd &x) const override { return a_.multiply(x); }
  Eigen::MatrixXd apply_transpose(const Eigen::MatrixXd &y) const override {
    return a_.multiply_transpose(y);
  }

 private:
  const SparseMatrix &a_;
};

class DenseOperator final : public LinearOperator {
 public:
  explicit DenseOperator(const Eigen::MatrixXd &a) : a_(a) {}
  std::size_t rows() const override { return static_cast<std::size_t>(a_.rows()); }
  std::size_t cols() const override { return static_cast<std::size_t>(a_.cols()); }
  Eigen::MatrixXd apply(const Eigen::MatrixXd &x) const override { return a_ * x; }
  Eigen::MatrixXd apply_transpose(const Eigen::MatrixXd &y) const override {
    return a_.transpose() * y;
  }

 private:
  const Eigen::MatrixXd &a_;
};

// ---------------------------------------------------------------------------
// Truncated SVD

struct SvdOptions {
  std::size_t oversampling = 10;
  // Power iterations applied before the first Rayleigh-Ritz step.
  std::size_t power_iterations = 2;
  std::uint64_t seed = 0;
  // Converged when ||A v_i - s_i u_i|| <= tolerance * s_1 for all i <= d.
  double tolerance = 1e-10;
  // Further subspace iterations allowed before falling back to Lanczos.
  std::size_t max_subspace_iterations = 60;
  bool lanczos_fallback = true;
};

struct SvdFactors {
  Eigen::MatrixXd u;  // rows x d, orthonormal columns
  Eigen::VectorXd s;  // d values, non-increasing
  Eigen::MatrixXd v;  // cols x d, orthonormal columns
  std::size_t d = 0;
  std::size_t iterations = 0;
  bool used_lanczos = false;
  // max_i ||A v_i - s_i u_i|| / s_1 (or ||A^T u_i - s_i v_i|| for Lanczos).
  double residual = 0.0;
};

// Requires 1 <= d < min(rows, cols). Singular vector signs are fixed so the
// largest-magnitude entry of each u_i is positive.
SvdFactors truncated_svd(const LinearOperator &a, std::size_t d, const SvdOptions &options = {});
SvdFactors truncated_svd(const SparseMatrix &a, std::size_t d, const SvdOptions &options = {});

// ---------------------------------------------------------------------------
// Pivoted QR

struct QrOptions {
  // Pivots at or below this absolute norm count as zero. Zero selects
  // max(rows, cols) * eps * (largest column norm).
  double rank_tolerance = 0.0;
};

struct QrFactors {
  Eigen::MatrixXd q;  // rows x d, orthonormal columns
  // d x cols, columns in pivoted order: A P ~ Q R. Upper trapezoidal.
  Eigen::MatrixXd r;
  // Column k of A P is column permutation[k] of A.
  std::vector<std::size_t> permutation;
  std::size_t d = 0;

  // (R P^T) restricted to the first d rows; column j belongs to column j of A.
  Eigen::MatrixXd r_unpermuted() const;
};

// Greedy (Businger-Golub) column pivoting with norm downdating; only d steps
// are carried out, so Q and R are the truncated factors. Requires
// 1 <= d <= min(rows, cols).
QrFactors pivoted_qr(const SparseMatrix &a, std::size_t d, const QrOptions &options = {});

struct RrqrDiagnostics {
  double sigma_min_r11 = 0.0;
  double sigma_max_r22 = 0.0;
  double sigma_d = 0.0;
  double sigma_d_plus_1 = 0.0;
  double ratio_min = 0.0;
  // Absent when sigma_{d+1}(A) is numerically zero (exact rank d).
  std::optional<double> ratio_max;
  bool exact_rank = false;
  double tau = 0.0;
  bool rank_revealing = false;
};

// Compares the R11 / R22 blocks of a pivoted QR against the singular values of
// A at the split d. Requires d <= factors.d and d < cols.
RrqrDiagnostics rrqr_spectrum_check(const QrFactors &factors, const SparseMatrix &a,
                                    std::size_t d, double tau = 100.0);

// ---------------------------------------------------------------------------
// NMF

struct NmfInit {
  Eigen::MatrixXd w;  // rows x d
  Eigen::MatrixXd h;  // d x cols
};

// NNDSVD: non-negative parts of the leading singular pairs. Zeros are
// replaced by 1e-6 * mean(A).
NmfInit nndsvd_init(const SparseMatrix &a, std::size_t d, const SvdOptions &svd_options = {});

struct NmfOptions {
  std::size_t max_iter = 200;
  // Stops when (f_{t-1} - f_t) / f_{t-1} < tol.
  double tol = 1e-4;
  SvdOptions svd;
};

enum class NmfStop { kConverged, kMaxIterations };

struct NmfFactors {
  Eigen::MatrixXd w;
  Eigen::MatrixXd h;
  // ||A - WH||_F^2 at the initial point and after every iteration.
  std::vector<double> objective_trace;
  std::size_t d = 0;
  std::size_t iterations = 0;
  NmfStop stop = NmfStop::kMaxIterations;
};

// Lee-Seung multiplicative updates for the Frobenius objective, initialized
// with NNDSVD.
NmfFactors nmf(const SparseMatrix &a, std::size_t d, const NmfOptions &options = {});
NmfFactors nmf(const SparseMatrix &a, NmfInit init, const NmfOptions &options = {});

// ---------------------------------------------------------------------------
// Common

using FactorizationResult = std::variant<SvdFactors, QrFactors, NmfFactors>;

std::string method_name(const FactorizationResult &f);
std::size_t rank_of(const FactorizationResult &f);

// A_d = left * right.
struct LowRankPair {
  Eigen::MatrixXd left;
  Eigen::MatrixXd right;
};
LowRankPair low_rank_pair(const FactorizationResult &f);

enum class ErrorRoute {
  kAuto,
  // Exact entry-wise sum, A_d materialized a block of rows at a time.
  kRowStreamed,
  // ||A||^2 - 2 tr(L^T A R^T) + tr(L^T L R R^T); O(nnz d + n d^2).
  kTraceIdentity,
};

// ||A - A_d||_F.
double approximation_error(const SparseMatrix &a, const FactorizationResult &f,
                           ErrorRoute route = ErrorRoute::kAuto);
double approximation_error(const SparseMatrix &a, const Eigen::MatrixXd &left,
                           const Eigen::MatrixXd &right, ErrorRoute route = ErrorRoute::kAuto);

struct FactorMetadata {
  std::string method;
  std::size_t d = 0;
  std::uint64_t seed = 0;
  std::size_t iterations = 0;
  double final_objective = 0.0;
};

// Writes <prefix>.<factor>.bin for each factor plus a <prefix>.json sidecar.
void save_factors(const FactorizationResult &f, const FactorMetadata &meta,
                  const std::string &prefix);
FactorizationResult load_factors(const std::string &prefix, FactorMetadata *meta = nullptr);

}  // namespace pmiemb

#endif  // PMIEMB_FACTORIZE_H_
