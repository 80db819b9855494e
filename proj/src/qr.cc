// QR with greedy column pivoting, computed left-looking so that only the
// n x d block of Q and the d x n block of R are ever stored. Row k of R is
// q_k^T A (one sparse transposed product); column norms of the not yet
// pivoted residual are downdated from it and recomputed when cancellation
// makes the downdate unreliable.

#include <algorithm>
#include <cmath>
#include <limits>

#include "pmiemb/error.h"
#include "pmiemb/factorize.h"

namespace pmiemb {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

VectorXd dense_row(const SparseMatrix &m, std::size_t i) {
  VectorXd out = VectorXd::Zero(static_cast<Index>(m.cols()));
  const auto offsets = m.row_offsets();
  const auto cols = m.col_indices();
  const auto values = m.values();
  for (std::size_t p = offsets[i]; p < offsets[i + 1]; ++p) {
    out(static_cast<Index>(cols[p])) = values[p];
  }
  return out;
}

}  // namespace

Eigen::MatrixXd QrFactors::r_unpermuted() const {
  MatrixXd out(r.rows(), r.cols());
  for (std::size_t k = 0; k < permutation.size(); ++k) {
    out.col(static_cast<Index>(permutation[k])) = r.col(static_cast<Index>(k));
  }
  return out;
}

QrFactors pivoted_qr(const SparseMatrix &a, std::size_t d, const QrOptions &options) {
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  if (d < 1 || d > std::min(m, n)) {
    throw ArgumentError("pivoted QR rank " + std::to_string(d) + " must satisfy 1 <= d <= " +
                        std::to_string(std::min(m, n)));
  }
  const SparseMatrix at = a.transpose();  // row j holds column j of A
  const auto di = static_cast<Index>(d);

  std::vector<double> norm_current(n), norm_reference(n);
  double largest = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    double s = 0.0;
    const auto offsets = at.row_offsets();
    for (std::size_t p = offsets[j]; p < offsets[j + 1]; ++p) s += at.values()[p] * at.values()[p];
    norm_current[j] = norm_reference[j] = std::sqrt(s);
    largest = std::max(largest, norm_current[j]);
  }
  const double eps = std::numeric_limits<double>::epsilon();
  const double rank_tol = options.rank_tolerance > 0.0
                              ? options.rank_tolerance
                              : static_cast<double>(std::max(m, n)) * eps * largest;
  const double downdate_tol = std::sqrt(eps);

  MatrixXd q = MatrixXd::Zero(static_cast<Index>(m), di);
  MatrixXd r_orig = MatrixXd::Zero(di, static_cast<Index>(n));  // columns in A's order
  std::vector<bool> pivoted(n, false);
  std::vector<std::size_t> permutation;
  permutation.reserve(n);

  for (Index k = 0; k < di; ++k) {
    std::size_t pivot = n;
    double best = -1.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (!pivoted[j] && norm_current[j] > best) {
        best = norm_current[j];
        pivot = j;
      }
    }

    VectorXd w = dense_row(at, pivot);
    VectorXd coeff = VectorXd::Zero(k);
    for (int pass = 0; pass < 2 && k > 0; ++pass) {
      const VectorXd c = q.leftCols(k).transpose() * w;
      w.noalias() -= q.leftCols(k) * c;
      coeff += c;
    }
    const double diag = w.norm();
    if (!(diag > rank_tol)) throw RankDeficiencyError(static_cast<std::size_t>(k), d);

    q.col(k) = w / diag;
    r_orig.col(static_cast<Index>(pivot)).head(k) = coeff;
    r_orig(k, static_cast<Index>(pivot)) = diag;
    pivoted[pivot] = true;
    permutation.push_back(pivot);

    const VectorXd row = a.multiply_transpose(q.col(k));
    for (std::size_t j = 0; j < n; ++j) {
      if (pivoted[j]) continue;
      const double rkj = row(static_cast<Index>(j));
      r_orig(k, static_cast<Index>(j)) = rkj;
      if (norm_current[j] == 0.0) continue;
      double ratio = std::abs(rkj) / norm_current[j];
      double shrink = std::max(0.0, (1.0 - ratio) * (1.0 + ratio));
      const double drift = shrink * (norm_current[j] / norm_reference[j]) *
                           (norm_current[j] / norm_reference[j]);
      if (drift <= downdate_tol) {
        VectorXd resid = dense_row(at, j);
        resid.noalias() -= q.leftCols(k + 1) * r_orig.col(static_cast<Index>(j)).head(k + 1);
        norm_current[j] = norm_reference[j] = resid.norm();
      } else {
        norm_current[j] *= std::sqrt(shrink);
      }
    }
  }

  for (std::size_t j = 0; j < n; ++j) {
    if (!pivoted[j]) permutation.push_back(j);
  }

  QrFactors f;
  f.d = d;
  f.q = std::move(q);
  f.r = MatrixXd::Zero(di, static_cast<Index>(n));
  for (std::size_t pos = 0; pos < n; ++pos) {
    const auto col = static_cast<Index>(pos);
    f.r.col(col) = r_orig.col(static_cast<Index>(permutation[pos]));
    for (Index i = col + 1; i < di; ++i) f.r(i, col) = 0.0;
  }
  f.permutation = std::move(permutation);
  return f;
}

namespace {

// Residual of the truncated factorization restricted to the non-pivoted
// columns: E = A P_rest - Q_d R_{1:d, rest}. Its singular values are those of
// the trailing R22 block of the full factorization.
class TrailingResidual final : public LinearOperator {
 public:
  TrailingResidual(const SparseMatrix &a, const QrFactors &f, std::size_t d)
      : a_(a),
        q_(f.q.leftCols(static_cast<Index>(d))),
        rest_(f.permutation.begin() + static_cast<std::ptrdiff_t>(d), f.permutation.end()),
        r_rest_(f.r.block(0, static_cast<Index>(d), static_cast<Index>(d),
                          static_cast<Index>(f.r.cols()) - static_cast<Index>(d))) {}

  std::size_t rows() const override { return a_.rows(); }
  std::size_t cols() const override { return rest_.size(); }

  MatrixXd apply(const MatrixXd &x) const override {
    MatrixXd full = MatrixXd::Zero(static_cast<Index>(a_.cols()), x.cols());
    for (std::size_t k = 0; k < rest_.size(); ++k) {
      full.row(static_cast<Index>(rest_[k])) = x.row(static_cast<Index>(k));
    }
    return a_.multiply(full) - q_ * (r_rest_ * x);
  }

  MatrixXd apply_transpose(const MatrixXd &y) const override {
    const MatrixXd full = a_.multiply_transpose(y);
    MatrixXd out(static_cast<Index>(rest_.size()), y.cols());
    for (std::size_t k = 0; k < rest_.size(); ++k) {
      out.row(static_cast<Index>(k)) = full.row(static_cast<Index>(rest_[k]));
    }
    return out - r_rest_.transpose() * (q_.transpose() * y);
  }

 private:
  const SparseMatrix &a_;
  MatrixXd q_;
  std::vector<std::size_t> rest_;
  MatrixXd r_rest_;
};

double largest_singular_value(const LinearOperator &op) {
  if (std::min(op.rows(), op.cols()) >= 2) return truncated_svd(op, 1).s(0);
  // A single row or column: the norm of the dense matrix.
  const MatrixXd dense = op.apply(MatrixXd::Identity(static_cast<Index>(op.cols()),
                                                     static_cast<Index>(op.cols())));
  return dense.norm();
}

}  // namespace

RrqrDiagnostics rrqr_spectrum_check(const QrFactors &factors, const SparseMatrix &a,
                                    std::size_t d, double tau) {
  const std::size_t n = a.cols();
  if (d < 1 || d > factors.d || d >= n) {
    throw ArgumentError("rrqr_spectrum_check requires 1 <= d <= factors.d and d < n");
  }
  if (factors.permutation.size() != n || static_cast<std::size_t>(factors.q.rows()) != a.rows()) {
    throw ArgumentError("QR factors do not match the matrix");
  }
  RrqrDiagnostics out;
  out.tau = tau;
  const auto di = static_cast<Index>(d);

  const MatrixXd r11 = factors.r.topLeftCorner(di, di);
  out.sigma_min_r11 = Eigen::JacobiSVD<MatrixXd>(r11).singularValues()(di - 1);

  VectorXd spectrum;
  if (d + 1 < std::min(a.rows(), n)) {
    spectrum = truncated_svd(a, d + 1).s;
  } else {
    spectrum = Eigen::JacobiSVD<MatrixXd>(a.to_dense()).singularValues();
  }
  out.sigma_d = spectrum(di - 1);
  out.sigma_d_plus_1 = spectrum.size() > di ? spectrum(di) : 0.0;
  if (!(out.sigma_d > 0.0)) throw ArgumentError("sigma_d(A) is zero");

  out.sigma_max_r22 = largest_singular_value(TrailingResidual(a, factors, d));
  out.ratio_min = out.sigma_min_r11 / out.sigma_d;

  const double eps = std::numeric_limits<double>::epsilon();
  const double zero_level = static_cast<double>(std::max(a.rows(), n)) * eps * spectrum(0);
  out.exact_rank = out.sigma_d_plus_1 <= zero_level;
  if (!out.exact_rank) out.ratio_max = out.sigma_max_r22 / out.sigma_d_plus_1;

  const auto within = [tau](double x) { return x >= 1.0 / tau && x <= tau; };
  out.rank_revealing = within(out.ratio_min) && (out.exact_rank || within(*out.ratio_max));
  return out;
}

}  // namespace pmiemb
