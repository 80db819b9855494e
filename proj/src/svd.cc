// Truncated SVD by randomized subspace iteration with Rayleigh-Ritz
// extraction, falling back to Golub-Kahan-Lanczos bidiagonalization with full
// reorthogonalization when the subspace iteration stalls.

#include <algorithm>
#include <cmath>
#include <limits>

#include "linalg_util.h"
#include "pmiemb/error.h"
#include "pmiemb/factorize.h"

namespace pmiemb {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

void canonicalize_signs(SvdFactors &f) {
  for (Index i = 0; i < f.u.cols(); ++i) {
    Index arg = 0;
    f.u.col(i).cwiseAbs().maxCoeff(&arg);
    if (f.u(arg, i) < 0.0) {
      f.u.col(i) *= -1.0;
      f.v.col(i) *= -1.0;
    }
  }
}

// max_i ||A v_i - s_i u_i|| relative to s_1.
double ritz_residual(const LinearOperator &a, const SvdFactors &f) {
  const double s1 = f.s.size() > 0 ? f.s(0) : 0.0;
  if (s1 == 0.0) return 0.0;
  const MatrixXd r = a.apply(f.v) - f.u * f.s.asDiagonal();
  return r.colwise().norm().maxCoeff() / s1;
}

SvdFactors subspace_iteration(const LinearOperator &a, std::size_t d, const SvdOptions &options,
                              bool *converged) {
  const std::size_t min_dim = std::min(a.rows(), a.cols());
  const auto k = static_cast<Index>(std::min(d + options.oversampling, min_dim));
  const auto di = static_cast<Index>(d);
  detail::NormalStream normal(options.seed);

  MatrixXd q = detail::orthonormalize(a.apply(normal.matrix(static_cast<Index>(a.cols()), k)));
  for (std::size_t it = 0; it < options.power_iterations; ++it) {
    q = detail::orthonormalize(a.apply(detail::orthonormalize(a.apply_transpose(q))));
  }

  SvdFactors f;
  f.d = d;
  for (std::size_t it = 0;; ++it) {
    // B^T = A^T Q, so B = Q^T A = Y S X^T with B^T = X S Y^T.
    const MatrixXd bt = a.apply_transpose(q);
    Eigen::BDCSVD<MatrixXd> svd(bt, Eigen::ComputeThinU | Eigen::ComputeThinV);
    f.s = svd.singularValues().head(di);
    f.v = svd.matrixU().leftCols(di);
    f.u = q * svd.matrixV().leftCols(di);
    f.iterations = it;
    f.residual = ritz_residual(a, f);
    if (f.residual <= options.tolerance) {
      *converged = true;
      return f;
    }
    if (it >= options.max_subspace_iterations) break;
    q = detail::orthonormalize(a.apply(detail::orthonormalize(bt)));
  }
  *converged = false;
  return f;
}

// Projects x against the columns of basis twice (classical Gram-Schmidt with
// reorthogonalization).
void reorthogonalize(const MatrixXd &basis, Index count, VectorXd &x) {
  if (count == 0) return;
  for (int pass = 0; pass < 2; ++pass) {
    const VectorXd c = basis.leftCols(count).transpose() * x;
    x.noalias() -= basis.leftCols(count) * c;
  }
}

// Unit vector orthogonal to the first `count` columns of basis.
VectorXd fresh_direction(const MatrixXd &basis, Index count, detail::NormalStream &normal) {
  for (int attempt = 0; attempt < 8; ++attempt) {
    VectorXd x = normal.matrix(basis.rows(), 1);
    reorthogonalize(basis, count, x);
    const double nrm = x.norm();
    if (nrm > 1e-8) return x / nrm;
  }
  return VectorXd::Zero(basis.rows());
}

SvdFactors lanczos(const LinearOperator &a, std::size_t d, const SvdOptions &options,
                   std::size_t start_steps) {
  const auto m = static_cast<Index>(a.rows());
  const auto n = static_cast<Index>(a.cols());
  const Index min_dim = std::min(m, n);
  const auto di = static_cast<Index>(d);
  Index steps = std::min<Index>(min_dim, static_cast<Index>(start_steps));
  double last_residual = std::numeric_limits<double>::infinity();

  while (true) {
    detail::NormalStream normal(options.seed ^ 0x9E3779B97F4A7C15ull);
    MatrixXd p = MatrixXd::Zero(m, steps);
    MatrixXd qv = MatrixXd::Zero(n, steps + 1);
    VectorXd alpha = VectorXd::Zero(steps);
    VectorXd beta = VectorXd::Zero(steps);
    qv.col(0) = fresh_direction(qv, 0, normal);
    double scale = 0.0;

    for (Index j = 0; j < steps; ++j) {
      VectorXd x = a.apply(qv.col(j));
      if (j > 0) x -= beta(j - 1) * p.col(j - 1);
      reorthogonalize(p, j, x);
      alpha(j) = x.norm();
      scale = std::max(scale, alpha(j));
      if (alpha(j) <= 1e-13 * std::max(scale, 1e-300)) {
        alpha(j) = 0.0;
        p.col(j) = fresh_direction(p, j, normal);
      } else {
        p.col(j) = x / alpha(j);
      }

      VectorXd y = a.apply_transpose(p.col(j));
      y -= alpha(j) * qv.col(j);
      reorthogonalize(qv, j + 1, y);
      beta(j) = y.norm();
      scale = std::max(scale, beta(j));
      if (beta(j) <= 1e-13 * std::max(scale, 1e-300)) {
        beta(j) = 0.0;
        if (j + 1 < n) qv.col(j + 1) = fresh_direction(qv, j + 1, normal);
      } else {
        qv.col(j + 1) = y / beta(j);
      }
    }

    // A Qk = Pk B with B upper bidiagonal (alpha on the diagonal, beta above).
    MatrixXd b = MatrixXd::Zero(steps, steps);
    for (Index j = 0; j < steps; ++j) {
      b(j, j) = alpha(j);
      if (j + 1 < steps) b(j, j + 1) = beta(j);
    }
    Eigen::JacobiSVD<MatrixXd> svd(b, Eigen::ComputeFullU | Eigen::ComputeFullV);
    SvdFactors f;
    f.d = d;
    f.used_lanczos = true;
    f.iterations = static_cast<std::size_t>(steps);
    f.s = svd.singularValues().head(di);
    f.u = p * svd.matrixU().leftCols(di);
    f.v = qv.leftCols(steps) * svd.matrixV().leftCols(di);
    // A^T u_i - s_i v_i = beta_k q_{k+1} (e_k^T x_i).
    const double s1 = f.s(0);
    double res = 0.0;
    if (s1 > 0.0) {
      for (Index i = 0; i < di; ++i) {
        res = std::max(res, std::abs(beta(steps - 1) * svd.matrixU()(steps - 1, i)) / s1);
      }
    }
    f.residual = res;
    last_residual = res;
    if (res <= options.tolerance) return f;
    if (steps >= min_dim) break;
    steps = std::min(min_dim, 2 * steps);
  }
  throw ConvergenceError("truncated SVD did not converge", last_residual);
}

}  // namespace

SvdFactors truncated_svd(const LinearOperator &a, std::size_t d, const SvdOptions &options) {
  const std::size_t min_dim = std::min(a.rows(), a.cols());
  if (d < 1 || d >= min_dim) {
    throw ArgumentError("truncated SVD rank " + std::to_string(d) + " must satisfy 1 <= d < " +
                        std::to_string(min_dim));
  }
  bool converged = false;
  SvdFactors f = subspace_iteration(a, d, options, &converged);
  if (!converged) {
    if (!options.lanczos_fallback) {
      throw ConvergenceError("subspace iteration did not converge", f.residual);
    }
    f = lanczos(a, d, options, std::max<std::size_t>(2 * (d + options.oversampling), d + 20));
  }
  canonicalize_signs(f);
  return f;
}

SvdFactors truncated_svd(const SparseMatrix &a, std::size_t d, const SvdOptions &options) {
  return truncated_svd(SparseOperator(a), d, options);
}

}  // namespace pmiemb
