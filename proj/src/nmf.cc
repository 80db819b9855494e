#include <algorithm>
#include <cmath>
#include <limits>

#if defined(__SSE2__)
#include <pmmintrin.h>
#include <xmmintrin.h>
#endif

#include "pmiemb/error.h"
#include "pmiemb/factorize.h"

namespace pmiemb {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

void require_nonnegative(const SparseMatrix &a) {
  for (double v : a.values()) {
    if (v < 0.0) throw ArgumentError("NMF requires a non-negative matrix");
  }
}

// Positive part and negative part magnitudes of x.
std::pair<VectorXd, VectorXd> split_signs(const VectorXd &x) {
  return {x.cwiseMax(0.0), (-x).cwiseMax(0.0)};
}

// In-place multiplicative update factor <- factor .* num ./ den. A zero
// denominator can only pair with a zero numerator (a factor column or row that
// has collapsed to zero), which leaves the entry unchanged.
void multiplicative_update(MatrixXd &factor, const MatrixXd &num, const MatrixXd &den,
                           const char *name) {
  for (Index j = 0; j < factor.cols(); ++j) {
    for (Index i = 0; i < factor.rows(); ++i) {
      const double dn = den(i, j);
      const double nm = num(i, j);
      double updated;
      if (dn > 0.0) {
        updated = factor(i, j) * (nm / dn);
      } else if (nm == 0.0) {
        updated = factor(i, j);
      } else {
        updated = std::numeric_limits<double>::quiet_NaN();
      }
      if (!std::isfinite(updated)) {
        throw NumericalError(std::string("non-finite NMF update of ") + name,
                             static_cast<std::size_t>(i), static_cast<std::size_t>(j));
      }
      factor(i, j) = updated;
    }
  }
}

// Multiplicative updates drive many entries toward zero; subnormal operands
// slow the dense products by an order of magnitude. Flush them to zero for
// the duration of the solve and restore the caller's mode afterwards.
class FlushDenormals {
 public:
#if defined(__SSE2__)
  FlushDenormals() : saved_(_mm_getcsr()) {
    _MM_SET_FLUSH_ZERO_MODE(_MM_FLUSH_ZERO_ON);
    _MM_SET_DENORMALS_ZERO_MODE(_MM_DENORMALS_ZERO_ON);
  }
  ~FlushDenormals() { _mm_setcsr(saved_); }

 private:
  unsigned int saved_;
#endif
};

}  // namespace

NmfInit nndsvd_init(const SparseMatrix &a, std::size_t d, const SvdOptions &svd_options) {
  require_nonnegative(a);
  const auto m = static_cast<Index>(a.rows());
  const auto n = static_cast<Index>(a.cols());
  const auto di = static_cast<Index>(d);
  if (d < 1 || d >= std::min(a.rows(), a.cols())) {
    throw ArgumentError("NNDSVD rank must satisfy 1 <= d < min(rows, cols)");
  }
  NmfInit init{MatrixXd::Zero(m, di), MatrixXd::Zero(di, n)};
  if (a.nnz() == 0) return init;

  const SvdFactors svd = truncated_svd(a, d, svd_options);
  const double s0 = std::sqrt(svd.s(0));
  init.w.col(0) = s0 * svd.u.col(0).cwiseAbs();
  init.h.row(0) = s0 * svd.v.col(0).cwiseAbs().transpose();
  for (Index j = 1; j < di; ++j) {
    const auto [xp, xn] = split_signs(svd.u.col(j));
    const auto [yp, yn] = split_signs(svd.v.col(j));
    const double xp_norm = xp.norm(), yp_norm = yp.norm();
    const double xn_norm = xn.norm(), yn_norm = yn.norm();
    const double positive_mass = xp_norm * yp_norm;
    const double negative_mass = xn_norm * yn_norm;
    if (positive_mass == 0.0 && negative_mass == 0.0) continue;
    const double weight =
        std::sqrt(svd.s(j) * std::max(positive_mass, negative_mass));
    if (positive_mass > negative_mass) {
      init.w.col(j) = weight * xp / xp_norm;
      init.h.row(j) = weight * yp.transpose() / yp_norm;
    } else {
      init.w.col(j) = weight * xn / xn_norm;
      init.h.row(j) = weight * yn.transpose() / yn_norm;
    }
  }

  const double mean = a.sum() / (static_cast<double>(m) * static_cast<double>(n));
  const double fill = 1e-6 * mean;
  init.w = (init.w.array() == 0.0).select(fill, init.w);
  init.h = (init.h.array() == 0.0).select(fill, init.h);
  return init;
}

NmfFactors nmf(const SparseMatrix &a, std::size_t d, const NmfOptions &options) {
  require_nonnegative(a);
  if (d < 1 || d >= std::min(a.rows(), a.cols())) {
    throw ArgumentError("NMF rank must satisfy 1 <= d < min(rows, cols)");
  }
  return nmf(a, nndsvd_init(a, d, options.svd), options);
}

NmfFactors nmf(const SparseMatrix &a, NmfInit init, const NmfOptions &options) {
  require_nonnegative(a);
  const auto m = static_cast<Index>(a.rows());
  const auto n = static_cast<Index>(a.cols());
  const Index di = init.w.cols();
  if (init.w.rows() != m || init.h.rows() != di || init.h.cols() != n || di < 1) {
    throw ArgumentError("NMF initial factors do not match the matrix");
  }
  if ((init.w.array() < 0.0).any() || (init.h.array() < 0.0).any()) {
    throw ArgumentError("NMF initial factors must be non-negative");
  }

  const FlushDenormals flush;
  NmfFactors f;
  f.d = static_cast<std::size_t>(di);
  f.w = std::move(init.w);
  f.h = std::move(init.h);

  const double a_norm2 = a.frobenius_norm_squared();
  // ||A - WH||^2 = ||A||^2 - 2 <W, A H^T> + <W^T W, H H^T>.
  const auto objective = [&](const MatrixXd &aht, const MatrixXd &hht) {
    const double cross = (f.w.array() * aht.array()).sum();
    const double model = ((f.w.transpose() * f.w).array() * hht.array()).sum();
    const double v = a_norm2 - 2.0 * cross + model;
    return v < 0.0 ? 0.0 : v;  // NaN passes through to the update check
  };

  {
    const MatrixXd aht = a.multiply(f.h.transpose());
    f.objective_trace.push_back(objective(aht, f.h * f.h.transpose()));
  }
  f.stop = NmfStop::kMaxIterations;
  if (f.objective_trace.back() == 0.0) {
    f.stop = NmfStop::kConverged;
    return f;
  }

  for (std::size_t it = 0; it < options.max_iter; ++it) {
    const MatrixXd wta = a.multiply_transpose(f.w).transpose();  // d x n
    const MatrixXd wtw = f.w.transpose() * f.w;
    multiplicative_update(f.h, wta, wtw * f.h, "H");

    const MatrixXd aht = a.multiply(f.h.transpose());  // m x d
    const MatrixXd hht = f.h * f.h.transpose();
    multiplicative_update(f.w, aht, f.w * hht, "W");

    const double prev = f.objective_trace.back();
    const double cur = objective(aht, hht);
    f.objective_trace.push_back(cur);
    f.iterations = it + 1;
    if (prev <= 0.0 || (prev - cur) / prev < options.tol) {
      f.stop = NmfStop::kConverged;
      break;
    }
  }
  return f;
}

}  // namespace pmiemb
