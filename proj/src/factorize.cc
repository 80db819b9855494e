#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "pmiemb/error.h"
#include "pmiemb/factorize.h"

namespace pmiemb {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// Row blocks of A_d are materialized this many rows at a time.
constexpr Index kRowBlock = 64;
// Above this many entries the trace identity is used instead.
constexpr double kStreamedLimit = 2.5e7;

double streamed_error2(const SparseMatrix &a, const MatrixXd &left, const MatrixXd &right) {
  const auto offsets = a.row_offsets();
  const auto cols = a.col_indices();
  const auto values = a.values();
  const auto m = static_cast<Index>(a.rows());
  double total = 0.0;
  for (Index i0 = 0; i0 < m; i0 += kRowBlock) {
    const Index rows = std::min(kRowBlock, m - i0);
    MatrixXd block = left.middleRows(i0, rows) * right;  // rows x n
    for (Index r = 0; r < rows; ++r) {
      const auto i = static_cast<std::size_t>(i0 + r);
      for (std::size_t p = offsets[i]; p < offsets[i + 1]; ++p) {
        block(r, static_cast<Index>(cols[p])) -= values[p];
      }
    }
    total += block.squaredNorm();
  }
  return total;
}

double trace_error2(const SparseMatrix &a, const MatrixXd &left, const MatrixXd &right) {
  const MatrixXd art = a.multiply(right.transpose());  // m x d
  const double cross = (left.array() * art.array()).sum();
  const double model =
      ((left.transpose() * left).array() * (right * right.transpose()).array()).sum();
  return std::max(0.0, a.frobenius_norm_squared() - 2.0 * cross + model);
}

}  // namespace

std::string method_name(const FactorizationResult &f) {
  return std::visit(overloaded{[](const SvdFactors &) { return std::string("svd"); },
                               [](const QrFactors &) { return std::string("qr"); },
                               [](const NmfFactors &) { return std::string("nmf"); }},
                    f);
}

std::size_t rank_of(const FactorizationResult &f) {
  return std::visit([](const auto &x) { return x.d; }, f);
}

LowRankPair low_rank_pair(const FactorizationResult &f) {
  return std::visit(
      overloaded{
          [](const SvdFactors &s) {
            return LowRankPair{s.u * s.s.asDiagonal(), s.v.transpose()};
          },
          [](const QrFactors &q) { return LowRankPair{q.q, q.r_unpermuted()}; },
          [](const NmfFactors &n) { return LowRankPair{n.w, n.h}; },
      },
      f);
}

double approximation_error(const SparseMatrix &a, const MatrixXd &left, const MatrixXd &right,
                           ErrorRoute route) {
  if (static_cast<std::size_t>(left.rows()) != a.rows() ||
      static_cast<std::size_t>(right.cols()) != a.cols() || left.cols() != right.rows()) {
    throw ArgumentError("factor dimensions do not match the matrix");
  }
  if (route == ErrorRoute::kAuto) {
    route = static_cast<double>(a.rows()) * static_cast<double>(a.cols()) <= kStreamedLimit
                ? ErrorRoute::kRowStreamed
                : ErrorRoute::kTraceIdentity;
  }
  const double e2 = route == ErrorRoute::kRowStreamed ? streamed_error2(a, left, right)
                                                      : trace_error2(a, left, right);
  return std::sqrt(e2);
}

double approximation_error(const SparseMatrix &a, const FactorizationResult &f,
                           ErrorRoute route) {
  const LowRankPair pair = low_rank_pair(f);
  return approximation_error(a, pair.left, pair.right, route);
}

// ---------------------------------------------------------------------------
// Persistence

void save_factors(const FactorizationResult &f, const FactorMetadata &meta,
                  const std::string &prefix) {
  nlohmann::json sidecar = {{"method", meta.method.empty() ? method_name(f) : meta.method},
                            {"d", rank_of(f)},
                            {"seed", meta.seed},
                            {"iterations", meta.iterations},
                            {"final_objective", meta.final_objective}};
  std::visit(overloaded{
                 [&](const SvdFactors &s) {
                   sidecar["factors"] = "svd";
                   save_dense_binary(s.u, prefix + ".U.bin");
                   save_dense_binary(s.s.transpose(), prefix + ".S.bin");
                   save_dense_binary(s.v, prefix + ".V.bin");
                 },
                 [&](const QrFactors &q) {
                   sidecar["factors"] = "qr";
                   sidecar["permutation"] = q.permutation;
                   save_dense_binary(q.q, prefix + ".Q.bin");
                   save_dense_binary(q.r, prefix + ".R.bin");
                 },
                 [&](const NmfFactors &n) {
                   sidecar["factors"] = "nmf";
                   sidecar["objective_trace"] = n.objective_trace;
                   sidecar["stop"] = n.stop == NmfStop::kConverged ? "converged" : "max_iter";
                   save_dense_binary(n.w, prefix + ".W.bin");
                   save_dense_binary(n.h, prefix + ".H.bin");
                 },
             },
             f);
  std::ofstream out(prefix + ".json");
  if (!out) throw IoError(prefix + ".json", "cannot write factor sidecar");
  out << sidecar.dump(2) << '\n';
}

FactorizationResult load_factors(const std::string &prefix, FactorMetadata *meta) {
  const std::string sidecar_path = prefix + ".json";
  std::ifstream in(sidecar_path);
  if (!in) throw IoError(sidecar_path, "cannot open factor sidecar");
  nlohmann::json sidecar;
  try {
    in >> sidecar;
  } catch (const nlohmann::json::exception &e) {
    throw IoError(sidecar_path, std::string("malformed sidecar: ") + e.what());
  }
  const std::string kind = sidecar.value("factors", std::string());
  const auto d = sidecar.at("d").get<std::size_t>();
  if (meta) {
    meta->method = sidecar.value("method", kind);
    meta->d = d;
    meta->seed = sidecar.value("seed", std::uint64_t{0});
    meta->iterations = sidecar.value("iterations", std::size_t{0});
    meta->final_objective = sidecar.value("final_objective", 0.0);
  }
  const auto check_cols = [&](const MatrixXd &m, const std::string &name) {
    if (static_cast<std::size_t>(m.cols()) != d) {
      throw IoError(prefix + "." + name + ".bin", "factor width does not match sidecar d");
    }
  };
  if (kind == "svd") {
    SvdFactors s;
    s.d = d;
    s.u = load_dense(prefix + ".U.bin");
    s.v = load_dense(prefix + ".V.bin");
    const MatrixXd sv = load_dense(prefix + ".S.bin");
    check_cols(s.u, "U");
    check_cols(s.v, "V");
    check_cols(sv, "S");
    s.s = sv.row(0).transpose();
    return s;
  }
  if (kind == "qr") {
    QrFactors q;
    q.d = d;
    q.q = load_dense(prefix + ".Q.bin");
    q.r = load_dense(prefix + ".R.bin");
    q.permutation = sidecar.at("permutation").get<std::vector<std::size_t>>();
    check_cols(q.q, "Q");
    if (static_cast<std::size_t>(q.r.rows()) != d ||
        static_cast<std::size_t>(q.r.cols()) != q.permutation.size()) {
      throw IoError(prefix + ".R.bin", "R shape does not match sidecar");
    }
    return q;
  }
  if (kind == "nmf") {
    NmfFactors n;
    n.d = d;
    n.w = load_dense(prefix + ".W.bin");
    n.h = load_dense(prefix + ".H.bin");
    check_cols(n.w, "W");
    if (static_cast<std::size_t>(n.h.rows()) != d) {
      throw IoError(prefix + ".H.bin", "H height does not match sidecar d");
    }
    n.objective_trace = sidecar.value("objective_trace", std::vector<double>{});
    n.iterations = sidecar.value("iterations", std::size_t{0});
    n.stop = sidecar.value("stop", std::string()) == "converged" ? NmfStop::kConverged
                                                                  : NmfStop::kMaxIterations;
    return n;
  }
  throw IoError(sidecar_path, "unknown factor kind '" + kind + "'");
}

}  // namespace pmiemb
