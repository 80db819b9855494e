#include "pmiemb/embed.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "pmiemb/error.h"

namespace pmiemb {

using Eigen::Index;
using Eigen::MatrixXd;

std::string to_string(EmbeddingMethod method) {
  switch (method) {
    case EmbeddingMethod::kSvd: return "svd";
    case EmbeddingMethod::kQrQ: return "qr_q";
    case EmbeddingMethod::kQrR: return "qr_r";
    case EmbeddingMethod::kNmf: return "nmf";
  }
  return "unknown";
}

EmbeddingMethod parse_embedding_method(const std::string &name) {
  if (name == "svd") return EmbeddingMethod::kSvd;
  if (name == "qr_q") return EmbeddingMethod::kQrQ;
  if (name == "qr_r") return EmbeddingMethod::kQrR;
  if (name == "nmf") return EmbeddingMethod::kNmf;
  throw ArgumentError("unknown embedding method '" + name + "'");
}

EmbeddingMatrix::EmbeddingMatrix(std::shared_ptr<const Vocabulary> vocab, MatrixXd vectors,
                                 EmbeddingMethod method, EmbeddingMetadata meta)
    : vocab_(std::move(vocab)), vectors_(std::move(vectors)), method_(method),
      meta_(std::move(meta)) {
  if (!vocab_) throw ArgumentError("embedding requires a vocabulary");
  if (static_cast<std::size_t>(vectors_.rows()) != vocab_->size()) {
    throw ArgumentError("embedding rows (" + std::to_string(vectors_.rows()) +
                        ") differ from vocabulary size (" + std::to_string(vocab_->size()) + ")");
  }
  if (vectors_.cols() < 1) throw ArgumentError("embedding dimension must be at least 1");
  if (!vectors_.allFinite()) throw ArgumentError("embedding contains non-finite values");
  if (method_ == EmbeddingMethod::kNmf && (vectors_.array() < 0.0).any()) {
    throw ArgumentError("NMF embeddings must be non-negative");
  }
}

EmbeddingMatrix svd_embeddings(const SvdFactors &f, std::shared_ptr<const Vocabulary> vocab) {
  if ((f.s.array() < 0.0).any()) throw ArgumentError("negative singular value");
  return EmbeddingMatrix(std::move(vocab), f.u * f.s.cwiseSqrt().asDiagonal(),
                         EmbeddingMethod::kSvd);
}

EmbeddingMatrix qr_q_embeddings(const QrFactors &f, std::shared_ptr<const Vocabulary> vocab) {
  return EmbeddingMatrix(std::move(vocab), f.q.leftCols(static_cast<Index>(f.d)),
                         EmbeddingMethod::kQrQ);
}

EmbeddingMatrix qr_r_embeddings(const QrFactors &f, std::shared_ptr<const Vocabulary> vocab) {
  return EmbeddingMatrix(std::move(vocab), f.r_unpermuted().transpose(), EmbeddingMethod::kQrR);
}

EmbeddingMatrix nmf_embeddings(const NmfFactors &f, std::shared_ptr<const Vocabulary> vocab) {
  EmbeddingMetadata meta;
  const double tiny = (f.w.array().abs() < 1e-12).cast<double>().sum();
  meta.sparsity = f.w.size() > 0 ? tiny / static_cast<double>(f.w.size()) : 0.0;
  return EmbeddingMatrix(std::move(vocab), f.w, EmbeddingMethod::kNmf, meta);
}

EmbeddingMatrix extract_embeddings(const FactorizationResult &f, EmbeddingMethod method,
                                   std::shared_ptr<const Vocabulary> vocab) {
  const auto wrong = [&] {
    return ArgumentError("factorization '" + method_name(f) + "' cannot yield " +
                         to_string(method) + " embeddings");
  };
  switch (method) {
    case EmbeddingMethod::kSvd:
      if (auto *s = std::get_if<SvdFactors>(&f)) return svd_embeddings(*s, std::move(vocab));
      throw wrong();
    case EmbeddingMethod::kQrQ:
      if (auto *q = std::get_if<QrFactors>(&f)) return qr_q_embeddings(*q, std::move(vocab));
      throw wrong();
    case EmbeddingMethod::kQrR:
      if (auto *q = std::get_if<QrFactors>(&f)) return qr_r_embeddings(*q, std::move(vocab));
      throw wrong();
    case EmbeddingMethod::kNmf:
      if (auto *n = std::get_if<NmfFactors>(&f)) return nmf_embeddings(*n, std::move(vocab));
      throw wrong();
  }
  throw wrong();
}

void save_embeddings(const EmbeddingMatrix &e, const std::string &path, int precision) {
  std::ofstream out(path);
  if (!out) throw IoError(path, "cannot write embeddings");
  out << e.size() << ' ' << e.d() << '\n';
  out << std::setprecision(precision);
  for (std::size_t i = 0; i < e.size(); ++i) {
    out << e.vocab().word(i);
    for (Index k = 0; k < static_cast<Index>(e.d()); ++k) {
      out << ' ' << e.vectors()(static_cast<Index>(i), k);
    }
    out << '\n';
  }
  if (!out) throw IoError(path, "error writing embeddings");

  nlohmann::json meta = {{"method", to_string(e.method())}, {"d", e.d()}};
  const auto &m = e.metadata();
  meta["corpus_split"] = m.corpus_split ? nlohmann::json(*m.corpus_split) : nlohmann::json();
  meta["seed"] = m.seed ? nlohmann::json(*m.seed) : nlohmann::json();
  if (m.sparsity) meta["sparsity"] = *m.sparsity;
  std::ofstream side(path + ".json");
  if (!side) throw IoError(path + ".json", "cannot write embedding metadata");
  side << meta.dump(2) << '\n';
}

EmbeddingMatrix load_embeddings(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw IoError(path, "cannot open embeddings");
  std::string line;
  if (!std::getline(in, line)) throw ParseError(1, "missing header");
  std::istringstream header(line);
  long long n = -1, d = -1;
  std::string extra;
  if (!(header >> n >> d) || (header >> extra)) throw ParseError(1, "expected `n d` header");
  if (n < 1) throw ParseError(1, "embedding count must be positive");
  if (d < 1) throw ParseError(1, "embedding dimension must be positive");

  std::vector<std::string> words;
  words.reserve(static_cast<std::size_t>(n));
  MatrixXd vectors(n, d);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (static_cast<long long>(words.size()) == n) {
      throw ParseError(line_no, "more rows than declared in header");
    }
    std::istringstream fields(line);
    std::string word;
    fields >> word;
    const auto row = static_cast<Index>(words.size());
    for (Index k = 0; k < d; ++k) {
      if (!(fields >> vectors(row, k))) {
        throw ParseError(line_no, "expected " + std::to_string(d) + " values");
      }
    }
    if (fields >> extra) throw ParseError(line_no, "more values than the declared dimension");
    words.push_back(std::move(word));
  }
  if (static_cast<long long>(words.size()) != n) {
    throw ParseError(line_no, "header declares " + std::to_string(n) + " rows but found " +
                                  std::to_string(words.size()));
  }

  EmbeddingMethod method = EmbeddingMethod::kSvd;
  EmbeddingMetadata meta;
  if (std::filesystem::exists(path + ".json")) {
    std::ifstream side(path + ".json");
    nlohmann::json j;
    try {
      side >> j;
    } catch (const nlohmann::json::exception &e) {
      throw IoError(path + ".json", std::string("malformed metadata: ") + e.what());
    }
    method = parse_embedding_method(j.at("method").get<std::string>());
    if (j.at("d").get<long long>() != d) {
      throw IoError(path + ".json", "metadata d does not match the embedding file");
    }
    if (j.contains("corpus_split") && !j["corpus_split"].is_null()) {
      meta.corpus_split = j["corpus_split"].get<std::size_t>();
    }
    if (j.contains("seed") && !j["seed"].is_null()) meta.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("sparsity")) meta.sparsity = j["sparsity"].get<double>();
  }
  std::vector<std::uint64_t> counts(words.size(), 0);
  std::shared_ptr<const Vocabulary> vocab;
  try {
    vocab = std::make_shared<const Vocabulary>(std::move(words), std::move(counts), 0);
  } catch (const ArgumentError &e) {
    throw ParseError(line_no, e.what());
  }
  return EmbeddingMatrix(std::move(vocab), std::move(vectors), method, meta);
}

}  // namespace pmiemb
