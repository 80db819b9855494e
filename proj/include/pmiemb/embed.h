// Word vectors extracted from factorizations, and their word2vec text format.

#ifndef PMIEMB_EMBED_H_
#define PMIEMB_EMBED_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <string>

#include <Eigen/Dense>

#include "pmiemb/corpus.h"
#include "pmiemb/factorize.h"

namespace pmiemb {

enum class EmbeddingMethod { kSvd, kQrQ, kQrR, kNmf };

std::string to_string(EmbeddingMethod method);
// Accepts svd, qr_q, qr_r, nmf.
EmbeddingMethod parse_embedding_method(const std::string &name);

struct EmbeddingMetadata {
  std::optional<std::size_t> corpus_split;
  std::optional<std::uint64_t> seed;
  // Fraction of entries below 1e-12 in magnitude; filled for NMF vectors.
  std::optional<double> sparsity;
};

class EmbeddingMatrix {
 public:
  EmbeddingMatrix(std::shared_ptr<const Vocabulary> vocab, Eigen::MatrixXd vectors,
                  EmbeddingMethod method, EmbeddingMetadata meta = {});

  const Vocabulary &vocab() const { return *vocab_; }
  std::shared_ptr<const Vocabulary> vocab_ptr() const { return vocab_; }
  const Eigen::MatrixXd &vectors() const { return vectors_; }
  Eigen::Ref<const Eigen::RowVectorXd> vector(std::size_t i) const {
    return vectors_.row(static_cast<Eigen::Index>(i));
  }
  EmbeddingMethod method() const { return method_; }
  std::size_t d() const { return static_cast<std::size_t>(vectors_.cols()); }
  std::size_t size() const { return static_cast<std::size_t>(vectors_.rows()); }
  const EmbeddingMetadata &metadata() const { return meta_; }
  EmbeddingMetadata &metadata() { return meta_; }

 private:
  std::shared_ptr<const Vocabulary> vocab_;
  Eigen::MatrixXd vectors_;
  EmbeddingMethod method_;
  EmbeddingMetadata meta_;
};

// Rows of U diag(sqrt(S)).
EmbeddingMatrix svd_embeddings(const SvdFactors &f, std::shared_ptr<const Vocabulary> vocab);
// Rows of Q.
EmbeddingMatrix qr_q_embeddings(const QrFactors &f, std::shared_ptr<const Vocabulary> vocab);
// Columns of (R P^T)_{1:d,1:n}, in the original word order.
EmbeddingMatrix qr_r_embeddings(const QrFactors &f, std::shared_ptr<const Vocabulary> vocab);
// Rows of W.
EmbeddingMatrix nmf_embeddings(const NmfFactors &f, std::shared_ptr<const Vocabulary> vocab);

// Dispatches on the method tag; the factorization kind must fit the tag.
EmbeddingMatrix extract_embeddings(const FactorizationResult &f, EmbeddingMethod method,
                                   std::shared_ptr<const Vocabulary> vocab);

// Word2vec text format: `n d`, then `word v_1 ... v_d` per line, values with
// `precision` significant digits. Metadata goes to <path>.json.
void save_embeddings(const EmbeddingMatrix &e, const std::string &path, int precision = 9);
// Reads the sidecar when present (method tag and d are checked against the
// data); without it the method defaults to svd.
EmbeddingMatrix load_embeddings(const std::string &path);

}  // namespace pmiemb

#endif  // PMIEMB_EMBED_H_
