// Corpus ingestion: tokenization, vocabulary construction, replicate splits,
// and windowed co-occurrence counting.

#ifndef PMIEMB_CORPUS_H_
#define PMIEMB_CORPUS_H_

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace pmiemb {

struct TokenizerConfig {
  bool lowercase = true;
  // Drops markup tags (<...>) and character entities (&name;) before
  // tokenizing.
  bool strip_non_textual = true;
  std::size_t min_token_length = 1;
};

// Interned token stream with sentence boundaries. Token i has type id ids()[i]
// into the shared lexicon; sentence s covers [offsets[s], offsets[s+1]).
class TokenSequence {
 public:
  TokenSequence();

  static TokenSequence from_sentences(
      const std::vector<std::vector<std::string>> &sentences);

  std::size_t size() const { return ids_.size(); }
  bool empty() const { return ids_.empty(); }
  std::size_t num_sentences() const { return sentence_offsets_.size() - 1; }

  std::string_view token(std::size_t i) const { return (*lexicon_)[ids_[i]]; }
  std::span<const std::uint32_t> ids() const { return ids_; }
  std::span<const std::size_t> sentence_offsets() const { return sentence_offsets_; }
  const std::vector<std::string> &lexicon() const { return *lexicon_; }

  std::vector<std::string> sentence(std::size_t s) const;
  std::vector<std::string> tokens() const;

  // Tokens [begin, end). Sentences cut by the range are clipped, so no
  // sentence of the result extends past either end.
  TokenSequence slice(std::size_t begin, std::size_t end) const;

 private:
  friend class TokenSequenceBuilder;
  std::shared_ptr<const std::vector<std::string>> lexicon_;
  std::vector<std::uint32_t> ids_;
  std::vector<std::size_t> sentence_offsets_;
};

// Incremental construction of a TokenSequence.
class TokenSequenceBuilder {
 public:
  void add_token(std::string_view token);
  // Closes the current sentence; a no-op when it is empty.
  void end_sentence();
  TokenSequence build() &&;

 private:
  std::vector<std::string> lexicon_;
  std::unordered_map<std::string, std::uint32_t> type_index_;
  std::vector<std::uint32_t> ids_;
  std::vector<std::size_t> offsets_{0};
};

TokenSequence tokenize(std::string_view raw_text, const TokenizerConfig &config = {});

// Reads the whole file; throws IoError naming the path when unreadable.
TokenSequence tokenize_file(const std::string &path, const TokenizerConfig &config = {});

class Vocabulary {
 public:
  Vocabulary() = default;
  // Words must be unique; counts parallel to words.
  Vocabulary(std::vector<std::string> words, std::vector<std::uint64_t> counts,
             std::uint64_t min_count);

  std::size_t size() const { return words_.size(); }
  bool empty() const { return words_.empty(); }
  const std::string &word(std::size_t i) const { return words_[i]; }
  const std::vector<std::string> &words() const { return words_; }
  std::uint64_t count(std::size_t i) const { return counts_[i]; }
  const std::vector<std::uint64_t> &counts() const { return counts_; }
  std::uint64_t min_count() const { return min_count_; }

  std::optional<std::size_t> index_of(const std::string &word) const;
  bool contains(const std::string &word) const { return index_.count(word) != 0; }
  // Zero for unknown words.
  std::uint64_t count_of(const std::string &word) const;

 private:
  std::vector<std::string> words_;
  std::vector<std::uint64_t> counts_;
  std::unordered_map<std::string, std::size_t> index_;
  std::uint64_t min_count_ = 0;
};

// Keeps words with frequency >= min_count, ordered by descending frequency
// with lexicographic ties.
Vocabulary build_vocabulary(const TokenSequence &tokens, std::uint64_t min_count);

enum class SplitMode {
  // Chunk sizes differ by at most one token; a sentence straddling a cut is
  // divided between the chunks.
  kBalancedTokens,
  // Each cut moves to the sentence boundary nearest the balanced position.
  kSentenceAligned,
};

std::vector<TokenSequence> split_corpus(const TokenSequence &tokens, std::size_t k,
                                        SplitMode mode = SplitMode::kBalancedTokens);

// Symmetric sparse pair-count matrix in compressed row form.
class CooccurrenceCounts {
 public:
  struct Entry {
    std::uint32_t row;
    std::uint32_t col;
    std::uint64_t count;
  };

  CooccurrenceCounts() = default;
  // Entries may come in any order and may repeat (repeats are summed).
  // Throws ConsistencyError when the resulting matrix is not symmetric.
  CooccurrenceCounts(std::size_t n, std::size_t window, std::vector<Entry> entries);

  std::size_t n() const { return n_; }
  std::size_t window() const { return window_; }
  std::size_t nnz() const { return cols_.size(); }
  std::uint64_t total_pairs() const { return total_pairs_; }
  const std::vector<std::uint64_t> &row_marginals() const { return row_marginals_; }

  std::uint64_t get(std::size_t i, std::size_t j) const;

  std::span<const std::size_t> row_offsets() const { return row_offsets_; }
  std::span<const std::uint32_t> col_indices() const { return cols_; }
  std::span<const std::uint64_t> values() const { return counts_; }

  // Same pattern with every count multiplied by factor.
  CooccurrenceCounts scaled(std::uint64_t factor) const;

 private:
  std::size_t n_ = 0;
  std::size_t window_ = 0;
  std::vector<std::size_t> row_offsets_{0};
  std::vector<std::uint32_t> cols_;
  std::vector<std::uint64_t> counts_;
  std::vector<std::uint64_t> row_marginals_;
  std::uint64_t total_pairs_ = 0;
};

// Counts (focus, context) pairs within +-window positions of the same
// sentence. Out-of-vocabulary tokens keep their positions but are never
// counted. jobs > 1 shards sentences across threads.
CooccurrenceCounts count_cooccurrences(const TokenSequence &tokens, const Vocabulary &vocab,
                                       std::size_t window, std::size_t jobs = 1);

// TSV `word<TAB>count`, one per line in vocabulary order.
void save_vocabulary(const Vocabulary &vocab, const std::string &path);
Vocabulary load_vocabulary(const std::string &path);

// Header `n total_pairs`, then `i j count` sorted by (i, j). The window is not
// part of the format and loads as zero unless given.
void save_counts(const CooccurrenceCounts &counts, const std::string &path);
CooccurrenceCounts load_counts(const std::string &path, std::size_t window = 0);

}  // namespace pmiemb

#endif  // PMIEMB_CORPUS_H_
