#include "pmiemb/corpus.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <thread>

#include "pmiemb/error.h"

namespace pmiemb {

namespace {

constexpr char32_t kReplacement = 0xFFFD;
constexpr std::size_t kMaxTagLength = 1024;

// Decodes one UTF-8 code point starting at text[pos]; invalid or truncated
// sequences consume one byte and yield U+FFFD.
char32_t decode_utf8(std::string_view text, std::size_t &pos) {
  const auto byte = [&](std::size_t i) { return static_cast<unsigned char>(text[i]); };
  const unsigned char lead = byte(pos);
  if (lead < 0x80) {
    ++pos;
    return lead;
  }
  std::size_t len = 0;
  char32_t cp = 0;
  char32_t min_cp = 0;
  if ((lead & 0xE0) == 0xC0) {
    len = 2, cp = lead & 0x1F, min_cp = 0x80;
  } else if ((lead & 0xF0) == 0xE0) {
    len = 3, cp = lead & 0x0F, min_cp = 0x800;
  } else if ((lead & 0xF8) == 0xF0) {
    len = 4, cp = lead & 0x07, min_cp = 0x10000;
  } else {
    ++pos;
    return kReplacement;
  }
  if (pos + len > text.size()) {
    ++pos;
    return kReplacement;
  }
  for (std::size_t k = 1; k < len; ++k) {
    const unsigned char c = byte(pos + k);
    if ((c & 0xC0) != 0x80) {
      ++pos;
      return kReplacement;
    }
    cp = (cp << 6) | (c & 0x3F);
  }
  if (cp < min_cp || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
    ++pos;
    return kReplacement;
  }
  pos += len;
  return cp;
}

void encode_utf8(char32_t cp, std::string &out) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

bool is_space(char32_t c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v' ||
         c == 0xA0;
}

// ASCII letters and digits, plus non-ASCII letters from U+00C0 upward outside
// the punctuation and symbol blocks.
bool is_token_char(char32_t c) {
  if (c < 0x80) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
  }
  if (c < 0xC0 || c == 0xD7 || c == 0xF7 || c == kReplacement) return false;
  if (c >= 0x2000 && c <= 0x2BFF) return false;  // punctuation, symbols, arrows
  if (c >= 0x3000 && c <= 0x303F) return false;  // CJK punctuation
  if (c >= 0xFE30 && c <= 0xFE4F) return false;
  if (c >= 0xFF00 && c <= 0xFF0F) return false;
  return true;
}

char32_t to_lower(char32_t c) {
  if (c >= 'A' && c <= 'Z') return c + 32;
  if (c >= 0xC0 && c <= 0xDE && c != 0xD7) return c + 32;
  return c;
}

bool is_terminator(char32_t c) { return c == '.' || c == '!' || c == '?'; }

// Length in bytes of a markup element starting at text[pos], or 0.
std::size_t markup_length(std::string_view text, std::size_t pos) {
  if (text[pos] == '<') {
    const std::size_t close = text.find('>', pos + 1);
    if (close == std::string_view::npos || close - pos > kMaxTagLength) return 0;
    return close - pos + 1;
  }
  if (text[pos] == '&') {
    std::size_t i = pos + 1;
    while (i < text.size() && i - pos <= 10 &&
           (std::isalnum(static_cast<unsigned char>(text[i])) || text[i] == '#')) {
      ++i;
    }
    if (i < text.size() && text[i] == ';' && i > pos + 1) return i - pos + 1;
  }
  return 0;
}

}  // namespace

// ---------------------------------------------------------------------------
// TokenSequence

TokenSequence::TokenSequence()
    : lexicon_(std::make_shared<const std::vector<std::string>>()),
      sentence_offsets_{0} {}

TokenSequence TokenSequence::from_sentences(
    const std::vector<std::vector<std::string>> &sentences) {
  TokenSequenceBuilder builder;
  for (const auto &sentence : sentences) {
    for (const auto &token : sentence) builder.add_token(token);
    builder.end_sentence();
  }
  return std::move(builder).build();
}

std::vector<std::string> TokenSequence::sentence(std::size_t s) const {
  std::vector<std::string> out;
  for (std::size_t i = sentence_offsets_[s]; i < sentence_offsets_[s + 1]; ++i) {
    out.emplace_back(token(i));
  }
  return out;
}

std::vector<std::string> TokenSequence::tokens() const {
  std::vector<std::string> out;
  out.reserve(ids_.size());
  for (std::size_t i = 0; i < ids_.size(); ++i) out.emplace_back(token(i));
  return out;
}

TokenSequence TokenSequence::slice(std::size_t begin, std::size_t end) const {
  if (begin > end || end > ids_.size()) {
    throw ArgumentError("slice range out of bounds");
  }
  TokenSequence out;
  out.lexicon_ = lexicon_;
  out.ids_.assign(ids_.begin() + static_cast<std::ptrdiff_t>(begin),
                  ids_.begin() + static_cast<std::ptrdiff_t>(end));
  for (std::size_t s = 0; s + 1 < sentence_offsets_.size(); ++s) {
    const std::size_t lo = std::max(sentence_offsets_[s], begin);
    const std::size_t hi = std::min(sentence_offsets_[s + 1], end);
    if (lo < hi) out.sentence_offsets_.push_back(hi - begin);
  }
  return out;
}

void TokenSequenceBuilder::add_token(std::string_view token) {
  auto it = type_index_.find(std::string(token));
  std::uint32_t id;
  if (it == type_index_.end()) {
    id = static_cast<std::uint32_t>(lexicon_.size());
    lexicon_.emplace_back(token);
    type_index_.emplace(lexicon_.back(), id);
  } else {
    id = it->second;
  }
  ids_.push_back(id);
}

void TokenSequenceBuilder::end_sentence() {
  if (ids_.size() > offsets_.back()) offsets_.push_back(ids_.size());
}

TokenSequence TokenSequenceBuilder::build() && {
  end_sentence();
  TokenSequence out;
  out.lexicon_ = std::make_shared<const std::vector<std::string>>(std::move(lexicon_));
  out.ids_ = std::move(ids_);
  out.sentence_offsets_ = std::move(offsets_);
  return out;
}

// ---------------------------------------------------------------------------
// Tokenization

TokenSequence tokenize(std::string_view text, const TokenizerConfig &config) {
  TokenSequenceBuilder builder;
  std::string current;
  std::size_t current_len = 0;
  bool pending_terminator = false;
  int newlines = 0;

  const auto flush_token = [&] {
    if (current_len > 0 && current_len >= config.min_token_length) {
      builder.add_token(current);
    }
    current.clear();
    current_len = 0;
  };

  std::size_t pos = 0;
  while (pos < text.size()) {
    if (config.strip_non_textual) {
      const std::size_t skip = markup_length(text, pos);
      if (skip > 0) {
        flush_token();
        if (pending_terminator) builder.end_sentence();
        pending_terminator = false;
        pos += skip;
        continue;
      }
    }
    const char32_t c = decode_utf8(text, pos);
    if (is_token_char(c)) {
      pending_terminator = false;
      newlines = 0;
      encode_utf8(config.lowercase ? to_lower(c) : c, current);
      ++current_len;
      continue;
    }
    flush_token();
    if (is_space(c)) {
      if (pending_terminator) builder.end_sentence();
      pending_terminator = false;
      if (c == '\n' && ++newlines >= 2) builder.end_sentence();
      continue;
    }
    newlines = 0;
    // Closing quotes and brackets may follow the terminator.
    pending_terminator = is_terminator(c) ||
                         (pending_terminator && (c == '"' || c == '\'' || c == ')' ||
                                                 c == ']' || c == 0x201D || c == 0x2019));
  }
  flush_token();
  return std::move(builder).build();
}

TokenSequence tokenize_file(const std::string &path, const TokenizerConfig &config) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path, "cannot open corpus");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw IoError(path, "error reading corpus");
  return tokenize(buffer.str(), config);
}

// ---------------------------------------------------------------------------
// Vocabulary

Vocabulary::Vocabulary(std::vector<std::string> words, std::vector<std::uint64_t> counts,
                       std::uint64_t min_count)
    : words_(std::move(words)), counts_(std::move(counts)), min_count_(min_count) {
  if (words_.size() != counts_.size()) {
    throw ArgumentError("vocabulary words and counts differ in length");
  }
  index_.reserve(words_.size());
  for (std::size_t i = 0; i < words_.size(); ++i) {
    if (!index_.emplace(words_[i], i).second) {
      throw ArgumentError("duplicate vocabulary word: " + words_[i]);
    }
  }
}

std::optional<std::size_t> Vocabulary::index_of(const std::string &word) const {
  auto it = index_.find(word);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::uint64_t Vocabulary::count_of(const std::string &word) const {
  auto i = index_of(word);
  return i ? counts_[*i] : 0;
}

Vocabulary build_vocabulary(const TokenSequence &tokens, std::uint64_t min_count) {
  if (min_count < 1) throw ArgumentError("min_count must be at least 1");
  const auto &lexicon = tokens.lexicon();
  std::vector<std::uint64_t> freq(lexicon.size(), 0);
  for (std::uint32_t id : tokens.ids()) ++freq[id];

  std::vector<std::uint32_t> kept;
  for (std::uint32_t id = 0; id < freq.size(); ++id) {
    if (freq[id] >= min_count) kept.push_back(id);
  }
  if (kept.empty()) {
    throw EmptyVocabularyError("no word occurs at least " + std::to_string(min_count) +
                               " times");
  }
  std::sort(kept.begin(), kept.end(), [&](std::uint32_t a, std::uint32_t b) {
    if (freq[a] != freq[b]) return freq[a] > freq[b];
    return lexicon[a] < lexicon[b];
  });
  std::vector<std::string> words;
  std::vector<std::uint64_t> counts;
  words.reserve(kept.size());
  counts.reserve(kept.size());
  for (std::uint32_t id : kept) {
    words.push_back(lexicon[id]);
    counts.push_back(freq[id]);
  }
  return Vocabulary(std::move(words), std::move(counts), min_count);
}

// ---------------------------------------------------------------------------
// Splitting

std::vector<TokenSequence> split_corpus(const TokenSequence &tokens, std::size_t k,
                                        SplitMode mode) {
  if (k < 1) throw ArgumentError("split count must be at least 1");
  const std::size_t n = tokens.size();
  if (k > n) {
    throw ArgumentError("cannot split " + std::to_string(n) + " tokens into " +
                        std::to_string(k) + " chunks");
  }
  // Balanced cut c_i = i*n/k with the remainder going to the leading chunks.
  std::vector<std::size_t> cuts(k + 1);
  const std::size_t base = n / k, extra = n % k;
  cuts[0] = 0;
  for (std::size_t i = 1; i <= k; ++i) cuts[i] = cuts[i - 1] + base + (i <= extra ? 1 : 0);

  if (mode == SplitMode::kSentenceAligned) {
    const auto offsets = tokens.sentence_offsets();
    if (tokens.num_sentences() < k) {
      throw ArgumentError("fewer sentences than requested splits");
    }
    for (std::size_t i = 1; i < k; ++i) {
      // Nearest sentence boundary strictly inside (cuts[i-1], n); ties go to
      // the earlier boundary.
      const std::size_t target = cuts[i];
      auto it = std::lower_bound(offsets.begin(), offsets.end(), target);
      std::size_t best = offsets.back();
      if (it != offsets.end()) best = *it;
      if (it != offsets.begin()) {
        const std::size_t before = *(it - 1);
        if (target - before <= best - target) best = before;
      }
      if (best <= cuts[i - 1]) {
        // Must make progress: take the first boundary after the previous cut.
        auto next = std::upper_bound(offsets.begin(), offsets.end(), cuts[i - 1]);
        best = *next;
      }
      cuts[i] = best;
    }
    for (std::size_t i = 1; i <= k; ++i) {
      if (cuts[i] <= cuts[i - 1]) {
        throw ArgumentError("sentence-aligned split produced an empty chunk");
      }
    }
  }

  std::vector<TokenSequence> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) out.push_back(tokens.slice(cuts[i], cuts[i + 1]));
  return out;
}

// ---------------------------------------------------------------------------
// Co-occurrence counts

CooccurrenceCounts::CooccurrenceCounts(std::size_t n, std::size_t window,
                                       std::vector<Entry> entries)
    : n_(n), window_(window), row_marginals_(n, 0) {
  std::sort(entries.begin(), entries.end(), [](const Entry &a, const Entry &b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  row_offsets_.assign(n + 1, 0);
  std::int64_t last_row = -1, last_col = -1;
  for (const Entry &e : entries) {
    if (e.row >= n || e.col >= n) throw ArgumentError("count entry index out of range");
    if (e.count == 0) continue;
    if (last_row == e.row && last_col == e.col) {
      counts_.back() += e.count;
    } else {
      last_row = e.row;
      last_col = e.col;
      cols_.push_back(e.col);
      counts_.push_back(e.count);
      ++row_offsets_[e.row + 1];
    }
    row_marginals_[e.row] += e.count;
    total_pairs_ += e.count;
  }
  for (std::size_t i = 0; i < n; ++i) row_offsets_[i + 1] += row_offsets_[i];

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t p = row_offsets_[i]; p < row_offsets_[i + 1]; ++p) {
      if (get(cols_[p], i) != counts_[p]) {
        throw ConsistencyError("co-occurrence counts are not symmetric at (" +
                               std::to_string(i) + ", " + std::to_string(cols_[p]) + ")");
      }
    }
  }
}

std::uint64_t CooccurrenceCounts::get(std::size_t i, std::size_t j) const {
  if (i >= n_ || j >= n_) return 0;
  const auto begin = cols_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[i]);
  const auto end = cols_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[i + 1]);
  auto it = std::lower_bound(begin, end, static_cast<std::uint32_t>(j));
  if (it == end || *it != j) return 0;
  return counts_[static_cast<std::size_t>(it - cols_.begin())];
}

CooccurrenceCounts CooccurrenceCounts::scaled(std::uint64_t factor) const {
  CooccurrenceCounts out = *this;
  for (auto &c : out.counts_) c *= factor;
  for (auto &m : out.row_marginals_) m *= factor;
  out.total_pairs_ *= factor;
  return out;
}

namespace {

using PairMap = std::unordered_map<std::uint64_t, std::uint64_t>;

// Counts unordered pairs (lo, hi) with lo <= hi; each adjacency contributes
// one (focus, context) pair in each direction.
void count_range(const TokenSequence &tokens, const std::vector<std::int64_t> &vocab_of_type,
                 std::size_t window, std::size_t first_sentence, std::size_t last_sentence,
                 PairMap &pairs) {
  const auto ids = tokens.ids();
  const auto offsets = tokens.sentence_offsets();
  for (std::size_t s = first_sentence; s < last_sentence; ++s) {
    const std::size_t begin = offsets[s], end = offsets[s + 1];
    for (std::size_t t = begin; t < end; ++t) {
      const std::int64_t focus = vocab_of_type[ids[t]];
      if (focus < 0) continue;
      const std::size_t stop = std::min(end, t + window + 1);
      for (std::size_t u = t + 1; u < stop; ++u) {
        const std::int64_t context = vocab_of_type[ids[u]];
        if (context < 0) continue;
        const auto lo = static_cast<std::uint64_t>(std::min(focus, context));
        const auto hi = static_cast<std::uint64_t>(std::max(focus, context));
        pairs[(lo << 32) | hi] += 1;
      }
    }
  }
}

}  // namespace

CooccurrenceCounts count_cooccurrences(const TokenSequence &tokens, const Vocabulary &vocab,
                                       std::size_t window, std::size_t jobs) {
  if (window < 1) throw ArgumentError("window must be at least 1");
  const auto &lexicon = tokens.lexicon();
  std::vector<std::int64_t> vocab_of_type(lexicon.size(), -1);
  for (std::size_t t = 0; t < lexicon.size(); ++t) {
    if (auto i = vocab.index_of(lexicon[t])) vocab_of_type[t] = static_cast<std::int64_t>(*i);
  }

  const std::size_t num_sentences = tokens.num_sentences();
  jobs = std::max<std::size_t>(1, std::min(jobs, num_sentences));
  std::vector<PairMap> shards(jobs);
  if (jobs == 1) {
    count_range(tokens, vocab_of_type, window, 0, num_sentences, shards[0]);
  } else {
    std::vector<std::thread> workers;
    for (std::size_t j = 0; j < jobs; ++j) {
      const std::size_t first = num_sentences * j / jobs;
      const std::size_t last = num_sentences * (j + 1) / jobs;
      workers.emplace_back([&, j, first, last] {
        count_range(tokens, vocab_of_type, window, first, last, shards[j]);
      });
    }
    for (auto &w : workers) w.join();
  }
  for (std::size_t j = 1; j < jobs; ++j) {
    for (const auto &[key, c] : shards[j]) shards[0][key] += c;
    PairMap().swap(shards[j]);
  }

  std::vector<CooccurrenceCounts::Entry> entries;
  entries.reserve(2 * shards[0].size());
  for (const auto &[key, c] : shards[0]) {
    const auto lo = static_cast<std::uint32_t>(key >> 32);
    const auto hi = static_cast<std::uint32_t>(key & 0xFFFFFFFFu);
    if (lo == hi) {
      entries.push_back({lo, hi, 2 * c});
    } else {
      entries.push_back({lo, hi, c});
      entries.push_back({hi, lo, c});
    }
  }
  return CooccurrenceCounts(vocab.size(), window, std::move(entries));
}

// ---------------------------------------------------------------------------
// File formats

void save_vocabulary(const Vocabulary &vocab, const std::string &path) {
  std::ofstream out(path);
  if (!out) throw IoError(path, "cannot write vocabulary");
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    out << vocab.word(i) << '\t' << vocab.count(i) << '\n';
  }
  if (!out) throw IoError(path, "error writing vocabulary");
}

Vocabulary load_vocabulary(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw IoError(path, "cannot open vocabulary");
  std::vector<std::string> words;
  std::vector<std::uint64_t> counts;
  std::string line;
  std::size_t line_no = 0;
  std::uint64_t min_count = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) throw ParseError(line_no, "expected word<TAB>count");
    try {
      std::size_t used = 0;
      const std::string field = line.substr(tab + 1);
      const unsigned long long c = std::stoull(field, &used);
      if (used != field.size()) throw ParseError(line_no, "trailing characters after count");
      words.push_back(line.substr(0, tab));
      counts.push_back(c);
    } catch (const std::logic_error &) {
      throw ParseError(line_no, "invalid count");
    }
    min_count = counts.size() == 1 ? counts.back() : std::min(min_count, counts.back());
  }
  try {
    return Vocabulary(std::move(words), std::move(counts), min_count);
  } catch (const ArgumentError &e) {
    throw ParseError(line_no, e.what());
  }
}

void save_counts(const CooccurrenceCounts &counts, const std::string &path) {
  std::ofstream out(path);
  if (!out) throw IoError(path, "cannot write counts");
  out << counts.n() << ' ' << counts.total_pairs() << '\n';
  const auto offsets = counts.row_offsets();
  const auto cols = counts.col_indices();
  const auto values = counts.values();
  for (std::size_t i = 0; i < counts.n(); ++i) {
    for (std::size_t p = offsets[i]; p < offsets[i + 1]; ++p) {
      out << i << ' ' << cols[p] << ' ' << values[p] << '\n';
    }
  }
  if (!out) throw IoError(path, "error writing counts");
}

CooccurrenceCounts load_counts(const std::string &path, std::size_t window) {
  std::ifstream in(path);
  if (!in) throw IoError(path, "cannot open counts");
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw ParseError(1, "missing header");
  std::istringstream header(line);
  std::size_t n = 0;
  std::uint64_t total = 0;
  if (!(header >> n >> total)) throw ParseError(1, "expected `n total_pairs` header");
  std::vector<CooccurrenceCounts::Entry> entries;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::uint64_t i, j, c;
    if (!(fields >> i >> j >> c)) throw ParseError(line_no, "expected `i j count`");
    if (i >= n || j >= n) throw ParseError(line_no, "index out of range");
    entries.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j), c});
  }
  CooccurrenceCounts counts(n, window, std::move(entries));
  if (counts.total_pairs() != total) {
    throw ParseError(1, "header total_pairs does not match the entries");
  }
  return counts;
}

}  // namespace pmiemb
