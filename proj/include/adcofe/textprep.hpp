#pragma once

#include <cstddef>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace adcofe {

struct WordToken {
  std::string surface;      // lowercase, punctuation-free
  std::size_t begin = 0;    // char span [begin, end) in the source text
  std::size_t end = 0;
};

// Strips ASCII punctuation, collapses whitespace runs, trims the ends.
// Casing is preserved. Idempotent.
std::string remove_punctuation(const std::string& text);

// Whitespace split of already-cleaned text; surfaces lowercased, spans index
// into the given string.
std::vector<WordToken> tokenize_words(const std::string& text);

// Drops tokens whose surface is in the stoplist. If everything is a stopword,
// keeps the single longest original token (earliest on ties) so downstream
// enrichment always has a query term.
std::vector<WordToken> remove_stopwords(std::vector<WordToken> tokens,
                                        const std::unordered_set<std::string>& stoplist);

// Tokens whose spans are valid in the raw, unstripped text: outer punctuation
// is excluded from each span, interior punctuation dropped from the surface.
// This is what sentence augmentation needs to splice replacements in place.
std::vector<WordToken> tokenize_raw_spans(const std::string& raw_text);

std::vector<WordToken> extract_content_tokens(const std::string& raw_text,
                                              const std::unordered_set<std::string>& stoplist);

// One lowercase word per line, UTF-8, '#' comments allowed.
std::unordered_set<std::string> load_stopwords(const std::string& path);

inline constexpr int kPadId = 0;
inline constexpr int kUnkId = 1;
inline constexpr int kClsId = 2;
inline constexpr int kSepId = 3;

// lowercase + whitespace split; the shared normalization for vocabulary
// building and sequence encoding
std::vector<std::string> split_normalized(const std::string& text);

// Corpus-derived piece vocabulary: ids 0-3 are PAD/UNK/CLS/SEP, then the most
// frequent whole words (ties lexicographic), then single-character fallback
// pieces; truncated to max_size.
class Vocab {
 public:
  [[nodiscard]] static Vocab build(const std::vector<std::string>& corpus_texts,
                                   std::size_t max_size);
  [[nodiscard]] static Vocab load(const std::string& path);
  void save(const std::string& path) const;

  std::size_t size() const { return pieces_.size(); }
  // -1 if absent
  int id_of(const std::string& piece) const;
  const std::string& piece(int id) const;
  std::size_t max_piece_len() const { return max_piece_len_; }

  // Greedy longest-match piece ids for one word (no specials involved).
  std::vector<int> encode_word(const std::string& word) const;

 private:
  std::vector<std::string> pieces_;
  std::unordered_map<std::string, int> ids_;
  std::size_t max_piece_len_ = 1;

  void index_pieces();
};

struct EncodedSequence {
  std::vector<int> input_ids;
  std::vector<int> mask;         // 1 for real tokens, then 0 padding
  std::vector<int> segment_ids;  // increments after each SEP

  std::size_t size() const { return input_ids.size(); }
  std::size_t real_length() const;
};

// [CLS] pieces(t1) [SEP] pieces(t2) [SEP] ... truncated to max_len keeping the
// leading CLS and forcing the final real token to SEP, then padded to max_len.
EncodedSequence encode_sequence(const std::vector<std::string>& texts, const Vocab& vocab,
                                std::size_t max_len);

// Drops trailing padding; forward results on real positions are unchanged.
EncodedSequence trim_padding(const EncodedSequence& seq);

}  // namespace adcofe
