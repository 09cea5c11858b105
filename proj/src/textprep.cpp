#include "adcofe/textprep.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>

#include "adcofe/errors.hpp"

namespace adcofe {

namespace {

bool is_punct(unsigned char c) { return std::ispunct(c) != 0; }
bool is_space(unsigned char c) { return std::isspace(c) != 0; }

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

const char* kSpecialPieces[4] = {"[PAD]", "[UNK]", "[CLS]", "[SEP]"};

}  // namespace

std::string remove_punctuation(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char c : text) {
    const auto uc = static_cast<unsigned char>(c);
    if (is_punct(uc)) continue;
    if (is_space(uc)) {
      pending_space = true;
      continue;
    }
    if (pending_space && !out.empty()) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

std::vector<WordToken> tokenize_words(const std::string& text) {
  std::vector<WordToken> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(static_cast<unsigned char>(text[i]))) ++i;
    if (i >= text.size()) break;
    const std::size_t begin = i;
    while (i < text.size() && !is_space(static_cast<unsigned char>(text[i]))) ++i;
    tokens.push_back(WordToken{lower(text.substr(begin, i - begin)), begin, i});
  }
  return tokens;
}

std::vector<WordToken> remove_stopwords(std::vector<WordToken> tokens,
                                        const std::unordered_set<std::string>& stoplist) {
  if (tokens.empty()) return tokens;
  std::vector<WordToken> kept;
  for (WordToken& t : tokens) {
    if (!stoplist.contains(t.surface)) kept.push_back(std::move(t));
  }
  if (!kept.empty()) return kept;
  // degenerate input: keep the longest original token, earliest on ties
  const auto longest = std::max_element(
      tokens.begin(), tokens.end(),
      [](const WordToken& a, const WordToken& b) { return a.surface.size() < b.surface.size(); });
  return {*longest};
}

std::vector<WordToken> tokenize_raw_spans(const std::string& raw_text) {
  std::vector<WordToken> tokens;
  std::size_t i = 0;
  while (i < raw_text.size()) {
    while (i < raw_text.size() && is_space(static_cast<unsigned char>(raw_text[i]))) ++i;
    if (i >= raw_text.size()) break;
    std::size_t begin = i;
    while (i < raw_text.size() && !is_space(static_cast<unsigned char>(raw_text[i]))) ++i;
    std::size_t end = i;
    // shrink the span past outer punctuation
    while (begin < end && is_punct(static_cast<unsigned char>(raw_text[begin]))) ++begin;
    while (end > begin && is_punct(static_cast<unsigned char>(raw_text[end - 1]))) --end;
    if (begin == end) continue;
    std::string surface;
    for (std::size_t p = begin; p < end; ++p) {
      const auto uc = static_cast<unsigned char>(raw_text[p]);
      if (!is_punct(uc)) surface.push_back(static_cast<char>(std::tolower(uc)));
    }
    if (surface.empty()) continue;
    tokens.push_back(WordToken{std::move(surface), begin, end});
  }
  return tokens;
}

std::vector<WordToken> extract_content_tokens(const std::string& raw_text,
                                              const std::unordered_set<std::string>& stoplist) {
  return remove_stopwords(tokenize_raw_spans(raw_text), stoplist);
}

std::unordered_set<std::string> load_stopwords(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open stopword file: " + path);
  std::unordered_set<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    words.insert(lower(line));
  }
  return words;
}

std::vector<std::string> split_normalized(const std::string& text) {
  std::vector<std::string> words;
  std::string cur;
  for (char c : text) {
    if (is_space(static_cast<unsigned char>(c))) {
      if (!cur.empty()) words.push_back(std::move(cur)), cur.clear();
    } else {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  if (!cur.empty()) words.push_back(std::move(cur));
  return words;
}

void Vocab::index_pieces() {
  ids_.clear();
  max_piece_len_ = 1;
  for (std::size_t i = 0; i < pieces_.size(); ++i) {
    ids_.emplace(pieces_[i], static_cast<int>(i));
    if (i >= 4) max_piece_len_ = std::max(max_piece_len_, pieces_[i].size());
  }
}

Vocab Vocab::build(const std::vector<std::string>& corpus_texts, std::size_t max_size) {
  if (max_size < 4) throw UsageError("vocab max_size must be at least 4 (the special tokens)");
  std::map<std::string, std::size_t> freq;  // ordered for deterministic tie-breaks
  std::map<std::string, bool> chars;
  bool any_token = false;
  for (const std::string& text : corpus_texts) {
    for (const std::string& w : split_normalized(text)) {
      any_token = true;
      ++freq[w];
      for (char c : w) chars.emplace(std::string(1, c), true);
    }
  }
  if (!any_token) throw DataError("cannot build a vocabulary from an empty corpus");

  std::vector<std::pair<std::string, std::size_t>> words(freq.begin(), freq.end());
  std::stable_sort(words.begin(), words.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  Vocab v;
  for (const char* s : kSpecialPieces) v.pieces_.emplace_back(s);
  std::unordered_set<std::string> present(v.pieces_.begin(), v.pieces_.end());
  for (const auto& [word, count] : words) {
    if (v.pieces_.size() >= max_size) break;
    if (present.insert(word).second) v.pieces_.push_back(word);
  }
  for (const auto& [ch, unused] : chars) {
    if (v.pieces_.size() >= max_size) break;
    if (present.insert(ch).second) v.pieces_.push_back(ch);
  }
  v.index_pieces();
  return v;
}

Vocab Vocab::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open vocab file: " + path);
  std::string line;
  Vocab v;
  for (const char* s : kSpecialPieces) v.pieces_.emplace_back(s);
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no <= 4) {
      if (line.empty() || line[0] != '#')
        throw DataError(path + ": first four lines must be the special-token comments");
      continue;
    }
    if (line.empty()) continue;
    v.pieces_.push_back(line);
  }
  v.index_pieces();
  return v;
}

void Vocab::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write vocab file: " + path);
  for (int i = 0; i < 4; ++i) out << "# " << i << ' ' << kSpecialPieces[i] << '\n';
  for (std::size_t i = 4; i < pieces_.size(); ++i) out << pieces_[i] << '\n';
}

int Vocab::id_of(const std::string& piece) const {
  const auto it = ids_.find(piece);
  return it == ids_.end() ? -1 : it->second;
}

const std::string& Vocab::piece(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= pieces_.size())
    throw DataError("piece id out of range: " + std::to_string(id));
  return pieces_[static_cast<std::size_t>(id)];
}

std::vector<int> Vocab::encode_word(const std::string& word) const {
  std::vector<int> ids;
  std::size_t pos = 0;
  while (pos < word.size()) {
    const std::size_t longest = std::min(word.size() - pos, max_piece_len_);
    int matched = -1;
    std::size_t matched_len = 0;
    for (std::size_t len = longest; len >= 1; --len) {
      const auto it = ids_.find(word.substr(pos, len));
      if (it != ids_.end() && it->second >= 4) {
        matched = it->second;
        matched_len = len;
        break;
      }
    }
    if (matched >= 0) {
      ids.push_back(matched);
      pos += matched_len;
    } else {
      ids.push_back(kUnkId);
      pos += 1;
    }
  }
  return ids;
}

std::size_t EncodedSequence::real_length() const {
  std::size_t n = 0;
  while (n < mask.size() && mask[n] == 1) ++n;
  return n;
}

EncodedSequence encode_sequence(const std::vector<std::string>& texts, const Vocab& vocab,
                                std::size_t max_len) {
  if (max_len < 3) throw UsageError("max_len must be at least 3");
  if (texts.empty()) throw UsageError("encode_sequence needs at least one text");

  std::vector<int> ids = {kClsId};
  std::vector<int> segs = {0};
  int seg = 0;
  for (const std::string& text : texts) {
    for (const std::string& word : split_normalized(text)) {
      for (int id : vocab.encode_word(word)) {
        ids.push_back(id);
        segs.push_back(seg);
      }
    }
    ids.push_back(kSepId);
    segs.push_back(seg);
    ++seg;
  }

  if (ids.size() > max_len) {
    ids.resize(max_len);
    segs.resize(max_len);
    ids.back() = kSepId;
  }
  const std::size_t real = ids.size();
  EncodedSequence out;
  out.input_ids = std::move(ids);
  out.segment_ids = std::move(segs);
  out.mask.assign(real, 1);
  out.input_ids.resize(max_len, kPadId);
  out.segment_ids.resize(max_len, 0);
  out.mask.resize(max_len, 0);
  return out;
}

EncodedSequence trim_padding(const EncodedSequence& seq) {
  const std::size_t real = seq.real_length();
  EncodedSequence out;
  out.input_ids.assign(seq.input_ids.begin(), seq.input_ids.begin() + real);
  out.mask.assign(seq.mask.begin(), seq.mask.begin() + real);
  out.segment_ids.assign(seq.segment_ids.begin(), seq.segment_ids.begin() + real);
  return out;
}

}  // namespace adcofe
