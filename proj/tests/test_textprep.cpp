#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "adcofe/errors.hpp"
#include "adcofe/rng.hpp"
#include "adcofe/textprep.hpp"

using namespace adcofe;

namespace {

const std::string kBundledStopwords = std::string(ADCOFE_BUNDLED_DATA_DIR) + "/stopwords.txt";

std::uint64_t fnv1a64_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::uint64_t h = 0xcbf29ce484222325ull;
  char c;
  while (in.get(c)) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string random_text(Rng& rng) {
  static const std::string alphabet = "abc XY.,!?'\"  z";
  std::string s(rng.next_below(40), ' ');
  for (char& c : s) c = alphabet[rng.next_below(alphabet.size())];
  return s;
}

}  // namespace

TEST_CASE("punctuation removal strips, collapses, trims, and is idempotent") {
  CHECK(remove_punctuation("Hello, world!") == "Hello world");
  CHECK(remove_punctuation("  spaced\t\tout  ") == "spaced out");
  CHECK(remove_punctuation("don't--stop... now") == "dontstop now");
  CHECK(remove_punctuation("") == "");
  CHECK(remove_punctuation("!!!") == "");

  Rng rng(11);
  for (int i = 0; i < 200; ++i) {
    const std::string once = remove_punctuation(random_text(rng));
    CHECK(remove_punctuation(once) == once);
  }
}

TEST_CASE("word tokens carry lowercase surfaces and valid spans") {
  const std::string cleaned = remove_punctuation("This Weather IS great");
  const std::vector<WordToken> tokens = tokenize_words(cleaned);
  REQUIRE(tokens.size() == 4);
  CHECK(tokens[0].surface == "this");
  CHECK(tokens[1].surface == "weather");
  CHECK(tokens[2].surface == "is");
  CHECK(tokens[3].surface == "great");
  for (const WordToken& t : tokens) {
    REQUIRE(t.end <= cleaned.size());
    REQUIRE(t.begin < t.end);
    std::string span = cleaned.substr(t.begin, t.end - t.begin);
    for (char& c : span) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    CHECK(span == t.surface);
  }
}

TEST_CASE("stopword removal keeps the longest token when everything matches") {
  const std::unordered_set<std::string> stoplist = {"this", "is", "the", "a"};
  auto tokens = tokenize_words("this is the weather");
  tokens = remove_stopwords(std::move(tokens), stoplist);
  REQUIRE(tokens.size() == 1);
  CHECK(tokens[0].surface == "weather");

  // all stopwords: the single longest survives, earliest on ties
  auto all_stop = tokenize_words("this is the a");
  all_stop = remove_stopwords(std::move(all_stop), stoplist);
  REQUIRE(all_stop.size() == 1);
  CHECK(all_stop[0].surface == "this");
}

TEST_CASE("raw spans exclude outer punctuation so splices stay aligned") {
  const std::string raw = "This weather is the best!";
  const std::vector<WordToken> tokens = tokenize_raw_spans(raw);
  REQUIRE(tokens.size() == 5);
  CHECK(tokens[4].surface == "best");
  CHECK(raw.substr(tokens[4].begin, tokens[4].end - tokens[4].begin) == "best");
  CHECK(raw[tokens[4].end] == '!');

  const std::vector<WordToken> inner = tokenize_raw_spans("I don't know");
  REQUIRE(inner.size() == 3);
  CHECK(inner[1].surface == "dont");  // interior punctuation dropped from the surface
  CHECK(inner[1].end - inner[1].begin == 5);  // but the span still covers don't
}

TEST_CASE("content tokens are raw spans minus stopwords") {
  const std::unordered_set<std::string> stoplist = {"this", "is", "the"};
  const std::vector<WordToken> tokens =
      extract_content_tokens("This weather is the best!", stoplist);
  REQUIRE(tokens.size() == 2);
  CHECK(tokens[0].surface == "weather");
  CHECK(tokens[1].surface == "best");
}

TEST_CASE("bundled stopword list is present and unchanged") {
  const auto stoplist = load_stopwords(kBundledStopwords);
  CHECK(stoplist.size() == 172);
  CHECK(stoplist.count("the") == 1);
  CHECK(stoplist.count("is") == 1);
  CHECK(stoplist.count("not") == 1);
  CHECK(stoplist.count("dont") == 1);
  CHECK(stoplist.count("weather") == 0);
  // The golden augmentation output depends on these exact bytes.
  CHECK(fnv1a64_file(kBundledStopwords) == 0x7585ece683793e9dull);
}

TEST_CASE("vocabulary reserves specials and orders words by frequency") {
  const std::vector<std::string> corpus = {"bb bb bb cc", "cc cc aa", "aa cc"};
  const Vocab vocab = Vocab::build(corpus, 64);
  CHECK(vocab.id_of("[PAD]") == kPadId);
  CHECK(vocab.id_of("[UNK]") == kUnkId);
  CHECK(vocab.id_of("[CLS]") == kClsId);
  CHECK(vocab.id_of("[SEP]") == kSepId);
  // cc appears 4 times, bb 3, aa 2; ties would fall back to lexicographic
  CHECK(vocab.id_of("cc") == 4);
  CHECK(vocab.id_of("bb") == 5);
  CHECK(vocab.id_of("aa") == 6);
  CHECK(vocab.id_of("zz") == -1);
  // single characters appended as fallback pieces
  CHECK(vocab.id_of("a") >= 7);
  CHECK(vocab.id_of("b") >= 7);
  CHECK(vocab.id_of("c") >= 7);
}

TEST_CASE("greedy encoding backs off to pieces and unknowns") {
  const std::vector<std::string> corpus = {"sunny sunny sun day"};
  const Vocab vocab = Vocab::build(corpus, 64);

  const std::vector<int> whole = vocab.encode_word("sunny");
  REQUIRE(whole.size() == 1);
  CHECK(whole[0] == vocab.id_of("sunny"));

  // "sunnyday" is not a word; greedy longest match takes "sunny" then "day"
  const std::vector<int> compound = vocab.encode_word("sunnyday");
  REQUIRE(compound.size() == 2);
  CHECK(compound[0] == vocab.id_of("sunny"));
  CHECK(compound[1] == vocab.id_of("day"));

  // characters outside the vocabulary become single UNKs
  const std::vector<int> strange = vocab.encode_word("x9");
  REQUIRE(strange.size() == 2);
  CHECK(strange[0] == kUnkId);
  CHECK(strange[1] == kUnkId);
}

TEST_CASE("vocabulary truncates to max size and round trips through disk") {
  std::vector<std::string> corpus;
  for (int i = 0; i < 50; ++i) corpus.push_back("word" + std::to_string(i));
  const Vocab vocab = Vocab::build(corpus, 16);
  CHECK(vocab.size() == 16);

  const auto dir = std::filesystem::temp_directory_path() / "adcofe_textprep_tests";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "vocab.txt").string();
  vocab.save(path);
  const Vocab loaded = Vocab::load(path);
  REQUIRE(loaded.size() == vocab.size());
  for (int id = 0; id < static_cast<int>(vocab.size()); ++id)
    CHECK(loaded.piece(id) == vocab.piece(id));
  CHECK(loaded.max_piece_len() == vocab.max_piece_len());
}

TEST_CASE("sequence encoding frames segments with CLS and SEP") {
  const std::vector<std::string> corpus = {"aa bb cc dd"};
  const Vocab vocab = Vocab::build(corpus, 64);
  const EncodedSequence seq = encode_sequence({"aa bb", "cc"}, vocab, 10);

  REQUIRE(seq.size() == 10);
  CHECK(seq.input_ids[0] == kClsId);
  CHECK(seq.input_ids[1] == vocab.id_of("aa"));
  CHECK(seq.input_ids[2] == vocab.id_of("bb"));
  CHECK(seq.input_ids[3] == kSepId);
  CHECK(seq.input_ids[4] == vocab.id_of("cc"));
  CHECK(seq.input_ids[5] == kSepId);
  CHECK(seq.input_ids[6] == kPadId);
  CHECK(seq.real_length() == 6);

  const std::vector<int> want_mask = {1, 1, 1, 1, 1, 1, 0, 0, 0, 0};
  const std::vector<int> want_segments = {0, 0, 0, 0, 1, 1, 0, 0, 0, 0};
  CHECK(seq.mask == want_mask);
  CHECK(seq.segment_ids == want_segments);
}

TEST_CASE("sequence encoding truncates but keeps the frame") {
  const std::vector<std::string> corpus = {"aa bb cc dd ee ff gg hh"};
  const Vocab vocab = Vocab::build(corpus, 64);
  const EncodedSequence seq = encode_sequence({"aa bb cc dd ee ff gg hh"}, vocab, 6);
  REQUIRE(seq.size() == 6);
  CHECK(seq.input_ids[0] == kClsId);
  CHECK(seq.input_ids[5] == kSepId);  // final real token forced to SEP
  CHECK(seq.real_length() == 6);
}

TEST_CASE("padding trim preserves the real prefix") {
  Rng rng(5);
  const std::vector<std::string> corpus = {"aa bb cc dd ee"};
  const Vocab vocab = Vocab::build(corpus, 64);
  const std::vector<std::string> words = {"aa", "bb", "cc", "dd", "ee"};
  for (int trial = 0; trial < 50; ++trial) {
    std::string text;
    const std::size_t n = 1 + rng.next_below(5);
    for (std::size_t i = 0; i < n; ++i) {
      if (i > 0) text += ' ';
      text += words[rng.next_below(words.size())];
    }
    const EncodedSequence seq = encode_sequence({text}, vocab, 16);
    CHECK(seq.size() == 16);
    const EncodedSequence trimmed = trim_padding(seq);
    CHECK(trimmed.size() == seq.real_length());
    CHECK(trimmed.real_length() == seq.real_length());
    for (std::size_t i = 0; i < trimmed.size(); ++i) {
      CHECK(trimmed.input_ids[i] == seq.input_ids[i]);
      CHECK(trimmed.mask[i] == 1);
      CHECK(trimmed.segment_ids[i] == seq.segment_ids[i]);
    }
  }
}

TEST_CASE("encoding rejects unusable inputs") {
  const Vocab vocab = Vocab::build({"aa"}, 64);
  CHECK_THROWS_AS(encode_sequence({}, vocab, 8), UsageError);
  CHECK_THROWS_AS(encode_sequence({"aa"}, vocab, 2), UsageError);  // no room for CLS + SEP
  CHECK_THROWS_AS((void)Vocab::build({"aa"}, 2), UsageError);      // below the reserved ids
  CHECK_THROWS_AS((void)Vocab::build({}, 8), DataError);           // nothing to build from
  CHECK_THROWS_AS((void)Vocab::load("/nonexistent/vocab.txt"), DataError);
}
