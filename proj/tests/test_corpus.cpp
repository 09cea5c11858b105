#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "adcofe/corpus.hpp"
#include "adcofe/errors.hpp"
#include "adcofe/rng.hpp"

using namespace adcofe;

namespace {

const std::string kSmallCorpus = std::string(ADCOFE_TEST_DATA_DIR) + "/small_corpus.csv";

std::string temp_path(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "adcofe_corpus_tests";
  std::filesystem::create_directories(dir);
  return (dir / name).string();
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
}

Conversation make_conversation(const std::string& id, const std::vector<int>& speaker_pattern) {
  Conversation c;
  c.id = id;
  for (std::size_t t = 0; t < speaker_pattern.size(); ++t) {
    Utterance u;
    u.conversation_id = id;
    u.turn_index = static_cast<int>(t);
    u.speaker = speaker_pattern[t] == 0 ? SpeakerId::P1 : SpeakerId::P2;
    u.text = "utterance " + std::to_string(t);
    u.label = static_cast<EmotionLabel>(t % kNumEmotions);
    c.utterances.push_back(std::move(u));
  }
  return c;
}

}  // namespace

TEST_CASE("emotion names map to fixed codes both ways") {
  const std::vector<std::string> names = {"Happy", "Sad", "Neutral", "Angry", "Excited",
                                          "Frustrated"};
  for (int code = 0; code < kNumEmotions; ++code) {
    const auto label = static_cast<EmotionLabel>(code);
    CHECK(to_string(label) == names[static_cast<std::size_t>(code)]);
    CHECK(emotion_from_string(names[static_cast<std::size_t>(code)]) == label);
    CHECK(emotion_from_string(std::to_string(code)) == label);
  }
  CHECK(emotion_from_string("HAPPY") == EmotionLabel::Happy);
  CHECK(emotion_from_string("frustrated") == EmotionLabel::Frustrated);
  CHECK(!emotion_from_string("6").has_value());
  CHECK(!emotion_from_string("joyful").has_value());
  CHECK(!emotion_from_string("").has_value());
  CHECK(!emotion_from_string("-1").has_value());
}

TEST_CASE("speaker names round trip") {
  CHECK(to_string(SpeakerId::P1) == "P1");
  CHECK(to_string(SpeakerId::P2) == "P2");
  CHECK(speaker_from_string("p1") == SpeakerId::P1);
  CHECK(speaker_from_string("P2") == SpeakerId::P2);
  CHECK(!speaker_from_string("P3").has_value());
}

TEST_CASE("format is chosen by extension, defaulting to CSV") {
  CHECK(corpus_format_from_path("x.jsonl") == CorpusFormat::Jsonl);
  CHECK(corpus_format_from_path("x.csv") == CorpusFormat::Csv);
  CHECK(corpus_format_from_path("plain") == CorpusFormat::Csv);
}

TEST_CASE("loading the small corpus drops bad labels and renumbers turns") {
  const LoadResult r = load_corpus(kSmallCorpus, CorpusFormat::Csv);
  CHECK(r.dropped_records == 2);  // one invented name, one out-of-range code
  REQUIRE(r.conversations.size() == 2);

  const Conversation& a = r.conversations[0];
  CHECK(a.id == "conv-a");
  REQUIRE(a.utterances.size() == 4);
  for (int t = 0; t < 4; ++t) CHECK(a.utterances[static_cast<std::size_t>(t)].turn_index == t);
  CHECK(a.utterances[2].label == EmotionLabel::Sad);  // lowercase label accepted
  CHECK(a.utterances[3].text == "Honestly, it ruins the \"whole\" trip");
  CHECK(a.utterances[3].label == EmotionLabel::Frustrated);

  const Conversation& b = r.conversations[1];
  CHECK(b.id == "conv-b");
  REQUIRE(b.utterances.size() == 3);
  CHECK(b.utterances[0].label == EmotionLabel::Excited);  // numeric code
  CHECK(!b.utterances[2].label.has_value());              // empty label kept as unlabeled
  CHECK(b.utterances[2].turn_index == 2);
}

TEST_CASE("corpus round trips through both formats") {
  std::vector<Conversation> convs;
  convs.push_back(make_conversation("alpha", {0, 0, 1, 0, 1, 1}));
  convs.push_back(make_conversation("beta", {1, 0}));
  convs[0].utterances[1].text = "tricky, \"quoted\" text\nwith a newline";
  convs[0].utterances[2].label.reset();

  for (const CorpusFormat format : {CorpusFormat::Csv, CorpusFormat::Jsonl}) {
    const std::string path =
        temp_path(format == CorpusFormat::Csv ? "roundtrip.csv" : "roundtrip.jsonl");
    write_corpus(convs, path, format);
    const LoadResult r = load_corpus(path, format);
    CHECK(r.dropped_records == 0);
    REQUIRE(r.conversations.size() == convs.size());
    for (std::size_t i = 0; i < convs.size(); ++i) {
      const Conversation& in = convs[i];
      const Conversation& out = r.conversations[i];
      CHECK(out.id == in.id);
      REQUIRE(out.utterances.size() == in.utterances.size());
      for (std::size_t t = 0; t < in.utterances.size(); ++t) {
        CHECK(out.utterances[t].turn_index == in.utterances[t].turn_index);
        CHECK(out.utterances[t].speaker == in.utterances[t].speaker);
        CHECK(out.utterances[t].text == in.utterances[t].text);
        CHECK(out.utterances[t].label == in.utterances[t].label);
      }
    }
  }
}

TEST_CASE("malformed corpus files raise data errors") {
  const std::string path = temp_path("bad.csv");

  write_text(path, "wrong,header\n");
  CHECK_THROWS_AS(load_corpus(path, CorpusFormat::Csv), DataError);

  write_text(path,
             "conversation_id,turn_index,speaker,text,label\n"
             "c,0,P1,hello,Happy\n"
             "c,0,P2,again,Sad\n");
  CHECK_THROWS_AS(load_corpus(path, CorpusFormat::Csv), DataError);  // duplicate turn

  write_text(path,
             "conversation_id,turn_index,speaker,text,label\n"
             "c,0,P9,hello,Happy\n");
  CHECK_THROWS_AS(load_corpus(path, CorpusFormat::Csv), DataError);  // unknown speaker

  write_text(path,
             "conversation_id,turn_index,speaker,text,label\n"
             "c,zero,P1,hello,Happy\n");
  CHECK_THROWS_AS(load_corpus(path, CorpusFormat::Csv), DataError);  // non-numeric turn

  write_text(path,
             "conversation_id,turn_index,speaker,text,label\n"
             "c,0,P1,,Happy\n");
  CHECK_THROWS_AS(load_corpus(path, CorpusFormat::Csv), DataError);  // empty text

  CHECK_THROWS_AS(load_corpus(temp_path("does_not_exist.csv"), CorpusFormat::Csv), DataError);

  const std::string jpath = temp_path("bad.jsonl");
  write_text(jpath, "{not json\n");
  CHECK_THROWS_AS(load_corpus(jpath, CorpusFormat::Jsonl), DataError);
  write_text(jpath, R"({"conversation_id":"c","turn_index":0,"speaker":"P1","text":"hi","label":3.5})"
                    "\n");
  CHECK_THROWS_AS(load_corpus(jpath, CorpusFormat::Jsonl), DataError);  // non-integer label
}

TEST_CASE("speaker batches are maximal same-speaker runs") {
  const Conversation c = make_conversation("c", {0, 0, 1, 1, 1, 0, 1});
  const std::vector<SpeakerBatch> batches = arrange_sentences(c);
  REQUIRE(batches.size() == 4);
  CHECK(batches[0].speaker == SpeakerId::P1);
  CHECK(batches[0].utterances.size() == 2);
  CHECK(batches[1].speaker == SpeakerId::P2);
  CHECK(batches[1].utterances.size() == 3);
  CHECK(batches[2].speaker == SpeakerId::P1);
  CHECK(batches[2].utterances.size() == 1);
  CHECK(batches[3].speaker == SpeakerId::P2);
  CHECK(batches[3].utterances.size() == 1);
}

TEST_CASE("speaker batches partition any conversation in order") {
  Rng rng(2024);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<int> pattern(1 + rng.next_below(12));
    for (int& p : pattern) p = static_cast<int>(rng.next_below(2));
    const Conversation c = make_conversation("t", pattern);
    const std::vector<SpeakerBatch> batches = arrange_sentences(c);

    std::vector<Utterance> flattened;
    for (std::size_t i = 0; i < batches.size(); ++i) {
      CHECK(!batches[i].utterances.empty());
      if (i > 0) CHECK(batches[i].speaker != batches[i - 1].speaker);
      for (const Utterance& u : batches[i].utterances) {
        CHECK(u.speaker == batches[i].speaker);
        flattened.push_back(u);
      }
    }
    REQUIRE(flattened.size() == c.utterances.size());
    for (std::size_t t = 0; t < flattened.size(); ++t)
      CHECK(flattened[t].turn_index == c.utterances[t].turn_index);
  }
}

TEST_CASE("splits are sized, disjoint, order preserving, and seed stable") {
  Rng rng(77);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 2 + rng.next_below(20);
    std::vector<Conversation> convs;
    for (std::size_t i = 0; i < n; ++i)
      convs.push_back(make_conversation("conv" + std::to_string(i), {0, 1}));
    const double fraction = rng.next_in(0.05, 0.95);
    const std::uint64_t seed = rng.next_u64();

    const SplitResult s = split_corpus(convs, fraction, seed);
    std::size_t expected = static_cast<std::size_t>(
        std::llround(fraction * static_cast<double>(n)));
    expected = std::max<std::size_t>(1, std::min(expected, n - 1));
    CHECK(s.test.size() == expected);
    CHECK(s.train.size() + s.test.size() == n);

    // Sides keep input order, and every conversation lands on exactly one side.
    std::vector<std::string> merged;
    std::size_t ti = 0, si = 0;
    for (const Conversation& c : convs) {
      if (ti < s.train.size() && s.train[ti].id == c.id) {
        merged.push_back(s.train[ti++].id);
      } else {
        REQUIRE(si < s.test.size());
        CHECK(s.test[si].id == c.id);
        merged.push_back(s.test[si++].id);
      }
    }
    CHECK(merged.size() == n);

    const SplitResult again = split_corpus(convs, fraction, seed);
    REQUIRE(again.test.size() == s.test.size());
    for (std::size_t i = 0; i < s.test.size(); ++i) CHECK(again.test[i].id == s.test[i].id);
  }
}

TEST_CASE("split rejects degenerate inputs") {
  std::vector<Conversation> one = {make_conversation("only", {0, 1})};
  CHECK_THROWS_AS(split_corpus(one, 0.2, 1), DataError);

  std::vector<Conversation> two = {make_conversation("a", {0}), make_conversation("b", {1})};
  CHECK_THROWS_AS(split_corpus(two, 0.0, 1), UsageError);
  CHECK_THROWS_AS(split_corpus(two, 1.0, 1), UsageError);
  CHECK_THROWS_AS(split_corpus(two, -0.5, 1), UsageError);
}
