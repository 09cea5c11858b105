#include "adcofe/synth.hpp"

#include <algorithm>
#include <array>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "adcofe/errors.hpp"
#include "adcofe/rng.hpp"

namespace adcofe {

namespace {

using nlohmann::json;

constexpr int kFamiliesPerClass = 10;
constexpr int kFamilySize = 4;
constexpr int kNoiseWords = 30;
constexpr int kFillersPerSign = 60;
constexpr int kNeutralFillerWords = 30;

// polar filler words per utterance; the count gradient is what puts the
// emotions of one sign into different compound buckets
int filler_count(EmotionLabel label) {
  switch (label) {
    case EmotionLabel::Happy: return 1;
    case EmotionLabel::Excited: return 3;
    case EmotionLabel::Sad: return 1;
    case EmotionLabel::Angry: return 2;
    case EmotionLabel::Frustrated: return 3;
    case EmotionLabel::Neutral: return 0;
  }
  return 0;
}

int filler_sign(EmotionLabel label) {
  switch (label) {
    case EmotionLabel::Happy:
    case EmotionLabel::Excited:
      return 1;
    case EmotionLabel::Sad:
    case EmotionLabel::Angry:
    case EmotionLabel::Frustrated:
      return -1;
    case EmotionLabel::Neutral:
      return 0;
  }
  return 0;
}

// Fixed-length invented words: no generated word is a prefix of another, so
// greedy tokenization can never leak part of one family member into a text
// that only contains a different one. Prefixes claimed by the order markers
// and the sentiment feature tokens are excluded.
std::string invent_word(Rng& rng, std::set<std::string>& used) {
  for (;;) {
    std::string w(8, 'a');
    for (char& c : w) c = static_cast<char>('a' + rng.next_below(26));
    const std::string head = w.substr(0, 4);
    if (head == "ordm" || head == "sent" || head == "comp") continue;
    if (!used.insert(w).second) continue;
    return w;
  }
}

template <typename T>
const T& pick(Rng& rng, const std::vector<T>& pool) {
  return pool[rng.next_below(pool.size())];
}

}  // namespace

SynthCorpus generate_synthetic(const SynthConfig& cfg) {
  if (cfg.per_class < 1) throw UsageError("per_class must be >= 1");
  Rng word_rng(mix_seed(cfg.seed, 1));
  Rng rng(mix_seed(cfg.seed, 2));
  std::set<std::string> used;

  using Family = std::array<std::string, kFamilySize>;
  std::vector<std::vector<Family>> families(kNumEmotions);
  for (int c = 0; c < kNumEmotions; ++c) {
    families[c].resize(kFamiliesPerClass);
    for (Family& fam : families[c])
      for (std::string& member : fam) member = invent_word(word_rng, used);
  }
  std::vector<std::string> noise(kNoiseWords);
  for (std::string& w : noise) w = invent_word(word_rng, used);
  std::vector<std::string> pos_fillers(kFillersPerSign), neg_fillers(kFillersPerSign),
      neutral_fillers(kNeutralFillerWords);
  for (std::string& w : pos_fillers) w = invent_word(word_rng, used);
  for (std::string& w : neg_fillers) w = invent_word(word_rng, used);
  for (std::string& w : neutral_fillers) w = invent_word(word_rng, used);

  // Fixture: every family member relates to the other three, strongest first;
  // noise words get their own ring so even a keyword-free utterance augments.
  json fixture = json::object();
  auto relate = [&](const std::string& term, const std::vector<std::string>& others) {
    json arr = json::array();
    double weight = 3.0;
    for (const std::string& other : others) {
      arr.push_back({{"relation", "SynonymOf"}, {"term", other}, {"weight", weight}});
      weight -= 1.0;
    }
    fixture[term] = arr;
  };
  for (const auto& class_families : families) {
    for (const Family& fam : class_families) {
      for (int i = 0; i < kFamilySize; ++i) {
        relate(fam[i], {fam[(i + 1) % kFamilySize], fam[(i + 2) % kFamilySize],
                        fam[(i + 3) % kFamilySize]});
      }
    }
  }
  for (int i = 0; i < kNoiseWords; ++i) {
    relate(noise[i], {noise[(i + 1) % kNoiseWords], noise[(i + 2) % kNoiseWords],
                      noise[(i + 3) % kNoiseWords]});
  }

  // One shared magnitude keeps the compound score a function of the filler
  // count alone, and 1.8 puts every count in its own bucket.
  std::ostringstream lexicon;
  lexicon << "# generated filler-word valences\n";
  for (const std::string& w : pos_fillers) lexicon << w << "\t1.8\n";
  for (const std::string& w : neg_fillers) lexicon << w << "\t-1.8\n";

  std::vector<EmotionLabel> labels;
  for (int c = 0; c < kNumEmotions; ++c)
    labels.insert(labels.end(), cfg.per_class, static_cast<EmotionLabel>(c));
  rng.shuffle(labels);

  auto make_text = [&](EmotionLabel label, int turn) {
    std::vector<std::string> middle;
    // two keyword slots: enough class evidence that the encoder has something
    // to attach to, while each individual family member stays rare
    for (int i = 0; i < 2; ++i) {
      middle.push_back(
          families[static_cast<int>(label)][rng.next_below(kFamiliesPerClass)]
                  [rng.next_below(kFamilySize)]);
    }
    const int sign = filler_sign(label);
    if (sign == 0) {
      const int n = 1 + static_cast<int>(rng.next_below(2));
      for (int i = 0; i < n; ++i) middle.push_back(pick(rng, neutral_fillers));
    } else {
      const auto& pool = sign > 0 ? pos_fillers : neg_fillers;
      for (int i = 0; i < filler_count(label); ++i) middle.push_back(pick(rng, pool));
    }
    middle.push_back(pick(rng, noise));
    rng.shuffle(middle);

    // The turn marker brackets the utterance, so order structure stays
    // salient at both ends of a segment instead of drowning in content words.
    std::string marker = "ordm";
    marker += static_cast<char>('a' + turn % 4);
    std::string text = marker;
    for (const std::string& w : middle) {
      text += ' ';
      text += w;
    }
    text += ' ';
    text += marker;
    return text;
  };

  SynthCorpus out;
  std::size_t consumed = 0;
  int conv_no = 0;
  while (consumed < labels.size()) {
    const std::size_t len =
        std::min(labels.size() - consumed, 8 + rng.next_below(5));
    Conversation conv;
    {
      std::ostringstream id;
      id << "synth-" << std::setw(4) << std::setfill('0') << conv_no++;
      conv.id = id.str();
    }
    SpeakerId speaker = rng.next_below(2) == 0 ? SpeakerId::P1 : SpeakerId::P2;
    std::size_t run_left = 1 + rng.next_below(3);
    for (std::size_t t = 0; t < len; ++t) {
      if (run_left == 0) {
        speaker = speaker == SpeakerId::P1 ? SpeakerId::P2 : SpeakerId::P1;
        run_left = 1 + rng.next_below(3);
      }
      --run_left;
      Utterance u;
      u.conversation_id = conv.id;
      u.turn_index = static_cast<int>(t);
      u.speaker = speaker;
      u.label = labels[consumed + t];
      u.text = make_text(*u.label, static_cast<int>(t));
      conv.utterances.push_back(std::move(u));
    }
    consumed += len;
    out.conversations.push_back(std::move(conv));
  }

  // splits need two conversations even for tiny corpora
  if (out.conversations.size() == 1 && out.conversations[0].utterances.size() >= 2) {
    Conversation& first = out.conversations[0];
    Conversation second;
    second.id = "synth-0001";
    const std::size_t half = first.utterances.size() / 2;
    for (std::size_t t = half; t < first.utterances.size(); ++t) {
      Utterance u = std::move(first.utterances[t]);
      u.conversation_id = second.id;
      u.turn_index = static_cast<int>(t - half);
      second.utterances.push_back(std::move(u));
    }
    first.utterances.resize(half);
    out.conversations.push_back(std::move(second));
  }

  out.fixture_json = fixture.dump(2) + "\n";
  out.lexicon_text = lexicon.str();
  return out;
}

void write_synthetic(const SynthCorpus& corpus, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  write_corpus(corpus.conversations, out_dir + "/corpus.csv", CorpusFormat::Csv);
  std::ofstream fixture(out_dir + "/kg_fixture.json", std::ios::trunc);
  std::ofstream lexicon(out_dir + "/lexicon.txt", std::ios::trunc);
  if (!fixture || !lexicon) throw DataError("cannot write synthetic corpus under " + out_dir);
  fixture << corpus.fixture_json;
  lexicon << corpus.lexicon_text;
}

}  // namespace adcofe
