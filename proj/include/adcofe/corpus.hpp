#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace adcofe {

// Dyadic conversations have exactly two speakers.
enum class SpeakerId { P1, P2 };

// Six-way emotion set with fixed integer codes.
enum class EmotionLabel {
  Happy = 0,
  Sad = 1,
  Neutral = 2,
  Angry = 3,
  Excited = 4,
  Frustrated = 5,
};

inline constexpr int kNumEmotions = 6;

std::string to_string(SpeakerId s);
std::string to_string(EmotionLabel e);

std::optional<SpeakerId> speaker_from_string(const std::string& s);

// Accepts class names (case-insensitive) or integer codes 0..5.
std::optional<EmotionLabel> emotion_from_string(const std::string& s);

struct Utterance {
  std::string conversation_id;
  int turn_index = 0;
  SpeakerId speaker = SpeakerId::P1;
  std::string text;
  std::optional<EmotionLabel> label;
};

struct Conversation {
  std::string id;
  std::vector<Utterance> utterances;  // ordered by turn_index, contiguous from 0
};

// Maximal run of consecutive utterances by one speaker.
struct SpeakerBatch {
  SpeakerId speaker = SpeakerId::P1;
  std::vector<Utterance> utterances;
};

enum class CorpusFormat { Csv, Jsonl };

CorpusFormat corpus_format_from_path(const std::string& path);

struct LoadResult {
  std::vector<Conversation> conversations;
  std::size_t dropped_records = 0;  // records whose label fell outside the six classes
};

// CSV needs the header conversation_id,turn_index,speaker,text,label;
// JSONL is one object per line with the same keys. Utterances are grouped by
// conversation id (first-appearance order), ordered by their file turn_index,
// then renumbered contiguously from 0 so the in-memory invariant holds even
// when records were dropped.
LoadResult load_corpus(const std::string& path, CorpusFormat format);

void write_corpus(const std::vector<Conversation>& convs, const std::string& path,
                  CorpusFormat format);

std::vector<SpeakerBatch> arrange_sentences(const Conversation& c);

struct SplitResult {
  std::vector<Conversation> train;
  std::vector<Conversation> test;
};

// Conversation-granular split. |test| = round(fraction * n) clamped to
// [1, n-1]; membership is a seed-determined draw, input order preserved
// within each side.
SplitResult split_corpus(const std::vector<Conversation>& convs, double test_fraction,
                         std::uint64_t seed);

}  // namespace adcofe
