#pragma once

#include <cstddef>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "adcofe/kgclient.hpp"

namespace adcofe {

// word -> valence in [-4, 4]; keys stored lowercase, lookup case-insensitive
class Lexicon {
 public:
  static Lexicon load(const std::string& path);
  static Lexicon from_entries(const std::vector<std::pair<std::string, double>>& entries);

  // 0 when absent
  double valence(const std::string& word) const;
  bool contains(const std::string& word) const;
  std::size_t size() const { return valences_.size(); }

 private:
  std::unordered_map<std::string, double> valences_;

  void insert(const std::string& word, double valence, const std::string& where);
};

struct SentimentScores {
  double neg = 0.0;
  double neu = 1.0;
  double pos = 0.0;
  double compound = 0.0;
};

enum class SentimentClass { Positive, Negative, Neutral };

std::string to_string(SentimentClass c);

// raw / sqrt(raw^2 + 15), in (-1, 1) and monotone in raw
double compound_from_raw(double raw_sum);

// floor((compound + 1) / 0.25) clamped to [0, 7]
int compound_bucket(double compound);

SentimentScores score_sentence(const std::string& text, const Lexicon& lex);

// Positive if compound >= threshold, Negative if compound <= -threshold
// (boundaries inclusive), else Neutral.
SentimentClass classify_sentiment(const SentimentScores& scores, double threshold);

// Trailing feature tokens, e.g. " SENTPOS COMP6".
std::string sentiment_feature_suffix(const SentimentScores& scores, double threshold);

// Appends the feature suffix to every sample's text; order and labels
// unchanged.
std::vector<EnrichedSample> add_sentiment_features(const std::vector<EnrichedSample>& samples,
                                                   const Lexicon& lex, double threshold);

}  // namespace adcofe
