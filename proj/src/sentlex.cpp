#include "adcofe/sentlex.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "adcofe/errors.hpp"

namespace adcofe {

namespace {

// Rule constants from the reference valence-lexicon method.
constexpr double kBoosterIncr = 0.293;
constexpr double kCapsIncr = 0.733;
constexpr double kNegationScalar = -0.74;
constexpr double kExclamIncr = 0.292;
constexpr double kCompoundAlpha = 15.0;
constexpr std::size_t kNegationWindow = 3;
constexpr long kMaxExclamations = 3;

const std::unordered_set<std::string>& booster_words() {
  static const std::unordered_set<std::string> words = {
      "absolutely",  "amazingly",   "awfully",     "completely", "considerably",
      "decidedly",   "deeply",      "enormously",  "entirely",   "especially",
      "exceptionally", "extremely", "fabulously",  "fully",      "greatly",
      "highly",      "hugely",      "incredibly",  "intensely",  "majorly",
      "more",        "most",        "particularly", "purely",    "quite",
      "really",      "remarkably",  "so",          "substantially", "thoroughly",
      "totally",     "tremendously", "truly",      "unbelievably", "unusually",
      "utterly",     "very",
  };
  return words;
}

const std::unordered_set<std::string>& negation_words() {
  static const std::unordered_set<std::string> words = {
      "aint",    "arent",   "cannot",  "cant",    "couldnt", "darent",  "didnt",
      "doesnt",  "dont",    "hadnt",   "hasnt",   "havent",  "isnt",    "mightnt",
      "mustnt",  "neither", "never",   "no",      "nobody",  "none",    "nope",
      "nor",     "not",     "nothing", "nowhere", "oughtnt", "rarely",  "seldom",
      "shant",   "shouldnt", "wasnt",  "werent",  "without", "wont",    "wouldnt",
  };
  return words;
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::string strip_outer_punct(const std::string& token) {
  std::size_t b = 0;
  std::size_t e = token.size();
  while (b < e && std::ispunct(static_cast<unsigned char>(token[b]))) ++b;
  while (e > b && std::ispunct(static_cast<unsigned char>(token[e - 1]))) --e;
  return token.substr(b, e - b);
}

// All alphabetic characters uppercase, and at least one of them.
bool is_all_caps(const std::string& word) {
  bool has_alpha = false;
  for (char c : word) {
    if (std::isalpha(static_cast<unsigned char>(c))) {
      has_alpha = true;
      if (!std::isupper(static_cast<unsigned char>(c))) return false;
    }
  }
  return has_alpha;
}

double sign_of(double v) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); }

}  // namespace

void Lexicon::insert(const std::string& word, double valence, const std::string& where) {
  if (word.empty()) throw DataError(where + ": empty lexicon word");
  if (!std::isfinite(valence) || valence < -4.0 || valence > 4.0)
    throw DataError(where + ": valence out of range [-4, 4] for '" + word + "'");
  valences_[lower(word)] = valence;
}

Lexicon Lexicon::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open lexicon: " + path);
  Lexicon lex;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const std::string where = path + ":" + std::to_string(line_no);
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos) throw DataError(where + ": expected word<TAB>valence");
    const std::string word = line.substr(0, tab);
    double valence = 0.0;
    try {
      std::size_t used = 0;
      valence = std::stod(line.substr(tab + 1), &used);
      std::string rest = line.substr(tab + 1 + used);
      if (rest.find_first_not_of(" \t") != std::string::npos)
        throw DataError(where + ": trailing garbage after valence");
    } catch (const std::invalid_argument&) {
      throw DataError(where + ": unparseable valence");
    } catch (const std::out_of_range&) {
      throw DataError(where + ": unparseable valence");
    }
    lex.insert(word, valence, where);
  }
  return lex;
}

Lexicon Lexicon::from_entries(const std::vector<std::pair<std::string, double>>& entries) {
  Lexicon lex;
  for (const auto& [word, valence] : entries) lex.insert(word, valence, "lexicon entry");
  return lex;
}

double Lexicon::valence(const std::string& word) const {
  const auto it = valences_.find(lower(word));
  return it == valences_.end() ? 0.0 : it->second;
}

bool Lexicon::contains(const std::string& word) const {
  return valences_.count(lower(word)) != 0;
}

std::string to_string(SentimentClass c) {
  switch (c) {
    case SentimentClass::Positive: return "positive";
    case SentimentClass::Negative: return "negative";
    case SentimentClass::Neutral: return "neutral";
  }
  return "?";
}

double compound_from_raw(double raw_sum) {
  return raw_sum / std::sqrt(raw_sum * raw_sum + kCompoundAlpha);
}

int compound_bucket(double compound) {
  const int bucket = static_cast<int>(std::floor((compound + 1.0) / 0.25));
  return std::clamp(bucket, 0, 7);
}

SentimentScores score_sentence(const std::string& text, const Lexicon& lex) {
  std::vector<std::string> raw_tokens;
  {
    std::istringstream iss(text);
    std::string tok;
    while (iss >> tok) {
      if (!strip_outer_punct(tok).empty()) raw_tokens.push_back(tok);
    }
  }
  if (raw_tokens.empty()) return SentimentScores{};

  // The caps rule only fires when the sentence mixes cased styles; an
  // all-shouted sentence carries no per-word emphasis.
  std::size_t caps_count = 0;
  for (const std::string& t : raw_tokens)
    if (is_all_caps(strip_outer_punct(t))) ++caps_count;
  const bool caps_differential = caps_count > 0 && caps_count < raw_tokens.size();

  double raw_sum = 0.0;
  double pos_mag = 0.0;
  double neg_mag = 0.0;
  std::size_t zero_count = 0;
  for (std::size_t i = 0; i < raw_tokens.size(); ++i) {
    const std::string word = strip_outer_punct(raw_tokens[i]);
    double v = lex.valence(word);
    if (v != 0.0) {
      if (i > 0 && booster_words().count(lower(strip_outer_punct(raw_tokens[i - 1]))))
        v += sign_of(v) * kBoosterIncr;
      for (std::size_t back = 1; back <= kNegationWindow && back <= i; ++back) {
        if (negation_words().count(lower(strip_outer_punct(raw_tokens[i - back])))) {
          v *= kNegationScalar;
          break;
        }
      }
      if (caps_differential && is_all_caps(word)) v += sign_of(v) * kCapsIncr;
    }
    raw_sum += v;
    if (v > 0) pos_mag += v;
    else if (v < 0) neg_mag += -v;
    else ++zero_count;
  }

  const auto exclamations =
      std::min<long>(std::count(text.begin(), text.end(), '!'), kMaxExclamations);
  raw_sum += sign_of(raw_sum) * kExclamIncr * static_cast<double>(exclamations);

  SentimentScores scores;
  scores.compound = compound_from_raw(raw_sum);
  const double total = pos_mag + neg_mag + static_cast<double>(zero_count);
  scores.pos = pos_mag / total;
  scores.neg = neg_mag / total;
  scores.neu = static_cast<double>(zero_count) / total;
  return scores;
}

SentimentClass classify_sentiment(const SentimentScores& scores, double threshold) {
  if (!(threshold > 0.0)) throw UsageError("sentiment threshold must be > 0");
  if (scores.compound >= threshold) return SentimentClass::Positive;
  if (scores.compound <= -threshold) return SentimentClass::Negative;
  return SentimentClass::Neutral;
}

std::string sentiment_feature_suffix(const SentimentScores& scores, double threshold) {
  std::string tag;
  switch (classify_sentiment(scores, threshold)) {
    case SentimentClass::Positive: tag = "SENTPOS"; break;
    case SentimentClass::Negative: tag = "SENTNEG"; break;
    case SentimentClass::Neutral: tag = "SENTNEU"; break;
  }
  return " " + tag + " COMP" + std::to_string(compound_bucket(scores.compound));
}

std::vector<EnrichedSample> add_sentiment_features(const std::vector<EnrichedSample>& samples,
                                                   const Lexicon& lex, double threshold) {
  std::vector<EnrichedSample> out;
  out.reserve(samples.size());
  for (const EnrichedSample& s : samples) {
    EnrichedSample tagged = s;
    tagged.text += sentiment_feature_suffix(score_sentence(s.text, lex), threshold);
    out.push_back(std::move(tagged));
  }
  return out;
}

}  // namespace adcofe
