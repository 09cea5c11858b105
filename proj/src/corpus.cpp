#include "adcofe/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "adcofe/errors.hpp"
#include "adcofe/rng.hpp"

namespace adcofe {

namespace {

using nlohmann::json;

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

const char* kEmotionNames[kNumEmotions] = {"Happy",   "Sad",     "Neutral",
                                           "Angry",   "Excited", "Frustrated"};

struct RawRecord {
  std::string conversation_id;
  int turn_index = 0;
  SpeakerId speaker = SpeakerId::P1;
  std::string text;
  std::string label;  // raw label field, empty = unlabeled
  std::size_t line = 0;
};

[[noreturn]] void parse_fail(const std::string& path, std::size_t line, const std::string& what) {
  throw DataError(path + ":" + std::to_string(line) + ": " + what);
}

// RFC-4180 style: fields may be quoted, quotes escaped by doubling. Embedded
// newlines inside quotes are supported because write_corpus may emit them.
bool read_csv_row(std::istream& in, std::vector<std::string>& fields, std::size_t& line_no) {
  fields.clear();
  int c = in.peek();
  if (c == EOF) return false;
  std::string field;
  bool in_quotes = false;
  bool saw_any = false;
  while (true) {
    c = in.get();
    if (c == EOF) {
      if (in_quotes) throw DataError("unterminated quoted field at line " + std::to_string(line_no));
      if (saw_any || !field.empty()) fields.push_back(field);
      return !fields.empty();
    }
    saw_any = true;
    if (in_quotes) {
      if (c == '"') {
        if (in.peek() == '"') {
          field.push_back('"');
          in.get();
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line_no;
        field.push_back(static_cast<char>(c));
      }
    } else if (c == '"') {
      in_quotes = true;
    } else if (c == ',') {
      fields.push_back(field);
      field.clear();
    } else if (c == '\n') {
      ++line_no;
      fields.push_back(field);
      return true;
    } else if (c == '\r') {
      // tolerate CRLF
    } else {
      field.push_back(static_cast<char>(c));
    }
  }
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += "\"";
  return out;
}

int parse_turn_index(const std::string& s, const std::string& path, std::size_t line) {
  if (s.empty()) parse_fail(path, line, "empty turn_index");
  for (char c : s)
    if (!std::isdigit(static_cast<unsigned char>(c)))
      parse_fail(path, line, "turn_index is not a nonnegative integer: '" + s + "'");
  try {
    return std::stoi(s);
  } catch (const std::exception&) {
    parse_fail(path, line, "turn_index out of range: '" + s + "'");
  }
}

std::vector<RawRecord> read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open corpus file: " + path);
  std::size_t line_no = 1;
  std::vector<std::string> fields;
  if (!read_csv_row(in, fields, line_no))
    return {};
  const std::vector<std::string> expected = {"conversation_id", "turn_index", "speaker", "text",
                                             "label"};
  if (fields != expected)
    throw DataError(path + ": bad CSV header, expected conversation_id,turn_index,speaker,text,label");
  std::vector<RawRecord> records;
  std::size_t row_start = line_no;
  while (read_csv_row(in, fields, line_no)) {
    if (fields.size() == 1 && fields[0].empty()) {
      row_start = line_no;
      continue;  // blank line
    }
    if (fields.size() != 5)
      parse_fail(path, row_start, "expected 5 fields, got " + std::to_string(fields.size()));
    RawRecord r;
    r.conversation_id = fields[0];
    r.turn_index = parse_turn_index(fields[1], path, row_start);
    auto sp = speaker_from_string(fields[2]);
    if (!sp) parse_fail(path, row_start, "unknown speaker '" + fields[2] + "'");
    r.speaker = *sp;
    r.text = fields[3];
    if (r.text.empty()) parse_fail(path, row_start, "empty utterance text");
    r.label = fields[4];
    r.line = row_start;
    records.push_back(std::move(r));
    row_start = line_no;
  }
  return records;
}

std::vector<RawRecord> read_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open corpus file: " + path);
  std::vector<RawRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      parse_fail(path, line_no, std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) parse_fail(path, line_no, "record is not an object");
    RawRecord r;
    r.line = line_no;
    try {
      r.conversation_id = j.at("conversation_id").get<std::string>();
      r.turn_index = j.at("turn_index").get<int>();
      const std::string sp = j.at("speaker").get<std::string>();
      auto parsed = speaker_from_string(sp);
      if (!parsed) parse_fail(path, line_no, "unknown speaker '" + sp + "'");
      r.speaker = *parsed;
      r.text = j.at("text").get<std::string>();
    } catch (const json::exception& e) {
      parse_fail(path, line_no, std::string("bad record: ") + e.what());
    }
    if (r.turn_index < 0) parse_fail(path, line_no, "negative turn_index");
    if (r.text.empty()) parse_fail(path, line_no, "empty utterance text");
    if (auto it = j.find("label"); it != j.end() && !it->is_null()) {
      if (it->is_string()) {
        r.label = it->get<std::string>();
      } else if (it->is_number_integer()) {
        r.label = std::to_string(it->get<long long>());
      } else {
        parse_fail(path, line_no, "label must be a string or integer");
      }
      if (r.label.empty()) r.label.clear();
    }
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace

std::string to_string(SpeakerId s) { return s == SpeakerId::P1 ? "P1" : "P2"; }

std::string to_string(EmotionLabel e) { return kEmotionNames[static_cast<int>(e)]; }

std::optional<SpeakerId> speaker_from_string(const std::string& s) {
  const std::string l = lower(s);
  if (l == "p1") return SpeakerId::P1;
  if (l == "p2") return SpeakerId::P2;
  return std::nullopt;
}

std::optional<EmotionLabel> emotion_from_string(const std::string& s) {
  if (s.empty()) return std::nullopt;
  const std::string l = lower(s);
  for (int i = 0; i < kNumEmotions; ++i) {
    if (l == lower(kEmotionNames[i])) return static_cast<EmotionLabel>(i);
  }
  bool digits = true;
  for (char c : s)
    if (!std::isdigit(static_cast<unsigned char>(c))) digits = false;
  if (digits && s.size() <= 2) {
    const int code = std::stoi(s);
    if (code >= 0 && code < kNumEmotions) return static_cast<EmotionLabel>(code);
  }
  return std::nullopt;
}

CorpusFormat corpus_format_from_path(const std::string& path) {
  auto ends_with = [&](const char* suf) {
    const std::string s(suf);
    return path.size() >= s.size() && path.compare(path.size() - s.size(), s.size(), s) == 0;
  };
  if (ends_with(".jsonl")) return CorpusFormat::Jsonl;
  return CorpusFormat::Csv;
}

LoadResult load_corpus(const std::string& path, CorpusFormat format) {
  std::vector<RawRecord> records =
      format == CorpusFormat::Csv ? read_csv(path) : read_jsonl(path);

  // Duplicate (conversation_id, turn_index) is an integrity error, checked on
  // file turn indexes before any dropping.
  std::unordered_set<std::string> seen;
  for (const RawRecord& r : records) {
    const std::string key = r.conversation_id + "\x1f" + std::to_string(r.turn_index);
    if (!seen.insert(key).second)
      throw DataError(path + ":" + std::to_string(r.line) + ": duplicate (conversation_id, turn_index) = (" +
                      r.conversation_id + ", " + std::to_string(r.turn_index) + ")");
  }

  LoadResult result;
  std::vector<std::string> conv_order;
  std::unordered_map<std::string, std::vector<const RawRecord*>> by_conv;
  for (const RawRecord& r : records) {
    auto [it, inserted] = by_conv.try_emplace(r.conversation_id);
    if (inserted) conv_order.push_back(r.conversation_id);
    it->second.push_back(&r);
  }

  for (const std::string& id : conv_order) {
    auto& recs = by_conv[id];
    std::stable_sort(recs.begin(), recs.end(),
                     [](const RawRecord* a, const RawRecord* b) { return a->turn_index < b->turn_index; });
    Conversation conv;
    conv.id = id;
    for (const RawRecord* r : recs) {
      std::optional<EmotionLabel> label;
      if (!r->label.empty()) {
        label = emotion_from_string(r->label);
        if (!label) {
          ++result.dropped_records;  // label outside the six classes
          continue;
        }
      }
      Utterance u;
      u.conversation_id = id;
      u.turn_index = static_cast<int>(conv.utterances.size());
      u.speaker = r->speaker;
      u.text = r->text;
      u.label = label;
      conv.utterances.push_back(std::move(u));
    }
    if (!conv.utterances.empty()) result.conversations.push_back(std::move(conv));
  }
  return result;
}

void write_corpus(const std::vector<Conversation>& convs, const std::string& path,
                  CorpusFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write corpus file: " + path);
  if (format == CorpusFormat::Csv) {
    out << "conversation_id,turn_index,speaker,text,label\n";
    for (const Conversation& c : convs) {
      for (const Utterance& u : c.utterances) {
        out << csv_escape(c.id) << ',' << u.turn_index << ',' << to_string(u.speaker) << ','
            << csv_escape(u.text) << ',' << (u.label ? to_string(*u.label) : "") << '\n';
      }
    }
  } else {
    for (const Conversation& c : convs) {
      for (const Utterance& u : c.utterances) {
        json j;
        j["conversation_id"] = c.id;
        j["turn_index"] = u.turn_index;
        j["speaker"] = to_string(u.speaker);
        j["text"] = u.text;
        if (u.label) j["label"] = to_string(*u.label);
        out << j.dump() << '\n';
      }
    }
  }
  if (!out) throw DataError("failed writing corpus file: " + path);
}

std::vector<SpeakerBatch> arrange_sentences(const Conversation& c) {
  std::vector<SpeakerBatch> batches;
  for (const Utterance& u : c.utterances) {
    if (batches.empty() || batches.back().speaker != u.speaker) {
      batches.push_back(SpeakerBatch{u.speaker, {}});
    }
    batches.back().utterances.push_back(u);
  }
  return batches;
}

SplitResult split_corpus(const std::vector<Conversation>& convs, double test_fraction,
                         std::uint64_t seed) {
  const std::size_t n = convs.size();
  if (n < 2) throw DataError("split_corpus needs at least 2 conversations");
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw UsageError("test_fraction must lie in (0, 1)");

  std::size_t test_count =
      static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(n)));
  test_count = std::max<std::size_t>(1, std::min(test_count, n - 1));

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);

  std::vector<bool> is_test(n, false);
  for (std::size_t i = 0; i < test_count; ++i) is_test[order[i]] = true;

  SplitResult result;
  for (std::size_t i = 0; i < n; ++i) {
    (is_test[i] ? result.test : result.train).push_back(convs[i]);
  }
  return result;
}

}  // namespace adcofe
