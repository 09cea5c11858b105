#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "adcofe/corpus.hpp"
#include "adcofe/textprep.hpp"

namespace adcofe {

struct RelatedTerm {
  std::string term;  // may be multi-word
  double weight = 0.0;
  std::string relation;
};

enum class Provenance { Original, KgAugmented };

// An utterance plus where it came from; augmented variants keep the original's
// coordinates and label.
struct EnrichedSample {
  std::string conversation_id;
  int turn_index = 0;
  SpeakerId speaker = SpeakerId::P1;
  std::string text;
  std::optional<EmotionLabel> label;
  Provenance provenance = Provenance::Original;
  int variant = 0;  // in [1, A] for KgAugmented, 0 for Original
};

enum class KgSource { Http, Fixture, Cache };

std::optional<KgSource> kg_source_from_string(const std::string& s);
std::string to_string(KgSource s);

// Transport seam; tests substitute counting or canned-response transports.
class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  struct Response {
    int status = 0;
    std::string body;
  };
  // nullopt = connection-level failure
  virtual std::optional<Response> get(const std::string& path_and_query) = 0;
};

std::unique_ptr<HttpTransport> make_httplib_transport(const std::string& base_url, int timeout_s);

struct KgOptions {
  KgSource source = KgSource::Fixture;
  std::string base_url = "http://api.conceptnet.io";
  std::string fixture_path;  // JSON map term -> [{term, weight, relation}]
  std::string cache_path;    // append-only JSONL, one {"term","results"} per line
  int retries = 3;
  int timeout_s = 10;
  int backoff_ms = 250;
};

class KgClient {
 public:
  explicit KgClient(KgOptions opts, std::unique_ptr<HttpTransport> transport = nullptr);

  // Up to k related terms ordered by weight desc then term asc; the query term
  // itself is filtered out. Cache wins over fixture/HTTP; HTTP results are
  // appended to the cache. Network failure after the retry budget degrades to
  // an empty list.
  std::vector<RelatedTerm> fetch_related(const std::string& term, int k);

  // Variant i replaces each content token having >= i related terms with its
  // i-th related term, spliced at the token's span. Variants equal to the
  // original are dropped.
  std::vector<std::string> augment_sentence(const std::string& original,
                                            const std::vector<WordToken>& content_tokens, int k,
                                            int variants);

  std::size_t failed_fetches() const { return failed_fetches_; }

 private:
  KgOptions opts_;
  std::unique_ptr<HttpTransport> transport_;
  std::map<std::string, std::vector<RelatedTerm>> fixture_;
  std::map<std::string, std::vector<RelatedTerm>> cache_;
  std::mutex cache_mutex_;  // single writer, the in-memory map is read-shared
  std::size_t failed_fetches_ = 0;

  std::optional<std::vector<RelatedTerm>> fetch_http(const std::string& term, int k);
  void cache_store(const std::string& term, const std::vector<RelatedTerm>& results);
};

// Every original utterance followed by its augmented variants, labels copied,
// order stable.
std::vector<EnrichedSample> enrich_corpus(KgClient& client, const std::vector<Utterance>& utterances,
                                          const std::unordered_set<std::string>& stopwords, int k,
                                          int variants);

// Meaning-preserving relations accepted for substitution.
bool relation_accepted(const std::string& relation);

}  // namespace adcofe
