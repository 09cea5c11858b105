#include "adcofe/kgclient.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <thread>
#include <unordered_set>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "adcofe/errors.hpp"

namespace adcofe {

namespace {

using nlohmann::json;

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::string url_encode(const std::string& s) {
  static const char* hex = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : s) {
    if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
      out.push_back(static_cast<char>(c));
    } else {
      out.push_back('%');
      out.push_back(hex[c >> 4]);
      out.push_back(hex[c & 0xF]);
    }
  }
  return out;
}

std::vector<RelatedTerm> parse_term_array(const json& arr, const std::string& context) {
  if (!arr.is_array()) throw ProtocolError(context + ": expected an array of related terms");
  std::vector<RelatedTerm> out;
  for (const json& e : arr) {
    if (!e.is_object() || !e.contains("term") || !e.contains("weight"))
      throw ProtocolError(context + ": related-term entry needs term and weight");
    RelatedTerm t;
    t.term = e.at("term").get<std::string>();
    t.weight = e.at("weight").get<double>();
    t.relation = e.value("relation", std::string("RelatedTo"));
    out.push_back(std::move(t));
  }
  return out;
}

// weight desc, then term asc; dedup case-insensitively keeping the heaviest
std::vector<RelatedTerm> rank_terms(std::vector<RelatedTerm> terms, const std::string& query, int k) {
  std::stable_sort(terms.begin(), terms.end(), [](const RelatedTerm& a, const RelatedTerm& b) {
    if (a.weight != b.weight) return a.weight > b.weight;
    return a.term < b.term;
  });
  std::vector<RelatedTerm> out;
  std::unordered_set<std::string> seen;
  const std::string q = lower(query);
  for (RelatedTerm& t : terms) {
    if (t.term.empty() || !std::isfinite(t.weight)) continue;
    const std::string key = lower(t.term);
    if (key == q) continue;
    if (!seen.insert(key).second) continue;
    out.push_back(std::move(t));
    if (static_cast<int>(out.size()) >= k) break;
  }
  return out;
}

class HttplibTransport : public HttpTransport {
 public:
  HttplibTransport(std::string base_url, int timeout_s)
      : base_url_(std::move(base_url)), timeout_s_(timeout_s) {}

  std::optional<Response> get(const std::string& path_and_query) override {
    httplib::Client client(base_url_);
    client.set_connection_timeout(timeout_s_, 0);
    client.set_read_timeout(timeout_s_, 0);
    client.set_follow_location(true);
    auto res = client.Get(path_and_query);
    if (!res) return std::nullopt;
    return Response{res->status, res->body};
  }

 private:
  std::string base_url_;
  int timeout_s_;
};

}  // namespace

std::optional<KgSource> kg_source_from_string(const std::string& s) {
  const std::string l = lower(s);
  if (l == "http") return KgSource::Http;
  if (l == "fixture") return KgSource::Fixture;
  if (l == "cache") return KgSource::Cache;
  return std::nullopt;
}

std::string to_string(KgSource s) {
  switch (s) {
    case KgSource::Http: return "http";
    case KgSource::Fixture: return "fixture";
    case KgSource::Cache: return "cache";
  }
  return "?";
}

bool relation_accepted(const std::string& relation) {
  return relation == "RelatedTo" || relation == "SynonymOf" || relation == "Synonym" ||
         relation == "SimilarTo" || relation == "FormOf" || relation == "IsA";
}

std::unique_ptr<HttpTransport> make_httplib_transport(const std::string& base_url, int timeout_s) {
  return std::make_unique<HttplibTransport>(base_url, timeout_s);
}

KgClient::KgClient(KgOptions opts, std::unique_ptr<HttpTransport> transport)
    : opts_(std::move(opts)), transport_(std::move(transport)) {
  if (!opts_.fixture_path.empty()) {
    std::ifstream in(opts_.fixture_path);
    if (!in) throw DataError("cannot open KG fixture: " + opts_.fixture_path);
    json j;
    try {
      in >> j;
    } catch (const json::parse_error& e) {
      throw ProtocolError(opts_.fixture_path + ": invalid fixture JSON: " + e.what());
    }
    if (!j.is_object()) throw ProtocolError(opts_.fixture_path + ": fixture must be a JSON object");
    for (const auto& [term, arr] : j.items()) {
      fixture_[lower(term)] = parse_term_array(arr, opts_.fixture_path);
    }
  }
  if (!opts_.cache_path.empty()) {
    std::ifstream in(opts_.cache_path);
    if (in) {
      std::string line;
      std::size_t line_no = 0;
      while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
          j = json::parse(line);
        } catch (const json::parse_error& e) {
          throw ProtocolError(opts_.cache_path + ":" + std::to_string(line_no) +
                              ": invalid cache line: " + e.what());
        }
        if (!j.is_object() || !j.contains("term") || !j.contains("results"))
          throw ProtocolError(opts_.cache_path + ":" + std::to_string(line_no) +
                              ": cache line needs term and results");
        // last entry wins
        cache_[lower(j.at("term").get<std::string>())] =
            parse_term_array(j.at("results"), opts_.cache_path);
      }
    }
  }
  if (opts_.source == KgSource::Http && !transport_) {
    transport_ = make_httplib_transport(opts_.base_url, opts_.timeout_s);
  }
}

void KgClient::cache_store(const std::string& term, const std::vector<RelatedTerm>& results) {
  std::lock_guard<std::mutex> lock(cache_mutex_);
  cache_[term] = results;
  if (opts_.cache_path.empty()) return;
  json arr = json::array();
  for (const RelatedTerm& t : results) {
    arr.push_back({{"relation", t.relation}, {"term", t.term}, {"weight", t.weight}});
  }
  json line = {{"results", arr}, {"term", term}};
  std::ofstream out(opts_.cache_path, std::ios::app);
  if (!out) throw DataError("cannot append to KG cache: " + opts_.cache_path);
  out << line.dump() << '\n';
}

std::optional<std::vector<RelatedTerm>> KgClient::fetch_http(const std::string& term, int k) {
  const std::string path = "/c/en/" + url_encode(term) + "?limit=" + std::to_string(k * 4);
  for (int attempt = 0; attempt <= opts_.retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(opts_.backoff_ms * (1 << (attempt - 1))));
    }
    auto res = transport_->get(path);
    if (!res || res->status >= 500 || res->status == 429) continue;
    if (res->status != 200) {
      std::cerr << "kg: GET " << path << " -> status " << res->status << "\n";
      continue;
    }
    json j;
    try {
      j = json::parse(res->body);
    } catch (const json::parse_error& e) {
      throw ProtocolError(std::string("kg: malformed response for '") + term + "': " + e.what());
    }
    if (!j.is_object() || !j.contains("edges") || !j.at("edges").is_array())
      throw ProtocolError("kg: response for '" + term + "' has no edge list");
    std::vector<RelatedTerm> terms;
    for (const json& edge : j.at("edges")) {
      if (!edge.is_object()) throw ProtocolError("kg: edge is not an object for '" + term + "'");
      if (!edge.contains("end") || !edge.at("end").is_object()) continue;
      const json& end = edge.at("end");
      if (!end.contains("label")) continue;
      RelatedTerm t;
      t.term = end.at("label").get<std::string>();
      t.weight = edge.value("weight", 1.0);
      if (edge.contains("rel") && edge.at("rel").is_object())
        t.relation = edge.at("rel").value("label", std::string());
      if (!relation_accepted(t.relation)) continue;
      terms.push_back(std::move(t));
    }
    return terms;
  }
  return std::nullopt;
}

std::vector<RelatedTerm> KgClient::fetch_related(const std::string& term, int k) {
  if (term.empty()) throw UsageError("fetch_related: empty term");
  if (k < 1) throw UsageError("fetch_related: k must be >= 1");
  const std::string key = lower(term);

  {
    std::lock_guard<std::mutex> lock(cache_mutex_);
    if (const auto it = cache_.find(key); it != cache_.end())
      return rank_terms(it->second, key, k);
  }
  switch (opts_.source) {
    case KgSource::Cache:
      return {};  // cache-only mode, absent key
    case KgSource::Fixture: {
      const auto it = fixture_.find(key);
      if (it == fixture_.end()) return {};
      std::vector<RelatedTerm> filtered;
      for (const RelatedTerm& t : it->second)
        if (relation_accepted(t.relation)) filtered.push_back(t);
      return rank_terms(std::move(filtered), key, k);
    }
    case KgSource::Http: {
      auto fetched = fetch_http(key, k);
      if (!fetched) {
        ++failed_fetches_;
        std::cerr << "kg: giving up on '" << key << "' after " << opts_.retries
                  << " retries; continuing unaugmented\n";
        return {};
      }
      cache_store(key, *fetched);
      return rank_terms(*fetched, key, k);
    }
  }
  return {};
}

std::vector<std::string> KgClient::augment_sentence(const std::string& original,
                                                    const std::vector<WordToken>& content_tokens,
                                                    int k, int variants) {
  if (variants <= 0) return {};
  std::vector<std::vector<RelatedTerm>> related;
  related.reserve(content_tokens.size());
  for (const WordToken& t : content_tokens) related.push_back(fetch_related(t.surface, k));

  std::vector<std::string> out;
  for (int v = 1; v <= variants; ++v) {
    std::string text;
    std::size_t cursor = 0;
    bool changed = false;
    for (std::size_t i = 0; i < content_tokens.size(); ++i) {
      const WordToken& t = content_tokens[i];
      if (t.begin < cursor || t.end > original.size()) continue;  // overlapping or stale span
      if (static_cast<int>(related[i].size()) < v) continue;
      text.append(original, cursor, t.begin - cursor);
      text.append(related[i][static_cast<std::size_t>(v - 1)].term);
      cursor = t.end;
      changed = true;
    }
    text.append(original, cursor, original.size() - cursor);
    if (changed && text != original) out.push_back(std::move(text));
  }
  return out;
}

std::vector<EnrichedSample> enrich_corpus(KgClient& client, const std::vector<Utterance>& utterances,
                                          const std::unordered_set<std::string>& stopwords, int k,
                                          int variants) {
  std::vector<EnrichedSample> out;
  for (const Utterance& u : utterances) {
    EnrichedSample original;
    original.conversation_id = u.conversation_id;
    original.turn_index = u.turn_index;
    original.speaker = u.speaker;
    original.text = u.text;
    original.label = u.label;
    original.provenance = Provenance::Original;
    out.push_back(original);

    if (variants <= 0) continue;
    const auto tokens = extract_content_tokens(u.text, stopwords);
    const auto variant_texts = client.augment_sentence(u.text, tokens, k, variants);
    int idx = 0;
    for (const std::string& text : variant_texts) {
      EnrichedSample s = original;
      s.text = text;
      s.provenance = Provenance::KgAugmented;
      s.variant = ++idx;
      out.push_back(std::move(s));
    }
  }
  return out;
}

}  // namespace adcofe
