#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "adcofe/corpus.hpp"

namespace adcofe {

struct SynthConfig {
  int per_class = 50;  // labeled utterances per emotion
  std::uint64_t seed = 0;
};

// A corpus whose classes are recoverable through exactly the signals the
// pipeline is supposed to exploit: class keywords drawn from synonym families
// (the companion fixture maps every member to the rest of its family), rare
// polar filler words carried by the companion lexicon, and a cyclic
// order-marker token bracketing each utterance.
struct SynthCorpus {
  std::vector<Conversation> conversations;
  std::string fixture_json;   // term -> [{term, weight, relation}]
  std::string lexicon_text;   // word<TAB>valence lines
};

SynthCorpus generate_synthetic(const SynthConfig& cfg);

// corpus.csv, kg_fixture.json, lexicon.txt under out_dir
void write_synthetic(const SynthCorpus& corpus, const std::string& out_dir);

}  // namespace adcofe
