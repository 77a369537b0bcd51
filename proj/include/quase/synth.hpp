#pragma once

#include <map>
#include <string>
#include <vector>

#include "quase/corpus.hpp"
#include "quase/rng.hpp"

namespace quase {

class GrammarError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Template grammar for the synthetic corpus. Format, one declaration per
// line ('#' comments):
//   template = the NOUN is ADV ADJ .
//   slot NOUN = food service staff
//   vslot ADJ = great terrible decent
// Template tokens matching a declared slot name are placeholders. vslot
// fillers carry sentiment and must appear in the lexicon with nonzero
// valence, with both signs represented.
struct Grammar {
  struct Slot {
    std::string name;
    bool valenced = false;
    std::vector<std::string> fillers;
  };
  std::vector<std::vector<std::string>> templates;
  std::map<std::string, Slot> slots;

  void validate(const LexiconScorer& scorer) const;
};

Grammar load_grammar(const std::string& path);

struct SynthOptions {
  int size = 2000;
  double positive_fraction = 0.5;
  int max_siblings = 3;  // sentences per sibling group share content slots
};

// Every generated sentence's rating equals score_sentence(scorer, s) exactly.
// Sibling groups re-draw only the valenced slots, seeding the miner with
// natural pseudo-parallel candidates.
std::vector<RatedSentence> synthesize(const Grammar& grammar, const LexiconScorer& scorer,
                                      const SynthOptions& options, Rng& rng);

}  // namespace quase
