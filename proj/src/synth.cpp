#include "quase/synth.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace quase {

namespace {

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  std::string t;
  while (is >> t) out.push_back(t);
  return out;
}

}  // namespace

void Grammar::validate(const LexiconScorer& scorer) const {
  if (templates.empty()) throw GrammarError("grammar: no templates");
  for (const auto& [name, slot] : slots) {
    if (slot.fillers.empty()) throw GrammarError("grammar: slot " + name + " has no fillers");
    if (slot.valenced) {
      bool has_pos = false, has_neg = false;
      for (const std::string& f : slot.fillers) {
        if (!scorer.contains(f) || scorer.valence(f) == 0.0) {
          throw GrammarError("grammar: vslot " + name + " filler \"" + f +
                             "\" lacks a nonzero lexicon valence");
        }
        (scorer.valence(f) > 0.0 ? has_pos : has_neg) = true;
      }
      if (!has_pos || !has_neg) {
        throw GrammarError("grammar: vslot " + name + " needs both polarities");
      }
    }
  }
  for (const auto& tmpl : templates) {
    if (tmpl.empty()) throw GrammarError("grammar: empty template");
    bool has_valenced = false;
    for (const std::string& tok : tmpl) {
      const bool is_upper =
          !tok.empty() && std::all_of(tok.begin(), tok.end(), [](unsigned char c) {
            return std::isupper(c) != 0 || std::isdigit(c) != 0 || c == '_';
          });
      if (is_upper && !slots.count(tok)) {
        throw GrammarError("grammar: template references undeclared slot " + tok);
      }
      if (slots.count(tok) && slots.at(tok).valenced) has_valenced = true;
    }
    if (!has_valenced) {
      throw GrammarError("grammar: template \"" + detokenize(Sentence{tmpl, {}}) +
                         "\" has no valenced slot");
    }
  }
}

Grammar load_grammar(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw GrammarError("grammar: cannot open " + path);
  Grammar g;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw GrammarError("grammar: " + path + ":" + std::to_string(lineno) +
                         ": expected declaration = body");
    }
    const auto head = split_ws(line.substr(0, eq));
    const auto body = split_ws(line.substr(eq + 1));
    if (head.size() == 1 && head[0] == "template") {
      g.templates.push_back(body);
    } else if (head.size() == 2 && (head[0] == "slot" || head[0] == "vslot")) {
      Grammar::Slot slot;
      slot.name = head[1];
      slot.valenced = head[0] == "vslot";
      slot.fillers = body;
      if (g.slots.count(slot.name)) {
        throw GrammarError("grammar: " + path + ":" + std::to_string(lineno) +
                           ": duplicate slot " + slot.name);
      }
      g.slots[slot.name] = std::move(slot);
    } else {
      throw GrammarError("grammar: " + path + ":" + std::to_string(lineno) +
                         ": unknown declaration");
    }
  }
  return g;
}

std::vector<RatedSentence> synthesize(const Grammar& grammar, const LexiconScorer& scorer,
                                      const SynthOptions& options, Rng& rng) {
  grammar.validate(scorer);
  if (options.size < 1) throw GrammarError("synth: size must be >= 1");
  if (options.positive_fraction < 0.0 || options.positive_fraction > 1.0) {
    throw GrammarError("synth: positive fraction outside [0, 1]");
  }
  if (options.max_siblings < 1) throw GrammarError("synth: max_siblings must be >= 1");

  // Pre-split vslot fillers by sign.
  std::map<std::string, std::pair<std::vector<std::string>, std::vector<std::string>>> by_sign;
  for (const auto& [name, slot] : grammar.slots) {
    if (!slot.valenced) continue;
    auto& [pos, neg] = by_sign[name];
    for (const std::string& f : slot.fillers) {
      (scorer.valence(f) > 0.0 ? pos : neg).push_back(f);
    }
  }

  auto pick = [&rng](const std::vector<std::string>& v) {
    return v[static_cast<std::size_t>(rng.uniform_int(static_cast<int>(v.size())))];
  };

  std::vector<RatedSentence> out;
  out.reserve(static_cast<std::size_t>(options.size));
  while (static_cast<int>(out.size()) < options.size) {
    const auto& tmpl = grammar.templates[static_cast<std::size_t>(
        rng.uniform_int(static_cast<int>(grammar.templates.size())))];
    // Content slots are drawn once per sibling group.
    std::vector<std::string> base(tmpl);
    for (std::string& tok : base) {
      auto it = grammar.slots.find(tok);
      if (it != grammar.slots.end() && !it->second.valenced) tok = pick(it->second.fillers);
    }
    const int siblings = 1 + rng.uniform_int(options.max_siblings);
    for (int s = 0; s < siblings && static_cast<int>(out.size()) < options.size; ++s) {
      const bool positive = rng.uniform() < options.positive_fraction;
      RatedSentence r;
      r.sentence.tokens = base;
      for (std::string& tok : r.sentence.tokens) {
        auto it = by_sign.find(tok);
        if (it != by_sign.end()) tok = pick(positive ? it->second.first : it->second.second);
      }
      r.rating = score_sentence(scorer, r.sentence);
      out.push_back(std::move(r));
    }
  }
  return out;
}

}  // namespace quase
