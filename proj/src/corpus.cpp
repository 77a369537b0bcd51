#include "quase/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace quase {

namespace {

bool is_space_byte(unsigned char c) { return std::isspace(c) != 0; }
bool is_punct_byte(unsigned char c) { return c < 0x80 && std::ispunct(c) != 0; }

}  // namespace

Sentence tokenize(const std::string& text) {
  Sentence s;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) {
      s.tokens.push_back(current);
      current.clear();
    }
  };
  for (unsigned char c : text) {
    if (is_space_byte(c)) {
      flush();
    } else if (is_punct_byte(c)) {
      flush();
      s.tokens.push_back(std::string(1, static_cast<char>(c)));
    } else {
      current.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  flush();
  if (s.tokens.empty()) {
    throw CorpusError("tokenize: no tokens survive in input \"" + text + "\"");
  }
  return s;
}

std::string detokenize(const Sentence& s) {
  std::string out;
  for (std::size_t i = 0; i < s.tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += s.tokens[i];
  }
  return out;
}

Vocabulary::Vocabulary() {
  add("<pad>");
  add("<bos>");
  add("<eos>");
  add("<unk>");
}

int Vocabulary::add(const std::string& token) {
  auto [it, inserted] = token_to_id_.emplace(token, static_cast<int>(id_to_token_.size()));
  if (inserted) id_to_token_.push_back(token);
  return it->second;
}

Vocabulary Vocabulary::build(const std::vector<Sentence>& corpus, int min_freq) {
  if (corpus.empty()) throw CorpusError("build_vocab: empty corpus");
  if (min_freq < 1) throw CorpusError("build_vocab: min_freq must be >= 1");
  std::unordered_map<std::string, int> freq;
  for (const Sentence& s : corpus) {
    for (const std::string& t : s.tokens) ++freq[t];
  }
  Vocabulary v;
  // First-appearance order keeps ids deterministic.
  for (const Sentence& s : corpus) {
    for (const std::string& t : s.tokens) {
      if (freq[t] >= min_freq) v.add(t);
    }
  }
  return v;
}

int Vocabulary::id(const std::string& token) const {
  auto it = token_to_id_.find(token);
  return it == token_to_id_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || id >= size()) {
    throw CorpusError("vocabulary: id " + std::to_string(id) + " outside size " +
                      std::to_string(size()));
  }
  return id_to_token_[static_cast<std::size_t>(id)];
}

std::vector<int> Vocabulary::to_ids(const std::vector<std::string>& tokens) const {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const std::string& t : tokens) ids.push_back(id(t));
  return ids;
}

std::vector<std::string> Vocabulary::to_tokens(const std::vector<int>& ids) const {
  std::vector<std::string> tokens;
  tokens.reserve(ids.size());
  for (int i : ids) tokens.push_back(token(i));
  return tokens;
}

Vocabulary Vocabulary::from_tokens(const std::vector<std::string>& id_to_token) {
  if (id_to_token.size() < kReserved) {
    throw CorpusError("vocabulary: token list shorter than the reserved block");
  }
  Vocabulary v;
  for (std::size_t i = kReserved; i < id_to_token.size(); ++i) v.add(id_to_token[i]);
  if (v.id_to_token() != id_to_token) {
    throw CorpusError("vocabulary: token list has duplicates or bad reserved block");
  }
  return v;
}

void RatingDistribution::validate() const {
  double sum = 0.0;
  for (double p : probs) {
    if (p < 0.0 || !std::isfinite(p)) {
      throw CorpusError("rating distribution: negative or non-finite probability");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-6) {
    throw CorpusError("rating distribution: probabilities sum to " + std::to_string(sum));
  }
}

double score_sentence(const RatingScorer& scorer, const Sentence& s) {
  RatingDistribution d = scorer.distribution(s);
  d.validate();
  return d.expected_rating();
}

LexiconScorer::LexiconScorer(std::unordered_map<std::string, double> valence)
    : valence_(std::move(valence)) {
  if (valence_.empty()) throw CorpusError("lexicon scorer: empty lexicon");
  for (const auto& [token, v] : valence_) {
    if (v < -1.0 || v > 1.0 || !std::isfinite(v)) {
      throw CorpusError("lexicon scorer: valence of \"" + token + "\" outside [-1,1]");
    }
  }
}

double LexiconScorer::valence(const std::string& token) const {
  auto it = valence_.find(token);
  return it == valence_.end() ? 0.0 : it->second;
}

RatingDistribution LexiconScorer::distribution(const Sentence& s) const {
  double sum = 0.0;
  int n = 0;
  for (const std::string& t : s.tokens) {
    auto it = valence_.find(t);
    if (it != valence_.end()) {
      sum += it->second;
      ++n;
    }
  }
  const double v = n ? sum / n : 0.0;
  double r = 3.0 + 2.0 * v;
  r = std::min(5.0, std::max(1.0, r));
  RatingDistribution d;
  const int lo = static_cast<int>(std::floor(r));
  if (lo >= 5) {
    d.probs[4] = 1.0;
  } else {
    const double hi_mass = r - lo;
    d.probs[lo - 1] = 1.0 - hi_mass;
    d.probs[lo] = hi_mass;
  }
  return d;
}

LexiconScorer load_lexicon(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CorpusError("lexicon: cannot open " + path);
  std::unordered_map<std::string, double> valence;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw CorpusError("lexicon: " + path + ":" + std::to_string(lineno) +
                        ": expected token<TAB>valence");
    }
    const std::string token = line.substr(0, tab);
    double v;
    try {
      v = parse_double(line.substr(tab + 1));
    } catch (const std::exception&) {
      throw CorpusError("lexicon: " + path + ":" + std::to_string(lineno) +
                        ": bad valence field");
    }
    valence[token] = v;
  }
  return LexiconScorer(std::move(valence));
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  if (std::strtod(buf, nullptr) == v) return buf;
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& text) {
  const char* begin = text.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  while (end && *end && is_space_byte(static_cast<unsigned char>(*end))) ++end;
  if (end == begin || (end && *end)) {
    throw CorpusError("parse_double: bad number \"" + text + "\"");
  }
  return v;
}

void save_dataset(const std::string& path, const std::vector<RatedSentence>& data,
                  const std::vector<std::string>& header_lines) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CorpusError("dataset: cannot open " + path + " for writing");
  for (const std::string& h : header_lines) out << "# " << h << "\n";
  for (const RatedSentence& r : data) {
    out << format_double(r.rating) << '\t' << detokenize(r.sentence) << "\n";
  }
  if (!out) throw CorpusError("dataset: write failure on " + path);
}

std::vector<RatedSentence> load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CorpusError("dataset: cannot open " + path);
  std::vector<RatedSentence> data;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw CorpusError("dataset: " + path + ":" + std::to_string(lineno) +
                        ": expected rating<TAB>tokens");
    }
    RatedSentence r;
    try {
      r.rating = parse_double(line.substr(0, tab));
    } catch (const std::exception&) {
      throw CorpusError("dataset: " + path + ":" + std::to_string(lineno) +
                        ": bad rating field \"" + line.substr(0, tab) + "\"");
    }
    std::istringstream toks(line.substr(tab + 1));
    std::string t;
    while (toks >> t) r.sentence.tokens.push_back(t);
    if (r.sentence.tokens.empty()) {
      throw CorpusError("dataset: " + path + ":" + std::to_string(lineno) +
                        ": empty sentence");
    }
    data.push_back(std::move(r));
  }
  return data;
}

}  // namespace quase
