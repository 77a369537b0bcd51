#pragma once

#include <array>
#include <memory>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace quase {

struct Sentence {
  std::vector<std::string> tokens;
  std::vector<int> ids;  // filled by Vocabulary::index_sentence

  std::size_t length() const { return tokens.size(); }
  bool operator==(const Sentence& o) const { return tokens == o.tokens; }
};

struct RatedSentence {
  Sentence sentence;
  double rating = 0.0;  // in [1, 5]
};

class CorpusError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Lowercases and splits punctuation characters into their own tokens.
Sentence tokenize(const std::string& text);
std::string detokenize(const Sentence& s);

class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kBos = 1;
  static constexpr int kEos = 2;
  static constexpr int kUnk = 3;
  static constexpr int kReserved = 4;

  Vocabulary();

  // Tokens with frequency < min_freq map to UNK.
  static Vocabulary build(const std::vector<Sentence>& corpus, int min_freq);

  int id(const std::string& token) const;  // UNK when absent
  const std::string& token(int id) const;
  int size() const { return static_cast<int>(id_to_token_.size()); }
  bool contains(const std::string& token) const {
    return token_to_id_.count(token) > 0;
  }

  std::vector<int> to_ids(const std::vector<std::string>& tokens) const;
  std::vector<std::string> to_tokens(const std::vector<int>& ids) const;
  void index_sentence(Sentence& s) const { s.ids = to_ids(s.tokens); }

  // Full token list in id order (reserved first); used by the checkpoint.
  const std::vector<std::string>& id_to_token() const { return id_to_token_; }
  static Vocabulary from_tokens(const std::vector<std::string>& id_to_token);

 private:
  int add(const std::string& token);
  std::unordered_map<std::string, int> token_to_id_;
  std::vector<std::string> id_to_token_;
};

struct RatingDistribution {
  std::array<double, 5> probs{};  // classes 1..5

  double expected_rating() const {
    double r = 0.0;
    for (int k = 0; k < 5; ++k) r += (k + 1) * probs[k];
    return r;
  }
  void validate() const;
};

class RatingScorer {
 public:
  virtual ~RatingScorer() = default;
  virtual RatingDistribution distribution(const Sentence& s) const = 0;
};

// Sum of probability-multiplied rating classes; always in [1, 5].
double score_sentence(const RatingScorer& scorer, const Sentence& s);

// Deterministic scorer: mean valence v of in-lexicon tokens (0 when none)
// mapped to a distribution concentrated at 3 + 2v, linearly interpolated
// between the two adjacent integer classes.
class LexiconScorer : public RatingScorer {
 public:
  explicit LexiconScorer(std::unordered_map<std::string, double> valence);
  RatingDistribution distribution(const Sentence& s) const override;
  double valence(const std::string& token) const;  // 0 when absent
  bool contains(const std::string& token) const { return valence_.count(token) > 0; }
  const std::unordered_map<std::string, double>& lexicon() const { return valence_; }

 private:
  std::unordered_map<std::string, double> valence_;
};

// `token<TAB>valence` per line, valence in [-1, 1]; '#' lines are comments.
LexiconScorer load_lexicon(const std::string& path);

// Dataset file: optional '# key=value' header lines, then one record per
// line: `rating<TAB>space-joined tokens`.
void save_dataset(const std::string& path, const std::vector<RatedSentence>& data,
                  const std::vector<std::string>& header_lines = {});
std::vector<RatedSentence> load_dataset(const std::string& path);

// Exact-round-trip double formatting ("%.6f" when that parses back exactly,
// "%.17g" otherwise).
std::string format_double(double v);
double parse_double(const std::string& text);

}  // namespace quase
