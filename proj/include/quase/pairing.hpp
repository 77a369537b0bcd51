#pragma once

#include <optional>
#include <string>
#include <vector>

#include "quase/corpus.hpp"
#include "quase/rng.hpp"

namespace quase {

// Placeholder for an empty delta side; maps to a dedicated learned embedding.
inline const std::string kNullToken = "<null>";

struct PseudoPair {
  RatedSentence x;        // lower-rated member
  RatedSentence x_prime;  // higher-rated member
  double jaccard = 0.0;
  double rating_gap = 0.0;
  int idx_x = -1;        // dataset record index of x
  int idx_x_prime = -1;  // dataset record index of x'
};

struct WordDelta {
  std::vector<std::string> inc;  // tokens in x' not in x (sorted)
  std::vector<std::string> dec;  // tokens in x not in x' (sorted)
};

struct TrainingPoint {
  RatedSentence single;
  // Absent for singles-only training (corpora yielding no pairs); the pair
  // losses are zero in that case.
  std::optional<PseudoPair> pair;
  std::string sampled_inc = kNullToken;
  std::string sampled_dec = kNullToken;
};

// Jaccard index over token sets (duplicates collapsed).
double jaccard(const Sentence& a, const Sentence& b);

// Exact all-pairs mining with an inverted-index prefilter. Emits each
// qualifying unordered pair once, x being the lower-rated member, in
// canonical (idx_x-then-idx_x') order. Pairs with identical token sets are
// excluded regardless of rating gap.
std::vector<PseudoPair> mine_pairs(const std::vector<RatedSentence>& corpus,
                                   double ji_min = 0.5, double gap_min = 2.0);

WordDelta word_delta(const PseudoPair& pair);

// Uniform draw from each non-empty side; kNullToken for an empty side.
std::pair<std::string, std::string> sample_delta(const WordDelta& delta, Rng& rng);

// One TrainingPoint per pair; singles drawn with replacement. Deltas are
// sampled here and may be redrawn per epoch via resample_deltas.
std::vector<TrainingPoint> compose_datapoints(const std::vector<RatedSentence>& singles,
                                              const std::vector<PseudoPair>& pairs,
                                              Rng& rng);
void resample_deltas(std::vector<TrainingPoint>& points, Rng& rng);

// `idx_x<TAB>idx_x'<TAB>jaccard<TAB>rating_gap` per line referencing dataset
// record indices (0-based, comment lines excluded).
void save_pairs(const std::string& path, const std::vector<PseudoPair>& pairs,
                const std::vector<std::string>& header_lines = {});
std::vector<PseudoPair> load_pairs(const std::string& path,
                                   const std::vector<RatedSentence>& dataset);

}  // namespace quase
