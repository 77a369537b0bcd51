#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "quase/corpus.hpp"
#include "quase/editing.hpp"
#include "quase/model.hpp"

namespace quase {

double mae(const std::vector<double>& ratings, double target);

// Token-level Levenshtein distance (insert/delete/substitute, unit cost).
int edit_distance(const Sentence& a, const Sentence& b);

enum class TransferDirection { kNegToPos, kPosToNeg };

// Fraction of edited ratings strictly on the target side of 3.
double polarity_accuracy(const std::vector<double>& edited_ratings,
                         TransferDirection direction);

struct EvalReport {
  std::vector<double> targets;
  std::map<double, double> mae_by_target;
  std::map<double, double> original_mae_by_target;
  std::map<double, double> edit_distance_by_target;
  double accuracy_neg_to_pos = 0.0;
  double accuracy_pos_to_neg = 0.0;
  int neg_to_pos_count = 0;
  int pos_to_neg_count = 0;
  int sample_count = 0;
};

struct EvalOptions {
  std::vector<double> targets{1, 2, 3, 4, 5};
  double log_tau = -100000.0;
  SearchParams search;
  int beam_width = 1;
  int max_sentences = 0;  // 0 = all
};

// Edits every test sentence toward every target; edited sentences are scored
// with the same scorer that produced the training ratings.
EvalReport evaluate(const Model& model, const std::vector<RatedSentence>& test_set,
                    const RatingScorer& scorer, const EvalOptions& options);

std::string report_human(const EvalReport& r);
// Machine-readable rows: `metric<TAB>target<TAB>value`.
std::string report_machine(const EvalReport& r);

struct AblationRow {
  std::string label;       // e.g. "none", "sim", "sim+diff", "all"
  bool use_sim = false;
  bool use_diff = false;
  bool use_d_rec = false;
};

// The power set of {sim, diff, d_rec} in the reporting order none..all.
std::vector<AblationRow> ablation_rows();

struct AblationCell {
  bool ok = false;
  std::string error;
  std::map<double, double> mae_by_target;
};

struct AblationTable {
  std::vector<double> targets{1, 3, 5};
  std::vector<std::pair<AblationRow, AblationCell>> rows;
};

std::string ablation_human(const AblationTable& t);
std::string ablation_machine(const AblationTable& t);

}  // namespace quase
