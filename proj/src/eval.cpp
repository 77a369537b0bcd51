#include "quase/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace quase {

double mae(const std::vector<double>& ratings, double target) {
  if (ratings.empty()) throw std::invalid_argument("mae: empty rating list");
  double sum = 0.0;
  for (double r : ratings) sum += std::abs(r - target);
  return sum / static_cast<double>(ratings.size());
}

int edit_distance(const Sentence& a, const Sentence& b) {
  const auto& s = a.tokens;
  const auto& t = b.tokens;
  const std::size_t n = s.size(), m = t.size();
  std::vector<int> prev(m + 1), cur(m + 1);
  std::iota(prev.begin(), prev.end(), 0);
  for (std::size_t i = 1; i <= n; ++i) {
    cur[0] = static_cast<int>(i);
    for (std::size_t j = 1; j <= m; ++j) {
      const int sub = prev[j - 1] + (s[i - 1] == t[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

double polarity_accuracy(const std::vector<double>& edited_ratings,
                         TransferDirection direction) {
  if (edited_ratings.empty()) {
    throw std::invalid_argument("polarity_accuracy: empty rating list");
  }
  int hits = 0;
  for (double r : edited_ratings) {
    if (direction == TransferDirection::kNegToPos ? r > 3.0 : r < 3.0) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(edited_ratings.size());
}

EvalReport evaluate(const Model& model, const std::vector<RatedSentence>& test_set,
                    const RatingScorer& scorer, const EvalOptions& options) {
  EvalReport report;
  report.targets = options.targets;
  std::size_t n = test_set.size();
  if (options.max_sentences > 0) {
    n = std::min(n, static_cast<std::size_t>(options.max_sentences));
  }
  report.sample_count = static_cast<int>(n);

  std::vector<double> neg_to_pos, pos_to_neg;
  const bool has_low = std::find(options.targets.begin(), options.targets.end(), 1.0) !=
                       options.targets.end();
  const bool has_high = std::find(options.targets.begin(), options.targets.end(), 5.0) !=
                        options.targets.end();

  for (double target : options.targets) {
    std::vector<double> edited_ratings;
    std::vector<double> original_err;
    double dist_sum = 0.0;
    edited_ratings.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      const RatedSentence& item = test_set[i];
      EditRequest req;
      req.x0 = item.sentence;
      req.kind = TargetKind::kValue;
      req.target = target;
      req.log_tau = options.log_tau;
      req.search = options.search;
      req.beam_width = options.beam_width;
      const EditResult result = edit(model, req);
      const double rating = result.x_star.tokens.empty()
                                ? 3.0
                                : score_sentence(scorer, result.x_star);
      edited_ratings.push_back(rating);
      original_err.push_back(item.rating);
      dist_sum += edit_distance(item.sentence, result.x_star);

      if (target == 5.0 && has_high && item.rating < 3.0) neg_to_pos.push_back(rating);
      if (target == 1.0 && has_low && item.rating > 3.0) pos_to_neg.push_back(rating);
    }
    report.mae_by_target[target] = mae(edited_ratings, target);
    report.original_mae_by_target[target] = mae(original_err, target);
    report.edit_distance_by_target[target] = dist_sum / static_cast<double>(n);
  }

  report.neg_to_pos_count = static_cast<int>(neg_to_pos.size());
  report.pos_to_neg_count = static_cast<int>(pos_to_neg.size());
  if (!neg_to_pos.empty()) {
    report.accuracy_neg_to_pos = polarity_accuracy(neg_to_pos, TransferDirection::kNegToPos);
  }
  if (!pos_to_neg.empty()) {
    report.accuracy_pos_to_neg = polarity_accuracy(pos_to_neg, TransferDirection::kPosToNeg);
  }
  return report;
}

std::string report_human(const EvalReport& r) {
  std::ostringstream os;
  os << "target      MAE  original-MAE  edit-distance\n";
  for (double t : r.targets) {
    char line[128];
    std::snprintf(line, sizeof line, "%6.2f  %7.4f  %12.4f  %13.4f\n", t,
                  r.mae_by_target.at(t), r.original_mae_by_target.at(t),
                  r.edit_distance_by_target.at(t));
    os << line;
  }
  char acc[160];
  std::snprintf(acc, sizeof acc,
                "polarity accuracy: neg->pos %.4f (n=%d), pos->neg %.4f (n=%d)\n",
                r.accuracy_neg_to_pos, r.neg_to_pos_count, r.accuracy_pos_to_neg,
                r.pos_to_neg_count);
  os << acc;
  os << "sentences evaluated: " << r.sample_count << "\n";
  return os.str();
}

std::string report_machine(const EvalReport& r) {
  std::ostringstream os;
  for (double t : r.targets) {
    os << "mae\t" << format_double(t) << '\t' << format_double(r.mae_by_target.at(t)) << "\n";
  }
  for (double t : r.targets) {
    os << "original_mae\t" << format_double(t) << '\t'
       << format_double(r.original_mae_by_target.at(t)) << "\n";
  }
  for (double t : r.targets) {
    os << "edit_distance\t" << format_double(t) << '\t'
       << format_double(r.edit_distance_by_target.at(t)) << "\n";
  }
  os << "accuracy_neg_to_pos\t-\t" << format_double(r.accuracy_neg_to_pos) << "\n";
  os << "accuracy_pos_to_neg\t-\t" << format_double(r.accuracy_pos_to_neg) << "\n";
  os << "neg_to_pos_count\t-\t" << r.neg_to_pos_count << "\n";
  os << "pos_to_neg_count\t-\t" << r.pos_to_neg_count << "\n";
  os << "sample_count\t-\t" << r.sample_count << "\n";
  return os.str();
}

std::vector<AblationRow> ablation_rows() {
  std::vector<AblationRow> rows;
  for (int mask = 0; mask < 8; ++mask) {
    AblationRow row;
    row.use_sim = mask & 1;
    row.use_diff = mask & 2;
    row.use_d_rec = mask & 4;
    std::vector<std::string> parts;
    if (row.use_sim) parts.push_back("sim");
    if (row.use_diff) parts.push_back("diff");
    if (row.use_d_rec) parts.push_back("d_rec");
    if (parts.empty()) {
      row.label = "none";
    } else if (parts.size() == 3) {
      row.label = "all";
    } else {
      std::string label;
      for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) label += "+";
        label += parts[i];
      }
      row.label = label;
    }
    rows.push_back(row);
  }
  // Reporting order: none, single losses, pairs, all.
  std::stable_sort(rows.begin(), rows.end(), [](const AblationRow& a, const AblationRow& b) {
    const int na = a.use_sim + a.use_diff + a.use_d_rec;
    const int nb = b.use_sim + b.use_diff + b.use_d_rec;
    return na < nb;
  });
  return rows;
}

std::string ablation_human(const AblationTable& t) {
  std::ostringstream os;
  os << "losses            ";
  for (double target : t.targets) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "   T=%g", target);
    os << buf;
  }
  os << "\n";
  for (const auto& [row, cell] : t.rows) {
    char name[64];
    std::snprintf(name, sizeof name, "%-16s", row.label.c_str());
    os << name;
    if (!cell.ok) {
      os << "  error: " << cell.error;
    } else {
      for (double target : t.targets) {
        char buf[32];
        std::snprintf(buf, sizeof buf, " %7.4f", cell.mae_by_target.at(target));
        os << buf;
      }
    }
    os << "\n";
  }
  return os.str();
}

std::string ablation_machine(const AblationTable& t) {
  std::ostringstream os;
  for (const auto& [row, cell] : t.rows) {
    os << row.label;
    for (double target : t.targets) {
      os << '\t';
      if (cell.ok) {
        os << format_double(cell.mae_by_target.at(target));
      } else {
        os << "error";
      }
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace quase
