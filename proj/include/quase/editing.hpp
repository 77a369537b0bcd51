#pragma once

#include <string>

#include "quase/model.hpp"

namespace quase {

enum class TargetKind { kValue, kMax, kMin };

struct SearchParams {
  double step_size = 0.1;
  double eps_target = 0.01;
  int max_iters = 500;
};

struct EditRequest {
  Sentence x0;
  TargetKind kind = TargetKind::kValue;
  double target = 3.0;          // in [1, 5] when kind == kValue
  double log_tau = -100000.0;   // exp(-100000) underflows, so tau lives in log space
  Vec sigma_test;               // empty means the identity default
  SearchParams search;
  int beam_width = 1;

  void validate(int d_y) const;
};

struct SearchResult {
  Vec y_star;
  int iterations = 0;
  bool feasible = false;
};

struct EditResult {
  Sentence x_star;
  Vec y_star;
  double predicted_outcome = 0.0;
  int iterations = 0;
  bool feasible = false;
  bool truncated = false;  // greedy decode hit max length without EOS
};

// Log of the diagonal Gaussian density.
double log_density(const Vec& y, const Vec& mu, const Vec& sigma);

// Gradient descent on (F(Y) - R*)^2 from y0 (or on -F / F for the MAX/MIN
// sentinels), projecting back onto the log-density boundary along the line to
// y0 whenever an iterate leaves the feasible range. Never worsens the
// objective.
SearchResult search_latent(const Model& model, const Vec& y0, const EditRequest& request);

// Y0/Z0 are posterior means; the content factor passes through unchanged.
EditResult edit(const Model& model, const EditRequest& request);

}  // namespace quase
