#pragma once

#include <limits>
#include <string>
#include <vector>

#include "quase/editing.hpp"
#include "quase/model.hpp"
#include "quase/pairing.hpp"

namespace quase {

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Adam with global gradient-norm clipping.
class AdamOptimizer {
 public:
  AdamOptimizer(std::vector<ad::Tensor*> params, double learning_rate,
                double grad_clip = 0.0);
  void zero_grad();
  double clip();  // returns pre-clip global norm
  void step();

 private:
  std::vector<ad::Tensor*> params_;
  std::vector<Mat> m_, v_;
  double lr_, clip_, beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  long t_ = 0;
};

double sigmoid_ramp(double step, double midpoint, double steepness);

struct AnnealSchedule {
  double midpoint = 0.0;   // steps relative to stage-2 start
  double steepness = 0.0;  // > 0
  LossWeights targets;     // ramp targets for kl/diff/sim/d_rec
  double stagger = 0.0;    // per-loss midpoint offset
  // Activation order over {"kl","diff","sim","d_rec"}; index scales stagger.
  std::vector<std::string> order{"kl", "diff", "sim", "d_rec"};
};

struct TrainState {
  int epoch = 0;
  long step = 0;
  LossWeights weights;
  double best_val_mae = std::numeric_limits<double>::infinity();
  long best_step = -1;
  bool frozen_kl = false, frozen_diff = false, frozen_sim = false, frozen_d_rec = false;
};

// Stage-2 weight trajectory with degradation-triggered freezing.
class WeightController {
 public:
  WeightController(LossWeights stage1, AnnealSchedule schedule);
  LossWeights weights_at(long stage2_step) const;
  // Freezes every still-ramping annealed loss at its current value.
  void freeze(long stage2_step);
  bool frozen(const std::string& loss) const;
  const AnnealSchedule& schedule() const { return schedule_; }

 private:
  double ramp(const std::string& loss, long stage2_step) const;
  LossWeights stage1_;
  AnnealSchedule schedule_;
  std::vector<std::string> frozen_losses_;
  LossWeights frozen_values_;
};

// Consecutive-degradation detector over smoothed validation losses.
class DegradationMonitor {
 public:
  DegradationMonitor(double eps_deg, int patience, double smooth_factor);
  // Returns true when either tracked loss has degraded beyond tolerance for
  // `patience` consecutive observations.
  bool observe(double val_rec, double val_mse);

 private:
  struct Track {
    double smoothed = std::numeric_limits<double>::quiet_NaN();
    double best = std::numeric_limits<double>::infinity();
    int bad_streak = 0;
  };
  bool observe_one(Track& t, double value);
  double eps_deg_;
  int patience_;
  double alpha_;
  Track rec_, mse_;
};

struct TrainOptions {
  LossWeights stage1{0.75, 0.0, 0.25, 0.0, 0.0, 0.0};
  AnnealSchedule schedule;  // targets default to the tuned final weights
  int stage1_epochs = 10;
  int stage2_epochs = 20;
  int batch_size = 16;
  double learning_rate = 1e-3;
  double grad_clip = 5.0;
  int eval_every = 200;  // optimizer steps between validation passes
  int val_probe_count = 20;
  int val_loss_count = 40;
  double eps_deg = 0.02;
  int patience = 3;
  double smooth_factor = 0.5;
  bool sample_latents = true;
  std::uint64_t seed = 42;
  std::string log_path;         // optional append-only loss log
  std::string checkpoint_path;  // optional best-checkpoint file
  std::string config_hash;
  std::vector<double> probe_targets{1.0, 3.0, 5.0};
  SearchParams probe_search;
  double probe_log_tau = -100000.0;
};

struct EvalPoint {
  long step = 0;
  double val_rec = 0.0, val_mse = 0.0, val_sim = 0.0, val_d_rec = 0.0, val_mae = 0.0;
  LossWeights weights;
};

struct TrainResult {
  TrainState state;
  std::vector<EvalPoint> history;
  bool checkpoint_written = false;
};

// Two-stage minibatch optimization of the joint loss. The model is left
// holding the best-validation-MAE parameters, which are also written to
// options.checkpoint_path when set.
TrainResult train(Model& model, const std::vector<RatedSentence>& train_set,
                  const std::vector<PseudoPair>& pairs,
                  const std::vector<RatedSentence>& val_set, const RatingScorer& scorer,
                  const TrainOptions& options);

// Grid search over lambda_rec with lambda_mse = 1 - lambda_rec and the other
// four weights at zero; returns the grid point minimizing validation MAE.
LossWeights stage1_tune(const ModelConfig& model_config, const Vocabulary& vocab,
                        const std::vector<RatedSentence>& train_set,
                        const std::vector<PseudoPair>& pairs,
                        const std::vector<RatedSentence>& val_set,
                        const RatingScorer& scorer, const TrainOptions& base_options,
                        const std::vector<double>& lambda_rec_grid);

void validate_stage1_weights(const LossWeights& w);

}  // namespace quase
