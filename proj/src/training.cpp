#include "quase/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace quase {

AdamOptimizer::AdamOptimizer(std::vector<ad::Tensor*> params, double learning_rate,
                             double grad_clip)
    : params_(std::move(params)), lr_(learning_rate), clip_(grad_clip) {
  for (const ad::Tensor* p : params_) {
    m_.push_back(Mat::Zero(p->value.rows(), p->value.cols()));
    v_.push_back(Mat::Zero(p->value.rows(), p->value.cols()));
  }
}

void AdamOptimizer::zero_grad() {
  for (ad::Tensor* p : params_) p->zero_grad();
}

double AdamOptimizer::clip() {
  double sq = 0.0;
  for (const ad::Tensor* p : params_) sq += p->grad.squaredNorm();
  const double norm = std::sqrt(sq);
  if (clip_ > 0.0 && norm > clip_) {
    const double scale = clip_ / norm;
    for (ad::Tensor* p : params_) p->grad *= scale;
  }
  return norm;
}

void AdamOptimizer::step() {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    ad::Tensor& p = *params_[i];
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * p.grad;
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * p.grad.cwiseProduct(p.grad);
    const Mat m_hat = m_[i] / bc1;
    const Mat v_hat = v_[i] / bc2;
    p.value.array() -= lr_ * m_hat.array() / (v_hat.array().sqrt() + eps_);
  }
}

double sigmoid_ramp(double step, double midpoint, double steepness) {
  return 1.0 / (1.0 + std::exp(-steepness * (step - midpoint)));
}

WeightController::WeightController(LossWeights stage1, AnnealSchedule schedule)
    : stage1_(stage1), schedule_(std::move(schedule)) {
  validate_stage1_weights(stage1_);
  if (schedule_.steepness <= 0.0) {
    throw TrainingError("anneal schedule: steepness must be positive");
  }
}

double WeightController::ramp(const std::string& loss, long stage2_step) const {
  double target = 0.0;
  if (loss == "kl") target = schedule_.targets.kl;
  else if (loss == "diff") target = schedule_.targets.diff;
  else if (loss == "sim") target = schedule_.targets.sim;
  else if (loss == "d_rec") target = schedule_.targets.d_rec;
  int order_index = 0;
  for (std::size_t i = 0; i < schedule_.order.size(); ++i) {
    if (schedule_.order[i] == loss) order_index = static_cast<int>(i);
  }
  const double midpoint = schedule_.midpoint + order_index * schedule_.stagger;
  return target * sigmoid_ramp(static_cast<double>(stage2_step), midpoint,
                               schedule_.steepness);
}

LossWeights WeightController::weights_at(long stage2_step) const {
  LossWeights w = stage1_;
  w.kl = frozen("kl") ? frozen_values_.kl : ramp("kl", stage2_step);
  w.diff = frozen("diff") ? frozen_values_.diff : ramp("diff", stage2_step);
  w.sim = frozen("sim") ? frozen_values_.sim : ramp("sim", stage2_step);
  w.d_rec = frozen("d_rec") ? frozen_values_.d_rec : ramp("d_rec", stage2_step);
  return w;
}

void WeightController::freeze(long stage2_step) {
  for (const char* loss : {"kl", "diff", "sim", "d_rec"}) {
    if (frozen(loss)) continue;
    const double value = ramp(loss, stage2_step);
    if (std::string(loss) == "kl") frozen_values_.kl = value;
    else if (std::string(loss) == "diff") frozen_values_.diff = value;
    else if (std::string(loss) == "sim") frozen_values_.sim = value;
    else frozen_values_.d_rec = value;
    frozen_losses_.push_back(loss);
  }
}

bool WeightController::frozen(const std::string& loss) const {
  return std::find(frozen_losses_.begin(), frozen_losses_.end(), loss) !=
         frozen_losses_.end();
}

DegradationMonitor::DegradationMonitor(double eps_deg, int patience, double smooth_factor)
    : eps_deg_(eps_deg), patience_(patience), alpha_(smooth_factor) {
  if (patience_ < 1) throw TrainingError("degradation monitor: patience must be >= 1");
  if (alpha_ <= 0.0 || alpha_ > 1.0) {
    throw TrainingError("degradation monitor: smooth factor must be in (0, 1]");
  }
}

bool DegradationMonitor::observe_one(Track& t, double value) {
  t.smoothed = std::isnan(t.smoothed) ? value : alpha_ * value + (1.0 - alpha_) * t.smoothed;
  if (t.smoothed > t.best * (1.0 + eps_deg_)) {
    ++t.bad_streak;
  } else {
    t.bad_streak = 0;
  }
  t.best = std::min(t.best, t.smoothed);
  return t.bad_streak >= patience_;
}

bool DegradationMonitor::observe(double val_rec, double val_mse) {
  const bool rec_bad = observe_one(rec_, val_rec);
  const bool mse_bad = observe_one(mse_, val_mse);
  return rec_bad || mse_bad;
}

void validate_stage1_weights(const LossWeights& w) {
  auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!in_unit(w.rec) || !in_unit(w.mse) || std::abs(w.rec + w.mse - 1.0) > 1e-9) {
    throw TrainingError("stage-1 weights: lambda_rec + lambda_mse must equal 1");
  }
  if (w.kl != 0.0 || w.diff != 0.0 || w.sim != 0.0 || w.d_rec != 0.0) {
    throw TrainingError("stage-1 weights: annealed losses must start at zero");
  }
}

namespace {

struct ValidationStats {
  double rec = 0.0, mse = 0.0, sim = 0.0, d_rec = 0.0, mae = 0.0;
};

ValidationStats validate_model(const Model& model,
                               const std::vector<RatedSentence>& val_set,
                               const std::vector<PseudoPair>& probe_pairs,
                               const RatingScorer& scorer, const TrainOptions& opts) {
  ValidationStats s;
  const std::size_t n_loss =
      std::min(val_set.size(), static_cast<std::size_t>(opts.val_loss_count));
  for (std::size_t i = 0; i < n_loss; ++i) {
    s.rec += model.loss_rec(val_set[i].sentence);
    s.mse += model.loss_mse(val_set[i].sentence, val_set[i].rating);
  }
  if (n_loss > 0) {
    s.rec /= static_cast<double>(n_loss);
    s.mse /= static_cast<double>(n_loss);
  }
  for (const PseudoPair& p : probe_pairs) {
    s.sim += model.loss_sim(p);
    s.d_rec += model.loss_dual(p);
  }
  if (!probe_pairs.empty()) {
    s.sim /= static_cast<double>(probe_pairs.size());
    s.d_rec /= static_cast<double>(probe_pairs.size());
  }

  const std::size_t n_probe =
      std::min(val_set.size(), static_cast<std::size_t>(opts.val_probe_count));
  std::vector<double> errors;
  for (std::size_t i = 0; i < n_probe; ++i) {
    for (double target : opts.probe_targets) {
      EditRequest req;
      req.x0 = val_set[i].sentence;
      req.kind = TargetKind::kValue;
      req.target = target;
      req.log_tau = opts.probe_log_tau;
      req.search = opts.probe_search;
      const EditResult r = edit(model, req);
      const double rating =
          r.x_star.tokens.empty() ? 3.0 : score_sentence(scorer, r.x_star);
      errors.push_back(std::abs(rating - target));
    }
  }
  if (!errors.empty()) {
    double sum = 0.0;
    for (double e : errors) sum += e;
    s.mae = sum / static_cast<double>(errors.size());
  }
  return s;
}

class LossLog {
 public:
  LossLog(const std::string& path, const std::string& config_hash, std::uint64_t seed) {
    if (path.empty()) return;
    out_.open(path, std::ios::binary);
    if (!out_) throw TrainingError("train: cannot open log " + path);
    out_ << "# quase training log v1\n";
    out_ << "# config_hash=" << config_hash << " seed=" << seed << "\n";
  }
  void record(long step, const char* name, double value) {
    if (!out_.is_open()) return;
    out_ << step << '\t' << name << '\t' << format_double(value) << "\n";
  }
  void flush() {
    if (out_.is_open()) out_.flush();
  }

 private:
  std::ofstream out_;
};

std::vector<Mat> snapshot(const std::vector<const ad::Tensor*>& params) {
  std::vector<Mat> values;
  values.reserve(params.size());
  for (const ad::Tensor* p : params) values.push_back(p->value);
  return values;
}

void restore(std::vector<ad::Tensor*>& params, const std::vector<Mat>& values) {
  for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = values[i];
}

std::string nan_diagnostic(const Model& model, long step, int epoch,
                           const LossBundle& bundle) {
  std::ostringstream os;
  os << "non-finite loss at step " << step << " epoch " << epoch << "; rec=" << bundle.rec
     << " kl=" << bundle.kl << " mse=" << bundle.mse << " diff=" << bundle.diff
     << " sim=" << bundle.sim << " d_rec=" << bundle.d_rec << "; parameter norms:";
  for (const ad::Tensor* p : model.parameters()) {
    os << ' ' << p->name << '=' << p->value.norm();
  }
  return os.str();
}

}  // namespace

TrainResult train(Model& model, const std::vector<RatedSentence>& train_set,
                  const std::vector<PseudoPair>& pairs,
                  const std::vector<RatedSentence>& val_set, const RatingScorer& scorer,
                  const TrainOptions& options) {
  validate_stage1_weights(options.stage1);
  if (train_set.empty()) throw TrainingError("train: empty training set");
  if (options.batch_size < 1) throw TrainingError("train: batch size must be >= 1");

  const bool pair_mode = !pairs.empty();
  const bool needs_pairs = options.schedule.targets.diff > 0.0 ||
                           options.schedule.targets.sim > 0.0 ||
                           options.schedule.targets.d_rec > 0.0;
  if (!pair_mode && needs_pairs && options.stage2_epochs > 0) {
    throw TrainingError("train: pair losses requested but no pairs available");
  }

  // Base points: one per pair, or one per single sentence when no pairs exist.
  Rng compose_rng = Rng::substream(options.seed, "compose");
  std::vector<TrainingPoint> points;
  if (pair_mode) {
    points = compose_datapoints(train_set, pairs, compose_rng);
  } else {
    points.reserve(train_set.size());
    for (const RatedSentence& r : train_set) {
      TrainingPoint tp;
      tp.single = r;
      points.push_back(std::move(tp));
    }
  }

  const long steps_per_epoch =
      (static_cast<long>(points.size()) + options.batch_size - 1) / options.batch_size;
  const long stage1_steps = steps_per_epoch * options.stage1_epochs;
  const long stage2_steps = steps_per_epoch * options.stage2_epochs;

  AnnealSchedule schedule = options.schedule;
  if (schedule.steepness <= 0.0) {
    schedule.steepness = stage2_steps > 0 ? 10.0 / static_cast<double>(stage2_steps) : 1.0;
  }
  if (schedule.midpoint <= 0.0) {
    schedule.midpoint = 0.4 * static_cast<double>(stage2_steps);
  }
  WeightController controller(options.stage1, schedule);
  DegradationMonitor monitor(options.eps_deg, options.patience, options.smooth_factor);

  // Fixed probe pairs for raw pair-loss tracking.
  std::vector<PseudoPair> probe_pairs;
  for (std::size_t i = 0; i < pairs.size() && i < 16; ++i) probe_pairs.push_back(pairs[i]);

  auto params = model.parameters();
  AdamOptimizer optimizer(params, options.learning_rate, options.grad_clip);
  Rng noise_rng = Rng::substream(options.seed, "sampling");
  LossLog log(options.log_path, options.config_hash, options.seed);

  TrainResult result;
  TrainState& state = result.state;
  state.weights = options.stage1;
  std::vector<Mat> best_params = snapshot(model.parameters());
  bool degraded = false;

  const int total_epochs = options.stage1_epochs + options.stage2_epochs;
  ad::Tape tape;

  auto run_validation = [&](long step) {
    const ValidationStats vs =
        validate_model(model, val_set, probe_pairs, scorer, options);
    log.record(step, "val_rec", vs.rec);
    log.record(step, "val_mse", vs.mse);
    log.record(step, "val_sim", vs.sim);
    log.record(step, "val_d_rec", vs.d_rec);
    log.record(step, "val_mae", vs.mae);
    EvalPoint ep;
    ep.step = step;
    ep.val_rec = vs.rec;
    ep.val_mse = vs.mse;
    ep.val_sim = vs.sim;
    ep.val_d_rec = vs.d_rec;
    ep.val_mae = vs.mae;
    ep.weights = state.weights;
    result.history.push_back(ep);

    if (vs.mae < state.best_val_mae) {
      state.best_val_mae = vs.mae;
      state.best_step = step;
      best_params = snapshot(model.parameters());
    }
    const bool in_stage2 = step >= stage1_steps;
    if (in_stage2 && !degraded && monitor.observe(vs.rec, vs.mse)) {
      degraded = true;
      controller.freeze(step - stage1_steps);
      log.record(step, "anneal_frozen", 1.0);
    }
  };

  for (int epoch = 0; epoch < total_epochs; ++epoch) {
    state.epoch = epoch;
    // Per-epoch delta resampling and point order.
    Rng delta_rng = Rng::substream(options.seed, "delta:" + std::to_string(epoch));
    resample_deltas(points, delta_rng);
    std::vector<int> order(points.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    Rng batch_rng = Rng::substream(options.seed, "batch:" + std::to_string(epoch));
    batch_rng.shuffle(order);

    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(options.batch_size)) {
      const std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(options.batch_size));
      const bool in_stage2 = state.step >= stage1_steps;
      state.weights = in_stage2 ? controller.weights_at(state.step - stage1_steps)
                                : options.stage1;
      if (!in_stage2) validate_stage1_weights(state.weights);

      optimizer.zero_grad();
      LossBundle batch_mean;
      const double inv = 1.0 / static_cast<double>(end - start);
      for (std::size_t k = start; k < end; ++k) {
        const TrainingPoint& point = points[static_cast<std::size_t>(order[k])];
        tape.clear();
        const Model::LossVars lv = model.build_losses(
            tape, point, state.weights, options.sample_latents ? &noise_rng : nullptr);
        const LossBundle b = model.bundle_values(tape, lv);
        const bool finite = std::isfinite(b.rec) && std::isfinite(b.kl) &&
                            std::isfinite(b.mse) && std::isfinite(b.diff) &&
                            std::isfinite(b.sim) && std::isfinite(b.d_rec);
        if (!finite) {
          const std::string diag = nan_diagnostic(model, state.step, epoch, b);
          log.record(state.step, "abort", 1.0);
          log.flush();
          throw TrainingError("train: " + diag);
        }
        batch_mean.rec += inv * b.rec;
        batch_mean.kl += inv * b.kl;
        batch_mean.mse += inv * b.mse;
        batch_mean.diff += inv * b.diff;
        batch_mean.sim += inv * b.sim;
        batch_mean.d_rec += inv * b.d_rec;
        tape.backward(tape.scale(lv.joint, inv));
      }
      optimizer.clip();
      optimizer.step();

      log.record(state.step, "rec", batch_mean.rec);
      log.record(state.step, "kl", batch_mean.kl);
      log.record(state.step, "mse", batch_mean.mse);
      log.record(state.step, "diff", batch_mean.diff);
      log.record(state.step, "sim", batch_mean.sim);
      log.record(state.step, "d_rec", batch_mean.d_rec);
      log.record(state.step, "joint", batch_mean.joint(state.weights));

      ++state.step;
      if (options.eval_every > 0 && state.step % options.eval_every == 0) {
        run_validation(state.step);
      }
    }
  }

  // Final validation to catch late improvements.
  if (state.step > 0 &&
      (result.history.empty() || result.history.back().step != state.step)) {
    run_validation(state.step);
  }

  state.frozen_kl = controller.frozen("kl");
  state.frozen_diff = controller.frozen("diff");
  state.frozen_sim = controller.frozen("sim");
  state.frozen_d_rec = controller.frozen("d_rec");

  restore(params, best_params);
  if (!options.checkpoint_path.empty()) {
    model.save(options.checkpoint_path, options.config_hash, options.seed);
    result.checkpoint_written = true;
  }
  log.flush();
  return result;
}

LossWeights stage1_tune(const ModelConfig& model_config, const Vocabulary& vocab,
                        const std::vector<RatedSentence>& train_set,
                        const std::vector<PseudoPair>& pairs,
                        const std::vector<RatedSentence>& val_set,
                        const RatingScorer& scorer, const TrainOptions& base_options,
                        const std::vector<double>& lambda_rec_grid) {
  if (lambda_rec_grid.empty()) throw TrainingError("stage1_tune: empty grid");
  double best_mae = std::numeric_limits<double>::infinity();
  LossWeights best;
  bool first = true;
  for (double lambda_rec : lambda_rec_grid) {
    if (lambda_rec < 0.0 || lambda_rec > 1.0) {
      throw TrainingError("stage1_tune: lambda_rec outside [0, 1]");
    }
    TrainOptions opts = base_options;
    opts.stage1 = LossWeights{lambda_rec, 0.0, 1.0 - lambda_rec, 0.0, 0.0, 0.0};
    opts.stage2_epochs = 0;
    opts.checkpoint_path.clear();
    opts.log_path.clear();
    Rng init_rng = Rng::substream(base_options.seed, "init");
    Model candidate(model_config, vocab, init_rng);
    const TrainResult r = train(candidate, train_set, pairs, val_set, scorer, opts);
    if (first || r.state.best_val_mae < best_mae) {
      best_mae = r.state.best_val_mae;
      best = opts.stage1;
      first = false;
    }
  }
  return best;
}

}  // namespace quase
