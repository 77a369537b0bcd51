#pragma once

#include <optional>
#include <string>
#include <vector>

#include "quase/corpus.hpp"
#include "quase/pairing.hpp"
#include "quase/rng.hpp"
#include "quase/tape.hpp"

namespace quase {

using ad::Mat;
using ad::Vec;

struct ModelConfig {
  int d_y = 16;  // outcome factor dim
  int d_z = 16;  // content factor dim
  int embedding_dim = 32;
  int hidden_dim = 64;
  int u_hidden_dim = 32;
  int vocab_size = 0;
  int max_decode_len = 24;

  void validate() const;
};

struct PosteriorGaussian {
  Vec mu;
  Vec sigma;  // strictly positive elementwise
};

struct LatentFactors {
  Vec y;
  Vec z;
};

struct LossWeights {
  double rec = 1.0;
  double kl = 0.0;
  double mse = 0.0;
  double diff = 0.0;
  double sim = 0.0;
  double d_rec = 0.0;
};

struct LossBundle {
  double rec = 0.0;
  double kl = 0.0;
  double mse = 0.0;
  double diff = 0.0;
  double sim = 0.0;
  double d_rec = 0.0;

  double joint(const LossWeights& w) const {
    return w.rec * rec + w.kl * kl + w.mse * mse + w.diff * diff + w.sim * sim +
           w.d_rec * d_rec;
  }
};

struct DecodeResult {
  Sentence sentence;
  std::vector<Vec> distributions;  // per-step softmax over the vocabulary
  bool truncated = false;          // no EOS within max_decode_len (free-running only)
};

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Gated recurrent cell parameters, gates fused as [reset; update; candidate].
struct GruParams {
  ad::Tensor w_x, b_x;  // 3H x E, 3H x 1
  ad::Tensor w_h, b_h;  // 3H x H, 3H x 1
};

struct EncoderParams {
  GruParams gru;
  ad::Tensor w_mu, b_mu;  // d x H, d x 1
  ad::Tensor w_ls, b_ls;  // log-sigma head
};

struct DecoderParams {
  GruParams gru;
  ad::Tensor w_init, b_init;  // H x (d_y + d_z), H x 1
  ad::Tensor w_out, b_out;    // V x H, V x 1
};

// The trainable networks (E1, E2, D, F, U) plus the shared embedding table,
// and the six loss terms combined by the joint objective.
class Model {
 public:
  Model(ModelConfig cfg, Vocabulary vocab, Rng& init_rng);

  // Deterministic evaluation-mode forwards (posterior means).
  PosteriorGaussian encode_outcome(const Sentence& x) const;  // E1
  PosteriorGaussian encode_content(const Sentence& x) const;  // E2
  LatentFactors factors(const Sentence& x) const;
  // Teacher forcing when `teacher` given; greedy decoding otherwise.
  DecodeResult decode(const Vec& y, const Vec& z, const Sentence* teacher = nullptr) const;
  DecodeResult decode_beam(const Vec& y, const Vec& z, int beam_width) const;
  double predict_outcome(const Vec& y) const;  // F
  Vec align_delta(const std::string& inc_tok, const std::string& dec_tok) const;  // U

  // Evaluation-mode loss values (posterior means, no sampling).
  double loss_rec(const Sentence& x) const;
  double loss_kl(const Sentence& x) const;
  double loss_mse(const Sentence& x, double rating) const;
  double loss_diff(const PseudoPair& pair, const std::string& inc_tok,
                   const std::string& dec_tok) const;
  double loss_sim(const PseudoPair& pair) const;
  double loss_dual(const PseudoPair& pair) const;
  LossBundle loss_bundle(const TrainingPoint& point) const;
  double loss_joint(const TrainingPoint& point, const LossWeights& w) const {
    return loss_bundle(point).joint(w);
  }

  // Training graph. When `noise_rng` is non-null the single-sentence ELBO
  // terms use one reparameterized sample; pair terms always use means.
  struct LossVars {
    ad::Var rec, kl, mse, diff, sim, d_rec, joint;
  };
  LossVars build_losses(ad::Tape& t, const TrainingPoint& point, const LossWeights& w,
                        Rng* noise_rng) const;
  LossBundle bundle_values(const ad::Tape& t, const LossVars& v) const;

  std::vector<ad::Tensor*> parameters();
  std::vector<const ad::Tensor*> parameters() const;

  const ModelConfig& config() const { return cfg_; }
  const Vocabulary& vocab() const { return vocab_; }

  // F is affine: predict_outcome(y) = outcome_weights()·y + outcome_bias().
  Vec outcome_weights() const { return f_w_.value.row(0).transpose(); }
  double outcome_bias() const { return f_b_.value(0, 0); }

  void save(const std::string& path, const std::string& config_hash,
            std::uint64_t seed) const;
  static Model load(const std::string& path, std::string* config_hash = nullptr,
                    std::uint64_t* seed = nullptr);

 private:
  struct Posterior {
    ad::Var mu;
    ad::Var log_sigma;  // invalid when sigma head skipped
  };

  std::vector<int> checked_ids(const Sentence& x) const;
  int embedding_row(const std::string& token) const;  // -1 for kNullToken
  ad::Var embed_token(ad::Tape& t, int row) const;
  ad::Var gru_step(ad::Tape& t, const GruParams& p, ad::Var x, ad::Var h) const;
  Posterior encode_on_tape(ad::Tape& t, const EncoderParams& enc,
                           const std::vector<int>& ids, bool need_sigma) const;
  ad::Var latent_from(ad::Tape& t, const Posterior& p, Rng* noise_rng) const;
  ad::Var decode_ce_on_tape(ad::Tape& t, ad::Var y, ad::Var z,
                            const std::vector<int>& target_ids) const;
  ad::Var kl_on_tape(ad::Tape& t, const Posterior& p, int dim) const;
  ad::Var predict_on_tape(ad::Tape& t, ad::Var y) const;
  ad::Var align_on_tape(ad::Tape& t, const std::string& inc_tok,
                        const std::string& dec_tok) const;
  ad::Var decoder_state0(ad::Tape& t, ad::Var y, ad::Var z) const;

  ModelConfig cfg_;
  Vocabulary vocab_;
  ad::Tensor embedding_;       // V x E, shared by E1, E2, D inputs, and U
  ad::Tensor null_embedding_;  // E x 1, learned stand-in for an empty delta side
  EncoderParams enc_y_, enc_z_;
  DecoderParams dec_;
  ad::Tensor f_w_, f_b_;                    // F
  ad::Tensor u_w1_, u_b1_, u_w2_, u_b2_;    // U
};

// Closed-form KL(G(mu, sigma) || G(0, I)) for one diagonal Gaussian.
double kl_standard_normal(const Vec& mu, const Vec& sigma);

}  // namespace quase
