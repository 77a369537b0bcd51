#include "quase/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace quase {

namespace {

constexpr char kMagic[4] = {'Q', 'S', 'C', 'K'};
constexpr std::uint32_t kCheckpointVersion = 1;

void fill_uniform(ad::Tensor& t, double scale, Rng& rng) {
  for (Eigen::Index c = 0; c < t.value.cols(); ++c) {
    for (Eigen::Index r = 0; r < t.value.rows(); ++r) {
      t.value(r, c) = rng.uniform(-scale, scale);
    }
  }
}

Vec softmax(const Mat& logits) {
  Vec v = logits.col(0);
  const double m = v.maxCoeff();
  Vec e = (v.array() - m).exp();
  return e / e.sum();
}

int argmax(const Vec& v) {
  Eigen::Index i;
  v.maxCoeff(&i);
  return static_cast<int>(i);
}

}  // namespace

void ModelConfig::validate() const {
  auto positive = [](int v, const char* name) {
    if (v <= 0) throw ModelError(std::string("model config: ") + name + " must be positive");
  };
  positive(d_y, "d_y");
  positive(d_z, "d_z");
  positive(embedding_dim, "embedding_dim");
  positive(hidden_dim, "hidden_dim");
  positive(u_hidden_dim, "u_hidden_dim");
  positive(max_decode_len, "max_decode_len");
  if (vocab_size < Vocabulary::kReserved) {
    throw ModelError("model config: vocab_size below reserved block");
  }
}

Model::Model(ModelConfig cfg, Vocabulary vocab, Rng& init_rng)
    : cfg_(cfg), vocab_(std::move(vocab)) {
  cfg_.vocab_size = vocab_.size();
  cfg_.validate();
  const int E = cfg_.embedding_dim;
  const int H = cfg_.hidden_dim;
  const int V = cfg_.vocab_size;
  const int Hu = cfg_.u_hidden_dim;

  auto make = [&](ad::Tensor& t, const char* name, int r, int c, double scale) {
    t = ad::Tensor(name, r, c);
    if (scale > 0) fill_uniform(t, scale, init_rng);
  };
  auto make_gru = [&](GruParams& g, const std::string& prefix) {
    make(g.w_x, (prefix + ".w_x").c_str(), 3 * H, E, 1.0 / std::sqrt(E));
    make(g.b_x, (prefix + ".b_x").c_str(), 3 * H, 1, 0.0);
    make(g.w_h, (prefix + ".w_h").c_str(), 3 * H, H, 1.0 / std::sqrt(H));
    make(g.b_h, (prefix + ".b_h").c_str(), 3 * H, 1, 0.0);
  };
  auto make_encoder = [&](EncoderParams& e, const std::string& prefix, int d) {
    make_gru(e.gru, prefix + ".gru");
    make(e.w_mu, (prefix + ".w_mu").c_str(), d, H, 1.0 / std::sqrt(H));
    make(e.b_mu, (prefix + ".b_mu").c_str(), d, 1, 0.0);
    make(e.w_ls, (prefix + ".w_ls").c_str(), d, H, 0.01);
    make(e.b_ls, (prefix + ".b_ls").c_str(), d, 1, 0.0);
    e.b_ls.value.setConstant(-2.0);  // start near-deterministic
  };

  make(embedding_, "embedding", V, E, 0.1);
  make(null_embedding_, "null_embedding", E, 1, 0.1);
  make_encoder(enc_y_, "enc_y", cfg_.d_y);
  make_encoder(enc_z_, "enc_z", cfg_.d_z);
  make_gru(dec_.gru, "dec.gru");
  make(dec_.w_init, "dec.w_init", H, cfg_.d_y + cfg_.d_z, 1.0 / std::sqrt(cfg_.d_y + cfg_.d_z));
  make(dec_.b_init, "dec.b_init", H, 1, 0.0);
  make(dec_.w_out, "dec.w_out", V, H, 1.0 / std::sqrt(H));
  make(dec_.b_out, "dec.b_out", V, 1, 0.0);
  make(f_w_, "f.w", 1, cfg_.d_y, 1.0 / std::sqrt(cfg_.d_y));
  make(f_b_, "f.b", 1, 1, 0.0);
  f_b_.value(0, 0) = 3.0;  // centre of the rating scale
  make(u_w1_, "u.w1", Hu, 2 * E, 1.0 / std::sqrt(2 * E));
  make(u_b1_, "u.b1", Hu, 1, 0.0);
  make(u_w2_, "u.w2", cfg_.d_y, Hu, 1.0 / std::sqrt(Hu));
  make(u_b2_, "u.b2", cfg_.d_y, 1, 0.0);
}

std::vector<int> Model::checked_ids(const Sentence& x) const {
  if (x.tokens.empty() && x.ids.empty()) throw ModelError("model: empty sentence");
  std::vector<int> ids = x.ids.empty() ? vocab_.to_ids(x.tokens) : x.ids;
  for (int id : ids) {
    if (id < 0 || id >= cfg_.vocab_size) {
      throw ModelError("model: token id " + std::to_string(id) +
                       " outside vocabulary of size " + std::to_string(cfg_.vocab_size));
    }
  }
  return ids;
}

int Model::embedding_row(const std::string& token) const {
  if (token == kNullToken) return -1;
  return vocab_.id(token);
}

ad::Var Model::embed_token(ad::Tape& t, int row) const {
  if (row < 0) return t.param(null_embedding_);
  return t.embed(embedding_, row);
}

ad::Var Model::gru_step(ad::Tape& t, const GruParams& p, ad::Var x, ad::Var h) const {
  const int H = cfg_.hidden_dim;
  const ad::Var gx = t.affine(p.w_x, p.b_x, x);
  const ad::Var gh = t.affine(p.w_h, p.b_h, h);
  const ad::Var r = t.sigmoid(t.add(t.rows(gx, 0, H), t.rows(gh, 0, H)));
  const ad::Var u = t.sigmoid(t.add(t.rows(gx, H, H), t.rows(gh, H, H)));
  const ad::Var n = t.tanh(t.add(t.rows(gx, 2 * H, H), t.cmul(r, t.rows(gh, 2 * H, H))));
  return t.add(t.cmul(u, h), t.cmul(t.one_minus(u), n));
}

Model::Posterior Model::encode_on_tape(ad::Tape& t, const EncoderParams& enc,
                                       const std::vector<int>& ids, bool need_sigma) const {
  ad::Var h = t.constant(Mat::Zero(cfg_.hidden_dim, 1));
  for (int id : ids) h = gru_step(t, enc.gru, embed_token(t, id), h);
  Posterior p;
  p.mu = t.affine(enc.w_mu, enc.b_mu, h);
  if (need_sigma) p.log_sigma = t.affine(enc.w_ls, enc.b_ls, h);
  return p;
}

ad::Var Model::latent_from(ad::Tape& t, const Posterior& p, Rng* noise_rng) const {
  if (noise_rng == nullptr) return p.mu;
  const auto dim = t.value(p.mu).rows();
  Mat eps(dim, 1);
  for (Eigen::Index i = 0; i < dim; ++i) eps(i, 0) = noise_rng->normal();
  return t.add(p.mu, t.cmul(t.exp(p.log_sigma), t.constant(std::move(eps))));
}

ad::Var Model::decoder_state0(ad::Tape& t, ad::Var y, ad::Var z) const {
  return t.affine(dec_.w_init, dec_.b_init, t.concat(y, z));
}

ad::Var Model::decode_ce_on_tape(ad::Tape& t, ad::Var y, ad::Var z,
                                 const std::vector<int>& target_ids) const {
  ad::Var h = decoder_state0(t, y, z);
  ad::Var total = t.scalar(0.0);
  int prev = Vocabulary::kBos;
  for (std::size_t pos = 0; pos <= target_ids.size(); ++pos) {
    const int target = pos < target_ids.size() ? target_ids[pos] : Vocabulary::kEos;
    h = gru_step(t, dec_.gru, embed_token(t, prev), h);
    const ad::Var logits = t.affine(dec_.w_out, dec_.b_out, h);
    total = t.add(total, t.softmax_cross_entropy(logits, target));
    prev = target;
  }
  return total;
}

ad::Var Model::kl_on_tape(ad::Tape& t, const Posterior& p, int dim) const {
  const ad::Var a = t.scale(t.sum_sq(p.mu), 0.5);
  const ad::Var b = t.scale(t.sum(t.exp(t.scale(p.log_sigma, 2.0))), 0.5);
  const ad::Var c = t.sum(p.log_sigma);
  return t.affine1(t.sub(t.add(a, b), c), 1.0, -0.5 * dim);
}

ad::Var Model::predict_on_tape(ad::Tape& t, ad::Var y) const {
  return t.affine(f_w_, f_b_, y);
}

ad::Var Model::align_on_tape(ad::Tape& t, const std::string& inc_tok,
                             const std::string& dec_tok) const {
  const ad::Var e_inc = embed_token(t, embedding_row(inc_tok));
  const ad::Var e_dec = embed_token(t, embedding_row(dec_tok));
  const ad::Var hidden = t.tanh(t.affine(u_w1_, u_b1_, t.concat(e_inc, e_dec)));
  return t.affine(u_w2_, u_b2_, hidden);
}

PosteriorGaussian Model::encode_outcome(const Sentence& x) const {
  ad::Tape t;
  const auto ids = checked_ids(x);
  const Posterior p = encode_on_tape(t, enc_y_, ids, true);
  return {t.value(p.mu).col(0), t.value(p.log_sigma).array().exp().matrix().col(0)};
}

PosteriorGaussian Model::encode_content(const Sentence& x) const {
  ad::Tape t;
  const auto ids = checked_ids(x);
  const Posterior p = encode_on_tape(t, enc_z_, ids, true);
  return {t.value(p.mu).col(0), t.value(p.log_sigma).array().exp().matrix().col(0)};
}

LatentFactors Model::factors(const Sentence& x) const {
  return {encode_outcome(x).mu, encode_content(x).mu};
}

DecodeResult Model::decode(const Vec& y, const Vec& z, const Sentence* teacher) const {
  if (y.size() != cfg_.d_y || z.size() != cfg_.d_z) {
    throw ModelError("decode: latent dimension mismatch");
  }
  ad::Tape t;
  ad::Var h = decoder_state0(t, t.constant(y), t.constant(z));
  DecodeResult out;
  std::vector<int> teacher_ids;
  if (teacher != nullptr) teacher_ids = checked_ids(*teacher);
  const std::size_t steps =
      teacher != nullptr ? teacher_ids.size() + 1 : static_cast<std::size_t>(cfg_.max_decode_len);

  int prev = Vocabulary::kBos;
  bool ended = false;
  for (std::size_t pos = 0; pos < steps; ++pos) {
    h = gru_step(t, dec_.gru, embed_token(t, prev), h);
    const ad::Var logits = t.affine(dec_.w_out, dec_.b_out, h);
    const Vec dist = softmax(t.value(logits));
    out.distributions.push_back(dist);
    const int chosen = argmax(dist);
    if (teacher != nullptr) {
      if (pos < teacher_ids.size()) out.sentence.ids.push_back(chosen);
      prev = pos < teacher_ids.size() ? teacher_ids[pos] : Vocabulary::kEos;
    } else {
      if (chosen == Vocabulary::kEos) {
        ended = true;
        break;
      }
      out.sentence.ids.push_back(chosen);
      prev = chosen;
    }
  }
  if (teacher == nullptr && !ended) out.truncated = true;
  out.sentence.tokens = vocab_.to_tokens(out.sentence.ids);
  return out;
}

DecodeResult Model::decode_beam(const Vec& y, const Vec& z, int beam_width) const {
  if (beam_width <= 1) return decode(y, z, nullptr);
  if (y.size() != cfg_.d_y || z.size() != cfg_.d_z) {
    throw ModelError("decode: latent dimension mismatch");
  }
  ad::Tape t;
  struct Cand {
    std::vector<int> ids;
    double logprob = 0.0;
    ad::Var h;
    bool done = false;
  };
  Cand root;
  root.h = decoder_state0(t, t.constant(y), t.constant(z));
  std::vector<Cand> beam{root};

  for (int pos = 0; pos < cfg_.max_decode_len; ++pos) {
    std::vector<Cand> next;
    bool any_live = false;
    for (const Cand& c : beam) {
      if (c.done) {
        next.push_back(c);
        continue;
      }
      any_live = true;
      const int prev = c.ids.empty() ? Vocabulary::kBos : c.ids.back();
      const ad::Var h2 = gru_step(t, dec_.gru, embed_token(t, prev), c.h);
      const ad::Var logits = t.affine(dec_.w_out, dec_.b_out, h2);
      const Vec dist = softmax(t.value(logits));
      std::vector<int> order(static_cast<std::size_t>(dist.size()));
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
      std::partial_sort(order.begin(),
                        order.begin() + std::min<std::size_t>(order.size(),
                                                              static_cast<std::size_t>(beam_width)),
                        order.end(), [&](int a, int b) { return dist(a) > dist(b); });
      for (int k = 0; k < beam_width && k < static_cast<int>(order.size()); ++k) {
        Cand nc = c;
        nc.h = h2;
        nc.logprob += std::log(std::max(dist(order[static_cast<std::size_t>(k)]), 1e-300));
        if (order[static_cast<std::size_t>(k)] == Vocabulary::kEos) {
          nc.done = true;
        } else {
          nc.ids.push_back(order[static_cast<std::size_t>(k)]);
        }
        next.push_back(std::move(nc));
      }
    }
    if (!any_live) break;
    std::stable_sort(next.begin(), next.end(),
                     [](const Cand& a, const Cand& b) { return a.logprob > b.logprob; });
    if (static_cast<int>(next.size()) > beam_width) next.resize(static_cast<std::size_t>(beam_width));
    beam = std::move(next);
  }

  const Cand* best = nullptr;
  for (const Cand& c : beam) {
    if (c.done && (best == nullptr || c.logprob > best->logprob)) best = &c;
  }
  DecodeResult out;
  if (best == nullptr) {
    best = &beam.front();
    out.truncated = true;
  }
  out.sentence.ids = best->ids;
  out.sentence.tokens = vocab_.to_tokens(out.sentence.ids);
  return out;
}

double Model::predict_outcome(const Vec& y) const {
  if (y.size() != cfg_.d_y) throw ModelError("predict_outcome: dimension mismatch");
  return (f_w_.value * y)(0, 0) + f_b_.value(0, 0);
}

Vec Model::align_delta(const std::string& inc_tok, const std::string& dec_tok) const {
  ad::Tape t;
  return t.value(align_on_tape(t, inc_tok, dec_tok)).col(0);
}

double Model::loss_rec(const Sentence& x) const {
  ad::Tape t;
  const auto ids = checked_ids(x);
  const Posterior py = encode_on_tape(t, enc_y_, ids, false);
  const Posterior pz = encode_on_tape(t, enc_z_, ids, false);
  return t.scalar_value(decode_ce_on_tape(t, py.mu, pz.mu, ids));
}

double Model::loss_kl(const Sentence& x) const {
  ad::Tape t;
  const auto ids = checked_ids(x);
  const Posterior py = encode_on_tape(t, enc_y_, ids, true);
  const Posterior pz = encode_on_tape(t, enc_z_, ids, true);
  return t.scalar_value(kl_on_tape(t, py, cfg_.d_y)) +
         t.scalar_value(kl_on_tape(t, pz, cfg_.d_z));
}

double Model::loss_mse(const Sentence& x, double rating) const {
  ad::Tape t;
  const auto ids = checked_ids(x);
  const Posterior py = encode_on_tape(t, enc_y_, ids, false);
  const ad::Var pred = predict_on_tape(t, py.mu);
  return t.scalar_value(t.sum_sq(t.sub(t.scalar(rating), pred)));
}

double Model::loss_diff(const PseudoPair& pair, const std::string& inc_tok,
                        const std::string& dec_tok) const {
  ad::Tape t;
  const Posterior yx = encode_on_tape(t, enc_y_, checked_ids(pair.x.sentence), false);
  const Posterior yxp = encode_on_tape(t, enc_y_, checked_ids(pair.x_prime.sentence), false);
  const ad::Var h = t.sub(yx.mu, yxp.mu);
  const ad::Var u = align_on_tape(t, inc_tok, dec_tok);
  return t.scalar_value(t.sum_sq(t.sub(h, u)));
}

double Model::loss_sim(const PseudoPair& pair) const {
  ad::Tape t;
  const Posterior zx = encode_on_tape(t, enc_z_, checked_ids(pair.x.sentence), false);
  const Posterior zxp = encode_on_tape(t, enc_z_, checked_ids(pair.x_prime.sentence), false);
  return t.scalar_value(t.sum_sq(t.sub(zx.mu, zxp.mu)));
}

double Model::loss_dual(const PseudoPair& pair) const {
  ad::Tape t;
  const auto ids_x = checked_ids(pair.x.sentence);
  const auto ids_xp = checked_ids(pair.x_prime.sentence);
  const Posterior yx = encode_on_tape(t, enc_y_, ids_x, false);
  const Posterior yxp = encode_on_tape(t, enc_y_, ids_xp, false);
  const Posterior zx = encode_on_tape(t, enc_z_, ids_x, false);
  const Posterior zxp = encode_on_tape(t, enc_z_, ids_xp, false);
  const ad::Var a = decode_ce_on_tape(t, yxp.mu, zx.mu, ids_xp);
  const ad::Var b = decode_ce_on_tape(t, yx.mu, zxp.mu, ids_x);
  return t.scalar_value(t.add(a, b));
}

LossBundle Model::loss_bundle(const TrainingPoint& point) const {
  ad::Tape t;
  const LossVars v = build_losses(t, point, LossWeights{}, nullptr);
  return bundle_values(t, v);
}

Model::LossVars Model::build_losses(ad::Tape& t, const TrainingPoint& point,
                                    const LossWeights& w, Rng* noise_rng) const {
  LossVars v;
  // Single-sentence terms.
  const auto ids_s = checked_ids(point.single.sentence);
  const Posterior py = encode_on_tape(t, enc_y_, ids_s, true);
  const Posterior pz = encode_on_tape(t, enc_z_, ids_s, true);
  const ad::Var y_used = latent_from(t, py, noise_rng);
  const ad::Var z_used = latent_from(t, pz, noise_rng);
  v.rec = decode_ce_on_tape(t, y_used, z_used, ids_s);
  v.kl = t.add(kl_on_tape(t, py, cfg_.d_y), kl_on_tape(t, pz, cfg_.d_z));
  v.mse = t.sum_sq(t.sub(t.scalar(point.single.rating), predict_on_tape(t, y_used)));

  // Pair terms on posterior means.
  if (point.pair) {
    const auto ids_x = checked_ids(point.pair->x.sentence);
    const auto ids_xp = checked_ids(point.pair->x_prime.sentence);
    const Posterior yx = encode_on_tape(t, enc_y_, ids_x, false);
    const Posterior yxp = encode_on_tape(t, enc_y_, ids_xp, false);
    const Posterior zx = encode_on_tape(t, enc_z_, ids_x, false);
    const Posterior zxp = encode_on_tape(t, enc_z_, ids_xp, false);
    const ad::Var h = t.sub(yx.mu, yxp.mu);
    const ad::Var u = align_on_tape(t, point.sampled_inc, point.sampled_dec);
    v.diff = t.sum_sq(t.sub(h, u));
    v.sim = t.sum_sq(t.sub(zx.mu, zxp.mu));
    v.d_rec = t.add(decode_ce_on_tape(t, yxp.mu, zx.mu, ids_xp),
                    decode_ce_on_tape(t, yx.mu, zxp.mu, ids_x));
  } else {
    v.diff = t.scalar(0.0);
    v.sim = t.scalar(0.0);
    v.d_rec = t.scalar(0.0);
  }

  v.joint = t.add(
      t.add(t.add(t.scale(v.rec, w.rec), t.scale(v.kl, w.kl)),
            t.add(t.scale(v.mse, w.mse), t.scale(v.diff, w.diff))),
      t.add(t.scale(v.sim, w.sim), t.scale(v.d_rec, w.d_rec)));
  return v;
}

LossBundle Model::bundle_values(const ad::Tape& t, const LossVars& v) const {
  LossBundle b;
  b.rec = t.scalar_value(v.rec);
  b.kl = t.scalar_value(v.kl);
  b.mse = t.scalar_value(v.mse);
  b.diff = t.scalar_value(v.diff);
  b.sim = t.scalar_value(v.sim);
  b.d_rec = t.scalar_value(v.d_rec);
  return b;
}

std::vector<ad::Tensor*> Model::parameters() {
  std::vector<ad::Tensor*> out;
  auto add_gru = [&](GruParams& g) {
    out.push_back(&g.w_x);
    out.push_back(&g.b_x);
    out.push_back(&g.w_h);
    out.push_back(&g.b_h);
  };
  out.push_back(&embedding_);
  out.push_back(&null_embedding_);
  for (EncoderParams* e : {&enc_y_, &enc_z_}) {
    add_gru(e->gru);
    out.push_back(&e->w_mu);
    out.push_back(&e->b_mu);
    out.push_back(&e->w_ls);
    out.push_back(&e->b_ls);
  }
  add_gru(dec_.gru);
  out.push_back(&dec_.w_init);
  out.push_back(&dec_.b_init);
  out.push_back(&dec_.w_out);
  out.push_back(&dec_.b_out);
  out.push_back(&f_w_);
  out.push_back(&f_b_);
  out.push_back(&u_w1_);
  out.push_back(&u_b1_);
  out.push_back(&u_w2_);
  out.push_back(&u_b2_);
  return out;
}

std::vector<const ad::Tensor*> Model::parameters() const {
  auto mutable_list = const_cast<Model*>(this)->parameters();
  return {mutable_list.begin(), mutable_list.end()};
}

double kl_standard_normal(const Vec& mu, const Vec& sigma) {
  double kl = 0.0;
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    const double s2 = sigma(i) * sigma(i);
    kl += 0.5 * (mu(i) * mu(i) + s2 - 1.0 - std::log(s2));
  }
  return kl;
}

// ---------------------------------------------------------------------------
// Checkpoint container: magic, version, config hash, seed, model config text,
// vocabulary, named tensors (doubles, column-major, little-endian).

namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(b), 8);
}

void put_f64(std::ostream& out, double d) { put_u64(out, std::bit_cast<std::uint64_t>(d)); }

void put_string(std::ostream& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw CheckpointError("checkpoint: truncated file");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

std::uint64_t get_u64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  if (!in) throw CheckpointError("checkpoint: truncated file");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

double get_f64(std::istream& in) { return std::bit_cast<double>(get_u64(in)); }

std::string get_string(std::istream& in) {
  const std::uint32_t n = get_u32(in);
  std::string s(n, '\0');
  in.read(s.data(), static_cast<std::streamsize>(n));
  if (!in) throw CheckpointError("checkpoint: truncated string");
  return s;
}

std::string config_to_text(const ModelConfig& c) {
  std::ostringstream os;
  os << "d_y=" << c.d_y << "\nd_z=" << c.d_z << "\nembedding_dim=" << c.embedding_dim
     << "\nhidden_dim=" << c.hidden_dim << "\nu_hidden_dim=" << c.u_hidden_dim
     << "\nvocab_size=" << c.vocab_size << "\nmax_decode_len=" << c.max_decode_len << "\n";
  return os.str();
}

ModelConfig config_from_text(const std::string& text) {
  ModelConfig c;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = line.substr(0, eq);
    const int value = std::stoi(line.substr(eq + 1));
    if (key == "d_y") c.d_y = value;
    else if (key == "d_z") c.d_z = value;
    else if (key == "embedding_dim") c.embedding_dim = value;
    else if (key == "hidden_dim") c.hidden_dim = value;
    else if (key == "u_hidden_dim") c.u_hidden_dim = value;
    else if (key == "vocab_size") c.vocab_size = value;
    else if (key == "max_decode_len") c.max_decode_len = value;
    else throw CheckpointError("checkpoint: unknown config key " + key);
  }
  return c;
}

}  // namespace

void Model::save(const std::string& path, const std::string& config_hash,
                 std::uint64_t seed) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("checkpoint: cannot open " + path + " for writing");
  out.write(kMagic, 4);
  put_u32(out, kCheckpointVersion);
  put_string(out, config_hash);
  put_u64(out, seed);
  put_string(out, config_to_text(cfg_));
  const auto& tokens = vocab_.id_to_token();
  put_u32(out, static_cast<std::uint32_t>(tokens.size()));
  for (const std::string& t : tokens) put_string(out, t);
  const auto params = parameters();
  put_u32(out, static_cast<std::uint32_t>(params.size()));
  for (const ad::Tensor* p : params) {
    put_string(out, p->name);
    put_u32(out, static_cast<std::uint32_t>(p->value.rows()));
    put_u32(out, static_cast<std::uint32_t>(p->value.cols()));
    for (Eigen::Index c = 0; c < p->value.cols(); ++c) {
      for (Eigen::Index r = 0; r < p->value.rows(); ++r) put_f64(out, p->value(r, c));
    }
  }
  if (!out) throw CheckpointError("checkpoint: write failure on " + path);
}

Model Model::load(const std::string& path, std::string* config_hash, std::uint64_t* seed) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("checkpoint: cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    throw CheckpointError("checkpoint: bad magic in " + path);
  }
  const std::uint32_t version = get_u32(in);
  if (version != kCheckpointVersion) {
    throw CheckpointError("checkpoint: unsupported version " + std::to_string(version) +
                          " (expected " + std::to_string(kCheckpointVersion) + ")");
  }
  const std::string hash = get_string(in);
  const std::uint64_t stored_seed = get_u64(in);
  const ModelConfig cfg = config_from_text(get_string(in));
  const std::uint32_t vocab_count = get_u32(in);
  std::vector<std::string> tokens;
  tokens.reserve(vocab_count);
  for (std::uint32_t i = 0; i < vocab_count; ++i) tokens.push_back(get_string(in));
  Vocabulary vocab = Vocabulary::from_tokens(tokens);
  if (vocab.size() != cfg.vocab_size) {
    throw CheckpointError("checkpoint: vocab size disagrees with config");
  }

  Rng dummy(0);
  Model m(cfg, std::move(vocab), dummy);
  auto params = m.parameters();
  const std::uint32_t tensor_count = get_u32(in);
  if (tensor_count != params.size()) {
    throw CheckpointError("checkpoint: tensor count mismatch");
  }
  for (std::uint32_t i = 0; i < tensor_count; ++i) {
    const std::string name = get_string(in);
    const std::uint32_t rows = get_u32(in);
    const std::uint32_t cols = get_u32(in);
    ad::Tensor* target = nullptr;
    for (ad::Tensor* p : params) {
      if (p->name == name) {
        target = p;
        break;
      }
    }
    if (target == nullptr) throw CheckpointError("checkpoint: unknown tensor " + name);
    if (target->value.rows() != static_cast<Eigen::Index>(rows) ||
        target->value.cols() != static_cast<Eigen::Index>(cols)) {
      throw CheckpointError("checkpoint: shape mismatch for tensor " + name);
    }
    for (std::uint32_t c = 0; c < cols; ++c) {
      for (std::uint32_t r = 0; r < rows; ++r) target->value(r, c) = get_f64(in);
    }
  }
  if (config_hash != nullptr) *config_hash = hash;
  if (seed != nullptr) *seed = stored_seed;
  return m;
}

}  // namespace quase
