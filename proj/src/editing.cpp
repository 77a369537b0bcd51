#include "quase/editing.hpp"

#include <cmath>
#include <stdexcept>

namespace quase {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;
// Keeps projected iterates strictly inside the open set C.
constexpr double kBoundaryShrink = 1.0 - 1e-9;

double objective(const Model& m, const Vec& y, TargetKind kind, double target) {
  const double f = m.predict_outcome(y);
  switch (kind) {
    case TargetKind::kValue: {
      const double d = f - target;
      return d * d;
    }
    case TargetKind::kMax:
      return -f;
    case TargetKind::kMin:
      return f;
  }
  return 0.0;
}

Vec objective_gradient(const Model& m, const Vec& y, TargetKind kind, double target) {
  const Vec w = m.outcome_weights();
  switch (kind) {
    case TargetKind::kValue:
      return 2.0 * (m.predict_outcome(y) - target) * w;
    case TargetKind::kMax:
      return -w;
    case TargetKind::kMin:
      return w;
  }
  return Vec::Zero(y.size());
}

}  // namespace

void EditRequest::validate(int d_y) const {
  if (kind == TargetKind::kValue && (target < 1.0 || target > 5.0)) {
    throw std::invalid_argument("edit request: numeric target outside [1, 5]");
  }
  if (!std::isfinite(log_tau)) {
    throw std::invalid_argument("edit request: log tau must be finite");
  }
  if (sigma_test.size() != 0) {
    if (sigma_test.size() != d_y) {
      throw std::invalid_argument("edit request: sigma_test dimension mismatch");
    }
    if ((sigma_test.array() <= 0.0).any()) {
      throw std::invalid_argument("edit request: sigma_test must be positive");
    }
  }
  if (search.step_size <= 0 || search.eps_target < 0 || search.max_iters < 0) {
    throw std::invalid_argument("edit request: bad search parameters");
  }
  if (beam_width < 1) throw std::invalid_argument("edit request: beam width must be >= 1");
}

double log_density(const Vec& y, const Vec& mu, const Vec& sigma) {
  if (y.size() != mu.size() || y.size() != sigma.size()) {
    throw std::invalid_argument("log_density: dimension mismatch");
  }
  double ld = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (sigma(i) <= 0.0) throw std::invalid_argument("log_density: sigma must be positive");
    const double zi = (y(i) - mu(i)) / sigma(i);
    ld -= 0.5 * (std::log(kTwoPi) + zi * zi) + std::log(sigma(i));
  }
  return ld;
}

SearchResult search_latent(const Model& model, const Vec& y0, const EditRequest& request) {
  const int d = model.config().d_y;
  request.validate(d);
  if (y0.size() != d) throw std::invalid_argument("search_latent: y0 dimension mismatch");
  const Vec sigma = request.sigma_test.size() ? request.sigma_test : Vec::Ones(d);

  const double density_at_mean = log_density(y0, y0, sigma);
  const bool constrained = density_at_mean > request.log_tau;
  // tau at or above the peak density leaves only y0 itself admissible.
  if (!constrained) {
    SearchResult r;
    r.y_star = y0;
    r.feasible = density_at_mean > request.log_tau;
    return r;
  }

  auto project = [&](const Vec& y) -> Vec {
    if (log_density(y, y0, sigma) >= request.log_tau) return y;
    const Vec delta = y - y0;
    double m2 = 0.0;
    for (Eigen::Index i = 0; i < delta.size(); ++i) {
      const double zi = delta(i) / sigma(i);
      m2 += zi * zi;
    }
    if (m2 == 0.0) return y0;
    const double t = std::sqrt(2.0 * (density_at_mean - request.log_tau) / m2);
    return y0 + (kBoundaryShrink * t) * delta;
  };

  SearchResult result;
  Vec y = y0;
  double obj = objective(model, y, request.kind, request.target);
  const bool has_target = request.kind == TargetKind::kValue;

  for (int iter = 0; iter < request.search.max_iters; ++iter) {
    if (has_target && std::sqrt(obj) < request.search.eps_target) break;
    Vec g = objective_gradient(model, y, request.kind, request.target);
    if (!g.allFinite()) throw std::runtime_error("search_latent: non-finite gradient");
    if (g.norm() == 0.0) break;

    double step = request.search.step_size;
    bool improved = false;
    for (int halvings = 0; halvings < 30; ++halvings) {
      Vec candidate = project(y - step * g);
      const double cand_obj = objective(model, candidate, request.kind, request.target);
      if (cand_obj < obj) {
        y = std::move(candidate);
        obj = cand_obj;
        improved = true;
        break;
      }
      step *= 0.5;
    }
    result.iterations = iter + 1;
    if (!improved) break;
  }

  result.y_star = y;
  result.feasible = log_density(y, y0, sigma) > request.log_tau;
  return result;
}

EditResult edit(const Model& model, const EditRequest& request) {
  request.validate(model.config().d_y);
  const Vec y0 = model.encode_outcome(request.x0).mu;
  const Vec z0 = model.encode_content(request.x0).mu;
  const SearchResult search = search_latent(model, y0, request);

  const DecodeResult decoded = request.beam_width > 1
                                   ? model.decode_beam(search.y_star, z0, request.beam_width)
                                   : model.decode(search.y_star, z0, nullptr);

  EditResult r;
  r.x_star = decoded.sentence;
  r.y_star = search.y_star;
  r.predicted_outcome = model.predict_outcome(search.y_star);
  r.iterations = search.iterations;
  r.feasible = search.feasible;
  r.truncated = decoded.truncated;
  return r;
}

}  // namespace quase
