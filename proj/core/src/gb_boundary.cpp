#include "gbcos/gb_boundary.hpp"

#include <cmath>
#include <numeric>

#include "gbcos/error.hpp"
#include "gbcos/sphere.hpp"

namespace gbcos {

BoundaryState::BoundaryState(double gamma) : gamma_(gamma) {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw Error(ErrorCode::InvalidConfig, "gamma must lie in (0, 1]");
}

BoundaryState BoundaryState::seeded(double gamma, double p_vg) {
  return ema_update(BoundaryState(gamma), p_vg);
}

double balanced_threshold(const ScoreBundle& scores, double s) { return 0.5 * (scores.p_y() + scores.p_n(s)); }

BoundaryState ema_update(const BoundaryState& state, double batch_mean_p_hat_v) {
  if (!std::isfinite(batch_mean_p_hat_v)) throw Error(ErrorCode::NonFiniteInput, "batch mean of p_hat_v");
  BoundaryState next = state;
  next.p_vg_ = state.initialized()
                   ? (1.0 - state.gamma_) * state.p_vg_ + state.gamma_ * batch_mean_p_hat_v
                   : batch_mean_p_hat_v;
  ++next.update_count_;
  return next;
}

double mixed_boundary(double p_hat_v, const BoundaryState& state, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error(ErrorCode::InvalidConfig, "alpha must lie in [0, 1]");
  if (alpha == 0.0) return p_hat_v;
  if (!state.initialized()) throw Error(ErrorCode::Uninitialized, "global boundary has no updates yet");
  return alpha * state.p_vg() + (1.0 - alpha) * p_hat_v;
}

AntetypeLoss antetype_loss(const ScoreBundle& scores, double p_v, const LossConfig& cfg) {
  const double s = cfg.s;
  return {softplus(s * (p_v - (scores.p_y() - cfg.m))),
          softplus(s * (scores.p_n(s) - (p_v - cfg.m)))};
}

GradientBundle antetype_grad(const ScoreBundle& scores, double p_v, const LossConfig& cfg) {
  const double s = cfg.s;
  const auto nontarget = scores.p_nontarget();
  const double lse = s * scores.p_n(s);

  GradientBundle g;
  g.d_py = -s * sigmoid(s * (p_v - (scores.p_y() - cfg.m)));
  g.d_margined_target = g.d_py;
  const double d_pn = s * sigmoid(lse - s * (p_v - cfg.m));
  g.d_pi.resize(nontarget.size());
  for (std::size_t i = 0; i < nontarget.size(); ++i) g.d_pi[i] = d_pn * std::exp(s * nontarget[i] - lse);
  return g;
}

double gb_cosface_loss(const ScoreBundle& scores, double p_v, const LossConfig& cfg) {
  const double two_s = 2.0 * cfg.s;
  const double p_n = scores.p_n(cfg.s);
  return 0.5 * softplus(two_s * (p_v - (scores.p_y() - cfg.m))) +
         0.5 * softplus(two_s * (p_n - (p_v - cfg.m)));
}

std::pair<GradientBundle, BoundaryDiagnostics> gb_cosface_grad(const ScoreBundle& scores, double p_v,
                                                               const LossConfig& cfg) {
  const double s = cfg.s;
  const auto nontarget = scores.p_nontarget();
  const double lse = s * scores.p_n(s);
  const double p_n = lse / s;

  GradientBundle g;
  // d/dp_y of 1/2 softplus(2s(p_v - p_y + m)) = -s sigma(2s(p_v - p_y + m))
  g.d_py = -s * sigmoid(2.0 * s * (p_v - (scores.p_y() - cfg.m)));
  g.d_margined_target = g.d_py;
  // dL/dp_n, then dp_n/dp_i = softmax(s p)_i
  const double d_pn = s * sigmoid(2.0 * s * (p_n - (p_v - cfg.m)));
  g.d_pi.resize(nontarget.size());
  for (std::size_t i = 0; i < nontarget.size(); ++i) g.d_pi[i] = d_pn * std::exp(s * nontarget[i] - lse);

  BoundaryDiagnostics diag;
  diag.p_hat_v = 0.5 * (scores.p_y() + p_n);
  diag.p_v = p_v;
  diag.g_t = std::abs(g.d_py);
  diag.g_n = std::abs(std::accumulate(g.d_pi.begin(), g.d_pi.end(), 0.0));
  return {std::move(g), diag};
}

SampleStep per_sample_step(const ScoreBundle& scores, const BoundaryState& state, const LossConfig& cfg) {
  cfg.validate();
  if (cfg.variant != Variant::GBCosFace) {
    throw Error(ErrorCode::InvalidConfig, "per_sample_step evaluates the GB-CosFace variant");
  }
  const double p_hat_v = balanced_threshold(scores, cfg.s);
  const double p_v = mixed_boundary(p_hat_v, state, cfg.alpha);
  auto [grad, diag] = gb_cosface_grad(scores, p_v, cfg);
  diag.p_hat_v = p_hat_v;
  return {gb_cosface_loss(scores, p_v, cfg), std::move(grad), diag};
}

}  // namespace gbcos
