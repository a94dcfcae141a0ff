#include "gbcos/margin_losses.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "gbcos/error.hpp"
#include "gbcos/sphere.hpp"

namespace gbcos {

std::string_view to_string(Variant v) noexcept {
  switch (v) {
    case Variant::NormalizedSoftmax: return "softmax";
    case Variant::CosFace: return "cosface";
    case Variant::ArcFace: return "arcface";
    case Variant::GBCosFace: return "gb-cosface";
  }
  return "unknown";
}

Variant variant_from_string(std::string_view name) {
  if (name == "softmax" || name == "normalized-softmax" || name == "NormalizedSoftmax")
    return Variant::NormalizedSoftmax;
  if (name == "cosface" || name == "CosFace") return Variant::CosFace;
  if (name == "arcface" || name == "ArcFace") return Variant::ArcFace;
  if (name == "gb-cosface" || name == "gbcosface" || name == "GBCosFace") return Variant::GBCosFace;
  throw Error(ErrorCode::InvalidConfig, "unknown loss variant '" + std::string(name) + "'");
}

void LossConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::InvalidConfig, msg); };
  if (!(s > 0.0) || !std::isfinite(s)) fail("s must be a positive finite scale");
  if (!(m_theta >= 0.0) || !(m_p >= 0.0) || !(m >= 0.0)) fail("margins must be non-negative");
  if (!(alpha >= 0.0 && alpha <= 1.0)) fail("alpha must lie in [0, 1]");
  if (!(gamma > 0.0 && gamma <= 1.0)) fail("gamma must lie in (0, 1]");
  switch (variant) {
    case Variant::NormalizedSoftmax:
      if (m_theta != 0.0 || m_p != 0.0) fail("normalized softmax takes no margins");
      break;
    case Variant::CosFace:
      if (m_theta != 0.0) fail("CosFace requires m_theta = 0");
      break;
    case Variant::ArcFace:
      if (m_p != 0.0) fail("ArcFace requires m_p = 0");
      break;
    case Variant::GBCosFace:
      break;
  }
}

LossConfig LossConfig::normalized_softmax(double s) {
  LossConfig c;
  c.variant = Variant::NormalizedSoftmax;
  c.s = s;
  return c;
}

LossConfig LossConfig::cosface(double s, double m_p) {
  LossConfig c;
  c.variant = Variant::CosFace;
  c.s = s;
  c.m_p = m_p;
  return c;
}

LossConfig LossConfig::arcface(double s, double m_theta) {
  LossConfig c;
  c.variant = Variant::ArcFace;
  c.s = s;
  c.m_theta = m_theta;
  return c;
}

LossConfig LossConfig::gb_cosface(double s, double m, double alpha, double gamma) {
  LossConfig c;
  c.variant = Variant::GBCosFace;
  c.s = s;
  c.m = m;
  c.alpha = alpha;
  c.gamma = gamma;
  return c;
}

ScoreBundle::ScoreBundle(double p_y, std::vector<double> p_nontarget)
    : p_y_(p_y), p_nontarget_(std::move(p_nontarget)) {
  if (p_nontarget_.empty()) throw Error(ErrorCode::InvalidArgument, "need at least one non-target score");
  auto in_range = [](double p) { return p >= -1.0 && p <= 1.0; };
  if (!in_range(p_y_) || !std::ranges::all_of(p_nontarget_, in_range)) {
    throw Error(ErrorCode::InvalidArgument, "scores must be cosines in [-1, 1]");
  }
}

double ScoreBundle::p_n(double s) const { return logsumexp(p_nontarget_, s); }

ScoreBundle ScoreBundle::with_target(double p_y) const { return ScoreBundle(p_y, p_nontarget_); }

ScoreBundle ScoreBundle::with_nontarget(std::size_t i, double p_i) const {
  auto copy = p_nontarget_;
  copy.at(i) = p_i;
  return ScoreBundle(p_y_, std::move(copy));
}

double softplus(double x) noexcept { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double sigmoid(double x) noexcept {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

namespace {

struct MarginedTarget {
  double value;       // cos(theta_y + m_theta) - m_p
  double d_value_dpy; // d value / d p_y
  bool clamped;
};

MarginedTarget margined_target(double p_y, const LossConfig& cfg) {
  if (cfg.variant != Variant::ArcFace || cfg.m_theta == 0.0) {
    return {p_y - cfg.m_p, 1.0, false};
  }
  const double theta = std::acos(clamp_cosine(p_y));
  const double shifted = theta + cfg.m_theta;
  if (shifted > std::numbers::pi) return {-1.0 - cfg.m_p, 0.0, true};
  // d cos(theta + m) / d cos(theta) = sin(theta + m) / sin(theta); the floor
  // keeps p_y = +-1 finite.
  const double sin_theta = std::max(std::sin(theta), 1e-12);
  return {std::cos(shifted) - cfg.m_p, std::sin(shifted) / sin_theta, false};
}

void require_softmax_family(const LossConfig& cfg) {
  cfg.validate();
  if (cfg.variant == Variant::GBCosFace) {
    throw Error(ErrorCode::InvalidConfig, "GB-CosFace is evaluated by the gb-boundary functions");
  }
}

}  // namespace

SoftmaxFamilyResult softmax_family_eval(const ScoreBundle& scores, const LossConfig& cfg) {
  require_softmax_family(cfg);
  const double s = cfg.s;
  const MarginedTarget target = margined_target(scores.p_y(), cfg);
  const auto nontarget = scores.p_nontarget();

  // Everything is shifted by the largest logit before exponentiation.
  const double z_target = s * target.value;
  double top = z_target;
  for (double p : nontarget) top = std::max(top, s * p);
  double denom = std::exp(z_target - top);
  for (double p : nontarget) denom += std::exp(s * p - top);
  const double log_denom = top + std::log(denom);

  const double lse_nontarget = s * scores.p_n(s);

  SoftmaxFamilyResult out;
  out.angle_clamped = target.clamped;
  out.loss = softplus(lse_nontarget - z_target);

  out.grad.d_pi.resize(nontarget.size());
  for (std::size_t i = 0; i < nontarget.size(); ++i) {
    out.grad.d_pi[i] = s * std::exp(s * nontarget[i] - log_denom);
  }
  // dL/dz_target = -(1 - softmax_target) = -sigmoid(lse_nontarget - z_target)
  out.grad.d_margined_target = -s * sigmoid(lse_nontarget - z_target);
  out.grad.d_py = out.grad.d_margined_target * target.d_value_dpy;
  return out;
}

double softmax_family_loss(const ScoreBundle& scores, const LossConfig& cfg) {
  return softmax_family_eval(scores, cfg).loss;
}

GradientBundle softmax_family_grad(const ScoreBundle& scores, const LossConfig& cfg) {
  return softmax_family_eval(scores, cfg).grad;
}

double hard_objective(const ScoreBundle& scores, const LossConfig& cfg) {
  cfg.validate();
  const double target = cfg.variant == Variant::GBCosFace ? scores.p_y()
                                                          : margined_target(scores.p_y(), cfg).value;
  const double top = *std::ranges::max_element(scores.p_nontarget());
  return std::max(0.0, top - target);
}

}  // namespace gbcos
