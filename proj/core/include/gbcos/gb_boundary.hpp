#pragma once

// GB-CosFace: a virtual boundary score p_v separates the target score from
// the non-target scores.
//
//   p_hat_v = (p_y + p_n) / 2                   per-sample balanced threshold
//   p_vg   <- (1 - gamma) p_vg + gamma p_vb      running global boundary
//   p_v     = alpha p_vg + (1 - alpha) p_hat_v
//
//   L = -1/2 log sigma(2s(p_y - m - p_v)) - 1/2 log sigma(2s(p_v - m - p_n))
//
// with p_n = (1/s) log sum_i e^{s p_i}. p_v is detached: gradients never
// flow through it. At alpha = 0 the gradients coincide with CosFace(s, 2m).

#include <cstdint>
#include <tuple>

#include "gbcos/margin_losses.hpp"

namespace gbcos {

class BoundaryState {
 public:
  /// Throws InvalidConfig unless gamma is in (0, 1].
  explicit BoundaryState(double gamma);

  double p_vg() const noexcept { return p_vg_; }
  double gamma() const noexcept { return gamma_; }
  bool initialized() const noexcept { return update_count_ > 0; }
  std::uint64_t update_count() const noexcept { return update_count_; }

  /// State whose p_vg is already set, e.g. for a fixed-boundary experiment.
  static BoundaryState seeded(double gamma, double p_vg);

  friend bool operator==(const BoundaryState&, const BoundaryState&) = default;

 private:
  friend BoundaryState ema_update(const BoundaryState& state, double batch_mean_p_hat_v);

  double p_vg_ = 0.0;
  double gamma_;
  std::uint64_t update_count_ = 0;
};

struct BoundaryDiagnostics {
  double p_hat_v = 0.0;
  double p_v = 0.0;
  double g_t = 0.0;  ///< |dL/dp_y|
  double g_n = 0.0;  ///< |sum_i dL/dp_i|
};

/// (p_y + (1/s) log sum_i e^{s p_i}) / 2
double balanced_threshold(const ScoreBundle& scores, double s);

/// Momentum update of the global boundary. The first update seeds p_vg with
/// the batch mean. Throws NonFiniteInput for a non-finite mean.
BoundaryState ema_update(const BoundaryState& state, double batch_mean_p_hat_v);

/// alpha * p_vg + (1 - alpha) * p_hat_v. Throws Uninitialized when alpha > 0
/// and the state has never been updated.
double mixed_boundary(double p_hat_v, const BoundaryState& state, double alpha);

struct AntetypeLoss {
  double target;     ///< L_T1 = -log sigma(s(p_y - m - p_v))
  double nontarget;  ///< L_N1 = -log sigma(s(p_v - m - p_n))
};

AntetypeLoss antetype_loss(const ScoreBundle& scores, double p_v, const LossConfig& cfg);

/// Gradients of the antetype pair: d_py is dL_T1/dp_y, d_pi is dL_N1/dp_i.
GradientBundle antetype_grad(const ScoreBundle& scores, double p_v, const LossConfig& cfg);

double gb_cosface_loss(const ScoreBundle& scores, double p_v, const LossConfig& cfg);

std::pair<GradientBundle, BoundaryDiagnostics> gb_cosface_grad(const ScoreBundle& scores, double p_v,
                                                               const LossConfig& cfg);

struct SampleStep {
  double loss = 0.0;
  GradientBundle grad;
  BoundaryDiagnostics diagnostics;
};

/// p_hat_v -> p_v -> loss and gradient for one sample. Reads the state, never mutates it.
SampleStep per_sample_step(const ScoreBundle& scores, const BoundaryState& state, const LossConfig& cfg);

}  // namespace gbcos
