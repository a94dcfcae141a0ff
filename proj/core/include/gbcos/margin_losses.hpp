#pragma once

// Unified softmax-margin losses. Normalized softmax, CosFace and ArcFace are
// parameter settings of one loss
//
//   L = -log( e^{s(cos(t_y + m_theta) - m_p)} /
//             (e^{s(cos(t_y + m_theta) - m_p)} + sum_i e^{s p_i}) )
//
// with gradients taken w.r.t. the cosine scores, not the embeddings.

#include <span>
#include <string_view>
#include <vector>

namespace gbcos {

enum class Variant { NormalizedSoftmax, CosFace, ArcFace, GBCosFace };

std::string_view to_string(Variant v) noexcept;
/// Accepts "softmax", "cosface", "arcface", "gb-cosface" (and the enum spellings).
Variant variant_from_string(std::string_view name);

struct LossConfig {
  Variant variant = Variant::GBCosFace;
  double s = 32.0;
  double m_theta = 0.0;  ///< angular margin (ArcFace), radians
  double m_p = 0.0;      ///< cosine margin (CosFace)
  double m = 0.16;       ///< GB-CosFace margin
  double alpha = 0.15;   ///< global/per-sample boundary mix
  double gamma = 0.01;   ///< EMA update rate of the global boundary

  /// Throws InvalidConfig when ranges or the variant's margin constraints are violated.
  void validate() const;

  static LossConfig normalized_softmax(double s);
  static LossConfig cosface(double s, double m_p);
  static LossConfig arcface(double s, double m_theta);
  static LossConfig gb_cosface(double s, double m, double alpha, double gamma);
};

/// One sample's target cosine and its non-target cosines.
class ScoreBundle {
 public:
  /// Throws InvalidArgument for an empty non-target list or scores outside [-1, 1].
  ScoreBundle(double p_y, std::vector<double> p_nontarget);

  double p_y() const noexcept { return p_y_; }
  std::span<const double> p_nontarget() const noexcept { return p_nontarget_; }
  std::size_t num_nontarget() const noexcept { return p_nontarget_.size(); }

  /// (1/s) log sum_i e^{s p_i}; recomputed on every call.
  double p_n(double s) const;

  ScoreBundle with_target(double p_y) const;
  ScoreBundle with_nontarget(std::size_t i, double p_i) const;

 private:
  double p_y_;
  std::vector<double> p_nontarget_;
};

struct GradientBundle {
  double d_py = 0.0;             ///< dL/dp_y
  std::vector<double> d_pi;      ///< dL/dp_i per non-target
  /// dL/d(margined target cosine). Equals d_py except for ArcFace, where the
  /// target enters through cos(theta_y + m_theta).
  double d_margined_target = 0.0;
};

struct SoftmaxFamilyResult {
  double loss = 0.0;
  GradientBundle grad;
  /// theta_y + m_theta exceeded pi and was clamped (ArcFace only).
  bool angle_clamped = false;
};

SoftmaxFamilyResult softmax_family_eval(const ScoreBundle& scores, const LossConfig& cfg);
double softmax_family_loss(const ScoreBundle& scores, const LossConfig& cfg);
GradientBundle softmax_family_grad(const ScoreBundle& scores, const LossConfig& cfg);

/// ReLU(max_i p_i - (cos(theta_y + m_theta) - m_p)), the s -> infinity limit of L/s.
double hard_objective(const ScoreBundle& scores, const LossConfig& cfg);

/// Stable log(1 + e^x).
double softplus(double x) noexcept;
/// Stable 1 / (1 + e^{-x}).
double sigmoid(double x) noexcept;

}  // namespace gbcos
