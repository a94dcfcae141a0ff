#pragma once

// Randomized verification of the analytic loss gradients: central finite
// differences, softmax weighting among non-targets, target/non-target
// balance, the CosFace(2m) equivalence at alpha = 0 and the smooth limit.

#include <cstdint>
#include <string>
#include <vector>

#include "gbcos/margin_losses.hpp"

namespace gbcos {

struct GradientAuditConfig {
  std::size_t draws = 1000;              ///< per finite-difference / property check
  std::size_t equivalence_draws = 10000; ///< for the CosFace(2m) equivalence
  std::uint64_t seed = 1;
  double fd_step = 1e-6;
  double fd_tolerance = 1e-5;
  double weighting_tolerance = 1e-9;
  double balance_tolerance = 1e-10;
  double equivalence_tolerance = 1e-10;
  double smooth_limit_gap = 0.02;
  /// Test fixture: "softmax_family_grad" or "gb_cosface_grad" perturbs that
  /// operation's analytic gradient before it is checked. "none" disables.
  std::string fault_injection = "none";

  void validate() const;
};

/// Inputs of the draw that produced a check's worst error.
struct AuditDraw {
  LossConfig config;
  double p_y = 0.0;
  std::vector<double> p_nontarget;
  double p_v = 0.0;  ///< boundary used by GB-CosFace draws
};

struct AuditCheck {
  std::string name;
  std::string op;  ///< operation under test
  std::size_t draws = 0;
  double worst_error = 0.0;
  double tolerance = 0.0;
  bool passed = true;
  AuditDraw worst_draw;
};

struct AuditReport {
  std::vector<AuditCheck> checks;
  bool passed() const;
};

AuditReport run_gradient_audit(const GradientAuditConfig& cfg);

/// |a - b| / max(1, |a|, |b|): relative for gradients of magnitude >= 1, absolute below.
double gradient_error(double analytic, double numeric) noexcept;

}  // namespace gbcos
