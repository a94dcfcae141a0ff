#include "gbcos/gradient_audit.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <random>

#include "gbcos/error.hpp"
#include "gbcos/gb_boundary.hpp"

namespace gbcos {

namespace {

constexpr std::array<std::size_t, 3> kNontargetCounts{1, 9, 99};
constexpr std::array<double, 3> kScales{8.0, 32.0, 64.0};
constexpr std::array<double, 3> kGbMargins{0.0, 0.08, 0.16};

class DrawSource {
 public:
  explicit DrawSource(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }

  template <class T, std::size_t N>
  T pick(const std::array<T, N>& options) {
    return options[std::uniform_int_distribution<std::size_t>(0, N - 1)(rng_)];
  }

  // Target kept away from +-1 so ArcFace's d theta / d p stays bounded and
  // theta_y + m_theta stays below pi.
  ScoreBundle bundle(std::size_t nontarget) {
    std::vector<double> p(nontarget);
    for (double& x : p) x = uniform(-0.999, 0.999);
    return ScoreBundle(uniform(-0.8, 0.95), std::move(p));
  }

  LossConfig config(Variant v) {
    const double s = pick(kScales);
    switch (v) {
      case Variant::NormalizedSoftmax: return LossConfig::normalized_softmax(s);
      case Variant::CosFace: return LossConfig::cosface(s, uniform(0.0, 0.5));
      case Variant::ArcFace: return LossConfig::arcface(s, uniform(0.0, 0.5));
      case Variant::GBCosFace: return LossConfig::gb_cosface(s, uniform(0.0, 0.3), 0.0, 0.01);
    }
    return {};
  }

 private:
  std::mt19937_64 rng_;
};

struct Tracker {
  AuditCheck check;

  Tracker(std::string name, std::string op, double tolerance) {
    check.name = std::move(name);
    check.op = std::move(op);
    check.tolerance = tolerance;
  }

  void record(double error, const LossConfig& cfg, const ScoreBundle& b, double p_v = 0.0) {
    ++check.draws;
    // NaN counts as the worst possible error.
    if (check.draws == 1 || !(error <= check.worst_error)) {
      check.worst_error = std::isnan(error) ? std::numeric_limits<double>::infinity() : error;
      check.worst_draw = {cfg, b.p_y(), {b.p_nontarget().begin(), b.p_nontarget().end()}, p_v};
    }
  }

  AuditCheck finish() {
    check.passed = check.worst_error <= check.tolerance;
    return check;
  }
};

void corrupt(GradientBundle& g) {
  g.d_py *= 1.0 + 1e-3;
  g.d_margined_target *= 1.0 + 1e-3;
  if (!g.d_pi.empty()) g.d_pi.front() *= 1.0 + 1e-3;
}

using LossFn = std::function<double(const ScoreBundle&)>;

double max_fd_error(const ScoreBundle& b, const GradientBundle& g, const LossFn& loss, double h) {
  const double fd_y = (loss(b.with_target(b.p_y() + h)) - loss(b.with_target(b.p_y() - h))) / (2.0 * h);
  double worst = gradient_error(g.d_py, fd_y);
  for (std::size_t i = 0; i < b.num_nontarget(); ++i) {
    const double p = b.p_nontarget()[i];
    const double fd = (loss(b.with_nontarget(i, p + h)) - loss(b.with_nontarget(i, p - h))) / (2.0 * h);
    worst = std::max(worst, gradient_error(g.d_pi[i], fd));
  }
  return worst;
}

double max_weighting_error(const ScoreBundle& b, const GradientBundle& g, double s) {
  double worst = 0.0;
  const auto p = b.p_nontarget();
  for (std::size_t k = 1; k < p.size(); ++k) {
    if (g.d_pi[0] == 0.0) break;
    const double expected = std::exp(s * (p[k] - p[0]));
    worst = std::max(worst, std::abs((g.d_pi[k] / g.d_pi[0]) / expected - 1.0));
  }
  return worst;
}

double sum_of(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

}  // namespace

double gradient_error(double analytic, double numeric) noexcept {
  const double scale = std::max({1.0, std::abs(analytic), std::abs(numeric)});
  return std::abs(analytic - numeric) / scale;
}

void GradientAuditConfig::validate() const {
  if (draws == 0 || equivalence_draws == 0) throw Error(ErrorCode::InvalidConfig, "draw counts must be positive");
  if (!(fd_step > 0.0 && fd_step < 1e-2)) throw Error(ErrorCode::InvalidConfig, "fd_step must lie in (0, 1e-2)");
  if (fault_injection != "none" && fault_injection != "softmax_family_grad" &&
      fault_injection != "gb_cosface_grad") {
    throw Error(ErrorCode::InvalidConfig, "unknown fault_injection target '" + fault_injection + "'");
  }
}

bool AuditReport::passed() const {
  return std::ranges::all_of(checks, [](const AuditCheck& c) { return c.passed; });
}

AuditReport run_gradient_audit(const GradientAuditConfig& cfg) {
  cfg.validate();
  DrawSource draws(cfg.seed);
  const bool corrupt_softmax = cfg.fault_injection == "softmax_family_grad";
  const bool corrupt_gb = cfg.fault_injection == "gb_cosface_grad";

  auto softmax_grad = [&](const ScoreBundle& b, const LossConfig& c) {
    GradientBundle g = softmax_family_grad(b, c);
    if (corrupt_softmax) corrupt(g);
    return g;
  };
  auto gb_grad = [&](const ScoreBundle& b, double p_v, const LossConfig& c) {
    auto [g, diag] = gb_cosface_grad(b, p_v, c);
    if (corrupt_gb) {
      corrupt(g);
      diag.g_t = std::abs(g.d_py);
      diag.g_n = std::abs(sum_of(g.d_pi));
    }
    return std::pair{g, diag};
  };

  AuditReport report;

  // Softmax-family variants: finite differences, softmax weighting, balance.
  for (Variant v : {Variant::NormalizedSoftmax, Variant::CosFace, Variant::ArcFace}) {
    const std::string tag(to_string(v));
    Tracker fd("finite-difference/" + tag, "softmax_family_grad", cfg.fd_tolerance);
    Tracker weighting("softmax-weighting/" + tag, "softmax_family_grad", cfg.weighting_tolerance);
    Tracker balance("target-balance/" + tag, "softmax_family_grad", cfg.balance_tolerance);
    for (std::size_t k = 0; k < cfg.draws; ++k) {
      const LossConfig c = draws.config(v);
      const ScoreBundle b = draws.bundle(draws.pick(kNontargetCounts));
      const GradientBundle g = softmax_grad(b, c);
      fd.record(max_fd_error(b, g, [&](const ScoreBundle& x) { return softmax_family_loss(x, c); }, cfg.fd_step),
                c, b);
      if (b.num_nontarget() > 1) weighting.record(max_weighting_error(b, g, c.s), c, b);
      balance.record(std::abs(g.d_margined_target + sum_of(g.d_pi)), c, b);
    }
    report.checks.push_back(fd.finish());
    report.checks.push_back(weighting.finish());
    report.checks.push_back(balance.finish());
  }

  // GB-CosFace with a detached boundary.
  {
    Tracker fd("finite-difference/gb-cosface", "gb_cosface_grad", cfg.fd_tolerance);
    Tracker fd_ante("finite-difference/antetype", "antetype_grad", cfg.fd_tolerance);
    Tracker weighting("softmax-weighting/gb-cosface", "gb_cosface_grad", cfg.weighting_tolerance);
    Tracker balance("balance-at-p-hat-v/gb-cosface", "gb_cosface_grad", cfg.balance_tolerance);
    Tracker balance_ante("balance-at-p-hat-v/antetype", "antetype_grad", cfg.balance_tolerance);
    for (std::size_t k = 0; k < cfg.draws; ++k) {
      const LossConfig c = draws.config(Variant::GBCosFace);
      const ScoreBundle b = draws.bundle(draws.pick(kNontargetCounts));
      const double p_hat_v = balanced_threshold(b, c.s);
      const double p_v = p_hat_v + draws.uniform(-0.2, 0.2);

      const auto [g, diag] = gb_grad(b, p_v, c);
      fd.record(max_fd_error(b, g, [&](const ScoreBundle& x) { return gb_cosface_loss(x, p_v, c); }, cfg.fd_step),
                c, b, p_v);
      if (b.num_nontarget() > 1) weighting.record(max_weighting_error(b, g, c.s), c, b, p_v);

      const GradientBundle ga = antetype_grad(b, p_v, c);
      fd_ante.record(max_fd_error(b, ga,
                                  [&](const ScoreBundle& x) {
                                    const AntetypeLoss l = antetype_loss(x, p_v, c);
                                    return l.target + l.nontarget;
                                  },
                                  cfg.fd_step),
                     c, b, p_v);

      const auto [g_bal, diag_bal] = gb_grad(b, p_hat_v, c);
      balance.record(std::abs(diag_bal.g_t - diag_bal.g_n), c, b, p_hat_v);
      const GradientBundle ga_bal = antetype_grad(b, p_hat_v, c);
      balance_ante.record(std::abs(std::abs(ga_bal.d_py) - std::abs(sum_of(ga_bal.d_pi))), c, b, p_hat_v);
    }
    report.checks.push_back(fd.finish());
    report.checks.push_back(fd_ante.finish());
    report.checks.push_back(weighting.finish());
    report.checks.push_back(balance.finish());
    report.checks.push_back(balance_ante.finish());
  }

  // alpha = 0 reduces to CosFace with margin 2m.
  {
    Tracker eq("cosface-2m-equivalence", "gb_cosface_grad", cfg.equivalence_tolerance);
    const BoundaryState unused(0.01);
    for (std::size_t k = 0; k < cfg.equivalence_draws; ++k) {
      const LossConfig c = LossConfig::gb_cosface(draws.pick(kScales), draws.pick(kGbMargins), 0.0, 0.01);
      const ScoreBundle b = draws.bundle(kNontargetCounts[k % kNontargetCounts.size()]);
      const double p_v = mixed_boundary(balanced_threshold(b, c.s), unused, 0.0);
      const GradientBundle g = gb_grad(b, p_v, c).first;
      const GradientBundle ref = softmax_family_grad(b, LossConfig::cosface(c.s, 2.0 * c.m));
      double worst = std::abs(g.d_py - ref.d_py);
      for (std::size_t i = 0; i < g.d_pi.size(); ++i) worst = std::max(worst, std::abs(g.d_pi[i] - ref.d_pi[i]));
      eq.record(worst, c, b, p_v);
    }
    report.checks.push_back(eq.finish());
  }

  // (1/s) L is non-increasing in s and approaches the hard objective.
  {
    Tracker monotone("smooth-limit-monotone", "softmax_family_loss", 1e-12);
    Tracker gap("smooth-limit-gap", "softmax_family_loss", cfg.smooth_limit_gap);
    constexpr std::array<double, 6> grid{1.0, 4.0, 16.0, 64.0, 256.0, 512.0};
    for (std::size_t k = 0; k < cfg.draws; ++k) {
      const Variant v = std::array{Variant::NormalizedSoftmax, Variant::CosFace, Variant::ArcFace}[k % 3];
      LossConfig c = draws.config(v);
      const ScoreBundle b = draws.bundle(draws.pick(kNontargetCounts));
      double prev = std::numeric_limits<double>::infinity();
      double worst_rise = 0.0;
      for (double s : grid) {
        c.s = s;
        const double scaled = softmax_family_loss(b, c) / s;
        worst_rise = std::max(worst_rise, scaled - prev);
        prev = scaled;
      }
      monotone.record(worst_rise, c, b);
      gap.record(std::abs(prev - hard_objective(b, c)), c, b);
    }
    report.checks.push_back(monotone.finish());
    report.checks.push_back(gap.finish());
  }

  return report;
}

}  // namespace gbcos
