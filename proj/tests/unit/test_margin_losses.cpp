#include <gtest/gtest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include "expect_error.hpp"
#include "generators.hpp"
#include "oracles.hpp"

#include "gbcos/gradient_audit.hpp"
#include "gbcos/margin_losses.hpp"

using namespace gbcos;
using gbcos::testing::Gen;

namespace {

constexpr std::array<double, 3> kScales{8.0, 32.0, 64.0};
constexpr std::array<std::size_t, 3> kNonTargets{1, 9, 99};

LossConfig random_softmax_family(Gen& g) {
  const double s = g.pick(kScales);
  switch (g.index(3)) {
    case 0:
      return LossConfig::normalized_softmax(s);
    case 1:
      return LossConfig::cosface(s, g.uniform(0.0, 0.4));
    default:
      return LossConfig::arcface(s, g.uniform(0.0, 0.6));
  }
}

// ArcFace draws keep theta_y + m_theta clear of the clamp at pi, where the
// loss has a kink in p_y.
ScoreBundle random_bundle_for(Gen& g, const LossConfig& cfg) {
  for (;;) {
    ScoreBundle b = g.bundle(g.pick(kNonTargets));
    if (cfg.variant != Variant::ArcFace) return b;
    if (std::abs(b.p_y()) < 0.99 && std::acos(b.p_y()) + cfg.m_theta < std::numbers::pi - 1e-3) return b;
  }
}

double fd_target(const ScoreBundle& b, const LossConfig& cfg, double h) {
  return (softmax_family_loss(b.with_target(b.p_y() + h), cfg) - softmax_family_loss(b.with_target(b.p_y() - h), cfg)) /
         (2.0 * h);
}

double fd_nontarget(const ScoreBundle& b, std::size_t i, const LossConfig& cfg, double h) {
  const double p = b.p_nontarget()[i];
  return (softmax_family_loss(b.with_nontarget(i, p + h), cfg) -
          softmax_family_loss(b.with_nontarget(i, p - h), cfg)) /
         (2.0 * h);
}

}  // namespace

TEST(LossConfig, DefaultValues) {
  const LossConfig c;
  EXPECT_EQ(c.s, 32.0);
  EXPECT_EQ(c.m, 0.16);
  EXPECT_EQ(c.alpha, 0.15);
  EXPECT_EQ(c.gamma, 0.01);
  EXPECT_NO_THROW(c.validate());
}

TEST(LossConfig, RejectsVariantMarginConflicts) {
  LossConfig c = LossConfig::normalized_softmax(32.0);
  c.m_p = 0.1;
  EXPECT_GBCOS_ERROR(c.validate(), ErrorCode::InvalidConfig);
  c = LossConfig::cosface(32.0, 0.3);
  c.m_theta = 0.1;
  EXPECT_GBCOS_ERROR(c.validate(), ErrorCode::InvalidConfig);
  c = LossConfig::arcface(32.0, 0.5);
  c.m_p = 0.1;
  EXPECT_GBCOS_ERROR(c.validate(), ErrorCode::InvalidConfig);
}

TEST(LossConfig, RejectsOutOfRangeValues) {
  auto bad = [](auto mutate) {
    LossConfig c;
    mutate(c);
    EXPECT_GBCOS_ERROR(c.validate(), ErrorCode::InvalidConfig);
  };
  bad([](LossConfig& c) { c.s = 0.0; });
  bad([](LossConfig& c) { c.s = INFINITY; });
  bad([](LossConfig& c) { c.m = -0.01; });
  bad([](LossConfig& c) { c.alpha = 1.5; });
  bad([](LossConfig& c) { c.gamma = 0.0; });
  bad([](LossConfig& c) { c.gamma = NAN; });
}

TEST(Variant, NamesRoundTrip) {
  for (Variant v : {Variant::NormalizedSoftmax, Variant::CosFace, Variant::ArcFace, Variant::GBCosFace}) {
    EXPECT_EQ(variant_from_string(to_string(v)), v);
  }
  EXPECT_EQ(variant_from_string("gb-cosface"), Variant::GBCosFace);
  EXPECT_GBCOS_ERROR(variant_from_string("sphereface"), ErrorCode::InvalidConfig);
}

TEST(ScoreBundle, RejectsEmptyAndOutOfRange) {
  EXPECT_GBCOS_ERROR(ScoreBundle(0.5, std::vector<double>{}), ErrorCode::InvalidArgument);
  EXPECT_GBCOS_ERROR(ScoreBundle(1.01, std::vector<double>(1, 0.0)), ErrorCode::InvalidArgument);
  EXPECT_GBCOS_ERROR(ScoreBundle(0.0, std::vector<double>(1, -1.5)), ErrorCode::InvalidArgument);
}

TEST(ScoreBundle, AggregateBoundsMaximum) {
  Gen g(201);
  for (int trial = 0; trial < 1000; ++trial) {
    const ScoreBundle b = g.bundle(g.pick(kNonTargets));
    const double s = g.pick(kScales);
    const double top = *std::ranges::max_element(b.p_nontarget());
    EXPECT_GE(b.p_n(s), top);
    EXPECT_LE(b.p_n(s), top + std::log(static_cast<double>(b.num_nontarget())) / s + 1e-15);
  }
}

TEST(SoftmaxFamilyLoss, UniformTenClassIsLnTen) {
  for (double s : {1.0, 8.0, 32.0, 64.0}) {
    const ScoreBundle b(0.37, std::vector<double>(9, 0.37));
    EXPECT_NEAR(softmax_family_loss(b, LossConfig::normalized_softmax(s)), std::log(10.0), 1e-12);
  }
}

TEST(SoftmaxFamilyLoss, BinaryTieIsLnTwo) {
  const ScoreBundle b(-0.2, std::vector<double>(1, -0.2));
  EXPECT_NEAR(softmax_family_loss(b, LossConfig::normalized_softmax(16.0)), std::numbers::ln2, 1e-14);
  EXPECT_NEAR(softmax_family_loss(b, LossConfig::cosface(16.0, 0.0)), std::numbers::ln2, 1e-14);
  EXPECT_NEAR(softmax_family_loss(b, LossConfig::arcface(16.0, 0.0)), std::numbers::ln2, 1e-12);
}

TEST(SoftmaxFamilyLoss, CosFaceMatchesDirectExponentiation) {
  Gen g(202);
  const LossConfig cfg = LossConfig::cosface(32.0, 0.32);
  for (int trial = 0; trial < 1000; ++trial) {
    const ScoreBundle b = g.bundle(g.pick(kNonTargets));
    const double want = static_cast<double>(oracle::softmax_family_loss(b.p_y(), b.p_nontarget(), 32.0, 0.0, 0.32));
    EXPECT_NEAR(softmax_family_loss(b, cfg), want, 1e-9 * std::max(1.0, std::abs(want)));
  }
}

TEST(SoftmaxFamilyLoss, EveryVariantMatchesOracleAndIsPositive) {
  Gen g(203);
  for (int trial = 0; trial < 1000; ++trial) {
    const LossConfig cfg = random_softmax_family(g);
    const ScoreBundle b = random_bundle_for(g, cfg);
    const double got = softmax_family_loss(b, cfg);
    const double want =
        static_cast<double>(oracle::softmax_family_loss(b.p_y(), b.p_nontarget(), cfg.s, cfg.m_theta, cfg.m_p));
    EXPECT_GT(got, 0.0);
    EXPECT_NEAR(got, want, 1e-9 * std::max(1.0, std::abs(want)));
  }
}

TEST(SoftmaxFamilyLoss, RejectsGbVariantAndBadConfig) {
  const ScoreBundle b(0.5, std::vector<double>(2, 0.1));
  EXPECT_GBCOS_ERROR(softmax_family_loss(b, LossConfig{}), ErrorCode::InvalidConfig);
  LossConfig bad = LossConfig::cosface(32.0, 0.3);
  bad.m_theta = 0.2;
  EXPECT_GBCOS_ERROR(softmax_family_loss(b, bad), ErrorCode::InvalidConfig);
  EXPECT_GBCOS_ERROR(softmax_family_grad(b, bad), ErrorCode::InvalidConfig);
}

TEST(SoftmaxFamilyLoss, NoOverflowAtExtremeScores) {
  const ScoreBundle b(-1.0, std::vector<double>(99, 1.0));
  const double loss = softmax_family_loss(b, LossConfig::cosface(64.0, 0.35));
  EXPECT_TRUE(std::isfinite(loss));
  EXPECT_NEAR(loss, 64.0 * 2.35 + std::log(99.0), 1e-9);
}

TEST(SoftmaxFamilyGrad, BinaryCosFaceSymmetric) {
  const ScoreBundle b(0.4, std::vector<double>(1, 0.4));
  const GradientBundle g = softmax_family_grad(b, LossConfig::cosface(1.0, 0.0));
  EXPECT_NEAR(g.d_py, -0.5, 1e-15);
  ASSERT_EQ(g.d_pi.size(), 1u);
  EXPECT_NEAR(g.d_pi[0], 0.5, 1e-15);
}

TEST(SoftmaxFamilyGrad, CosFaceTargetGradientClosedForm) {
  Gen g(204);
  for (int trial = 0; trial < 500; ++trial) {
    const double s = g.pick(kScales), m_p = g.uniform(0.0, 0.4);
    const ScoreBundle b = g.bundle(g.pick(kNonTargets));
    oracle::ld num = 0.0L;
    for (double p : b.p_nontarget()) num += std::exp(static_cast<oracle::ld>(s) * p);
    const oracle::ld want = -s * num / (std::exp(static_cast<oracle::ld>(s) * (b.p_y() - m_p)) + num);
    EXPECT_NEAR(softmax_family_grad(b, LossConfig::cosface(s, m_p)).d_py, static_cast<double>(want),
                1e-12 * s);
  }
}

TEST(SoftmaxFamilyGrad, CosFaceSumIsZero) {
  Gen g(205);
  for (int trial = 0; trial < 1000; ++trial) {
    const ScoreBundle b = g.bundle(g.pick(kNonTargets));
    const GradientBundle gr = softmax_family_grad(b, LossConfig::cosface(g.pick(kScales), g.uniform(0.0, 0.4)));
    double sum = gr.d_py;
    for (double d : gr.d_pi) sum += d;
    EXPECT_NEAR(sum, 0.0, 1e-12);
  }
}

// Target/non-target balance on the margined target logit, which is where it
// holds exactly for all three variants.
TEST(SoftmaxFamilyGrad, TargetAndNonTargetGradientsBalance) {
  Gen g(206);
  for (int trial = 0; trial < 2000; ++trial) {
    const LossConfig cfg = random_softmax_family(g);
    const GradientBundle gr = softmax_family_grad(random_bundle_for(g, cfg), cfg);
    double sum = gr.d_margined_target;
    for (double d : gr.d_pi) sum += d;
    EXPECT_NEAR(sum, 0.0, 1e-10);
    if (cfg.variant != Variant::ArcFace) {
      EXPECT_EQ(gr.d_py, gr.d_margined_target);
    }
  }
}

TEST(SoftmaxFamilyGrad, NonTargetGradientsFollowSoftmaxWeights) {
  Gen g(207);
  for (int trial = 0; trial < 2000; ++trial) {
    const LossConfig cfg = random_softmax_family(g);
    const ScoreBundle b = random_bundle_for(g, cfg);
    if (b.num_nontarget() < 2) continue;
    const GradientBundle gr = softmax_family_grad(b, cfg);
    const auto p = b.p_nontarget();
    const std::size_t k = g.index(p.size());
    std::size_t j = g.index(p.size() - 1);
    if (j >= k) ++j;
    const double ratio = gr.d_pi[k] / gr.d_pi[j];
    const double want = std::exp(cfg.s * (p[k] - p[j]));
    EXPECT_NEAR(ratio, want, 1e-9 * want) << "s=" << cfg.s << " variant=" << to_string(cfg.variant);
  }
}

TEST(SoftmaxFamilyGrad, AgreesWithCentralDifferences) {
  Gen g(208);
  const double h = 1e-6;
  for (int trial = 0; trial < 1000; ++trial) {
    const LossConfig cfg = random_softmax_family(g);
    const ScoreBundle b = random_bundle_for(g, cfg);
    const GradientBundle gr = softmax_family_grad(b, cfg);
    EXPECT_LT(gradient_error(gr.d_py, fd_target(b, cfg, h)), 1e-5) << to_string(cfg.variant);
    const std::size_t i = g.index(b.num_nontarget());
    EXPECT_LT(gradient_error(gr.d_pi[i], fd_nontarget(b, i, cfg, h)), 1e-5) << to_string(cfg.variant);
  }
}

TEST(SoftmaxFamilyGrad, ArcFaceClampAtPi) {
  const ScoreBundle b(-0.99, std::vector<double>(3, 0.2));
  const SoftmaxFamilyResult r = softmax_family_eval(b, LossConfig::arcface(32.0, 0.5));
  EXPECT_TRUE(r.angle_clamped);
  EXPECT_EQ(r.grad.d_py, 0.0);
  EXPECT_TRUE(std::isfinite(r.loss));
  // cos(pi) = -1 is the margined target once clamped.
  EXPECT_NEAR(r.loss, static_cast<double>(oracle::softmax_family_loss(1.0, b.p_nontarget(), 32.0, std::acos(-1.0), 0.0)),
              1e-9);
  EXPECT_FALSE(softmax_family_eval(b, LossConfig::arcface(32.0, 0.05)).angle_clamped);
}

TEST(HardObjective, Examples) {
  const LossConfig plain = LossConfig::normalized_softmax(32.0);
  const ScoreBundle separated(0.9, {0.3, -0.1}), inverted(0.3, {0.9, -0.1});
  EXPECT_EQ(hard_objective(separated, plain), 0.0);
  EXPECT_NEAR(hard_objective(inverted, plain), 0.6, 1e-15);
}

TEST(HardObjective, ScaledLossDescendsToIt) {
  Gen g(209);
  for (int trial = 0; trial < 500; ++trial) {
    LossConfig cfg = random_softmax_family(g);
    const ScoreBundle b = ScoreBundle(g.uniform(-0.99, 0.99), g.uniforms(1 + g.index(10), -0.99, 0.99));
    const double hard = hard_objective(b, cfg);
    double prev = INFINITY;
    for (double s : {1.0, 4.0, 16.0, 64.0, 256.0}) {
      cfg.s = s;
      const double scaled = softmax_family_loss(b, cfg) / s;
      EXPECT_LE(scaled, prev + 1e-15);
      EXPECT_GE(scaled, hard - 1e-15);
      prev = scaled;
    }
    cfg.s = 512.0;
    EXPECT_LT(softmax_family_loss(b, cfg) / 512.0 - hard, 0.02);
  }
}

TEST(SoftmaxFamilyLoss, MonotoneInTargetAndNonTargets) {
  Gen g(210);
  const double eps = 1e-4;
  for (int trial = 0; trial < 1000; ++trial) {
    const LossConfig cfg = random_softmax_family(g);
    ScoreBundle b = random_bundle_for(g, cfg);
    const double base = softmax_family_loss(b, cfg);
    EXPECT_LT(softmax_family_loss(b.with_target(b.p_y() + eps), cfg), base);
    EXPECT_GT(softmax_family_loss(b.with_target(b.p_y() - eps), cfg), base);
    const std::size_t i = g.index(b.num_nontarget());
    const double p = b.p_nontarget()[i];
    const double up = softmax_family_loss(b.with_nontarget(i, p + eps), cfg);
    const double down = softmax_family_loss(b.with_nontarget(i, p - eps), cfg);
    // A non-target buried under the others can move the loss by less than an ulp.
    if (softmax_family_grad(b, cfg).d_pi[i] * eps > 1e-13 * base) {
      EXPECT_GT(up, base);
      EXPECT_LT(down, base);
    } else {
      EXPECT_GE(up, base);
      EXPECT_LE(down, base);
    }
  }
}

TEST(Softplus, StableAtExtremes) {
  EXPECT_EQ(softplus(-800.0), 0.0);
  EXPECT_EQ(softplus(800.0), 800.0);
  EXPECT_NEAR(softplus(0.0), std::numbers::ln2, 1e-16);
  EXPECT_EQ(sigmoid(-800.0), 0.0);
  EXPECT_EQ(sigmoid(800.0), 1.0);
  EXPECT_EQ(sigmoid(0.0), 0.5);
}
