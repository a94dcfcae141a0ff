#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "expect_error.hpp"
#include "generators.hpp"
#include "oracles.hpp"

#include "gbcos/eval_metrics.hpp"
#include "gbcos/toy_trainer.hpp"

using namespace gbcos;
using gbcos::testing::Gen;

namespace {

SphereBatch clustered_batch(std::size_t ids, std::size_t per_id, double spread, std::uint64_t seed) {
  ToyDatasetSpec spec;
  spec.n_ids = ids;
  spec.samples_per_id = per_id;
  spec.concentration = spread;
  spec.seed = seed;
  return generate_dataset(spec).samples;
}

SphereBatch rotated(const SphereBatch& batch, const std::vector<double>& q) {
  RowMatrix rows(batch.size(), batch.dim());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto r = gbcos::testing::apply(q, batch.row(i));
    std::ranges::copy(r, rows.row(i).begin());
  }
  return SphereBatch::from_raw(rows, batch.labels(), batch.num_classes());
}

std::size_t count_at_least(const std::vector<double>& v, double t) {
  return static_cast<std::size_t>(std::ranges::count_if(v, [t](double x) { return x >= t; }));
}

const std::vector<double> kLevels{1e-3, 1e-2, 1e-1};

}  // namespace

TEST(BuildPairs, TwoByTwo) {
  const SphereBatch batch = clustered_batch(2, 2, 0.1, 3);
  const PairSet pairs = build_pairs(batch, 100, 1);
  EXPECT_EQ(pairs.genuine.size(), 2u);
  EXPECT_EQ(pairs.impostor.size(), 4u);
  EXPECT_NO_THROW(validate_pairs(pairs, batch));
}

TEST(BuildPairs, ExhaustiveCountsMatchCombinatorics) {
  const SphereBatch batch = clustered_batch(10, 20, 0.35, 4);
  const PairSet pairs = build_pairs(batch, 100000, 1);
  EXPECT_EQ(pairs.genuine.size(), 190u * 10u);
  EXPECT_EQ(pairs.impostor.size(), 400u * 45u);
  EXPECT_NO_THROW(validate_pairs(pairs, batch));
  for (const auto& [i, j] : pairs.genuine) EXPECT_LT(i, j);
  for (const auto& [i, j] : pairs.impostor) EXPECT_LT(i, j);
}

TEST(BuildPairs, CappedSamplingIsSeededAndDistinct) {
  const SphereBatch batch = clustered_batch(6, 12, 0.35, 5);
  const PairSet a = build_pairs(batch, 7, 42), b = build_pairs(batch, 7, 42), c = build_pairs(batch, 7, 43);
  EXPECT_EQ(a.genuine, b.genuine);
  EXPECT_EQ(a.impostor, b.impostor);
  EXPECT_NE(a.impostor, c.impostor);
  EXPECT_EQ(a.genuine.size(), 7u * 6u);
  EXPECT_EQ(a.impostor.size(), 7u * 15u);
  EXPECT_NO_THROW(validate_pairs(a, batch));
}

TEST(BuildPairs, InsufficientData) {
  RowMatrix rows(3, 2, 0.0);
  rows(0, 0) = rows(1, 0) = 1.0;
  rows(2, 1) = 1.0;
  const SphereBatch batch(rows, std::vector<int>{0, 0, 1}, 2);
  EXPECT_GBCOS_ERROR(build_pairs(batch, 10, 1), ErrorCode::InsufficientData);
}

TEST(ValidatePairs, RejectsMalformedSets) {
  const SphereBatch batch = clustered_batch(2, 3, 0.1, 3);
  PairSet self{{{0, 0}}, {{0, 3}}};
  EXPECT_GBCOS_ERROR(validate_pairs(self, batch), ErrorCode::InvalidArgument);
  PairSet repeat{{{0, 1}, {1, 0}}, {{0, 3}}};
  EXPECT_GBCOS_ERROR(validate_pairs(repeat, batch), ErrorCode::InvalidArgument);
  PairSet mislabelled{{{0, 3}}, {{0, 4}}};
  EXPECT_GBCOS_ERROR(validate_pairs(mislabelled, batch), ErrorCode::InvalidArgument);
  PairSet out_of_range{{{0, 1}}, {{0, 60}}};
  EXPECT_GBCOS_ERROR(validate_pairs(out_of_range, batch), ErrorCode::InvalidArgument);
}

TEST(VerificationReport, SeparableScores) {
  const std::vector<double> gen(500, 0.9), imp(500, 0.1), levels{0.01};
  const VerificationReport r = verification_report(gen, imp, levels);
  ASSERT_EQ(r.tar_at_far.size(), 1u);
  EXPECT_EQ(r.tar_at_far[0].tar, 1.0);
  EXPECT_LE(r.tar_at_far[0].achieved_far, 0.01);
}

TEST(VerificationReport, ChanceLevelWhenDistributionsMatch) {
  Gen g(501);
  const auto gen = g.uniforms(100000, -1.0, 1.0), imp = g.uniforms(100000, -1.0, 1.0);
  const VerificationReport r = verification_report(gen, imp, kLevels);
  for (const TarAtFar& t : r.tar_at_far) EXPECT_NEAR(t.tar, t.far_level, 3.0 * std::sqrt(t.far_level / 1e5) + 1e-3);
}

TEST(VerificationReport, MatchesBruteForceScan) {
  Gen g(502);
  for (int trial = 0; trial < 20; ++trial) {
    auto gen = g.uniforms(1000, -1.0, 1.0), imp = g.uniforms(1000, -1.0, 1.0);
    if (trial % 2 == 1) {
      // Coarse grid to force ties.
      for (double& x : gen) x = std::round(x * 50.0) / 50.0;
      for (double& x : imp) x = std::round(x * 50.0) / 50.0;
    }
    const std::vector<double> levels{1e-3, 5e-3, 1e-2, 0.1, 0.5};
    const VerificationReport r = verification_report(gen, imp, levels);
    for (std::size_t k = 0; k < levels.size(); ++k) {
      const oracle::ScanResult want = oracle::threshold_scan(gen, imp, levels[k]);
      EXPECT_EQ(r.tar_at_far[k].threshold, want.threshold);
      EXPECT_EQ(r.tar_at_far[k].tar, want.tar);
      EXPECT_EQ(r.tar_at_far[k].achieved_far, want.far);
      EXPECT_EQ(r.tar_at_far[k].far_level, levels[k]);
    }
  }
}

TEST(VerificationReport, RocMonotoneAndRecountable) {
  Gen g(503);
  for (int trial = 0; trial < 20; ++trial) {
    auto gen = g.uniforms(300, -0.2, 1.0), imp = g.uniforms(700, -1.0, 0.6);
    if (trial % 2 == 1)
      for (double& x : imp) x = std::round(x * 20.0) / 20.0;
    const VerificationReport r = verification_report(gen, imp, kLevels);
    ASSERT_FALSE(r.roc.empty());
    for (std::size_t k = 0; k < r.roc.size(); ++k) {
      const RocPoint& p = r.roc[k];
      EXPECT_EQ(p.far, static_cast<double>(count_at_least(imp, p.threshold)) / imp.size());
      EXPECT_EQ(p.tar, static_cast<double>(count_at_least(gen, p.threshold)) / gen.size());
      if (k > 0) {
        EXPECT_GT(p.threshold, r.roc[k - 1].threshold);
        EXPECT_LE(p.far, r.roc[k - 1].far);
        EXPECT_LE(p.tar, r.roc[k - 1].tar);
      }
    }
    for (const TarAtFar& t : r.tar_at_far) {
      EXPECT_LE(t.achieved_far, t.far_level);
      EXPECT_EQ(t.achieved_far, static_cast<double>(count_at_least(imp, t.threshold)) / imp.size());
    }
  }
}

TEST(VerificationReport, WarnsWhenImpostorsAreTooFew) {
  const std::vector<double> gen(10, 0.5), imp(50, 0.1);
  EXPECT_EQ(verification_report(gen, imp, kLevels).warnings.size(), 1u);
  const std::vector<double> many(1000, 0.1);
  EXPECT_TRUE(verification_report(gen, many, kLevels).warnings.empty());
}

TEST(VerificationReport, Errors) {
  const std::vector<double> some(3, 0.5), none;
  EXPECT_GBCOS_ERROR(verification_report(none, some, kLevels), ErrorCode::EmptyPairs);
  EXPECT_GBCOS_ERROR(verification_report(some, none, kLevels), ErrorCode::EmptyPairs);
  const std::vector<double> unsorted{0.1, 0.01}, outside{0.5, 1.0};
  EXPECT_GBCOS_ERROR(verification_report(some, some, unsorted), ErrorCode::InvalidArgument);
  EXPECT_GBCOS_ERROR(verification_report(some, some, outside), ErrorCode::InvalidArgument);
}

TEST(TarAtFar, InvariantUnderRotation) {
  Gen g(504);
  for (int trial = 0; trial < 5; ++trial) {
    const SphereBatch batch = clustered_batch(8, 15, 0.5, 10 + trial);
    const PairSet pairs = build_pairs(batch, 100000, 1);
    const SphereBatch turned = rotated(batch, g.rotation(batch.dim()));
    const VerificationReport a = tar_at_far(pairs, batch, kLevels);
    const VerificationReport b = tar_at_far(pairs, turned, kLevels);
    for (std::size_t k = 0; k < kLevels.size(); ++k) {
      EXPECT_NEAR(a.tar_at_far[k].tar, b.tar_at_far[k].tar, 1e-9);
      EXPECT_NEAR(a.tar_at_far[k].threshold, b.tar_at_far[k].threshold, 1e-9);
      EXPECT_NEAR(a.tar_at_far[k].achieved_far, b.tar_at_far[k].achieved_far, 1e-9);
    }
    const ClusterStats sa = cluster_stats(batch), sb = cluster_stats(turned);
    EXPECT_NEAR(sa.intra_class_mean_cosine, sb.intra_class_mean_cosine, 1e-9);
    EXPECT_NEAR(sa.inter_class_max_cosine, sb.inter_class_max_cosine, 1e-9);
  }
}

TEST(PairSimilarities, AreClampedDotProducts) {
  const SphereBatch batch = clustered_batch(3, 4, 0.3, 6);
  const PairSet pairs = build_pairs(batch, 100, 1);
  const auto sims = pair_similarities(pairs.impostor, batch);
  ASSERT_EQ(sims.size(), pairs.impostor.size());
  for (std::size_t k = 0; k < sims.size(); ++k) {
    const auto [i, j] = pairs.impostor[k];
    EXPECT_EQ(sims[k], clamp_cosine(dot(batch.row(i), batch.row(j))));
  }
}

TEST(ClusterStats, IdenticalSamplesGiveUnitIntra) {
  const SphereBatch batch = clustered_batch(4, 5, 0.0, 7);
  EXPECT_NEAR(cluster_stats(batch).intra_class_mean_cosine, 1.0, 1e-12);
}

TEST(ClusterStats, AntipodalClasses) {
  RowMatrix rows(4, 3, 0.0);
  rows(0, 2) = rows(1, 2) = 1.0;
  rows(2, 2) = rows(3, 2) = -1.0;
  const SphereBatch batch(rows, std::vector<int>{0, 0, 1, 1}, 2);
  const ClusterStats s = cluster_stats(batch);
  EXPECT_EQ(s.inter_class_max_cosine, -1.0);
  EXPECT_EQ(s.intra_class_mean_cosine, 1.0);
}

TEST(ClusterStats, MatchesNaiveLoops) {
  Gen g(505);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t ids = 2 + g.index(8), dim = 2 + g.index(6), n = ids * (2 + g.index(10));
    RowMatrix raw(n, dim);
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
      labels[i] = static_cast<int>(i % ids);
      for (std::size_t j = 0; j < dim; ++j) raw(i, j) = g.normal();
    }
    const SphereBatch batch = SphereBatch::from_raw(raw, labels, ids);
    const ClusterStats got = cluster_stats(batch);
    const oracle::NaiveClusterStats want = oracle::cluster_stats(batch);
    EXPECT_NEAR(got.intra_class_mean_cosine, want.intra, 1e-12);
    EXPECT_NEAR(got.inter_class_max_cosine, want.inter, 1e-12);
    for (std::size_t c = 0; c < ids; ++c) EXPECT_NEAR(norm(got.class_means.row(c)), 1.0, 1e-12);
  }
}

TEST(ClusterStats, SingletonClassesAreSkipped) {
  RowMatrix rows(5, 2, 0.0);
  rows(0, 0) = rows(1, 0) = 1.0;
  rows(2, 1) = rows(3, 1) = 1.0;
  rows(4, 0) = -1.0;
  const SphereBatch batch(rows, std::vector<int>{0, 0, 1, 1, 2}, 4);
  const ClusterStats s = cluster_stats(batch);
  EXPECT_EQ(s.skipped_classes, std::vector<int>{2});
  EXPECT_EQ(s.intra_class_mean_cosine, 1.0);
  EXPECT_NEAR(s.inter_class_max_cosine, 0.0, 1e-15);
}

TEST(ClusterStats, NeedsTwoPopulatedClasses) {
  RowMatrix rows(2, 2, 0.0);
  rows(0, 0) = rows(1, 0) = 1.0;
  const SphereBatch batch(rows, std::vector<int>{0, 0}, 3);
  EXPECT_GBCOS_ERROR(cluster_stats(batch), ErrorCode::InsufficientData);
}
