#pragma once

// Open-set verification: two samples are declared the same identity when
// their cosine similarity reaches a global threshold T.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gbcos/sphere.hpp"

namespace gbcos {

using IndexPair = std::pair<std::size_t, std::size_t>;

struct PairSet {
  std::vector<IndexPair> genuine;   ///< same identity, i < j
  std::vector<IndexPair> impostor;  ///< different identities, i < j
};

/// Exhaustive genuine pairs per class and impostor pairs per class pair,
/// each capped at max_pairs_per_class by seeded sampling without replacement.
/// Throws InsufficientData unless two classes have two samples each.
PairSet build_pairs(const SphereBatch& batch, std::size_t max_pairs_per_class, std::uint64_t seed);

/// Throws InvalidArgument on self-pairs, repeats or labels that contradict the batch.
void validate_pairs(const PairSet& pairs, const SphereBatch& batch);

struct RocPoint {
  double threshold;
  double far;
  double tar;
};

struct TarAtFar {
  double far_level;
  double tar;
  double threshold;
  double achieved_far;
};

struct VerificationReport {
  std::vector<RocPoint> roc;        ///< ascending threshold
  std::vector<TarAtFar> tar_at_far; ///< in the order of the requested levels
  std::vector<std::string> warnings;
};

/// Threshold for FAR f is the smallest double T with #{impostor >= T} / #impostor <= f;
/// TAR = #{genuine >= T} / #genuine. Throws EmptyPairs if either list is empty and
/// InvalidArgument unless far_levels are sorted and inside (0, 1).
VerificationReport verification_report(std::span<const double> genuine, std::span<const double> impostor,
                                       std::span<const double> far_levels);

VerificationReport tar_at_far(const PairSet& pairs, const SphereBatch& batch, std::span<const double> far_levels);

/// Cosine similarity of every pair.
std::vector<double> pair_similarities(const std::vector<IndexPair>& pairs, const SphereBatch& batch);

struct ClusterStats {
  double intra_class_mean_cosine = 0.0;  ///< mean over classes of mean pairwise cosine
  double inter_class_max_cosine = 0.0;   ///< max cosine between renormalized class means
  RowMatrix class_means;                 ///< unit rows; zero rows for empty classes
  std::vector<int> skipped_classes;      ///< fewer than two samples
};

/// Throws InsufficientData when fewer than two classes are populated.
ClusterStats cluster_stats(const SphereBatch& batch);

}  // namespace gbcos
