#include "gbcos/eval_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <limits>
#include <random>
#include <numeric>
#include <set>

#include "gbcos/error.hpp"

namespace gbcos {

namespace {

std::vector<std::vector<std::size_t>> members_by_class(const SphereBatch& batch) {
  std::vector<std::vector<std::size_t>> members(batch.num_classes());
  for (std::size_t i = 0; i < batch.size(); ++i) members[static_cast<std::size_t>(batch.label(i))].push_back(i);
  return members;
}

// Picks `cap` of `total` enumerated pairs without replacement, preserving
// enumeration order, and materializes them through `pair_at`.
template <class PairAt>
void take_pairs(std::size_t total, std::size_t cap, std::mt19937_64& rng, PairAt pair_at,
                std::vector<IndexPair>& out) {
  if (total <= cap) {
    for (std::size_t k = 0; k < total; ++k) out.push_back(pair_at(k));
    return;
  }
  std::vector<std::size_t> all(total), picked;
  std::iota(all.begin(), all.end(), std::size_t{0});
  picked.reserve(cap);
  std::ranges::sample(all, std::back_inserter(picked), static_cast<std::ptrdiff_t>(cap), rng);
  for (std::size_t k : picked) out.push_back(pair_at(k));
}

}  // namespace

PairSet build_pairs(const SphereBatch& batch, std::size_t max_pairs_per_class, std::uint64_t seed) {
  const auto members = members_by_class(batch);
  const auto eligible = std::ranges::count_if(members, [](const auto& m) { return m.size() >= 2; });
  if (eligible < 2) throw Error(ErrorCode::InsufficientData, "need two identities with two samples each");
  if (max_pairs_per_class == 0) throw Error(ErrorCode::InvalidArgument, "max_pairs_per_class must be positive");

  std::mt19937_64 rng(seed);
  PairSet out;
  for (const auto& m : members) {
    const std::size_t k = m.size();
    if (k < 2) continue;
    // Row-major enumeration of the strict upper triangle.
    std::vector<IndexPair> all;
    all.reserve(k * (k - 1) / 2);
    for (std::size_t a = 0; a < k; ++a)
      for (std::size_t b = a + 1; b < k; ++b) all.emplace_back(m[a], m[b]);
    take_pairs(all.size(), max_pairs_per_class, rng, [&](std::size_t idx) { return all[idx]; }, out.genuine);
  }
  for (std::size_t ca = 0; ca < members.size(); ++ca) {
    for (std::size_t cb = ca + 1; cb < members.size(); ++cb) {
      const auto& ma = members[ca];
      const auto& mb = members[cb];
      if (ma.empty() || mb.empty()) continue;
      take_pairs(ma.size() * mb.size(), max_pairs_per_class, rng,
                 [&](std::size_t idx) {
                   const std::size_t i = ma[idx / mb.size()], j = mb[idx % mb.size()];
                   return IndexPair{std::min(i, j), std::max(i, j)};
                 },
                 out.impostor);
    }
  }
  return out;
}

void validate_pairs(const PairSet& pairs, const SphereBatch& batch) {
  std::set<IndexPair> seen;
  auto check = [&](const IndexPair& p, bool genuine) {
    const auto [i, j] = p;
    if (i >= batch.size() || j >= batch.size()) throw Error(ErrorCode::InvalidArgument, "pair index out of range");
    if (i == j) throw Error(ErrorCode::InvalidArgument, "self-pair");
    if (!seen.insert({std::min(i, j), std::max(i, j)}).second) throw Error(ErrorCode::InvalidArgument, "repeated pair");
    if ((batch.label(i) == batch.label(j)) != genuine) {
      throw Error(ErrorCode::InvalidArgument, genuine ? "genuine pair spans two identities"
                                                      : "impostor pair shares an identity");
    }
  };
  for (const auto& p : pairs.genuine) check(p, true);
  for (const auto& p : pairs.impostor) check(p, false);
}

std::vector<double> pair_similarities(const std::vector<IndexPair>& pairs, const SphereBatch& batch) {
  std::vector<double> out;
  out.reserve(pairs.size());
  for (const auto& [i, j] : pairs) out.push_back(clamp_cosine(dot(batch.row(i), batch.row(j))));
  return out;
}

VerificationReport verification_report(std::span<const double> genuine, std::span<const double> impostor,
                                       std::span<const double> far_levels) {
  if (genuine.empty() || impostor.empty()) throw Error(ErrorCode::EmptyPairs, "need genuine and impostor pairs");
  if (!std::ranges::is_sorted(far_levels) ||
      !std::ranges::all_of(far_levels, [](double f) { return f > 0.0 && f < 1.0; })) {
    throw Error(ErrorCode::InvalidArgument, "FAR levels must be sorted and inside (0, 1)");
  }

  std::vector<double> gen(genuine.begin(), genuine.end());
  std::vector<double> imp(impostor.begin(), impostor.end());
  std::ranges::sort(gen);
  std::ranges::sort(imp);
  const double n_gen = static_cast<double>(gen.size());
  const double n_imp = static_cast<double>(imp.size());

  auto count_at_least = [](const std::vector<double>& sorted, double t) {
    return static_cast<std::size_t>(sorted.end() - std::ranges::lower_bound(sorted, t));
  };

  VerificationReport report;

  std::vector<double> thresholds;
  thresholds.reserve(gen.size() + imp.size());
  std::ranges::merge(gen, imp, std::back_inserter(thresholds));
  const auto dup = std::ranges::unique(thresholds);
  thresholds.erase(dup.begin(), dup.end());
  report.roc.reserve(thresholds.size());
  for (double t : thresholds) {
    report.roc.push_back({t, static_cast<double>(count_at_least(imp, t)) / n_imp,
                          static_cast<double>(count_at_least(gen, t)) / n_gen});
  }

  for (double f : far_levels) {
    // Largest number of accepted impostors the level allows.
    std::size_t allowed = 0;
    while (allowed + 1 <= imp.size() && static_cast<double>(allowed + 1) / n_imp <= f) ++allowed;
    // The (allowed+1)-th largest impostor score must be rejected.
    const double pivot = imp[imp.size() - 1 - allowed];
    const double t = std::nextafter(pivot, std::numeric_limits<double>::infinity());
    report.tar_at_far.push_back({f, static_cast<double>(count_at_least(gen, t)) / n_gen, t,
                                 static_cast<double>(count_at_least(imp, t)) / n_imp});
  }

  if (!far_levels.empty() && n_imp < 1.0 / far_levels.front()) {
    report.warnings.push_back("only " + std::to_string(imp.size()) +
                              " impostor pairs; the smallest FAR level is not resolvable");
  }
  return report;
}

VerificationReport tar_at_far(const PairSet& pairs, const SphereBatch& batch, std::span<const double> far_levels) {
  validate_pairs(pairs, batch);
  return verification_report(pair_similarities(pairs.genuine, batch), pair_similarities(pairs.impostor, batch),
                             far_levels);
}

ClusterStats cluster_stats(const SphereBatch& batch) {
  const auto members = members_by_class(batch);
  const std::size_t d = batch.dim();
  ClusterStats out;
  out.class_means = RowMatrix(members.size(), d);

  std::vector<std::size_t> with_mean;
  double intra_sum = 0.0;
  std::size_t intra_classes = 0;
  for (std::size_t c = 0; c < members.size(); ++c) {
    const auto& m = members[c];
    if (m.empty()) continue;
    std::vector<double> sum(d, 0.0);
    for (std::size_t i : m)
      for (std::size_t k = 0; k < d; ++k) sum[k] += batch.row(i)[k];
    if (norm(sum) > kNormEpsilon) {
      std::ranges::copy(normalize(sum).coords(), out.class_means.row(c).begin());
      with_mean.push_back(c);
    }
    if (m.size() < 2) {
      out.skipped_classes.push_back(static_cast<int>(c));
      continue;
    }
    double pair_sum = 0.0;
    for (std::size_t a = 0; a < m.size(); ++a)
      for (std::size_t b = a + 1; b < m.size(); ++b) pair_sum += dot(batch.row(m[a]), batch.row(m[b]));
    intra_sum += pair_sum / static_cast<double>(m.size() * (m.size() - 1) / 2);
    ++intra_classes;
  }
  if (with_mean.size() < 2) throw Error(ErrorCode::InsufficientData, "need at least two populated classes");

  out.intra_class_mean_cosine = intra_classes > 0 ? intra_sum / static_cast<double>(intra_classes)
                                                  : std::numeric_limits<double>::quiet_NaN();
  double inter = -1.0;
  for (std::size_t a = 0; a < with_mean.size(); ++a)
    for (std::size_t b = a + 1; b < with_mean.size(); ++b)
      inter = std::max(inter, dot(out.class_means.row(with_mean[a]), out.class_means.row(with_mean[b])));
  out.inter_class_max_cosine = clamp_cosine(inter);
  return out;
}

}  // namespace gbcos
