#pragma once

// Desk-scale spherical-embedding experiment: every sample owns a free,
// directly trainable unit embedding; every identity owns a prototype. Both
// are optimized with momentum SGD and retracted onto the sphere after each
// step.

#include <cstdint>
#include <span>
#include <vector>

#include "gbcos/gb_boundary.hpp"
#include "gbcos/margin_losses.hpp"
#include "gbcos/sphere.hpp"

namespace gbcos {

struct ToyDatasetSpec {
  std::size_t n_ids = 10;
  std::size_t samples_per_id = 40;
  std::size_t dim = 3;
  double concentration = 0.35;  ///< std-dev of the isotropic noise added to the unit class mean
  std::uint64_t seed = 7;

  void validate() const;
};

struct ToyDataset {
  SphereBatch samples;  ///< identity-major order
  RowMatrix means;      ///< ground-truth unit class means
  double min_mean_angle = 0.0;
};

/// atan(concentration * E[chi_{dim-1}]): typical angle between a sample and its mean.
double expected_cluster_radius(double concentration, std::size_t dim);

/// Class means by sequential rejection sampling with minimum pairwise angle
/// 2 * expected_cluster_radius; throws SeparationFailure after 10^4 proposals.
ToyDataset generate_dataset(const ToyDatasetSpec& spec);

struct OptimizerConfig {
  double lr = 0.02;  ///< applied to the gradient of the batch-mean loss
  double momentum = 0.9;
  std::size_t batch_size = 20;
  std::size_t epochs = 150;
  std::uint64_t seed = 11;
  /// Step decay points as fractions of total epochs; empty means constant rate.
  std::vector<double> lr_decay_fractions;
  double lr_decay_factor = 0.1;

  void validate() const;
};

struct TrainLogRow {
  std::uint64_t iter = 0;
  double loss = 0.0;
  double g_t_mean = 0.0;
  double g_n_mean = 0.0;
  double p_v_mean = 0.0;
  double p_hat_v_mean = 0.0;
  double p_vg = 0.0;
  double intra_class_mean_cosine = 0.0;
  double inter_class_max_cosine = 0.0;

  friend bool operator==(const TrainLogRow&, const TrainLogRow&) = default;
};

struct TrainState {
  SphereBatch embeddings;
  PrototypeMatrix prototypes;
  BoundaryState boundary;
  RowMatrix embedding_velocity;
  RowMatrix prototype_velocity;
  std::size_t epoch = 0;
  std::uint64_t iter = 0;
};

struct TrainResult {
  TrainState state;
  std::vector<TrainLogRow> log;
};

/// Mini-batch training under any loss variant. For GB-CosFace the global
/// boundary receives one EMA update per batch with the batch mean of p_hat_v;
/// the very first batch seeds it before its gradients are computed. Other
/// variants track the same statistic for logging only.
///
/// Throws NonFiniteLoss naming the iteration when a batch loss is not finite.
TrainResult train(const ToyDataset& data, const LossConfig& cfg, const OptimizerConfig& opt);

struct TrajectoryReport {
  std::size_t window_rows = 0;
  double g_t_mean = 0.0;
  double g_n_mean = 0.0;
  double ratio = 0.0;          ///< g_t_mean / g_n_mean over the final window
  double abs_log_ratio = 0.0;
  double max_row_imbalance = 0.0;  ///< max over all rows of |g_t / g_n - 1|
  double p_vg_mean = 0.0;
  double p_vg_std = 0.0;
  std::vector<double> p_vg_trajectory;

  /// ratio inside [0.8, 1.25]
  bool balanced() const noexcept { return ratio >= 0.8 && ratio <= 1.25; }
};

/// Summary over the final `window_fraction` of the log. Throws InsufficientData below 100 rows.
TrajectoryReport gradient_trajectory_report(std::span<const TrainLogRow> log, double window_fraction = 0.2);

}  // namespace gbcos
