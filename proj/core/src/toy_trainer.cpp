#include "gbcos/toy_trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <string>

#include "gbcos/error.hpp"
#include "gbcos/eval_metrics.hpp"

namespace gbcos {

namespace {

constexpr std::size_t kMaxMeanProposals = 10'000;
constexpr std::size_t kRestartAfterRejections = 500;

std::vector<double> gaussian_vector(std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(dim);
  for (double& x : v) x = normal(rng);
  return v;
}

double current_lr(double base, const OptimizerConfig& opt, std::size_t epoch) {
  double lr = base;
  for (double f : opt.lr_decay_fractions) {
    if (static_cast<double>(epoch) >= f * static_cast<double>(opt.epochs)) lr *= opt.lr_decay_factor;
  }
  return lr;
}

}  // namespace

void ToyDatasetSpec::validate() const {
  if (n_ids < 2) throw Error(ErrorCode::InvalidConfig, "n_ids must be >= 2");
  if (samples_per_id < 2) throw Error(ErrorCode::InvalidConfig, "samples_per_id must be >= 2");
  if (dim < 2) throw Error(ErrorCode::InvalidConfig, "dim must be >= 2");
  if (!(concentration >= 0.0) || !std::isfinite(concentration)) {
    throw Error(ErrorCode::InvalidConfig, "concentration must be a non-negative finite spread");
  }
}

void OptimizerConfig::validate() const {
  if (!(lr >= 0.0)) throw Error(ErrorCode::InvalidConfig, "lr must be >= 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw Error(ErrorCode::InvalidConfig, "momentum must lie in [0, 1)");
  if (batch_size == 0) throw Error(ErrorCode::InvalidConfig, "batch_size must be positive");
  if (epochs == 0) throw Error(ErrorCode::InvalidConfig, "epochs must be positive");
  if (!std::ranges::all_of(lr_decay_fractions, [](double f) { return f > 0.0 && f < 1.0; })) {
    throw Error(ErrorCode::InvalidConfig, "lr_decay_fractions must lie in (0, 1)");
  }
}

double expected_cluster_radius(double concentration, std::size_t dim) {
  // Mean of a chi distribution with dim - 1 degrees of freedom.
  const double k = static_cast<double>(dim - 1);
  const double chi_mean = std::sqrt(2.0) * std::exp(std::lgamma(0.5 * (k + 1.0)) - std::lgamma(0.5 * k));
  return std::atan(concentration * chi_mean);
}

ToyDataset generate_dataset(const ToyDatasetSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  const double min_angle = 2.0 * expected_cluster_radius(spec.concentration, spec.dim);
  const double max_cos = std::cos(min_angle);

  std::vector<UnitVector> means;
  std::size_t proposals = 0, rejections = 0;
  while (means.size() < spec.n_ids) {
    if (proposals++ >= kMaxMeanProposals) {
      throw Error(ErrorCode::SeparationFailure,
                  "could not place " + std::to_string(spec.n_ids) + " class means " +
                      std::to_string(min_angle) + " rad apart");
    }
    UnitVector candidate = normalize(gaussian_vector(spec.dim, rng));
    const bool separated = std::ranges::all_of(
        means, [&](const UnitVector& u) { return dot(u.coords(), candidate.coords()) <= max_cos; });
    if (separated) {
      means.push_back(std::move(candidate));
      rejections = 0;
    } else if (++rejections >= kRestartAfterRejections) {
      means.clear();
      rejections = 0;
    }
  }

  ToyDataset out;
  out.means = RowMatrix(spec.n_ids, spec.dim);
  for (std::size_t c = 0; c < spec.n_ids; ++c) std::ranges::copy(means[c].coords(), out.means.row(c).begin());
  out.min_mean_angle = std::numbers::pi;
  for (std::size_t a = 0; a < spec.n_ids; ++a)
    for (std::size_t b = a + 1; b < spec.n_ids; ++b)
      out.min_mean_angle = std::min(out.min_mean_angle, angle_between(means[a], means[b]));

  RowMatrix raw(spec.n_ids * spec.samples_per_id, spec.dim);
  std::vector<int> labels(raw.rows());
  for (std::size_t c = 0; c < spec.n_ids; ++c) {
    for (std::size_t k = 0; k < spec.samples_per_id; ++k) {
      const std::size_t row = c * spec.samples_per_id + k;
      const auto noise = gaussian_vector(spec.dim, rng);
      for (std::size_t j = 0; j < spec.dim; ++j) raw(row, j) = means[c][j] + spec.concentration * noise[j];
      labels[row] = static_cast<int>(c);
    }
  }
  out.samples = SphereBatch::from_raw(raw, std::move(labels), spec.n_ids);
  return out;
}

TrainResult train(const ToyDataset& data, const LossConfig& cfg, const OptimizerConfig& opt) {
  cfg.validate();
  opt.validate();

  const std::size_t n = data.samples.size();
  const std::size_t d = data.samples.dim();
  const std::size_t n_ids = data.samples.num_classes();
  std::mt19937_64 rng(opt.seed);

  RowMatrix init_protos(n_ids, d);
  for (std::size_t c = 0; c < n_ids; ++c) std::ranges::copy(gaussian_vector(d, rng), init_protos.row(c).begin());

  TrainResult result{TrainState{data.samples, PrototypeMatrix::from_rows(init_protos), BoundaryState(cfg.gamma),
                                RowMatrix(n, d), RowMatrix(n_ids, d), 0, 0},
                     {}};
  TrainState& st = result.state;
  const bool gb = cfg.variant == Variant::GBCosFace;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  std::vector<double> scores(n_ids), nontarget(n_ids - 1);
  RowMatrix proto_grad(n_ids, d);
  std::vector<double> emb_grad(d), step(d);

  for (std::size_t epoch = 0; epoch < opt.epochs; ++epoch) {
    st.epoch = epoch;
    std::ranges::shuffle(order, rng);
    const double lr = current_lr(opt.lr, opt, epoch);

    for (std::size_t begin = 0; begin < n; begin += opt.batch_size) {
      const std::size_t end = std::min(n, begin + opt.batch_size);
      const auto batch = std::span(order).subspan(begin, end - begin);
      const double inv_b = 1.0 / static_cast<double>(batch.size());

      auto bundle_for = [&](std::size_t idx) {
        const auto x = st.embeddings.row(idx);
        const auto y = static_cast<std::size_t>(st.embeddings.label(idx));
        for (std::size_t c = 0; c < n_ids; ++c) scores[c] = clamp_cosine(dot(x, st.prototypes.row(c)));
        std::size_t k = 0;
        for (std::size_t c = 0; c < n_ids; ++c)
          if (c != y) nontarget[k++] = scores[c];
        return ScoreBundle(scores[y], nontarget);
      };

      double p_hat_sum = 0.0;
      bool primed_this_batch = false;
      if (gb && !st.boundary.initialized()) {
        for (std::size_t idx : batch) p_hat_sum += balanced_threshold(bundle_for(idx), cfg.s);
        st.boundary = ema_update(st.boundary, p_hat_sum * inv_b);
        primed_this_batch = true;
      }

      proto_grad = RowMatrix(n_ids, d);
      TrainLogRow row;
      row.iter = st.iter;
      p_hat_sum = 0.0;

      for (std::size_t idx : batch) {
        const ScoreBundle bundle = bundle_for(idx);
        const auto y = static_cast<std::size_t>(st.embeddings.label(idx));
        double loss = 0.0, p_v = 0.0, p_hat_v = 0.0, g_t = 0.0, g_n = 0.0;
        GradientBundle g;
        if (gb) {
          SampleStep sample = per_sample_step(bundle, st.boundary, cfg);
          loss = sample.loss;
          g = std::move(sample.grad);
          p_v = sample.diagnostics.p_v;
          p_hat_v = sample.diagnostics.p_hat_v;
          g_t = sample.diagnostics.g_t;
          g_n = sample.diagnostics.g_n;
        } else {
          SoftmaxFamilyResult r = softmax_family_eval(bundle, cfg);
          loss = r.loss;
          g = std::move(r.grad);
          p_hat_v = balanced_threshold(bundle, cfg.s);
          p_v = p_hat_v;
          g_t = std::abs(g.d_py);
          g_n = std::abs(std::accumulate(g.d_pi.begin(), g.d_pi.end(), 0.0));
        }
        row.loss += loss * inv_b;
        row.g_t_mean += g_t * inv_b;
        row.g_n_mean += g_n * inv_b;
        row.p_v_mean += p_v * inv_b;
        row.p_hat_v_mean += p_hat_v * inv_b;
        p_hat_sum += p_hat_v;

        // Back through p_c = x . w_c.
        const auto x = st.embeddings.row(idx);
        std::fill(emb_grad.begin(), emb_grad.end(), 0.0);
        std::size_t k = 0;
        for (std::size_t c = 0; c < n_ids; ++c) {
          const double dp = (c == y) ? g.d_py : g.d_pi[k++];
          const auto w = st.prototypes.row(c);
          auto pg = proto_grad.row(c);
          for (std::size_t j = 0; j < d; ++j) {
            emb_grad[j] += dp * w[j] * inv_b;
            pg[j] += dp * x[j] * inv_b;
          }
        }
        auto vel = st.embedding_velocity.row(idx);
        for (std::size_t j = 0; j < d; ++j) {
          vel[j] = opt.momentum * vel[j] + emb_grad[j];
          step[j] = x[j] - lr * vel[j];
        }
        st.embeddings.retract_row(idx, step);
      }

      if (!std::isfinite(row.loss)) {
        throw Error(ErrorCode::NonFiniteLoss, "non-finite batch loss at iteration " + std::to_string(st.iter));
      }

      for (std::size_t c = 0; c < n_ids; ++c) {
        const auto w = st.prototypes.row(c);
        auto vel = st.prototype_velocity.row(c);
        const auto pg = proto_grad.row(c);
        for (std::size_t j = 0; j < d; ++j) {
          vel[j] = opt.momentum * vel[j] + pg[j];
          step[j] = w[j] - lr * vel[j];
        }
        st.prototypes.retract_row(c, step);
      }

      // The priming update already consumed this batch's statistics.
      if (!primed_this_batch) st.boundary = ema_update(st.boundary, p_hat_sum * inv_b);

      const ClusterStats stats = cluster_stats(st.embeddings);
      row.p_vg = st.boundary.p_vg();
      row.intra_class_mean_cosine = stats.intra_class_mean_cosine;
      row.inter_class_max_cosine = stats.inter_class_max_cosine;
      result.log.push_back(row);
      ++st.iter;
    }
  }
  st.epoch = opt.epochs;
  return result;
}

TrajectoryReport gradient_trajectory_report(std::span<const TrainLogRow> log, double window_fraction) {
  if (log.size() < 100) throw Error(ErrorCode::InsufficientData, "trajectory report needs at least 100 rows");
  if (!(window_fraction > 0.0 && window_fraction <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "window_fraction must lie in (0, 1]");
  }
  TrajectoryReport out;
  out.window_rows = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(window_fraction * static_cast<double>(log.size()))));
  const auto window = log.last(out.window_rows);
  const double w = static_cast<double>(window.size());

  for (const auto& r : window) {
    out.g_t_mean += r.g_t_mean / w;
    out.g_n_mean += r.g_n_mean / w;
    out.p_vg_mean += r.p_vg / w;
  }
  double var = 0.0;
  for (const auto& r : window) var += (r.p_vg - out.p_vg_mean) * (r.p_vg - out.p_vg_mean) / w;
  out.p_vg_std = std::sqrt(var);
  out.ratio = out.g_t_mean / out.g_n_mean;
  out.abs_log_ratio = std::abs(std::log(out.ratio));

  out.p_vg_trajectory.reserve(log.size());
  for (const auto& r : log) {
    out.p_vg_trajectory.push_back(r.p_vg);
    out.max_row_imbalance = std::max(out.max_row_imbalance, std::abs(r.g_t_mean / r.g_n_mean - 1.0));
  }
  return out;
}

}  // namespace gbcos
