#include "attnet/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "attnet/jacobian.hpp"
#include "attnet/rng.hpp"

namespace attnet {

TrainConfig TrainConfig::baseline() {
  TrainConfig cfg;
  cfg.alphas = {0.99, 0.0, 0.01};
  return cfg;
}

TrainConfig TrainConfig::attractor() {
  TrainConfig cfg;
  cfg.alphas = {0.988, 0.002, 0.01};
  return cfg;
}

LossValues total_loss(const AttractorModel& model, const Matrix& x_batch,
                      const std::vector<int>& y_batch, const std::array<double, 3>& alphas,
                      unsigned n_threads) {
  require(x_batch.rows() > 0, Err::EmptyDataset, "total_loss needs a nonempty batch");
  ForwardTrace trace = forward(model.params, model.arch, x_batch, true);
  LossValues loss = loss_and_grads(model.params, model.arch, trace, x_batch, y_batch,
                                   alphas[0], alphas[2], nullptr);
  if (alphas[1] != 0.0) {
    loss.eigen = eigen_loss_param_grads(model.params, model.arch, x_batch, n_threads).loss_value;
  }
  loss.total = alphas[0] * loss.reconstruction + alphas[1] * loss.eigen +
               alphas[2] * loss.classification;
  return loss;
}

PretrainPlan build_pretrain_plan(const ArchSpec& arch) {
  arch.validate();
  const auto& w = arch.layer_widths;
  const std::size_t layers = arch.num_layers();
  require(layers % 2 == 0, Err::AsymmetricArch, "odd layer count cannot mirror");
  for (std::size_t i = 0; i < w.size(); ++i) {
    require(w[i] == w[w.size() - 1 - i], Err::AsymmetricArch,
            "widths are not mirror-symmetric at position " + std::to_string(i));
  }
  PretrainPlan plan;
  for (std::size_t k = 0; k < layers / 2; ++k) {
    plan.stages.push_back({w[k], w[k + 1]});
  }
  return plan;
}

namespace {

ArchSpec stage_arch(const PretrainStage& stage, std::size_t head_width) {
  ArchSpec a;
  a.layer_widths = {stage.in_width, stage.hidden_width, stage.in_width};
  a.activations = {Activation::ReLU, Activation::ReLU};
  a.head_from = 1;
  a.head_width = head_width;
  return a;
}

Matrix gather_rows(const Matrix& src, std::span<const std::size_t> idx) {
  Matrix out(idx.size(), src.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.set_row(i, src.row(idx[i]));
  return out;
}

double raw_accuracy(const NetParams& params, const ArchSpec& arch, const Matrix& x,
                    const std::vector<int>& y) {
  if (x.rows() == 0) return 0.0;
  std::size_t correct = 0;
  // evaluate in slices to bound trace memory on large validation sets
  const std::size_t slice = 1024;
  for (std::size_t begin = 0; begin < x.rows(); begin += slice) {
    const std::size_t end = std::min(x.rows(), begin + slice);
    Matrix xb(end - begin, x.cols());
    for (std::size_t i = begin; i < end; ++i) xb.set_row(i - begin, x.row(i));
    ForwardTrace trace = forward(params, arch, xb, true);
    for (std::size_t i = 0; i < xb.rows(); ++i) {
      auto row = trace.head_probs.row(i);
      const auto arg = std::distance(row.begin(), std::max_element(row.begin(), row.end()));
      if (arg == y[begin + i]) ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(x.rows());
}

// Core Adam training loop shared by the pretraining stages and fine-tuning.
// Reconstruction targets are the inputs themselves. Keeps and restores the
// parameters of the best validation epoch.
TrainReport train_network(NetParams& params, const ArchSpec& arch, const Matrix& train_x,
                          const std::vector<int>& train_y, const Matrix& val_x,
                          const std::vector<int>& val_y, const std::array<double, 3>& alphas,
                          double lr, const TrainConfig& cfg, std::uint64_t shuffle_salt) {
  require(train_x.rows() > 0, Err::EmptyDataset, "no training samples");
  require(cfg.batch_size >= 1, Err::ConfigError, "batch_size must be >= 1");
  require(cfg.patience >= 1, Err::ConfigError, "patience must be >= 1");
  for (double a : alphas) require(a >= 0.0, Err::ConfigError, "loss weights must be nonnegative");

  const auto t0 = std::chrono::steady_clock::now();
  TrainReport report;
  AdamState adam = AdamState::init_like(arch);

  NetParams best = params;
  double best_acc = -1.0;
  std::size_t best_epoch = 0;
  std::size_t epochs_since_improvement = 0;

  std::vector<std::size_t> order(train_x.rows());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    auto rng = make_rng(cfg.seed, shuffle_salt ^ (0xE70C0000ULL + epoch));
    std::shuffle(order.begin(), order.end(), rng);

    EpochStats stats;
    std::size_t seen = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), begin + cfg.batch_size);
      const std::span<const std::size_t> idx(order.data() + begin, end - begin);
      Matrix xb = gather_rows(train_x, idx);
      std::vector<int> yb(idx.size());
      for (std::size_t i = 0; i < idx.size(); ++i) yb[i] = train_y[idx[i]];

      ForwardTrace trace = forward(params, arch, xb, true);
      ParamGrads grads;
      LossValues loss =
          loss_and_grads(params, arch, trace, xb, yb, alphas[0], alphas[2], &grads);
      if (alphas[1] != 0.0) {
        EigenLossGrads eig = eigen_loss_param_grads(params, arch, xb, cfg.n_threads);
        loss.eigen = eig.loss_value;
        for (std::size_t k = 0; k < grads.weights.size(); ++k) {
          add_scaled(grads.weights[k], eig.grads.weights[k], alphas[1]);
        }
      }
      loss.total = alphas[0] * loss.reconstruction + alphas[1] * loss.eigen +
                   alphas[2] * loss.classification;
      require(std::isfinite(loss.total), Err::StageDiverged,
              "non-finite loss at epoch " + std::to_string(epoch));

      adam_step(params, grads, adam, lr);

      const auto bsz = static_cast<double>(idx.size());
      stats.loss_reconstruction += loss.reconstruction * bsz;
      stats.loss_eigen += loss.eigen * bsz;
      stats.loss_classification += loss.classification * bsz;
      stats.loss_total += loss.total * bsz;
      seen += idx.size();
    }
    const auto inv = 1.0 / static_cast<double>(seen);
    stats.loss_reconstruction *= inv;
    stats.loss_eigen *= inv;
    stats.loss_classification *= inv;
    stats.loss_total *= inv;

    stats.validation_accuracy = raw_accuracy(params, arch, val_x, val_y);
    report.epochs.push_back(stats);
    report.stopping_epoch = epoch;

    if (stats.validation_accuracy > best_acc) {
      best_acc = stats.validation_accuracy;
      best = params;
      best_epoch = epoch;
      epochs_since_improvement = 0;
    } else if (++epochs_since_improvement >= cfg.patience) {
      report.early_stopped = true;
      break;
    }
  }

  if (best_epoch > 0) params = std::move(best);
  report.best_epoch = best_epoch;
  report.best_validation_accuracy = std::max(best_acc, 0.0);
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

Matrix encode_through(const Matrix& x, const Matrix& w, const Vec& b) {
  Matrix z = matmul_nt(x, w);
  for (std::size_t r = 0; r < z.rows(); ++r) {
    auto row = z.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] = std::max(row[c] + b[c], 0.0);
  }
  return z;
}

}  // namespace

NetParams pretrain_layerwise(const LabeledDataset& train, const LabeledDataset& val,
                             const PretrainPlan& plan, const ArchSpec& arch,
                             const TrainConfig& cfg, std::vector<TrainReport>* stage_reports) {
  arch.validate();
  require(!plan.stages.empty(), Err::ConfigError, "empty pretraining plan");
  require(plan.stages.size() <= cfg.stage_learning_rates.size(), Err::ConfigError,
          "plan has " + std::to_string(plan.stages.size()) + " stages but only " +
              std::to_string(cfg.stage_learning_rates.size()) + " stage learning rates");
  require(plan.stages.front().in_width == arch.input_width(), Err::ShapeMismatch,
          "plan does not start at the architecture input width");

  NetParams deep = NetParams::zeros_like(arch);
  const std::size_t layers = arch.num_layers();

  Matrix cur_train = train.images;
  Matrix cur_val = val.images;

  for (std::size_t s = 0; s < plan.stages.size(); ++s) {
    const ArchSpec sub = stage_arch(plan.stages[s], arch.head_width);
    NetParams params = he_init(sub, derive_seed(cfg.seed, 0x57A6E000ULL + s));
    TrainReport rep = train_network(params, sub, cur_train, train.labels, cur_val, val.labels,
                                    cfg.alphas, cfg.stage_learning_rates[s], cfg,
                                    /*shuffle_salt=*/0x57A6E000ULL + s);
    if (stage_reports) stage_reports->push_back(std::move(rep));

    // encoder half lands at position s, decoder half mirrors outward
    deep.weights[s] = params.weights[0];
    deep.biases[s] = params.biases[0];
    deep.weights[layers - 1 - s] = params.weights[1];
    deep.biases[layers - 1 - s] = params.biases[1];
    if (s + 1 == plan.stages.size()) {
      // bottleneck stage's head seeds the final classification head
      deep.head_weight = params.head_weight;
      deep.head_bias = params.head_bias;
    }

    if (s + 1 < plan.stages.size()) {
      cur_train = encode_through(cur_train, params.weights[0], params.biases[0]);
      cur_val = encode_through(cur_val, params.weights[0], params.biases[0]);
    }
  }
  return deep;
}

std::pair<AttractorModel, TrainReport> finetune(NetParams init, const LabeledDataset& train,
                                                const LabeledDataset& val, const ArchSpec& arch,
                                                const TrainConfig& cfg) {
  arch.validate();
  AttractorModel model;
  model.arch = arch;
  model.params = std::move(init);
  model.seed = cfg.seed;
  model.alphas = cfg.alphas;
  model.training_mode_tag = cfg.alphas[1] != 0.0 ? "attractor" : "baseline";

  TrainReport report;
  if (cfg.max_epochs == 0) return {std::move(model), report};

  report = train_network(model.params, arch, train.images, train.labels, val.images, val.labels,
                         cfg.alphas, cfg.finetune_learning_rate, cfg,
                         /*shuffle_salt=*/0xF17E0000ULL);
  return {std::move(model), std::move(report)};
}

ClassifyResult classify(const AttractorModel& model, const Matrix& x_batch, ClassifyMode mode,
                        const DetectorConfig& det) {
  ClassifyResult result;
  result.probabilities = Matrix(x_batch.rows(), model.arch.head_width);
  result.classes.resize(x_batch.rows());

  const std::size_t slice = 512;  // bounds forward-trace memory
  for (std::size_t begin = 0; begin < x_batch.rows(); begin += slice) {
    const std::size_t end = std::min(x_batch.rows(), begin + slice);
    Matrix xb(end - begin, x_batch.cols());
    for (std::size_t i = begin; i < end; ++i) xb.set_row(i - begin, x_batch.row(i));

    if (mode == ClassifyMode::Attracted) {
      if (det.mode == IterationMode::Fixed) {
        for (std::size_t k = 0; k < det.n_iterations; ++k) xb = reconstruct(model, xb);
      } else {
        for (std::size_t r = 0; r < xb.rows(); ++r) {
          FixedPointReport rep = iterate_map(model, xb.row(r), det);
          xb.set_row(r, rep.trajectory.back());
        }
      }
    }

    ForwardTrace trace = forward(model.params, model.arch, xb, true);
    for (std::size_t r = 0; r < xb.rows(); ++r) {
      auto row = trace.head_probs.row(r);
      result.probabilities.set_row(begin + r, row);
      result.classes[begin + r] =
          static_cast<int>(std::distance(row.begin(), std::max_element(row.begin(), row.end())));
    }
  }
  return result;
}

ClassifyMode default_classify_mode(const AttractorModel& model) {
  return model.training_mode_tag == "attractor" ? ClassifyMode::Attracted : ClassifyMode::Raw;
}

double classification_accuracy(const AttractorModel& model, const LabeledDataset& data,
                               ClassifyMode mode, const DetectorConfig& det) {
  require(data.count() > 0, Err::EmptyDataset, "accuracy over an empty dataset");
  ClassifyResult result = classify(model, data.images, mode, det);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.count(); ++i) {
    if (result.classes[i] == data.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.count());
}

}  // namespace attnet
