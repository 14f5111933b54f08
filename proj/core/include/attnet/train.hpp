#pragma once

#include <optional>

#include "attnet/data_io.hpp"
#include "attnet/detect.hpp"
#include "attnet/model.hpp"

namespace attnet {

struct TrainConfig {
  std::array<double, 3> alphas{0.99, 0.0, 0.01};           // (α₁, α₂, α₃)
  std::vector<double> stage_learning_rates{0.001, 0.005, 0.005};
  double finetune_learning_rate = 0.0005;
  std::size_t batch_size = 64;
  std::size_t max_epochs = 100;
  std::size_t patience = 8;  // epochs without validation-accuracy improvement
  std::uint64_t seed = 0;
  std::optional<std::size_t> train_subset_size;
  unsigned n_threads = 2;

  static TrainConfig baseline();   // α = (0.99, 0, 0.01)
  static TrainConfig attractor();  // α = (0.988, 0.002, 0.01)
};

struct PretrainStage {
  std::size_t in_width = 0;
  std::size_t hidden_width = 0;
};

struct PretrainPlan {
  std::vector<PretrainStage> stages;
};

struct EpochStats {
  double loss_reconstruction = 0.0;
  double loss_eigen = 0.0;
  double loss_classification = 0.0;
  double loss_total = 0.0;
  double validation_accuracy = 0.0;
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  std::size_t stopping_epoch = 0;  // 1-based epoch the run ended on
  std::size_t best_epoch = 0;      // epoch whose parameters were kept
  double best_validation_accuracy = 0.0;
  bool early_stopped = false;
  double wall_seconds = 0.0;
};

// Eq. 4 weighted total over one batch: α₁·L_rec + α₂·L_eigen + α₃·L_cls.
// The eigen term is skipped (reported as 0) when α₂ = 0.
LossValues total_loss(const AttractorModel& model, const Matrix& x_batch,
                      const std::vector<int>& y_batch, const std::array<double, 3>& alphas,
                      unsigned n_threads = 1);

// One stage per encoder layer up to and including the bottleneck; requires
// mirror-symmetric layer widths.
PretrainPlan build_pretrain_plan(const ArchSpec& arch);

// Greedy layer-wise pretraining: each stage trains a one-hidden-layer
// autoencoder (with its own temporary softmax head) on the previous stage's
// hidden representations under the full weighted loss, earlier stages frozen.
// Returns the assembled deep-net parameters; the bottleneck stage's head
// seeds the final classification head.
NetParams pretrain_layerwise(const LabeledDataset& train, const LabeledDataset& val,
                             const PretrainPlan& plan, const ArchSpec& arch,
                             const TrainConfig& cfg,
                             std::vector<TrainReport>* stage_reports = nullptr);

// Full-network fine-tuning under the weighted total loss with early stopping
// on validation classification accuracy; returns the parameters of the best
// validation epoch.
std::pair<AttractorModel, TrainReport> finetune(NetParams init, const LabeledDataset& train,
                                                const LabeledDataset& val, const ArchSpec& arch,
                                                const TrainConfig& cfg);

enum class ClassifyMode { Raw, Attracted };

struct ClassifyResult {
  std::vector<int> classes;
  Matrix probabilities;  // rows sum to 1
};

// Raw mode classifies a single forward pass; Attracted mode first iterates
// the autoencoding map per det (its iteration fields), then classifies the
// final iterate.
ClassifyResult classify(const AttractorModel& model, const Matrix& x_batch, ClassifyMode mode,
                        const DetectorConfig& det = {});

// Convenience: pick the mode the model was trained for (raw for baseline,
// attracted for attractor).
ClassifyMode default_classify_mode(const AttractorModel& model);

double classification_accuracy(const AttractorModel& model, const LabeledDataset& data,
                               ClassifyMode mode, const DetectorConfig& det = {});

}  // namespace attnet
