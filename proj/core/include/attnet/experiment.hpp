#pragma once

#include <optional>

#include "attnet/attack.hpp"
#include "attnet/csv.hpp"
#include "attnet/detect.hpp"
#include "attnet/metrics.hpp"
#include "attnet/train.hpp"

namespace attnet {

enum class OodAttackLabel { Predicted, Random };

struct ExperimentConfig {
  std::string model_path;
  std::string id_dataset_path;
  std::string ood_dataset_path;
  std::optional<AttackSpec> attack;
  DetectorConfig detector;
  std::size_t sample_limit = 10000;
  OodAttackLabel ood_attack_label = OodAttackLabel::Predicted;
  std::string output_dir = ".";
  std::uint64_t seed = 0;
};

struct SampleScore {
  std::size_t index = 0;
  DistributionTag group = DistributionTag::ID;
  double similarity = 0.0;
  int decision = 0;
};

struct OodExperimentResult {
  MetricsRow metrics;
  std::vector<SampleScore> scores;
  std::string metrics_csv_path;
  std::string scores_csv_path;
};

// Table 1/2 protocol: optionally FGSM-perturb both sets (true labels for ID;
// model-predicted or random labels for OOD), run the detector on every
// sample, aggregate binary metrics, and dump per-sample scores.
OodExperimentResult run_ood_experiment(const AttractorModel& model, const LabeledDataset& id_set,
                                       const LabeledDataset& ood_set,
                                       const ExperimentConfig& cfg);

// Convenience wrapper that loads the model and datasets from cfg paths.
OodExperimentResult run_ood_experiment(const ExperimentConfig& cfg);

struct SweepRow {
  double epsilon_pixels = 0.0;
  double accuracy = 0.0;
  double mean_similarity = 0.0;
};

// Per-ε robustness profile over a labeled ID set: attack, classify with the
// model-appropriate mode, and record the mean Pearson similarity between the
// attacked input and its one-shot reconstruction.
std::vector<SweepRow> run_robustness_sweep(const AttractorModel& model,
                                           const LabeledDataset& id_set,
                                           const std::vector<double>& epsilon_grid,
                                           const ExperimentConfig& cfg,
                                           const std::string& csv_path = "");

// The ε grid used by the reported experiments: 0..10 plus 20 (pixel units).
std::vector<double> default_epsilon_grid();

// CSV + self-contained SVG scatter (index vs similarity, ID blue, OOD red,
// horizontal threshold line).
void export_similarity_scatter(const std::vector<SampleScore>& scores, double threshold,
                               const std::string& csv_path, const std::string& svg_path);

CsvTable scores_to_csv(const std::vector<SampleScore>& scores);
std::vector<SampleScore> scores_from_csv(const CsvTable& table);
CsvTable metrics_to_csv(const std::vector<MetricsRow>& rows);

}  // namespace attnet
