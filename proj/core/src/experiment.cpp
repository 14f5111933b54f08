#include "attnet/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "attnet/rng.hpp"

namespace attnet {

namespace {

LabeledDataset take_prefix(const LabeledDataset& ds, std::size_t limit) {
  if (ds.count() <= limit) return ds;
  LabeledDataset out;
  out.tag = ds.tag;
  out.name = ds.name;
  out.images = Matrix(limit, ds.images.cols());
  out.labels.assign(ds.labels.begin(), ds.labels.begin() + static_cast<std::ptrdiff_t>(limit));
  for (std::size_t i = 0; i < limit; ++i) out.images.set_row(i, ds.images.row(i));
  return out;
}

std::vector<int> attack_labels_for_ood(const AttractorModel& model, const LabeledDataset& ood,
                                       OodAttackLabel kind, std::uint64_t seed) {
  if (kind == OodAttackLabel::Random) {
    auto rng = make_rng(seed, 0x00D1ABE1u);
    std::uniform_int_distribution<int> dist(0, static_cast<int>(model.arch.head_width) - 1);
    std::vector<int> labels(ood.count());
    for (int& l : labels) l = dist(rng);
    return labels;
  }
  // untargeted attack on whatever the model believes the OOD input to be
  return classify(model, ood.images, ClassifyMode::Raw).classes;
}

std::string attack_description(const std::optional<AttackSpec>& attack) {
  if (!attack || attack->epsilon_pixels == 0.0) return "none";
  const char* cost =
      attack->cost_kind == CostKind::TrainingTotal ? "training_total" : "classification_only";
  return "fgsm eps=" + format_double(attack->epsilon_pixels) + "/255 cost=" + cost;
}

}  // namespace

CsvTable scores_to_csv(const std::vector<SampleScore>& scores) {
  CsvTable t;
  t.header = {"index", "group", "similarity", "decision"};
  t.rows.reserve(scores.size());
  for (const auto& s : scores) {
    t.rows.push_back({std::to_string(s.index), s.group == DistributionTag::ID ? "ID" : "OOD",
                      format_double(s.similarity), std::to_string(s.decision)});
  }
  return t;
}

std::vector<SampleScore> scores_from_csv(const CsvTable& table) {
  require(table.header == std::vector<std::string>({"index", "group", "similarity", "decision"}),
          Err::ConfigError, "unexpected scores CSV header");
  std::vector<SampleScore> scores;
  scores.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    require(row.size() == 4, Err::ConfigError, "malformed scores CSV row");
    SampleScore s;
    s.index = std::stoul(row[0]);
    s.group = row[1] == "ID" ? DistributionTag::ID : DistributionTag::OOD;
    s.similarity = std::stod(row[2]);
    s.decision = std::stoi(row[3]);
    scores.push_back(s);
  }
  return scores;
}

CsvTable metrics_to_csv(const std::vector<MetricsRow>& rows) {
  CsvTable t;
  t.header = {"pair", "attack", "accuracy", "precision", "recall", "n_id", "n_ood"};
  for (const auto& r : rows) {
    t.rows.push_back({r.dataset_pair, r.attack_description, format_double(r.accuracy),
                      r.precision ? format_double(*r.precision) : "undefined",
                      r.recall ? format_double(*r.recall) : "undefined", std::to_string(r.n_id),
                      std::to_string(r.n_ood)});
  }
  return t;
}

OodExperimentResult run_ood_experiment(const AttractorModel& model, const LabeledDataset& id_full,
                                       const LabeledDataset& ood_full,
                                       const ExperimentConfig& cfg) {
  require(id_full.count() > 0, Err::EmptyDataset, "ID dataset is empty");
  require(ood_full.count() > 0, Err::EmptyDataset, "OOD dataset is empty");

  LabeledDataset id_set = take_prefix(id_full, cfg.sample_limit);
  LabeledDataset ood_set = take_prefix(ood_full, cfg.sample_limit);

  Matrix id_x = id_set.images;
  Matrix ood_x = ood_set.images;
  if (cfg.attack && cfg.attack->epsilon_pixels > 0.0) {
    id_x = fgsm(model, id_x, id_set.labels, *cfg.attack);
    const auto ood_y = attack_labels_for_ood(model, ood_set, cfg.ood_attack_label, cfg.seed);
    ood_x = fgsm(model, ood_x, ood_y, *cfg.attack);
  }

  OodExperimentResult result;
  std::vector<int> predictions, truth;
  predictions.reserve(id_set.count() + ood_set.count());
  truth.reserve(predictions.capacity());

  auto evaluate = [&](const Matrix& x, DistributionTag tag) {
    for (std::size_t i = 0; i < x.rows(); ++i) {
      OODVerdict verdict = detect(model, x.row(i), cfg.detector);
      result.scores.push_back({i, tag, verdict.similarity_score, verdict.decision});
      predictions.push_back(verdict.decision);
      truth.push_back(tag == DistributionTag::ID ? 1 : 0);
    }
  };
  evaluate(id_x, DistributionTag::ID);
  evaluate(ood_x, DistributionTag::OOD);

  result.metrics = binary_metrics(predictions, truth);
  result.metrics.dataset_pair = id_set.name + "|" + ood_set.name;
  result.metrics.attack_description = attack_description(cfg.attack);

  if (!cfg.output_dir.empty()) {
    std::filesystem::create_directories(cfg.output_dir);
    result.metrics_csv_path = cfg.output_dir + "/metrics.csv";
    result.scores_csv_path = cfg.output_dir + "/scores.csv";
    write_text_file(result.metrics_csv_path, render_csv(metrics_to_csv({result.metrics})));
    write_text_file(result.scores_csv_path, render_csv(scores_to_csv(result.scores)));
  }
  return result;
}

OodExperimentResult run_ood_experiment(const ExperimentConfig& cfg) {
  const AttractorModel model = load_model(cfg.model_path);
  const LabeledDataset id_set = load_dataset(cfg.id_dataset_path);
  const LabeledDataset ood_set = load_dataset(cfg.ood_dataset_path);
  return run_ood_experiment(model, id_set, ood_set, cfg);
}

std::vector<double> default_epsilon_grid() {
  return {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 20};
}

std::vector<SweepRow> run_robustness_sweep(const AttractorModel& model,
                                           const LabeledDataset& id_full,
                                           const std::vector<double>& epsilon_grid,
                                           const ExperimentConfig& cfg,
                                           const std::string& csv_path) {
  require(id_full.count() > 0, Err::EmptyDataset, "sweep needs a labeled ID set");
  LabeledDataset id_set = take_prefix(id_full, cfg.sample_limit);
  const ClassifyMode mode = default_classify_mode(model);

  std::vector<SweepRow> rows;
  for (double eps : epsilon_grid) {
    AttackSpec spec = cfg.attack.value_or(AttackSpec{});
    spec.epsilon_pixels = eps;
    Matrix x = eps == 0.0 ? id_set.images : fgsm(model, id_set.images, id_set.labels, spec);

    ClassifyResult cls = classify(model, x, mode, cfg.detector);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < id_set.count(); ++i) {
      if (cls.classes[i] == id_set.labels[i]) ++correct;
    }

    // similarity between the (attacked) input and its one-shot reconstruction
    double mean_sim = 0.0;
    std::size_t defined = 0;
    const std::size_t slice = 512;
    for (std::size_t begin = 0; begin < x.rows(); begin += slice) {
      const std::size_t end = std::min(x.rows(), begin + slice);
      Matrix xb(end - begin, x.cols());
      for (std::size_t i = begin; i < end; ++i) xb.set_row(i - begin, x.row(i));
      Matrix recon = reconstruct(model, xb);
      for (std::size_t i = 0; i < xb.rows(); ++i) {
        try {
          mean_sim += pearson(xb.row(i), recon.row(i));
          ++defined;
        } catch (const Error& e) {
          if (e.code() != Err::ZeroVariance) throw;
        }
      }
    }
    if (defined > 0) mean_sim /= static_cast<double>(defined);

    rows.push_back({eps, static_cast<double>(correct) / static_cast<double>(id_set.count()),
                    mean_sim});
  }

  if (!csv_path.empty()) {
    CsvTable t;
    t.header = {"epsilon_pixels", "accuracy", "mean_similarity"};
    for (const auto& r : rows) {
      t.rows.push_back(
          {format_double(r.epsilon_pixels), format_double(r.accuracy), format_double(r.mean_similarity)});
    }
    write_text_file(csv_path, render_csv(t));
  }
  return rows;
}

void export_similarity_scatter(const std::vector<SampleScore>& scores, double threshold,
                               const std::string& csv_path, const std::string& svg_path) {
  CsvTable t;
  t.header = {"sample_index", "group", "similarity"};
  for (const auto& s : scores) {
    t.rows.push_back({std::to_string(s.index), s.group == DistributionTag::ID ? "ID" : "OOD",
                      format_double(s.similarity)});
  }
  write_text_file(csv_path, render_csv(t));

  // fixed 800×600 viewport; x = sample index within group span, y = similarity in [-1, 1]
  constexpr double kW = 800, kH = 600, kMargin = 50;
  const double plot_w = kW - 2 * kMargin, plot_h = kH - 2 * kMargin;
  std::size_t max_index = 1;
  for (const auto& s : scores) max_index = std::max(max_index, s.index + 1);
  auto sx = [&](std::size_t idx) {
    return kMargin + plot_w * static_cast<double>(idx) / static_cast<double>(max_index);
  };
  auto sy = [&](double sim) {
    const double clamped = std::clamp(sim, -1.0, 1.0);
    return kMargin + plot_h * (1.0 - (clamped + 1.0) / 2.0);
  };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"600\" "
         "viewBox=\"0 0 800 600\">\n";
  svg += "<rect width=\"800\" height=\"600\" fill=\"white\"/>\n";
  svg += "<line x1=\"" + format_double(kMargin) + "\" y1=\"" + format_double(kMargin) +
         "\" x2=\"" + format_double(kMargin) + "\" y2=\"" + format_double(kH - kMargin) +
         "\" stroke=\"black\"/>\n";
  svg += "<line x1=\"" + format_double(kMargin) + "\" y1=\"" + format_double(kH - kMargin) +
         "\" x2=\"" + format_double(kW - kMargin) + "\" y2=\"" + format_double(kH - kMargin) +
         "\" stroke=\"black\"/>\n";
  for (const auto& s : scores) {
    const bool id = s.group == DistributionTag::ID;
    const double sim = std::isfinite(s.similarity) ? s.similarity : -1.0;
    svg += "<circle cx=\"" + format_double(sx(s.index)) + "\" cy=\"" + format_double(sy(sim)) +
           "\" r=\"2\" fill=\"" + (id ? "#1f77b4" : "#d62728") + "\" fill-opacity=\"0.6\"/>\n";
  }
  svg += "<line x1=\"" + format_double(kMargin) + "\" y1=\"" + format_double(sy(threshold)) +
         "\" x2=\"" + format_double(kW - kMargin) + "\" y2=\"" + format_double(sy(threshold)) +
         "\" stroke=\"black\" stroke-width=\"2\" stroke-dasharray=\"6,3\"/>\n";
  svg += "<text x=\"" + format_double(kW - kMargin + 4) + "\" y=\"" +
         format_double(sy(threshold) + 4) + "\" font-size=\"12\">T=" + format_double(threshold) +
         "</text>\n";
  svg += "</svg>\n";
  write_text_file(svg_path, svg);
}

}  // namespace attnet
