#include "attnet/cli.hpp"

#include <filesystem>
#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "attnet/experiment.hpp"
#include "attnet/jacobian.hpp"
#include "attnet/rng.hpp"

namespace attnet {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

// --- config plumbing ---------------------------------------------------------

json load_config(const std::string& path, const std::vector<std::string>& overrides) {
  json cfg = json::object();
  if (!path.empty()) {
    require(fs::exists(path), Err::ConfigError, "config file not found: " + path);
    try {
      cfg = json::parse(read_text_file(path));
    } catch (const json::exception& e) {
      raise(Err::ConfigError, "cannot parse " + path + ": " + e.what());
    }
  }
  for (const auto& kv : overrides) {
    const auto eq = kv.find('=');
    require(eq != std::string::npos, Err::UsageError, "--set expects key=value, got '" + kv + "'");
    const std::string key = kv.substr(0, eq);
    const std::string raw = kv.substr(eq + 1);
    json value;
    try {
      value = json::parse(raw);
    } catch (const json::exception&) {
      value = raw;  // bare strings are fine unquoted
    }
    json* node = &cfg;
    std::size_t start = 0;
    while (true) {
      const auto dot = key.find('.', start);
      const std::string part = key.substr(start, dot - start);
      require(!part.empty(), Err::UsageError, "empty path segment in --set key '" + key + "'");
      if (dot == std::string::npos) {
        (*node)[part] = value;
        break;
      }
      node = &(*node)[part];
      start = dot + 1;
    }
  }
  return cfg;
}

const json* find_path(const json& root, const std::string& dotted) {
  const json* node = &root;
  std::size_t start = 0;
  while (start <= dotted.size()) {
    const auto dot = dotted.find('.', start);
    const std::string part = dotted.substr(start, dot - start);
    if (!node->is_object() || !node->contains(part)) return nullptr;
    node = &(*node)[part];
    if (dot == std::string::npos) return node;
    start = dot + 1;
  }
  return nullptr;
}

template <typename T>
T get_or(const json& root, const std::string& dotted, T fallback) {
  const json* node = find_path(root, dotted);
  if (!node) return fallback;
  try {
    return node->get<T>();
  } catch (const json::exception& e) {
    raise(Err::ConfigError, "bad value for '" + dotted + "': " + e.what());
  }
}

template <typename T>
T get_req(const json& root, const std::string& dotted) {
  const json* node = find_path(root, dotted);
  require(node != nullptr, Err::ConfigError, "missing required config key '" + dotted + "'");
  try {
    return node->get<T>();
  } catch (const json::exception& e) {
    raise(Err::ConfigError, "bad value for '" + dotted + "': " + e.what());
  }
}

std::string require_file(const std::string& path, const std::string& what) {
  require(fs::exists(path), Err::IoError, what + " file not found: " + path);
  return path;
}

DetectorConfig detector_from(const json& cfg) {
  DetectorConfig det;
  det.threshold = get_or(cfg, "detector.threshold", det.threshold);
  det.n_iterations = get_or(cfg, "detector.iterations", det.n_iterations);
  const std::string mode = get_or<std::string>(cfg, "detector.mode", "fixed");
  require(mode == "fixed" || mode == "auto", Err::ConfigError,
          "detector.mode must be 'fixed' or 'auto'");
  det.mode = mode == "fixed" ? IterationMode::Fixed : IterationMode::Auto;
  det.convergence_tol = get_or(cfg, "detector.tolerance", det.convergence_tol);
  det.max_auto_iterations = get_or(cfg, "detector.max_auto_iterations", det.max_auto_iterations);
  return det;
}

AttackSpec attack_from(const json& cfg) {
  AttackSpec spec;
  spec.epsilon_pixels = get_or(cfg, "attack.epsilon_pixels", 20.0);
  const std::string cost = get_or<std::string>(cfg, "attack.cost_kind", "training_total");
  require(cost == "training_total" || cost == "classification_only", Err::ConfigError,
          "attack.cost_kind must be 'training_total' or 'classification_only'");
  spec.cost_kind = cost == "training_total" ? CostKind::TrainingTotal : CostKind::ClassificationOnly;
  spec.clip = get_or(cfg, "attack.clip", true);
  return spec;
}

ArchSpec arch_from(const json& cfg) {
  ArchSpec arch = ArchSpec::reference_net();
  if (const json* widths = find_path(cfg, "train.widths")) {
    arch.layer_widths = widths->get<std::vector<std::size_t>>();
    arch.activations.assign(arch.layer_widths.size() - 1, Activation::ReLU);
    arch.head_from = get_or<std::size_t>(cfg, "train.head_from", arch.layer_widths.size() / 2);
    arch.head_width = get_or<std::size_t>(cfg, "train.head_width", 10);
  }
  arch.validate();
  return arch;
}

TrainConfig train_config_from(const json& cfg) {
  const std::string mode = get_or<std::string>(cfg, "train.mode", "baseline");
  require(mode == "baseline" || mode == "attractor", Err::ConfigError,
          "train.mode must be 'baseline' or 'attractor'");
  TrainConfig tc = mode == "attractor" ? TrainConfig::attractor() : TrainConfig::baseline();
  if (const json* alphas = find_path(cfg, "train.alphas")) {
    tc.alphas = alphas->get<std::array<double, 3>>();
  }
  tc.stage_learning_rates =
      get_or(cfg, "train.stage_learning_rates", tc.stage_learning_rates);
  tc.finetune_learning_rate =
      get_or(cfg, "train.finetune_learning_rate", tc.finetune_learning_rate);
  tc.batch_size = get_or(cfg, "train.batch_size", tc.batch_size);
  tc.max_epochs = get_or(cfg, "train.max_epochs", tc.max_epochs);
  tc.patience = get_or(cfg, "train.patience", tc.patience);
  tc.seed = get_or(cfg, "seed", tc.seed);
  tc.n_threads = get_or(cfg, "train.n_threads", tc.n_threads);
  if (const json* subset = find_path(cfg, "train.train_subset_size")) {
    tc.train_subset_size = subset->get<std::size_t>();
  }
  return tc;
}

std::pair<LabeledDataset, LabeledDataset> load_train_split(const json& cfg,
                                                           const TrainConfig& tc) {
  const std::string cache = get_req<std::string>(cfg, "train.train_cache");
  LabeledDataset full = load_dataset(require_file(cache, "train cache"));
  SplitConfig split;
  split.validation_fraction = get_or(cfg, "train.validation_fraction", 0.1);
  split.seed = tc.seed;
  split.train_subset_size = tc.train_subset_size;
  return split_dataset(full, split);
}

void write_report_csv(const std::string& path, const std::vector<TrainReport>& reports) {
  CsvTable t;
  t.header = {"stage", "epoch", "loss_reconstruction", "loss_eigen",
              "loss_classification", "loss_total", "validation_accuracy"};
  for (std::size_t s = 0; s < reports.size(); ++s) {
    for (std::size_t e = 0; e < reports[s].epochs.size(); ++e) {
      const EpochStats& st = reports[s].epochs[e];
      t.rows.push_back({std::to_string(s), std::to_string(e + 1),
                        format_double(st.loss_reconstruction), format_double(st.loss_eigen),
                        format_double(st.loss_classification), format_double(st.loss_total),
                        format_double(st.validation_accuracy)});
    }
  }
  write_text_file(path, render_csv(t));
}

std::string output_dir_from(const json& cfg) {
  const std::string dir = get_or<std::string>(cfg, "output_dir", "out");
  fs::create_directories(dir);
  return dir;
}

// --- subcommands --------------------------------------------------------------

int cmd_prepare(const json& cfg) {
  const json* datasets = find_path(cfg, "data.datasets");
  require(datasets && datasets->is_array() && !datasets->empty(), Err::ConfigError,
          "prepare needs a data.datasets array");
  for (const json& job : *datasets) {
    const std::string kind = job.at("kind").get<std::string>();
    const std::string name = job.at("name").get<std::string>();
    const std::string output = job.at("output").get<std::string>();
    const std::string tag_s = job.value("tag", "ID");
    const DistributionTag tag = tag_s == "OOD" ? DistributionTag::OOD : DistributionTag::ID;

    LabeledDataset ds;
    if (kind == "idx") {
      const auto images =
          read_file_bytes(require_file(job.at("images").get<std::string>(), "images"));
      const auto labels =
          read_file_bytes(require_file(job.at("labels").get<std::string>(), "labels"));
      RawImageSet raw = parse_idx_images(images, name);
      std::vector<int> y = parse_idx_labels(labels);
      ds = normalize_all(raw, y, tag);
    } else if (kind == "cifar-bw28") {
      RawImageSet merged;
      std::vector<int> y;
      for (const json& batch_path : job.at("batches")) {
        const auto bytes =
            read_file_bytes(require_file(batch_path.get<std::string>(), "cifar batch"));
        Cifar10Batch batch = parse_cifar10_batch(bytes, name);
        RawImageSet bw = cifar_to_bw28(batch.images);
        if (merged.count == 0) {
          merged = std::move(bw);
        } else {
          merged.pixels.insert(merged.pixels.end(), bw.pixels.begin(), bw.pixels.end());
          merged.count += bw.count;
        }
        y.insert(y.end(), batch.labels.begin(), batch.labels.end());
      }
      merged.source_tag = name;
      ds = normalize_all(merged, y, tag);
    } else {
      raise(Err::ConfigError, "unknown dataset kind '" + kind + "'");
    }
    if (const auto parent = fs::path(output).parent_path(); !parent.empty()) {
      fs::create_directories(parent);
    }
    save_dataset(ds, output);
    std::cout << "prepared " << name << ": " << ds.count() << " samples -> " << output << "\n";
  }
  return 0;
}

int cmd_pretrain(const json& cfg) {
  const TrainConfig tc = train_config_from(cfg);
  const ArchSpec arch = arch_from(cfg);
  auto [train_set, val_set] = load_train_split(cfg, tc);
  const PretrainPlan plan = build_pretrain_plan(arch);

  std::vector<TrainReport> reports;
  NetParams params = pretrain_layerwise(train_set, val_set, plan, arch, tc, &reports);

  AttractorModel model;
  model.arch = arch;
  model.params = std::move(params);
  model.training_mode_tag = "pretrained";
  model.seed = tc.seed;
  model.alphas = tc.alphas;

  const std::string dir = output_dir_from(cfg);
  const std::string out = get_or<std::string>(cfg, "train.pretrained_model", dir + "/pretrained.atnw");
  save_model(model, out);
  write_report_csv(dir + "/pretrain_report.csv", reports);
  double total_s = 0.0;
  for (const auto& r : reports) total_s += r.wall_seconds;
  std::cout << "pretrained " << plan.stages.size() << " stages in " << format_double(total_s)
            << "s -> " << out << "\n";
  return 0;
}

int cmd_train(const json& cfg) {
  const TrainConfig tc = train_config_from(cfg);
  const ArchSpec arch = arch_from(cfg);
  auto [train_set, val_set] = load_train_split(cfg, tc);

  NetParams init;
  if (get_or(cfg, "train.pretrain", true)) {
    const std::string dir = get_or<std::string>(cfg, "output_dir", "out");
    const std::string path =
        get_or<std::string>(cfg, "train.pretrained_model", dir + "/pretrained.atnw");
    AttractorModel pre = load_model(require_file(path, "pretrained model"));
    require(pre.arch == arch, Err::ShapeMismatch,
            "pretrained model architecture does not match the configured one");
    init = std::move(pre.params);
  } else {
    init = he_init(arch, derive_seed(tc.seed, 0x1A17u));
  }

  auto [model, report] = finetune(std::move(init), train_set, val_set, arch, tc);

  const std::string dir = output_dir_from(cfg);
  const std::string out = get_or<std::string>(cfg, "train.model_output", dir + "/model.atnw");
  save_model(model, out);
  write_report_csv(dir + "/train_report.csv", {report});

  json summary;
  summary["model"] = out;
  summary["mode"] = model.training_mode_tag;
  summary["epochs_run"] = report.stopping_epoch;
  summary["best_epoch"] = report.best_epoch;
  summary["best_validation_accuracy"] = report.best_validation_accuracy;
  summary["early_stopped"] = report.early_stopped;
  summary["wall_seconds"] = report.wall_seconds;
  write_text_file(dir + "/train_summary.json", summary.dump(2) + "\n");
  std::cout << "trained " << model.training_mode_tag << " model: best val accuracy "
            << format_double(report.best_validation_accuracy) << " (epoch "
            << report.best_epoch << ") -> " << out << "\n";
  return 0;
}

int cmd_attack(const json& cfg) {
  const AttractorModel model =
      load_model(require_file(get_req<std::string>(cfg, "attack.model"), "model"));
  LabeledDataset ds =
      load_dataset(require_file(get_req<std::string>(cfg, "attack.dataset"), "dataset"));
  const std::string dir = output_dir_from(cfg);
  const std::string out = get_or<std::string>(cfg, "attack.output", dir + "/adversarial.atds");

  const std::string kind = get_or<std::string>(cfg, "attack.kind", "fgsm");
  if (kind == "fgsm") {
    const AttackSpec spec = attack_from(cfg);
    ds.images = fgsm(model, ds.images, ds.labels, spec);
    ds.name += "-fgsm" + format_double(spec.epsilon_pixels);
  } else if (kind == "salt_pepper") {
    NoiseSpec spec;
    spec.flip_probability = get_or(cfg, "attack.flip_probability", 0.2);
    spec.seed = get_or<std::uint64_t>(cfg, "seed", 0);
    ds.images = salt_pepper(ds.images, spec);
    ds.name += "-saltpepper";
  } else {
    raise(Err::ConfigError, "attack.kind must be 'fgsm' or 'salt_pepper'");
  }
  save_dataset(ds, out);
  std::cout << "wrote perturbed set (" << ds.count() << " samples) -> " << out << "\n";
  return 0;
}

ExperimentConfig experiment_from(const json& cfg) {
  ExperimentConfig ec;
  ec.model_path = require_file(get_req<std::string>(cfg, "detect.model"), "model");
  ec.id_dataset_path = require_file(get_req<std::string>(cfg, "detect.id_dataset"), "ID dataset");
  ec.ood_dataset_path =
      require_file(get_req<std::string>(cfg, "detect.ood_dataset"), "OOD dataset");
  if (get_or(cfg, "detect.with_attack", false)) ec.attack = attack_from(cfg);
  ec.detector = detector_from(cfg);
  ec.sample_limit = get_or<std::size_t>(cfg, "detect.sample_limit", 10000);
  const std::string label_kind = get_or<std::string>(cfg, "detect.ood_attack_label", "predicted");
  require(label_kind == "predicted" || label_kind == "random", Err::ConfigError,
          "detect.ood_attack_label must be 'predicted' or 'random'");
  ec.ood_attack_label =
      label_kind == "predicted" ? OodAttackLabel::Predicted : OodAttackLabel::Random;
  ec.output_dir = output_dir_from(cfg);
  ec.seed = get_or<std::uint64_t>(cfg, "seed", 0);
  return ec;
}

int cmd_detect(const json& cfg) {
  const ExperimentConfig ec = experiment_from(cfg);
  OodExperimentResult result = run_ood_experiment(ec);
  const MetricsRow& m = result.metrics;
  std::cout << m.dataset_pair << " attack=" << m.attack_description
            << " accuracy=" << format_double(m.accuracy)
            << " precision=" << (m.precision ? format_double(*m.precision) : "undefined")
            << " recall=" << (m.recall ? format_double(*m.recall) : "undefined")
            << " n_id=" << m.n_id << " n_ood=" << m.n_ood << "\n";
  std::cout << "metrics -> " << result.metrics_csv_path << "\nscores -> "
            << result.scores_csv_path << "\n";
  return 0;
}

int cmd_sweep(const json& cfg) {
  const AttractorModel model =
      load_model(require_file(get_req<std::string>(cfg, "sweep.model"), "model"));
  const LabeledDataset id_set =
      load_dataset(require_file(get_req<std::string>(cfg, "sweep.id_dataset"), "ID dataset"));
  ExperimentConfig ec;
  ec.detector = detector_from(cfg);
  ec.attack = attack_from(cfg);
  ec.sample_limit = get_or<std::size_t>(cfg, "sweep.sample_limit", 10000);
  ec.output_dir = output_dir_from(cfg);

  std::vector<double> grid = get_or(cfg, "sweep.epsilon_grid", default_epsilon_grid());
  const std::string csv = ec.output_dir + "/sweep.csv";
  const auto rows = run_robustness_sweep(model, id_set, grid, ec, csv);
  for (const auto& r : rows) {
    std::cout << "eps=" << format_double(r.epsilon_pixels)
              << " accuracy=" << format_double(r.accuracy)
              << " mean_similarity=" << format_double(r.mean_similarity) << "\n";
  }
  std::cout << "sweep -> " << csv << "\n";
  return 0;
}

int cmd_scatter(const json& cfg) {
  std::vector<SampleScore> scores;
  double threshold = get_or(cfg, "detector.threshold", 0.8);
  if (const json* path = find_path(cfg, "scatter.scores")) {
    const std::string scores_path = require_file(path->get<std::string>(), "scores CSV");
    scores = scores_from_csv(parse_csv(read_text_file(scores_path)));
  } else {
    OodExperimentResult result = run_ood_experiment(experiment_from(cfg));
    scores = std::move(result.scores);
  }
  const std::string dir = output_dir_from(cfg);
  const std::string csv = dir + "/scatter.csv";
  const std::string svg = dir + "/scatter.svg";
  export_similarity_scatter(scores, threshold, csv, svg);
  std::cout << "scatter (" << scores.size() << " points) -> " << svg << "\n";
  return 0;
}

int cmd_stability(const json& cfg) {
  const AttractorModel model =
      load_model(require_file(get_req<std::string>(cfg, "stability.model"), "model"));
  const LabeledDataset ds =
      load_dataset(require_file(get_req<std::string>(cfg, "stability.dataset"), "dataset"));
  const std::size_t n = std::min<std::size_t>(get_or<std::size_t>(cfg, "stability.samples", 10),
                                              ds.count());
  require(n > 0, Err::EmptyDataset, "stability needs at least one sample");
  DetectorConfig det = detector_from(cfg);
  det.mode = IterationMode::Auto;
  const double fp_tol = get_or(cfg, "stability.fixed_point_tolerance", 1e-3);

  CsvTable t;
  t.header = {"index", "converged", "residual", "similarity", "spectral_radius",
              "max_abs_real", "verdict_spectral_radius", "verdict_paper_literal"};
  for (std::size_t i = 0; i < n; ++i) {
    FixedPointReport it = iterate_map(model, ds.images.row(i), det);
    const Vec& x_star = it.trajectory.back();
    Matrix xb(1, x_star.size());
    xb.set_row(0, x_star);
    const double residual = l2_distance(reconstruct(model, xb).row(0), x_star);

    std::string rho = "nan", max_re = "nan", v_spec = "not_evaluated", v_lit = "not_evaluated";
    if (residual <= fp_tol) {
      FixedPointReport rep =
          stability_classify(model, x_star, StabilityCriterion::SpectralRadius, fp_tol);
      const double radius = std::abs(rep.spectrum.front());
      double re = 0.0;
      for (const auto& ev : rep.spectrum) re = std::max(re, std::abs(ev.real()));
      rho = format_double(radius);
      max_re = format_double(re);
      v_spec = radius < 1.0 ? "stable" : "unstable";
      v_lit = re < 1.0 ? "stable" : "unstable";
    }
    t.rows.push_back({std::to_string(i), it.converged ? "1" : "0", format_double(residual),
                      format_double(it.final_similarity_to_input), rho, max_re, v_spec, v_lit});
  }
  const std::string dir = output_dir_from(cfg);
  const std::string csv = dir + "/stability.csv";
  write_text_file(csv, render_csv(t));
  std::cout << "stability report (" << n << " samples) -> " << csv << "\n";
  return 0;
}

int cmd_classify(const json& cfg) {
  const AttractorModel model =
      load_model(require_file(get_req<std::string>(cfg, "classify.model"), "model"));
  const LabeledDataset ds =
      load_dataset(require_file(get_req<std::string>(cfg, "classify.dataset"), "dataset"));
  const std::string mode_s = get_or<std::string>(cfg, "classify.mode", "auto");
  ClassifyMode mode;
  if (mode_s == "raw") mode = ClassifyMode::Raw;
  else if (mode_s == "attracted") mode = ClassifyMode::Attracted;
  else if (mode_s == "auto") mode = default_classify_mode(model);
  else raise(Err::ConfigError, "classify.mode must be raw, attracted or auto");

  const DetectorConfig det = detector_from(cfg);
  ClassifyResult result = classify(model, ds.images, mode, det);

  std::size_t correct = 0;
  CsvTable t;
  t.header = {"index", "label", "predicted", "correct"};
  for (std::size_t i = 0; i < ds.count(); ++i) {
    const bool ok = result.classes[i] == ds.labels[i];
    correct += ok;
    t.rows.push_back({std::to_string(i), std::to_string(ds.labels[i]),
                      std::to_string(result.classes[i]), ok ? "1" : "0"});
  }
  const std::string dir = output_dir_from(cfg);
  write_text_file(dir + "/predictions.csv", render_csv(t));
  std::cout << "accuracy=" << format_double(static_cast<double>(correct) / ds.count())
            << " mode=" << (mode == ClassifyMode::Raw ? "raw" : "attracted") << " n="
            << ds.count() << "\n";
  return 0;
}

}  // namespace

int cli_dispatch(const std::vector<std::string>& args) {
  CLI::App app{"attractor network toolkit: train, attack, and run OOD detection"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  std::string subcommand;

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"prepare", "parse raw dataset files into .atds caches"},
      {"pretrain", "greedy layer-wise pretraining"},
      {"train", "fine-tune a full network"},
      {"attack", "emit an adversarial or noisy copy of a dataset"},
      {"detect", "ID/OOD detection metrics over a dataset pair"},
      {"sweep", "classification/similarity profile over an epsilon grid"},
      {"scatter", "similarity scatter CSV + SVG"},
      {"stability", "fixed-point stability reports"},
      {"classify", "classify a dataset and report accuracy"},
  };
  for (const auto& [name, desc] : commands) {
    CLI::App* sub = app.add_subcommand(name, desc);
    sub->add_option("-c,--config", config_path, "JSON config file");
    sub->add_option("--set", overrides, "override a config key: dotted.path=value");
    sub->callback([&subcommand, name = name] { subcommand = name; });
  }

  std::vector<const char*> argv;
  argv.push_back("attractor");
  for (const auto& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    const json cfg = load_config(config_path, overrides);
    if (subcommand == "prepare") return cmd_prepare(cfg);
    if (subcommand == "pretrain") return cmd_pretrain(cfg);
    if (subcommand == "train") return cmd_train(cfg);
    if (subcommand == "attack") return cmd_attack(cfg);
    if (subcommand == "detect") return cmd_detect(cfg);
    if (subcommand == "sweep") return cmd_sweep(cfg);
    if (subcommand == "scatter") return cmd_scatter(cfg);
    if (subcommand == "stability") return cmd_stability(cfg);
    if (subcommand == "classify") return cmd_classify(cfg);
    std::cerr << app.help();
    return 2;
  } catch (const Error& e) {
    json err;
    err["error"] = err_name(e.code());
    err["message"] = e.what();
    std::cerr << err.dump() << "\n";
    return e.code() == Err::UsageError ? 2 : 1;
  } catch (const std::exception& e) {
    json err;
    err["error"] = "Unexpected";
    err["message"] = e.what();
    std::cerr << err.dump() << "\n";
    return 1;
  }
}

}  // namespace attnet
