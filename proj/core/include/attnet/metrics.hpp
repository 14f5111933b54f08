#pragma once

#include <optional>
#include <string>
#include <vector>

namespace attnet {

// Binary ID-vs-OOD metrics over class ID = 1. Undefined denominators are
// explicit (empty optionals), never silently zeroed.
struct MetricsRow {
  std::string dataset_pair;
  std::string attack_description;
  double accuracy = 0.0;
  std::optional<double> precision;
  std::optional<double> recall;
  std::size_t n_id = 0;
  std::size_t n_ood = 0;
  std::size_t true_positive = 0;
  std::size_t false_positive = 0;
  std::size_t true_negative = 0;
  std::size_t false_negative = 0;
};

MetricsRow binary_metrics(const std::vector<int>& predictions, const std::vector<int>& truth);

}  // namespace attnet
