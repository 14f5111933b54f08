#include "attnet/metrics.hpp"

#include "attnet/error.hpp"

namespace attnet {

MetricsRow binary_metrics(const std::vector<int>& predictions, const std::vector<int>& truth) {
  require(predictions.size() == truth.size(), Err::LengthMismatch,
          "prediction and truth lengths differ");
  require(!truth.empty(), Err::EmptyDataset, "metrics over an empty sample set");

  MetricsRow row;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool pred_id = predictions[i] == 1;
    const bool true_id = truth[i] == 1;
    if (pred_id && true_id) ++row.true_positive;
    else if (pred_id && !true_id) ++row.false_positive;
    else if (!pred_id && !true_id) ++row.true_negative;
    else ++row.false_negative;
    if (true_id) ++row.n_id;
    else ++row.n_ood;
  }
  row.accuracy = static_cast<double>(row.true_positive + row.true_negative) /
                 static_cast<double>(truth.size());
  if (row.true_positive + row.false_positive > 0) {
    row.precision = static_cast<double>(row.true_positive) /
                    static_cast<double>(row.true_positive + row.false_positive);
  }
  if (row.true_positive + row.false_negative > 0) {
    row.recall = static_cast<double>(row.true_positive) /
                 static_cast<double>(row.true_positive + row.false_negative);
  }
  return row;
}

}  // namespace attnet
