#pragma once

#include <cstdint>

#include "attnet/model.hpp"

namespace attnet {

enum class CostKind {
  TrainingTotal,       // α₁·L_rec + α₃·L_cls with the model's own alphas
  ClassificationOnly,  // cross-entropy alone
};

struct AttackSpec {
  double epsilon_pixels = 0.0;  // 0..255; converted internally to ε/255
  CostKind cost_kind = CostKind::TrainingTotal;
  bool clip = true;
};

struct NoiseSpec {
  double flip_probability = 0.2;
  std::uint64_t seed = 0;
};

// FGSM: x_adv = clip_[0,1](x + (ε/255)·sign(∇_x cost)). For the training
// cost the reconstruction term is differentiated through both occurrences of
// x (network input and MSE target); the eigen term's input gradient is zero
// almost everywhere (piecewise-constant ReLU masks) and is omitted.
// sign(0) = 0.
Matrix fgsm(const AttractorModel& model, const Matrix& x_batch, const std::vector<int>& y_batch,
            const AttackSpec& spec);

// Each pixel independently becomes 0 or 1 (fair coin) with probability p,
// otherwise stays unchanged. Seeded and deterministic.
Matrix salt_pepper(const Matrix& x_batch, const NoiseSpec& spec);

}  // namespace attnet
