#include "attnet/attack.hpp"

#include <algorithm>
#include <cmath>

#include "attnet/rng.hpp"

namespace attnet {

Matrix fgsm(const AttractorModel& model, const Matrix& x_batch, const std::vector<int>& y_batch,
            const AttackSpec& spec) {
  require(spec.epsilon_pixels >= 0.0 && spec.epsilon_pixels <= 255.0, Err::ConfigError,
          "epsilon must lie in [0, 255] pixel units");
  require(x_batch.rows() == y_batch.size(), Err::ShapeMismatch, "label count != batch size");
  const double eps = spec.epsilon_pixels / 255.0;

  Matrix x_adv = x_batch;
  if (eps == 0.0) return x_adv;

  const std::size_t slice = 512;
  for (std::size_t begin = 0; begin < x_batch.rows(); begin += slice) {
    const std::size_t end = std::min(x_batch.rows(), begin + slice);
    Matrix xb(end - begin, x_batch.cols());
    std::vector<int> yb(end - begin);
    for (std::size_t i = begin; i < end; ++i) {
      xb.set_row(i - begin, x_batch.row(i));
      yb[i - begin] = y_batch[i];
    }

    Matrix grad;
    if (spec.cost_kind == CostKind::TrainingTotal) {
      grad = input_gradient(model.params, model.arch, xb, xb, yb, model.alphas[0],
                            model.alphas[2], /*target_is_input=*/true);
    } else {
      grad = input_gradient(model.params, model.arch, xb, xb, yb, 0.0, 1.0,
                            /*target_is_input=*/false);
    }

    for (std::size_t i = 0; i < xb.size(); ++i) {
      const double g = grad.data()[i];
      const double step = g > 0.0 ? eps : (g < 0.0 ? -eps : 0.0);
      double v = xb.data()[i] + step;
      if (spec.clip) v = std::clamp(v, 0.0, 1.0);
      x_adv.data()[(begin * x_batch.cols()) + i] = v;
    }
  }
  return x_adv;
}

Matrix salt_pepper(const Matrix& x_batch, const NoiseSpec& spec) {
  require(spec.flip_probability >= 0.0 && spec.flip_probability <= 1.0, Err::ConfigError,
          "flip probability must lie in [0, 1]");
  Matrix out = x_batch;
  if (spec.flip_probability == 0.0) return out;
  auto rng = make_rng(spec.seed, 0x5A17u);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (unif(rng) < spec.flip_probability) {
      out.data()[i] = unif(rng) < 0.5 ? 0.0 : 1.0;
    }
  }
  return out;
}

}  // namespace attnet
