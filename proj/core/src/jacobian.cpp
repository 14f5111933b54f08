#include "attnet/jacobian.hpp"

#include <cmath>

#include "attnet/parallel.hpp"
#include "attnet/rng.hpp"

namespace attnet {

namespace {

// Per-layer 0/1 masks of a forward pass at one sample; all-ones for
// Identity-activation layers.
std::vector<Vec> masks_at(const NetParams& params, const ArchSpec& arch,
                          std::span<const double> x) {
  Matrix xb(1, x.size());
  xb.set_row(0, x);
  ForwardTrace trace = forward(params, arch, xb, /*with_head=*/false);
  std::vector<Vec> masks(arch.num_layers());
  for (std::size_t k = 0; k < arch.num_layers(); ++k) {
    if (arch.activations[k] == Activation::ReLU) {
      masks[k] = trace.relu_masks[k].row_copy(0);
    } else {
      masks[k].assign(arch.layer_widths[k + 1], 1.0);
    }
  }
  return masks;
}

// Cumulative products Q_k = (D_{k-1}W_{k-1})···(D_1W_1); out[k] has shape
// layer_widths[k] × input. out[0] is the identity and left empty; the final
// entry is the full Jacobian.
std::vector<Matrix> jacobian_chain(const NetParams& params, const ArchSpec& arch,
                                   const std::vector<Vec>& masks) {
  const std::size_t layers = arch.num_layers();
  std::vector<Matrix> q(layers + 1);
  for (std::size_t k = 0; k < layers; ++k) {
    Matrix next = (k == 0) ? params.weights[0] : matmul(params.weights[k], q[k]);
    mask_rows(next, masks[k]);
    q[k + 1] = std::move(next);
  }
  return q;
}

}  // namespace

Matrix input_jacobian(const NetParams& params, const ArchSpec& arch, std::span<const double> x) {
  arch.validate();
  require(x.size() == arch.input_width(), Err::ShapeMismatch,
          "sample width " + std::to_string(x.size()) + " != input width");
  const auto masks = masks_at(params, arch, x);
  auto chain = jacobian_chain(params, arch, masks);
  return std::move(chain.back());
}

double eigen_loss(const Matrix& jacobian) { return 0.5 * frobenius_norm_sq(jacobian); }

EigenLossGrads eigen_loss_param_grads(const NetParams& params, const ArchSpec& arch,
                                      const Matrix& x_batch, unsigned n_threads) {
  arch.validate();
  require(x_batch.rows() > 0, Err::EmptyDataset, "eigen loss needs a nonempty batch");
  require(x_batch.cols() == arch.input_width(), Err::ShapeMismatch, "batch width mismatch");
  const std::size_t layers = arch.num_layers();
  const std::size_t batch = x_batch.rows();

  struct Partial {
    std::vector<Matrix> grads;
    double loss = 0.0;
  };
  const unsigned workers = std::max(1u, std::min<unsigned>(n_threads, batch));
  std::vector<Partial> partials(workers);

  parallel_for(batch, workers, [&](std::size_t begin, std::size_t end, unsigned w) {
    Partial& acc = partials[w];
    acc.grads.resize(layers);
    for (std::size_t k = 0; k < layers; ++k) {
      acc.grads[k] = Matrix(arch.layer_widths[k + 1], arch.layer_widths[k]);
    }
    for (std::size_t i = begin; i < end; ++i) {
      const auto masks = masks_at(params, arch, x_batch.row(i));
      const auto q = jacobian_chain(params, arch, masks);
      const Matrix& jac = q[layers];
      acc.loss += eigen_loss(jac);

      // suffix sweep: s = P_kᵀ·J, masked per layer; grad_k = (D_k s)·Q_kᵀ
      Matrix s = jac;
      for (std::size_t k = layers; k-- > 0;) {
        mask_rows(s, masks[k]);
        if (k == 0) {
          add_scaled(acc.grads[0], s);
        } else {
          add_scaled(acc.grads[k], matmul_nt(s, q[k]));
          s = matmul_tn(params.weights[k], s);
        }
      }
    }
  });

  EigenLossGrads out;
  out.grads = NetParams::zeros_like(arch);
  const double inv_batch = 1.0 / static_cast<double>(batch);
  for (const Partial& p : partials) {
    out.loss_value += p.loss;
    for (std::size_t k = 0; k < layers; ++k) add_scaled(out.grads.weights[k], p.grads[k], inv_batch);
  }
  out.loss_value *= inv_batch;
  return out;
}

double frobenius_estimate(const NetParams& params, const ArchSpec& arch, std::span<const double> x,
                          std::size_t probes, std::uint64_t seed) {
  arch.validate();
  require(probes >= 1, Err::ConfigError, "at least one probe required");
  const auto masks = masks_at(params, arch, x);
  auto rng = make_rng(seed, 0x46524F42u);
  std::uniform_int_distribution<int> coin(0, 1);

  // probes == 2^n asks for every sign vector once, making the Rademacher
  // identity exact instead of sampled
  const std::size_t n = arch.input_width();
  const bool exhaustive = n < 64 && probes == (std::size_t{1} << n);

  double acc = 0.0;
  Vec v(arch.input_width());
  for (std::size_t p = 0; p < probes; ++p) {
    if (exhaustive) {
      for (std::size_t j = 0; j < n; ++j) v[j] = ((p >> j) & 1) ? 1.0 : -1.0;
    } else {
      for (double& e : v) e = coin(rng) ? 1.0 : -1.0;
    }
    Vec u = v;
    for (std::size_t k = 0; k < arch.num_layers(); ++k) {
      const Matrix& w = params.weights[k];
      Vec next(w.rows(), 0.0);
      for (std::size_t r = 0; r < w.rows(); ++r) {
        if (masks[k][r] == 0.0) continue;
        auto wr = w.row(r);
        double s = 0.0;
        for (std::size_t c = 0; c < wr.size(); ++c) s += wr[c] * u[c];
        next[r] = s;
      }
      u = std::move(next);
    }
    double norm_sq = 0.0;
    for (double e : u) norm_sq += e * e;
    acc += norm_sq;
  }
  return 0.5 * acc / static_cast<double>(probes);
}

}  // namespace attnet
