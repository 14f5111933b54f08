#pragma once

#include <cstdint>

#include "attnet/net.hpp"

namespace attnet {

// Exact Jacobian of the autoencoding path's output with respect to the input
// at x (head excluded). Equals the product of the weight matrices with the
// ReLU masks of a forward pass at x absorbed between them.
Matrix input_jacobian(const NetParams& params, const ArchSpec& arch, std::span<const double> x);

// Half the squared Frobenius norm of J.
double eigen_loss(const Matrix& jacobian);

struct EigenLossGrads {
  ParamGrads grads;     // bias and head entries are exactly zero
  double loss_value = 0.0;
};

// Mean over the batch of eigen_loss(J(x)) and its analytic gradient with the
// ReLU masks held constant (exact almost everywhere, since the masks are
// piecewise constant in the parameters). Writing J = P·(D_k W_k)·Q with P the
// masked product above layer k and Q the product below, the per-sample
// gradient is ∂L/∂W_k = D_k·Pᵀ·J·Qᵀ. Bias gradients vanish identically.
EigenLossGrads eigen_loss_param_grads(const NetParams& params, const ArchSpec& arch,
                                      const Matrix& x_batch, unsigned n_threads = 1);

// Unbiased stochastic estimate of eigen_loss via Rademacher probes:
// ½·mean over v∈{±1}ⁿ of ‖J·v‖², with J·v evaluated by one masked forward
// chain per probe, J never materialized.
double frobenius_estimate(const NetParams& params, const ArchSpec& arch, std::span<const double> x,
                          std::size_t probes, std::uint64_t seed);

}  // namespace attnet
