#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "attnet/matrix.hpp"

namespace attnet {

enum class Activation { ReLU, Softmax, Identity };

// Fully connected autoencoder topology plus the classification head tap.
// layer_widths = [input, hidden..., output]; activations has one entry per
// weight layer. head_from indexes the activation that feeds the head
// (1-based over layer outputs; the bottleneck for the reference net).
struct ArchSpec {
  std::vector<std::size_t> layer_widths;
  std::vector<Activation> activations;
  std::size_t head_from = 0;
  std::size_t head_width = 10;

  std::size_t num_layers() const { return activations.size(); }
  std::size_t input_width() const { return layer_widths.front(); }
  std::size_t output_width() const { return layer_widths.back(); }
  void validate() const;

  // 784-500-300-300-300-500-784 ReLU autoencoder with a 10-way softmax head
  // on the 300-unit bottleneck.
  static ArchSpec reference_net();

  bool operator==(const ArchSpec&) const = default;
};

// Weights (out×in) and biases for the autoencoding path plus the head.
// Also reused as the container for gradients and Adam moments, which are
// shaped identically.
struct NetParams {
  std::vector<Matrix> weights;
  std::vector<Vec> biases;
  Matrix head_weight;
  Vec head_bias;

  static NetParams zeros_like(const ArchSpec& arch);
  bool operator==(const NetParams&) const = default;
};

using ParamGrads = NetParams;

// He-scaled normal initialization (variance 2/fan_in), zero biases. Draws
// are quantized to float32 so that a fresh model survives the float32 model
// file bit-exactly.
NetParams he_init(const ArchSpec& arch, std::uint64_t seed);

struct ForwardTrace {
  Matrix input;                        // B×in
  std::vector<Matrix> pre_activations; // per layer, B×width
  std::vector<Matrix> activations;     // per layer, B×width (post-activation)
  std::vector<Matrix> relu_masks;      // 0/1; empty for non-ReLU layers
  Matrix head_logits;
  Matrix head_probs;

  const Matrix& reconstruction() const { return activations.back(); }
};

ForwardTrace forward(const NetParams& params, const ArchSpec& arch, const Matrix& x_batch,
                     bool with_head = true);

struct LossValues {
  double reconstruction = 0.0;
  double eigen = 0.0;
  double classification = 0.0;
  double total = 0.0;
};

// Reconstruction (mean over batch and pixels) and classification (mean
// cross-entropy) losses with reverse-mode gradients of
// α₁·L_rec + α₃·L_cls. The eigen term lives in jacobian.hpp.
LossValues loss_and_grads(const NetParams& params, const ArchSpec& arch, const ForwardTrace& trace,
                          const Matrix& x_target, const std::vector<int>& y_target, double alpha1,
                          double alpha3, ParamGrads* grads);

// Gradient of the same weighted cost with respect to the input batch.
// When target_is_input is set, x_target must alias the forward input and the
// reconstruction term is differentiated through both occurrences.
Matrix input_gradient(const NetParams& params, const ArchSpec& arch, const Matrix& x_batch,
                      const Matrix& x_target, const std::vector<int>& y_target, double alpha1,
                      double alpha3, bool target_is_input);

struct AdamState {
  NetParams first_moment;
  NetParams second_moment;
  long step_count = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState init_like(const ArchSpec& arch);
};

void adam_step(NetParams& params, const ParamGrads& grads, AdamState& state, double lr);

// Central-difference gradient of an arbitrary scalar function of the
// parameters; the independent oracle for every analytic gradient here.
ParamGrads finite_diff_grads(const std::function<double(const NetParams&)>& loss_fn,
                             const NetParams& params, const ArchSpec& arch, double h);

// Iterates fn over every parameter tensor of a NetParams group in a fixed
// order (weights, biases, head weight, head bias).
void for_each_tensor(NetParams& p, const std::function<void(double*, std::size_t)>& fn);
void for_each_tensor(const NetParams& p, const std::function<void(const double*, std::size_t)>& fn);

constexpr double kProbabilityFloor = 1e-12;

}  // namespace attnet
