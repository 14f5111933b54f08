#include "attnet/net.hpp"

#include <algorithm>
#include <cmath>

#include "attnet/rng.hpp"

namespace attnet {

void ArchSpec::validate() const {
  require(layer_widths.size() >= 2, Err::ShapeMismatch, "need at least one weight layer");
  require(activations.size() == layer_widths.size() - 1, Err::ShapeMismatch,
          "one activation per weight layer required");
  for (std::size_t w : layer_widths) {
    require(w > 0, Err::ShapeMismatch, "zero layer width");
  }
  for (std::size_t k = 0; k < activations.size(); ++k) {
    require(activations[k] != Activation::Softmax, Err::ShapeMismatch,
            "softmax is reserved for the classification head");
  }
  require(head_from >= 1 && head_from < layer_widths.size(), Err::ShapeMismatch,
          "head_from must name a layer output");
  require(head_width > 0, Err::ShapeMismatch, "zero head width");
}

ArchSpec ArchSpec::reference_net() {
  ArchSpec a;
  a.layer_widths = {784, 500, 300, 300, 300, 500, 784};
  a.activations.assign(6, Activation::ReLU);
  a.head_from = 3;  // bottleneck
  a.head_width = 10;
  return a;
}

NetParams NetParams::zeros_like(const ArchSpec& arch) {
  NetParams p;
  const std::size_t layers = arch.num_layers();
  p.weights.reserve(layers);
  p.biases.reserve(layers);
  for (std::size_t k = 0; k < layers; ++k) {
    p.weights.emplace_back(arch.layer_widths[k + 1], arch.layer_widths[k]);
    p.biases.emplace_back(arch.layer_widths[k + 1], 0.0);
  }
  p.head_weight = Matrix(arch.head_width, arch.layer_widths[arch.head_from]);
  p.head_bias.assign(arch.head_width, 0.0);
  return p;
}

NetParams he_init(const ArchSpec& arch, std::uint64_t seed) {
  arch.validate();
  NetParams p = NetParams::zeros_like(arch);
  auto fill = [&](Matrix& w, std::uint64_t salt) {
    auto rng = make_rng(seed, salt);
    const double stddev = std::sqrt(2.0 / static_cast<double>(w.cols()));
    std::normal_distribution<double> dist(0.0, stddev);
    for (std::size_t i = 0; i < w.size(); ++i) {
      w.data()[i] = static_cast<double>(static_cast<float>(dist(rng)));
    }
  };
  for (std::size_t k = 0; k < p.weights.size(); ++k) fill(p.weights[k], k + 1);
  fill(p.head_weight, 0);
  return p;
}

void for_each_tensor(NetParams& p, const std::function<void(double*, std::size_t)>& fn) {
  for (auto& w : p.weights) fn(w.data(), w.size());
  for (auto& b : p.biases) fn(b.data(), b.size());
  fn(p.head_weight.data(), p.head_weight.size());
  fn(p.head_bias.data(), p.head_bias.size());
}

void for_each_tensor(const NetParams& p,
                     const std::function<void(const double*, std::size_t)>& fn) {
  for (const auto& w : p.weights) fn(w.data(), w.size());
  for (const auto& b : p.biases) fn(b.data(), b.size());
  fn(p.head_weight.data(), p.head_weight.size());
  fn(p.head_bias.data(), p.head_bias.size());
}

namespace {

void check_params_match_arch(const NetParams& p, const ArchSpec& arch) {
  require(p.weights.size() == arch.num_layers() && p.biases.size() == arch.num_layers(),
          Err::ShapeMismatch, "parameter layer count does not match architecture");
  for (std::size_t k = 0; k < p.weights.size(); ++k) {
    require(p.weights[k].rows() == arch.layer_widths[k + 1] &&
                p.weights[k].cols() == arch.layer_widths[k] &&
                p.biases[k].size() == arch.layer_widths[k + 1],
            Err::ShapeMismatch, "layer " + std::to_string(k) + " parameter shape mismatch");
  }
  require(p.head_weight.rows() == arch.head_width &&
              p.head_weight.cols() == arch.layer_widths[arch.head_from] &&
              p.head_bias.size() == arch.head_width,
          Err::ShapeMismatch, "head parameter shape mismatch");
}

// Z = X·Wᵀ + b
Matrix affine(const Matrix& x, const Matrix& w, const Vec& b) {
  Matrix z = matmul_nt(x, w);
  for (std::size_t r = 0; r < z.rows(); ++r) {
    auto row = z.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += b[c];
  }
  return z;
}

Vec column_sums(const Matrix& m) {
  Vec s(m.cols(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) s[c] += row[c];
  }
  return s;
}

}  // namespace

ForwardTrace forward(const NetParams& params, const ArchSpec& arch, const Matrix& x_batch,
                     bool with_head) {
  arch.validate();
  check_params_match_arch(params, arch);
  require(x_batch.cols() == arch.input_width(), Err::ShapeMismatch,
          "input width " + std::to_string(x_batch.cols()) + " != " +
              std::to_string(arch.input_width()));

  ForwardTrace trace;
  trace.input = x_batch;
  const std::size_t layers = arch.num_layers();
  trace.pre_activations.reserve(layers);
  trace.activations.reserve(layers);
  trace.relu_masks.resize(layers);

  const Matrix* current = &trace.input;
  for (std::size_t k = 0; k < layers; ++k) {
    Matrix z = affine(*current, params.weights[k], params.biases[k]);
    require(all_finite(z), Err::NonFiniteActivation,
            "non-finite pre-activation in layer " + std::to_string(k));
    Matrix a = z;
    if (arch.activations[k] == Activation::ReLU) {
      Matrix mask(z.rows(), z.cols());
      for (std::size_t i = 0; i < z.size(); ++i) {
        // subgradient at 0 is defined as 0: strictly positive means active
        const bool active = z.data()[i] > 0.0;
        mask.data()[i] = active ? 1.0 : 0.0;
        a.data()[i] = active ? z.data()[i] : 0.0;
      }
      trace.relu_masks[k] = std::move(mask);
    }
    trace.pre_activations.push_back(std::move(z));
    trace.activations.push_back(std::move(a));
    current = &trace.activations.back();
  }

  if (with_head) {
    trace.head_logits = affine(trace.activations[arch.head_from - 1], params.head_weight,
                               params.head_bias);
    require(all_finite(trace.head_logits), Err::NonFiniteActivation, "non-finite head logits");
    trace.head_probs = trace.head_logits;
    for (std::size_t r = 0; r < trace.head_probs.rows(); ++r) {
      auto row = trace.head_probs.row(r);
      const double mx = *std::max_element(row.begin(), row.end());
      double sum = 0.0;
      for (double& v : row) {
        v = std::exp(v - mx);
        sum += v;
      }
      for (double& v : row) v = std::max(v / sum, kProbabilityFloor);
    }
  }
  return trace;
}

namespace {

// Shared reverse pass. Computes parameter grads and/or the input gradient of
// alpha1·L_rec + alpha3·L_cls given a completed forward trace.
LossValues backward_impl(const NetParams& params, const ArchSpec& arch, const ForwardTrace& trace,
                         const Matrix& x_target, const std::vector<int>& y_target, double alpha1,
                         double alpha3, ParamGrads* grads, Matrix* input_grad,
                         bool target_is_input) {
  const std::size_t layers = arch.num_layers();
  const std::size_t batch = trace.input.rows();
  require(batch > 0, Err::EmptyDataset, "empty batch");
  const Matrix& recon = trace.reconstruction();
  require(x_target.same_shape(recon), Err::ShapeMismatch, "reconstruction target shape mismatch");
  require(y_target.size() == batch, Err::ShapeMismatch, "label count != batch size");

  LossValues loss;
  const double rec_scale = 1.0 / static_cast<double>(batch * recon.cols());

  // dL/dA for the reconstruction output
  Matrix d_act(recon.rows(), recon.cols());
  for (std::size_t i = 0; i < recon.size(); ++i) {
    const double diff = recon.data()[i] - x_target.data()[i];
    loss.reconstruction += diff * diff;
    d_act.data()[i] = alpha1 * 2.0 * diff * rec_scale;
  }
  loss.reconstruction *= rec_scale;

  // head loss and its gradient at the logits
  Matrix d_logits;
  if (alpha3 != 0.0 || !trace.head_probs.empty()) {
    require(!trace.head_probs.empty(), Err::ShapeMismatch,
            "trace lacks head outputs required for classification loss");
    d_logits = Matrix(batch, arch.head_width);
    for (std::size_t r = 0; r < batch; ++r) {
      const int y = y_target[r];
      require(y >= 0 && static_cast<std::size_t>(y) < arch.head_width, Err::LabelOutOfRange,
              "label " + std::to_string(y));
      const double p = trace.head_probs(r, static_cast<std::size_t>(y));
      require(p > 0.0, Err::DegenerateProbability, "probability underflow despite floor");
      loss.classification -= std::log(p);
      for (std::size_t c = 0; c < arch.head_width; ++c) {
        const double onehot = (static_cast<std::size_t>(y) == c) ? 1.0 : 0.0;
        d_logits(r, c) = alpha3 * (trace.head_probs(r, c) - onehot) / static_cast<double>(batch);
      }
    }
    loss.classification /= static_cast<double>(batch);
  }

  if (grads) {
    *grads = NetParams::zeros_like(arch);
    if (!d_logits.empty()) {
      grads->head_weight = matmul_tn(d_logits, trace.activations[arch.head_from - 1]);
      grads->head_bias = column_sums(d_logits);
    }
  }

  const bool need_input_grad = input_grad != nullptr;
  Matrix head_into_act;
  if (!d_logits.empty()) head_into_act = matmul(d_logits, params.head_weight);

  // walk layers from the top; d_act is dL/dA_k on entry to iteration k
  for (std::size_t k = layers; k-- > 0;) {
    if (k + 1 == arch.head_from && !head_into_act.empty()) {
      add_scaled(d_act, head_into_act);
    }
    // dL/dZ_k
    if (arch.activations[k] == Activation::ReLU) {
      const Matrix& mask = trace.relu_masks[k];
      for (std::size_t i = 0; i < d_act.size(); ++i) d_act.data()[i] *= mask.data()[i];
    }
    const Matrix& below = (k == 0) ? trace.input : trace.activations[k - 1];
    if (grads) {
      grads->weights[k] = matmul_tn(d_act, below);
      grads->biases[k] = column_sums(d_act);
    }
    if (k > 0 || need_input_grad) {
      d_act = matmul(d_act, params.weights[k]);
    }
  }

  if (need_input_grad) {
    *input_grad = std::move(d_act);
    if (target_is_input) {
      // the target occurrence of x contributes -∂L_rec/∂recon
      for (std::size_t i = 0; i < input_grad->size(); ++i) {
        input_grad->data()[i] -=
            alpha1 * 2.0 * (recon.data()[i] - x_target.data()[i]) * rec_scale;
      }
    }
  }

  loss.total = alpha1 * loss.reconstruction + alpha3 * loss.classification;
  return loss;
}

}  // namespace

LossValues loss_and_grads(const NetParams& params, const ArchSpec& arch, const ForwardTrace& trace,
                          const Matrix& x_target, const std::vector<int>& y_target, double alpha1,
                          double alpha3, ParamGrads* grads) {
  return backward_impl(params, arch, trace, x_target, y_target, alpha1, alpha3, grads, nullptr,
                       false);
}

Matrix input_gradient(const NetParams& params, const ArchSpec& arch, const Matrix& x_batch,
                      const Matrix& x_target, const std::vector<int>& y_target, double alpha1,
                      double alpha3, bool target_is_input) {
  ForwardTrace trace = forward(params, arch, x_batch, true);
  Matrix g;
  backward_impl(params, arch, trace, x_target, y_target, alpha1, alpha3, nullptr, &g,
                target_is_input);
  return g;
}

AdamState AdamState::init_like(const ArchSpec& arch) {
  AdamState s;
  s.first_moment = NetParams::zeros_like(arch);
  s.second_moment = NetParams::zeros_like(arch);
  return s;
}

void adam_step(NetParams& params, const ParamGrads& grads, AdamState& state, double lr) {
  state.step_count += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step_count));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step_count));

  auto update = [&](double* p, const double* g, double* m, double* v, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      p[i] -= lr * mhat / (std::sqrt(vhat) + state.epsilon);
    }
  };

  require(params.weights.size() == grads.weights.size(), Err::ShapeMismatch,
          "gradient layer count mismatch");
  for (std::size_t k = 0; k < params.weights.size(); ++k) {
    require(params.weights[k].same_shape(grads.weights[k]), Err::ShapeMismatch,
            "gradient shape mismatch at layer " + std::to_string(k));
    update(params.weights[k].data(), grads.weights[k].data(), state.first_moment.weights[k].data(),
           state.second_moment.weights[k].data(), params.weights[k].size());
    update(params.biases[k].data(), grads.biases[k].data(), state.first_moment.biases[k].data(),
           state.second_moment.biases[k].data(), params.biases[k].size());
  }
  require(params.head_weight.same_shape(grads.head_weight), Err::ShapeMismatch,
          "head gradient shape mismatch");
  update(params.head_weight.data(), grads.head_weight.data(), state.first_moment.head_weight.data(),
         state.second_moment.head_weight.data(), params.head_weight.size());
  update(params.head_bias.data(), grads.head_bias.data(), state.first_moment.head_bias.data(),
         state.second_moment.head_bias.data(), params.head_bias.size());
}

ParamGrads finite_diff_grads(const std::function<double(const NetParams&)>& loss_fn,
                             const NetParams& params, const ArchSpec& arch, double h) {
  require(h > 0.0, Err::ConfigError, "finite difference step must be positive");
  ParamGrads out = NetParams::zeros_like(arch);
  NetParams work = params;

  // matched walks over work and out
  std::vector<std::pair<double*, std::size_t>> work_tensors, out_tensors;
  for_each_tensor(work, [&](double* p, std::size_t n) { work_tensors.emplace_back(p, n); });
  for_each_tensor(out, [&](double* p, std::size_t n) { out_tensors.emplace_back(p, n); });

  for (std::size_t t = 0; t < work_tensors.size(); ++t) {
    auto [wp, n] = work_tensors[t];
    double* gp = out_tensors[t].first;
    for (std::size_t i = 0; i < n; ++i) {
      const double saved = wp[i];
      wp[i] = saved + h;
      const double up = loss_fn(work);
      wp[i] = saved - h;
      const double down = loss_fn(work);
      wp[i] = saved;
      gp[i] = (up - down) / (2.0 * h);
    }
  }
  return out;
}

}  // namespace attnet
