#pragma once

#include <array>
#include <string>

#include "attnet/net.hpp"

namespace attnet {

// A trained (or initialized) network bundled with its topology and training
// provenance. alphas are the loss weights it was trained with; the FGSM
// attack reads them to rebuild the training cost.
struct AttractorModel {
  ArchSpec arch;
  NetParams params;
  std::string training_mode_tag = "baseline";  // "baseline" | "attractor" | "pretrained"
  std::uint64_t seed = 0;
  std::array<double, 3> alphas{0.99, 0.0, 0.01};
};

// One pass through the autoencoding path (the paper's G); the head is not
// evaluated.
Matrix reconstruct(const AttractorModel& model, const Matrix& x_batch);

// Model file: magic "ATNW", u32 LE format version, UTF-8 JSON metadata block
// (arch widths, activations, head index, training mode, seed, alphas), then
// per-layer row-major little-endian float32 weight/bias blobs followed by the
// head blobs, then a CRC-32 of all preceding bytes.
void save_model(const AttractorModel& model, const std::string& path);
AttractorModel load_model(const std::string& path);

// Quantizes parameters through float32, matching what a save/load round trip
// produces.
NetParams quantize_f32(const NetParams& params);

}  // namespace attnet
