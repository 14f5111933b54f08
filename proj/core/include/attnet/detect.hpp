#pragma once

#include <complex>
#include <limits>

#include "attnet/model.hpp"

namespace attnet {

enum class IterationMode { Fixed, Auto };

struct DetectorConfig {
  double threshold = 0.8;
  std::size_t n_iterations = 1;          // Fixed mode
  IterationMode mode = IterationMode::Fixed;
  double convergence_tol = 1e-4;         // Auto mode: stop when ‖Δ‖₂ < tol
  std::size_t max_auto_iterations = 5;
};

enum class StabilityVerdict { Stable, Unstable, NotEvaluated };
enum class StabilityCriterion { SpectralRadius, PaperLiteral };

struct FixedPointReport {
  std::vector<Vec> trajectory;  // x₀ .. x_k
  bool converged = false;
  std::size_t iterations_used = 0;
  double final_similarity_to_input = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::complex<double>> spectrum;  // sorted by descending magnitude
  StabilityVerdict stability_verdict = StabilityVerdict::NotEvaluated;
};

struct OODVerdict {
  int decision = 0;  // 1 = ID, 0 = OOD
  double similarity_score = -std::numeric_limits<double>::infinity();
  std::size_t iterations_used = 0;
};

// Pearson correlation coefficient between two equal-length vectors.
// Throws ZeroVariance when either vector is constant.
double pearson(std::span<const double> x, std::span<const double> y);

// Repeated application of the autoencoding map G. Fixed mode runs exactly
// n_iterations; Auto mode stops when the L2 step falls below convergence_tol
// or max_auto_iterations is reached.
FixedPointReport iterate_map(const AttractorModel& model, std::span<const double> x,
                             const DetectorConfig& cfg);

// Thresholded ID/OOD decision: similarity between the final iterate and the
// ORIGINAL input, compared to cfg.threshold. Constant vectors (undefined
// Pearson score) are classified OOD with a -inf sentinel score.
OODVerdict detect(const AttractorModel& model, std::span<const double> x,
                  const DetectorConfig& cfg);

// All eigenvalues of a real square matrix, sorted by descending magnitude.
std::vector<std::complex<double>> eigen_spectrum(const Matrix& m);

// Evaluates the fixed-point stability of x_star under the autoencoding map:
// requires ‖G(x*) − x*‖₂ ≤ fixed_point_tol, then classifies via the Jacobian
// spectrum at x_star. SpectralRadius: stable iff max|λ| < 1. PaperLiteral:
// stable iff max|Re λ| < 1.
FixedPointReport stability_classify(const AttractorModel& model, std::span<const double> x_star,
                                    StabilityCriterion criterion,
                                    double fixed_point_tol = 1e-3);

}  // namespace attnet
