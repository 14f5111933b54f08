#include "attnet/detect.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

#include "attnet/jacobian.hpp"

namespace attnet {

double pearson(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size(), Err::LengthMismatch,
          "pearson needs equal lengths, got " + std::to_string(x.size()) + " and " +
              std::to_string(y.size()));
  require(x.size() >= 2, Err::LengthMismatch, "pearson needs at least two elements");
  const std::size_t n = x.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);

  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  bool x_const = true, y_const = true;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
    x_const = x_const && (x[i] == x[0]);
    y_const = y_const && (y[i] == y[0]);
  }
  require(!x_const && !y_const && sxx > 0.0 && syy > 0.0, Err::ZeroVariance,
          "pearson undefined for a constant vector");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

namespace {

Vec apply_g(const AttractorModel& model, std::span<const double> x) {
  Matrix xb(1, x.size());
  xb.set_row(0, x);
  return reconstruct(model, xb).row_copy(0);
}

}  // namespace

FixedPointReport iterate_map(const AttractorModel& model, std::span<const double> x,
                             const DetectorConfig& cfg) {
  require(x.size() == model.arch.input_width(), Err::ShapeMismatch,
          "sample width does not match model input");
  require(cfg.mode != IterationMode::Fixed || cfg.n_iterations >= 1, Err::ConfigError,
          "fixed mode needs n_iterations >= 1");
  require(cfg.convergence_tol > 0.0, Err::ConfigError, "convergence tolerance must be positive");
  FixedPointReport report;
  report.trajectory.emplace_back(x.begin(), x.end());

  const std::size_t limit =
      cfg.mode == IterationMode::Fixed ? cfg.n_iterations : cfg.max_auto_iterations;
  double last_step = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < limit; ++k) {
    Vec next = apply_g(model, report.trajectory.back());
    last_step = l2_distance(next, report.trajectory.back());
    report.trajectory.push_back(std::move(next));
    if (cfg.mode == IterationMode::Auto && last_step < cfg.convergence_tol) break;
  }
  report.iterations_used = report.trajectory.size() - 1;
  report.converged = last_step < cfg.convergence_tol;
  try {
    report.final_similarity_to_input = pearson(report.trajectory.back(), x);
  } catch (const Error& e) {
    if (e.code() != Err::ZeroVariance) throw;
  }
  return report;
}

OODVerdict detect(const AttractorModel& model, std::span<const double> x,
                  const DetectorConfig& cfg) {
  FixedPointReport report = iterate_map(model, x, cfg);
  OODVerdict verdict;
  verdict.iterations_used = report.iterations_used;
  if (std::isnan(report.final_similarity_to_input)) {
    // undefined similarity: constant image carries no class evidence
    verdict.decision = 0;
    verdict.similarity_score = -std::numeric_limits<double>::infinity();
    return verdict;
  }
  verdict.similarity_score = report.final_similarity_to_input;
  verdict.decision = verdict.similarity_score >= cfg.threshold ? 1 : 0;
  return verdict;
}

std::vector<std::complex<double>> eigen_spectrum(const Matrix& m) {
  require(m.rows() == m.cols(), Err::NonSquare,
          "eigen_spectrum needs a square matrix, got " + std::to_string(m.rows()) + "×" +
              std::to_string(m.cols()));
  require(all_finite(m), Err::ConvergenceFailure, "matrix has non-finite entries");
  using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Eigen::Map<const EMat> map(m.data(), static_cast<Eigen::Index>(m.rows()),
                             static_cast<Eigen::Index>(m.cols()));
  Eigen::EigenSolver<Eigen::MatrixXd> solver(map, /*computeEigenvectors=*/false);
  require(solver.info() == Eigen::Success, Err::ConvergenceFailure,
          "eigenvalue iteration did not converge");
  std::vector<std::complex<double>> evs(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) evs[i] = solver.eigenvalues()[static_cast<Eigen::Index>(i)];
  std::sort(evs.begin(), evs.end(), [](const auto& a, const auto& b) {
    const double ma = std::abs(a), mb = std::abs(b);
    if (ma != mb) return ma > mb;
    if (a.real() != b.real()) return a.real() > b.real();
    return a.imag() > b.imag();
  });
  return evs;
}

FixedPointReport stability_classify(const AttractorModel& model, std::span<const double> x_star,
                                    StabilityCriterion criterion, double fixed_point_tol) {
  Vec gx = apply_g(model, x_star);
  const double residual = l2_distance(gx, x_star);
  require(residual <= fixed_point_tol, Err::NotAFixedPoint,
          "‖G(x)−x‖₂ = " + std::to_string(residual) + " exceeds tolerance " +
              std::to_string(fixed_point_tol));

  FixedPointReport report;
  report.trajectory.emplace_back(x_star.begin(), x_star.end());
  report.trajectory.push_back(gx);
  report.iterations_used = 1;
  report.converged = true;
  try {
    report.final_similarity_to_input = pearson(gx, x_star);
  } catch (const Error& e) {
    if (e.code() != Err::ZeroVariance) throw;
  }

  const Matrix jac = input_jacobian(model.params, model.arch, x_star);
  report.spectrum = eigen_spectrum(jac);
  double magnitude = 0.0;
  if (criterion == StabilityCriterion::SpectralRadius) {
    magnitude = std::abs(report.spectrum.front());
  } else {
    for (const auto& ev : report.spectrum) magnitude = std::max(magnitude, std::abs(ev.real()));
  }
  report.stability_verdict = magnitude < 1.0 ? StabilityVerdict::Stable : StabilityVerdict::Unstable;
  return report;
}

}  // namespace attnet
