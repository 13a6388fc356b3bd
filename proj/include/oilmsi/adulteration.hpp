#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "oilmsi/fda.hpp"

namespace oilmsi {

/// Multivariate Gaussian summary of one class in the reduced space.
struct GaussianClassModel {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
  std::size_t sample_count = 0;
};

/// Sample mean and covariance (divisor m - 1), regularised by eps*I with
/// eps = 1e-10 * trace / k (1e-10 when the trace is zero).
GaussianClassModel fit_gaussian(const PixelBlock& rows);

/// Closed-form Bhattacharyya distance between two Gaussians.
double bhattacharyya(const GaussianClassModel& a, const GaussianClassModel& b);

double mse(const std::vector<double>& predicted, const std::vector<double>& actual);

/// Y = a X^2 + b X least-squares fit through the origin.
struct QuadraticFit {
  double a = 0.0;
  double b = 0.0;
  double r_squared = 0.0;
};

QuadraticFit fit_quadratic_through_origin(const std::vector<double>& x, const std::vector<double>& y);

/// Non-negative root of a X^2 + b X = y (linear when |a| < 1e-12).
double invert_calibration(double y, double a, double b);

struct AdulterationModel {
  double coeff_a = 0.0;
  double coeff_b = 0.0;
  double normalizer = 1.0;
  double r_squared = 0.0;
  GaussianClassModel reference;
  FdaModel fda;
};

/// One calibration level: its fraction, the raw distance of every replicate
/// and their mean.
struct CalibrationPoint {
  double fraction = 0.0;
  std::vector<double> replicate_distances;
  double mean_distance = 0.0;
  double normalized_distance = 0.0;
};

struct FitOptions {
  std::size_t reference_size = 900;
  std::uint64_t seed = 0;
};

struct FitResult {
  AdulterationModel model;
  std::vector<CalibrationPoint> curve;  // ascending fraction
};

/// Fits the calibration curve from projected replicate blocks. Blocks sharing
/// a fraction are replicates; fraction 0 is the reference class, from which
/// reference_size rows are drawn (seeded) to form the reference Gaussian.
/// The returned model carries an empty FdaModel; attach the projection used.
FitResult fit_model(const std::vector<std::pair<double, PixelBlock>>& training, const FitOptions& options = {});

/// Full training from unreduced (9-band) replicate blocks: scatter, FDA,
/// projection, then fit_model.
FitResult train_adulteration(const std::vector<std::pair<double, PixelBlock>>& training,
                             const FdaOptions& fda_options, const FitOptions& fit_options);

struct Estimate {
  double fraction = 0.0;
  double normalized_distance = 0.0;
  double raw_distance = 0.0;
};

/// Estimates the adulteration fraction of a block of 9-band pixel spectra.
Estimate estimate_pixels(const PixelBlock& pixels, const AdulterationModel& model);

/// Estimates from a preprocessed (dark-subtracted, smoothed) cube.
Estimate estimate(const SpectralCube& sample, const AdulterationModel& model, const Roi& roi);

std::string format_adulteration_model(const AdulterationModel& model);
AdulterationModel parse_adulteration_model(const std::string& text);

/// CSV: fraction,mean_normalized_distance,mean_raw_distance,replicate_1..N
std::string format_calibration_csv(const std::vector<CalibrationPoint>& curve);

}  // namespace oilmsi
