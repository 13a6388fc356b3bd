#include "oilmsi/adulteration.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "oilmsi/errors.hpp"
#include "oilmsi/rng.hpp"
#include "oilmsi/text.hpp"

namespace oilmsi {

GaussianClassModel fit_gaussian(const PixelBlock& rows) {
  const Eigen::Index m = rows.rows();
  const Eigen::Index k = rows.cols();
  if (k < 1 || m < k + 1) throw ValidationError("too few rows to fit a Gaussian");
  GaussianClassModel g;
  g.sample_count = static_cast<std::size_t>(m);
  g.mean = rows.colwise().mean().transpose();
  const Eigen::MatrixXd centred = rows.rowwise() - g.mean.transpose();
  g.covariance = (centred.transpose() * centred) / static_cast<double>(m - 1);
  g.covariance = 0.5 * (g.covariance + g.covariance.transpose());
  const double trace = g.covariance.trace();
  const double eps = trace > 0.0 ? 1e-10 * trace / static_cast<double>(k) : 1e-10;
  g.covariance.diagonal().array() += eps;
  if (Eigen::LLT<Eigen::MatrixXd>(g.covariance).info() != Eigen::Success) {
    throw NumericalError("zero-variance dimension: covariance not positive definite");
  }
  return g;
}

namespace {

double log_det_spd(const Eigen::MatrixXd& m, const Eigen::LLT<Eigen::MatrixXd>& llt) {
  if (llt.info() != Eigen::Success) throw NumericalError("covariance not positive definite");
  double sum = 0.0;
  const Eigen::MatrixXd& l = llt.matrixLLT();
  for (Eigen::Index i = 0; i < m.rows(); ++i) sum += std::log(l(i, i));
  return 2.0 * sum;
}

}  // namespace

double bhattacharyya(const GaussianClassModel& a, const GaussianClassModel& b) {
  if (a.mean.size() != b.mean.size() || a.covariance.rows() != b.covariance.rows() ||
      a.covariance.rows() != a.mean.size()) {
    throw ValidationError("dimension mismatch between Gaussian models");
  }
  const Eigen::MatrixXd pooled = (a.covariance + b.covariance) * 0.5;
  const Eigen::LLT<Eigen::MatrixXd> llt_pooled(pooled);
  if (llt_pooled.info() != Eigen::Success) throw NumericalError("pooled covariance not positive definite");
  const Eigen::VectorXd diff = a.mean - b.mean;
  const double mahalanobis = diff.dot(llt_pooled.solve(diff));
  const double ld_pooled = log_det_spd(pooled, llt_pooled);
  const double ld_a = log_det_spd(a.covariance, Eigen::LLT<Eigen::MatrixXd>(a.covariance));
  const double ld_b = log_det_spd(b.covariance, Eigen::LLT<Eigen::MatrixXd>(b.covariance));
  const double distance = mahalanobis / 8.0 + 0.5 * (ld_pooled - 0.5 * (ld_a + ld_b));
  return std::max(0.0, distance);
}

double mse(const std::vector<double>& predicted, const std::vector<double>& actual) {
  if (predicted.empty() || predicted.size() != actual.size()) {
    throw ValidationError("mse needs equal-length, non-empty inputs");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double d = predicted[i] - actual[i];
    sum += d * d;
  }
  return sum / static_cast<double>(predicted.size());
}

QuadraticFit fit_quadratic_through_origin(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ValidationError("quadratic fit needs >= 2 points");
  const auto n = static_cast<Eigen::Index>(x.size());
  Eigen::MatrixXd design(n, 2);
  Eigen::VectorXd target(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    design(i, 0) = x[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(i)];
    design(i, 1) = x[static_cast<std::size_t>(i)];
    target(i) = y[static_cast<std::size_t>(i)];
  }
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < 2) throw NumericalError("degenerate calibration abscissae");
  const Eigen::Vector2d coeff = qr.solve(target);

  QuadraticFit fit{coeff(0), coeff(1), 0.0};
  const double mean_y = target.mean();
  const double ss_res = (target - design * coeff).squaredNorm();
  const double ss_tot = (target.array() - mean_y).square().sum();
  fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  return fit;
}

double invert_calibration(double y, double a, double b) {
  if (y < 0.0) throw ValidationError("negative normalised distance");
  if (std::abs(a) < 1e-12) {
    if (b == 0.0) throw NumericalError("flat calibration curve");
    return y / b;
  }
  const double disc = b * b + 4.0 * a * y;
  if (disc < 0.0) throw NumericalError("out of calibration range");
  const double root = std::sqrt(disc);
  // Rationalised form of (-b + sqrt(disc)) / (2a); avoids cancellation.
  if (b + root != 0.0) return 2.0 * y / (b + root);
  return (-b + root) / (2.0 * a);
}

FitResult fit_model(const std::vector<std::pair<double, PixelBlock>>& training, const FitOptions& options) {
  std::map<double, std::vector<const PixelBlock*>> levels;
  for (const auto& [fraction, block] : training) {
    validate(ClassLabel::adulteration(fraction));
    levels[fraction].push_back(&block);
  }
  if (!levels.contains(0.0)) throw ValidationError("missing reference class (fraction 0)");
  if (levels.size() < 3) throw ValidationError("fewer than 3 adulteration levels");

  const auto& ref_blocks = levels.at(0.0);
  Eigen::Index ref_rows = 0;
  for (const PixelBlock* b : ref_blocks) ref_rows += b->rows();
  PixelBlock pooled(ref_rows, ref_blocks.front()->cols());
  Eigen::Index r = 0;
  for (const PixelBlock* b : ref_blocks) {
    pooled.middleRows(r, b->rows()) = *b;
    r += b->rows();
  }
  Rng rng(options.seed);
  FitResult result;
  result.model.reference = fit_gaussian(random_subsample(pooled, options.reference_size, rng));

  for (const auto& [fraction, blocks] : levels) {
    CalibrationPoint point;
    point.fraction = fraction;
    for (const PixelBlock* b : blocks) {
      point.replicate_distances.push_back(bhattacharyya(fit_gaussian(*b), result.model.reference));
    }
    double sum = 0.0;
    for (double d : point.replicate_distances) sum += d;
    point.mean_distance = sum / static_cast<double>(point.replicate_distances.size());
    result.curve.push_back(std::move(point));
  }

  double normalizer = 0.0;
  for (const CalibrationPoint& p : result.curve) normalizer = std::max(normalizer, p.mean_distance);
  if (!(normalizer > 0.0)) throw NumericalError("all calibration distances are zero");

  std::vector<double> xs, ys;
  for (CalibrationPoint& p : result.curve) {
    p.normalized_distance = p.mean_distance / normalizer;
    xs.push_back(p.fraction);
    ys.push_back(p.normalized_distance);
  }
  const QuadraticFit fit = fit_quadratic_through_origin(xs, ys);
  result.model.coeff_a = fit.a;
  result.model.coeff_b = fit.b;
  result.model.r_squared = fit.r_squared;
  result.model.normalizer = normalizer;
  return result;
}

FitResult train_adulteration(const std::vector<std::pair<double, PixelBlock>>& training,
                             const FdaOptions& fda_options, const FitOptions& fit_options) {
  std::vector<std::pair<PixelBlock, ClassLabel>> labelled;
  labelled.reserve(training.size());
  for (const auto& [fraction, block] : training) labelled.emplace_back(block, ClassLabel::adulteration(fraction));
  const DataMatrix data = build_data_matrix(labelled);
  FdaModel fda = solve_fda(compute_scatter(data), fda_options);

  std::vector<std::pair<double, PixelBlock>> projected;
  projected.reserve(training.size());
  for (const auto& [fraction, block] : training) projected.emplace_back(fraction, project(block, fda));
  FitResult result = fit_model(projected, fit_options);
  result.model.fda = std::move(fda);
  return result;
}

Estimate estimate_pixels(const PixelBlock& pixels, const AdulterationModel& model) {
  const GaussianClassModel sample = fit_gaussian(project(pixels, model.fda));
  Estimate e;
  e.raw_distance = bhattacharyya(sample, model.reference);
  e.normalized_distance = e.raw_distance / model.normalizer;
  e.fraction = std::clamp(invert_calibration(e.normalized_distance, model.coeff_a, model.coeff_b), 0.0, 1.0);
  return e;
}

Estimate estimate(const SpectralCube& sample, const AdulterationModel& model, const Roi& roi) {
  validate(sample);
  return estimate_pixels(extract_roi(sample, roi), model);
}

namespace {

void write_row(std::ostringstream& out, const char* tag, const Eigen::VectorXd& v) {
  out << tag;
  for (Eigen::Index i = 0; i < v.size(); ++i) out << ' ' << text::format_double(v(i));
  out << '\n';
}

Eigen::VectorXd read_row(const std::string& line, const std::string& tag, Eigen::Index n) {
  const auto tokens = text::split_ws(line);
  if (tokens.empty() || tokens[0] != tag || static_cast<Eigen::Index>(tokens.size()) != n + 1) {
    throw ValidationError("malformed model line, expected '" + tag + "'");
  }
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = text::parse_double(tokens[static_cast<std::size_t>(i) + 1]);
  return v;
}

double read_scalar(const std::string& line, const std::string& key) {
  const auto tokens = text::split_ws(line);
  if (tokens.size() != 2 || tokens[0] != key) throw ValidationError("malformed model line, expected '" + key + "'");
  return text::parse_double(tokens[1]);
}

}  // namespace

std::string format_adulteration_model(const AdulterationModel& model) {
  std::ostringstream out;
  out << "oilmsi-adulteration-model 1\n";
  out << "coeff_a " << text::format_double(model.coeff_a) << '\n';
  out << "coeff_b " << text::format_double(model.coeff_b) << '\n';
  out << "normalizer " << text::format_double(model.normalizer) << '\n';
  out << "r_squared " << text::format_double(model.r_squared) << '\n';
  out << "reference_count " << model.reference.sample_count << '\n';
  out << "reference_dim " << model.reference.mean.size() << '\n';
  write_row(out, "reference_mean", model.reference.mean);
  for (Eigen::Index i = 0; i < model.reference.covariance.rows(); ++i) {
    write_row(out, "reference_cov", model.reference.covariance.row(i).transpose());
  }
  out << format_fda_model(model.fda);
  return out.str();
}

AdulterationModel parse_adulteration_model(const std::string& contents) {
  std::vector<std::string> lines;
  for (const std::string& l : text::split(contents, '\n')) {
    if (!text::trim(l).empty()) lines.emplace_back(text::trim(l));
  }
  if (lines.size() < 8 || lines[0] != "oilmsi-adulteration-model 1") {
    throw ValidationError("not an adulteration model file");
  }
  AdulterationModel model;
  model.coeff_a = read_scalar(lines[1], "coeff_a");
  model.coeff_b = read_scalar(lines[2], "coeff_b");
  model.normalizer = read_scalar(lines[3], "normalizer");
  model.r_squared = read_scalar(lines[4], "r_squared");
  model.reference.sample_count = static_cast<std::size_t>(read_scalar(lines[5], "reference_count"));
  const auto k = static_cast<Eigen::Index>(read_scalar(lines[6], "reference_dim"));
  if (k < 1 || lines.size() < static_cast<std::size_t>(8 + k)) throw ValidationError("truncated adulteration model");
  model.reference.mean = read_row(lines[7], "reference_mean", k);
  model.reference.covariance.resize(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    model.reference.covariance.row(i) = read_row(lines[static_cast<std::size_t>(8 + i)], "reference_cov", k).transpose();
  }
  std::size_t pos = static_cast<std::size_t>(8 + k);
  model.fda = parse_fda_model(lines, pos);
  if (model.fda.k != k) throw ValidationError("reference dimension does not match FDA model");
  if (!(model.normalizer > 0.0)) throw ValidationError("model normalizer must be positive");
  return model;
}

std::string format_calibration_csv(const std::vector<CalibrationPoint>& curve) {
  std::size_t reps = 0;
  double normalizer = 0.0;
  for (const CalibrationPoint& p : curve) {
    reps = std::max(reps, p.replicate_distances.size());
    normalizer = std::max(normalizer, p.mean_distance);
  }
  const double norm = normalizer > 0.0 ? 1.0 / normalizer : 0.0;
  std::ostringstream out;
  out << "fraction,mean_normalized_distance,mean_raw_distance";
  for (std::size_t i = 0; i < reps; ++i) out << ",replicate_" << i + 1;
  out << '\n';
  for (const CalibrationPoint& p : curve) {
    out << text::format_double(p.fraction) << ',' << text::format_double(p.normalized_distance) << ','
        << text::format_double(p.mean_distance);
    for (std::size_t i = 0; i < reps; ++i) {
      out << ',';
      if (i < p.replicate_distances.size()) out << text::format_double(p.replicate_distances[i] * norm);
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace oilmsi
