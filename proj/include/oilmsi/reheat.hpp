#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "oilmsi/fda.hpp"

namespace oilmsi {

// ---------------------------------------------------------------------------
// Graph construction

/// Gaussian-kernel affinity exp(-|xi - xj|^2 / (2 sigma^2)), zero diagonal.
Eigen::MatrixXd affinity(const PixelBlock& points, double sigma);

struct Laplacian {
  Eigen::MatrixXd matrix;  // I - D^-1/2 W D^-1/2
  Eigen::VectorXd degree;  // D(i, i)
};

/// Throws NumericalError for a vertex with zero (or subnormal) degree.
Laplacian laplacian(const Eigen::MatrixXd& w);

/// Ascending eigenvalues of a symmetric matrix.
Eigen::VectorXd symmetric_eigenvalues(const Eigen::MatrixXd& m);

// ---------------------------------------------------------------------------
// Sigma sweep

double median_pairwise_distance(const PixelBlock& points);

/// count values log-spaced over [1e-2, 1e2] times the median pairwise distance.
std::vector<double> default_sigma_grid(const PixelBlock& points, int count = 60);

struct GapPoint {
  double sigma = 0.0;
  double gap = 0.0;  // NaN where the graph was numerically disconnected
};

struct SigmaSweep {
  double sigma_opt = 0.0;
  double best_gap = 0.0;
  std::vector<GapPoint> curve;
};

/// For each sigma, the gap between the (n_target+1)-th and n_target-th
/// smallest Laplacian eigenvalues (1-based); returns the argmax (first on
/// ties) together with the whole curve.
SigmaSweep sigma_sweep(const PixelBlock& points, int n_target, const std::vector<double>& grid);

/// Number of eigenvalues strictly below threshold.
int count_components(const Eigen::VectorXd& eigenvalues, double threshold = 0.025);

// ---------------------------------------------------------------------------
// Clustering

struct KMeansOptions {
  int restarts = 20;
  int max_iterations = 300;
};

struct KMeansResult {
  std::vector<int> labels;
  Eigen::MatrixXd centers;  // k x dim
  double inertia = 0.0;
  bool converged = true;
};

/// Lloyd iterations from seeded k-means++ starts; keeps the lowest inertia.
/// A start that leaves a cluster empty is discarded and redrawn.
KMeansResult kmeans(const Eigen::MatrixXd& rows, int k, std::uint64_t seed, const KMeansOptions& options = {});

struct SpectralOptions {
  bool row_normalize = false;
  KMeansOptions kmeans;
};

struct SpectralClustering {
  std::vector<int> labels;
  Eigen::MatrixXd centers;     // per-cluster means of the input points
  Eigen::MatrixXd embedding;   // m x n_clusters
  Eigen::VectorXd eigenvalues; // ascending, full spectrum
  bool converged = true;
};

SpectralClustering spectral_embed_cluster(const PixelBlock& points, double sigma, int n_clusters,
                                          std::uint64_t seed, const SpectralOptions& options = {});

// ---------------------------------------------------------------------------
// Qualitative classifier

/// Half-open distance interval [low, high).
struct DistanceRange {
  double low = 0.0;
  double high = 0.0;
};

struct ReheatClassifier {
  FdaModel fda;
  double sigma_opt = 0.0;
  int n_qualitative = 0;
  int n_heat = 0;
  double threshold = 0.025;
  bool row_normalize = false;
  Eigen::MatrixXd cluster_centers;       // n_qualitative x k, ordered by distance
  Eigen::VectorXd reference_center;
  std::vector<double> center_distances;  // ascending; first is 0
  std::vector<DistanceRange> class_ranges;
  std::map<int, int> heat_to_qualitative;  // majority assignment of training pixels
  std::uint64_t seed = 0;
};

struct ReheatOptions {
  double threshold = 0.025;
  std::optional<int> n_target;      // defaults to the number of heat classes
  std::vector<double> sigma_grid;   // empty: default_sigma_grid
  int grid_points = 60;
  SpectralOptions spectral;
  std::uint64_t seed = 0;
};

struct ReheatTraining {
  ReheatClassifier classifier;
  SigmaSweep sweep;
  Eigen::VectorXd eigenvalues_at_opt;
  std::vector<int> training_labels;  // qualitative class per training point
};

/// Trains on projected (reduced-space) blocks keyed by heat cycles. The
/// returned classifier's fda is left empty.
ReheatTraining train_classifier(const std::vector<std::pair<int, PixelBlock>>& training,
                                const ReheatOptions& options = {});

/// FDA on the unreduced training blocks, then train_classifier on the
/// stride-subsampled projections.
ReheatTraining train_reheat(const std::vector<std::pair<int, PixelBlock>>& fda_blocks,
                            const std::vector<std::pair<int, PixelBlock>>& cluster_blocks,
                            const FdaOptions& fda_options, const ReheatOptions& options);

int qualitative_class_for_distance(const ReheatClassifier& classifier, double distance);

struct Classification {
  int qualitative_class = 0;
  double distance = 0.0;
};

/// Classifies the centre of a sample's 9-band pixel block.
Classification classify(const PixelBlock& sample_pixels, const ReheatClassifier& classifier);

struct RepeatabilityReport {
  std::map<int, int> counts;
  int least = 0;
  int most = 0;
  double resc = 1.0;
};

/// ReSc = 1 - LS/MS over classes that were assigned at least once; a single
/// observed class scores 1.
RepeatabilityReport repeatability(const std::vector<int>& assignments);

std::string format_reheat_classifier(const ReheatClassifier& classifier);
ReheatClassifier parse_reheat_classifier(const std::string& text);

// ---------------------------------------------------------------------------
// Evaluation harness

/// One evaluation dataset: an ROI pixel block (9 bands) per heat class.
using ReheatDataset = std::vector<std::pair<int, PixelBlock>>;

struct EvaluationOptions {
  int trials = 20;
  int resc_trials = 30;
  std::size_t points_per_class = 100;
  std::uint64_t seed = 0;
};

struct AccuracyStats {
  double max = 0.0;
  double min = 0.0;
  double mode = 0.0;
};

/// Mode over accuracies rounded to whole percent; ties go to the higher bin.
AccuracyStats accuracy_stats(const std::vector<double>& accuracies);

/// Best one-to-one match between cluster ids and truth ids, as a fraction of
/// rows matched.
double matched_accuracy(const std::vector<int>& truth, const std::vector<int>& clusters);

struct DatasetReport {
  std::vector<double> heat_accuracy;         // per trial
  std::vector<double> qualitative_accuracy;  // per trial
  AccuracyStats heat;
  AccuracyStats qualitative;
  std::map<int, std::vector<int>> resc_assignments;  // per heat class sample
  std::map<int, double> resc_per_sample;
  double resc = 1.0;  // mean over samples
};

struct EvaluationReport {
  std::vector<DatasetReport> datasets;
  AccuracyStats heat;
  AccuracyStats qualitative;
  double resc_mean = 1.0;
  double resc_sum = 0.0;
};

EvaluationReport evaluate_reheat(const ReheatClassifier& classifier, const std::vector<ReheatDataset>& datasets,
                                 const EvaluationOptions& options);

/// Table-style summary plus one line per trial.
std::string format_evaluation_csv(const EvaluationReport& report);

}  // namespace oilmsi
