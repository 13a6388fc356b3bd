#include "oilmsi/reheat.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include "oilmsi/errors.hpp"
#include "oilmsi/rng.hpp"
#include "oilmsi/text.hpp"

namespace oilmsi {

Eigen::MatrixXd affinity(const PixelBlock& points, double sigma) {
  if (!(sigma > 0.0)) throw ValidationError("sigma must be positive");
  const Eigen::Index m = points.rows();
  if (m < 2) throw ValidationError("affinity needs at least 2 points");
  const double scale = 1.0 / (2.0 * sigma * sigma);
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i + 1; j < m; ++j) {
      const double v = std::exp(-(points.row(i) - points.row(j)).squaredNorm() * scale);
      w(i, j) = v;
      w(j, i) = v;
    }
  }
  return w;
}

Laplacian laplacian(const Eigen::MatrixXd& w) {
  const Eigen::Index m = w.rows();
  Laplacian out;
  out.degree = w.rowwise().sum();
  Eigen::VectorXd inv_sqrt(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    if (!(out.degree(i) >= std::numeric_limits<double>::min())) {
      throw NumericalError("isolated vertex (zero degree) in affinity graph");
    }
    inv_sqrt(i) = 1.0 / std::sqrt(out.degree(i));
  }
  out.matrix = Eigen::MatrixXd::Identity(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      if (i != j) out.matrix(i, j) = -(w(i, j) * inv_sqrt(i)) * inv_sqrt(j);
    }
  }
  return out;
}

Eigen::VectorXd symmetric_eigenvalues(const Eigen::MatrixXd& m) {
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw NumericalError("eigensolve failed");
  return eig.eigenvalues();
}

double median_pairwise_distance(const PixelBlock& points) {
  std::vector<double> d;
  const Eigen::Index m = points.rows();
  d.reserve(static_cast<std::size_t>(m * (m - 1) / 2));
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i + 1; j < m; ++j) d.push_back((points.row(i) - points.row(j)).norm());
  }
  if (d.empty()) throw ValidationError("need at least 2 points");
  const auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
  std::nth_element(d.begin(), mid, d.end());
  return *mid;
}

std::vector<double> default_sigma_grid(const PixelBlock& points, int count) {
  if (count < 1) throw ValidationError("degenerate sigma grid");
  double scale = median_pairwise_distance(points);
  if (!(scale > 0.0)) throw ValidationError("degenerate sigma grid: all points coincide");
  std::vector<double> grid(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const double e = count == 1 ? 0.0 : -2.0 + 4.0 * i / (count - 1);
    grid[static_cast<std::size_t>(i)] = scale * std::pow(10.0, e);
  }
  return grid;
}

SigmaSweep sigma_sweep(const PixelBlock& points, int n_target, const std::vector<double>& grid) {
  if (grid.empty()) throw ValidationError("degenerate sigma grid: empty");
  if (n_target < 1 || points.rows() <= n_target) throw ValidationError("sigma sweep needs more points than targets");
  for (double s : grid) {
    if (!(s > 0.0)) throw ValidationError("degenerate sigma grid: non-positive sigma");
  }
  SigmaSweep sweep;
  sweep.best_gap = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (double sigma : grid) {
    GapPoint point{sigma, std::nan("")};
    try {
      const Eigen::VectorXd ev = symmetric_eigenvalues(laplacian(affinity(points, sigma)).matrix);
      point.gap = ev(n_target) - ev(n_target - 1);
    } catch (const NumericalError&) {
    }
    if (!std::isnan(point.gap) && point.gap > sweep.best_gap) {
      sweep.best_gap = point.gap;
      sweep.sigma_opt = sigma;
      any = true;
    }
    sweep.curve.push_back(point);
  }
  if (!any) throw NumericalError("sigma sweep: every grid point failed");
  return sweep;
}

int count_components(const Eigen::VectorXd& eigenvalues, double threshold) {
  return static_cast<int>((eigenvalues.array() < threshold).count());
}

namespace {

Eigen::MatrixXd kmeanspp_init(const Eigen::MatrixXd& rows, int k, Rng& rng) {
  const Eigen::Index m = rows.rows();
  Eigen::MatrixXd centers(k, rows.cols());
  centers.row(0) = rows.row(static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(m))));
  Eigen::VectorXd d2 = (rows.rowwise() - centers.row(0)).rowwise().squaredNorm();
  for (int c = 1; c < k; ++c) {
    const double total = d2.sum();
    Eigen::Index pick = 0;
    if (total > 0.0) {
      double target = rng.uniform() * total;
      for (pick = 0; pick < m - 1; ++pick) {
        target -= d2(pick);
        if (target < 0.0) break;
      }
    } else {
      pick = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(m)));
    }
    centers.row(c) = rows.row(pick);
    d2 = d2.cwiseMin((rows.rowwise() - centers.row(c)).rowwise().squaredNorm());
  }
  return centers;
}

// Returns false when a cluster empties.
bool lloyd(const Eigen::MatrixXd& rows, Eigen::MatrixXd& centers, std::vector<int>& labels, double& inertia,
           bool& converged, int max_iterations) {
  const Eigen::Index m = rows.rows();
  const Eigen::Index k = centers.rows();
  labels.assign(static_cast<std::size_t>(m), -1);
  converged = false;
  for (int iter = 0; iter < max_iterations; ++iter) {
    bool changed = false;
    inertia = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      Eigen::Index best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (Eigen::Index c = 0; c < k; ++c) {
        const double d = (rows.row(i) - centers.row(c)).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      inertia += best_d;
      if (labels[static_cast<std::size_t>(i)] != best) {
        labels[static_cast<std::size_t>(i)] = static_cast<int>(best);
        changed = true;
      }
    }
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, rows.cols());
    std::vector<Eigen::Index> counts(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < m; ++i) {
      sums.row(labels[static_cast<std::size_t>(i)]) += rows.row(i);
      ++counts[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])];
    }
    for (Eigen::Index c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] == 0) return false;
      centers.row(c) = sums.row(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
    }
    if (!changed) {
      converged = true;
      break;
    }
  }
  return true;
}

}  // namespace

KMeansResult kmeans(const Eigen::MatrixXd& rows, int k, std::uint64_t seed, const KMeansOptions& options) {
  if (k < 1 || k > rows.rows()) throw ValidationError("cluster count must lie in 1..points");
  if (options.restarts < 1 || options.max_iterations < 1) throw ValidationError("invalid k-means options");
  Rng rng(seed);
  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  int accepted = 0;
  const int max_attempts = 5 * options.restarts;
  for (int attempt = 0; attempt < max_attempts && accepted < options.restarts; ++attempt) {
    Eigen::MatrixXd centers = kmeanspp_init(rows, k, rng);
    std::vector<int> labels;
    double inertia = 0.0;
    bool converged = false;
    if (!lloyd(rows, centers, labels, inertia, converged, options.max_iterations)) continue;
    ++accepted;
    if (inertia < best.inertia) {
      best = {std::move(labels), std::move(centers), inertia, converged};
    }
  }
  if (accepted == 0) throw NumericalError("k-means: every start produced an empty cluster");
  return best;
}

namespace {

Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> laplacian_eigensystem(const PixelBlock& points, double sigma) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(laplacian(affinity(points, sigma)).matrix);
  if (eig.info() != Eigen::Success) throw NumericalError("eigensolve failed");
  return eig;
}

SpectralClustering cluster_embedding(const PixelBlock& points, const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>& eig,
                                     int n_clusters, std::uint64_t seed, const SpectralOptions& options) {
  if (n_clusters < 1 || n_clusters > points.rows()) throw ValidationError("cluster count must lie in 1..points");
  SpectralClustering out;
  out.eigenvalues = eig.eigenvalues();
  out.embedding = eig.eigenvectors().leftCols(n_clusters);
  if (options.row_normalize) {
    for (Eigen::Index i = 0; i < out.embedding.rows(); ++i) {
      const double norm = out.embedding.row(i).norm();
      if (norm > 0.0) out.embedding.row(i) /= norm;
    }
  }
  KMeansResult km = kmeans(out.embedding, n_clusters, seed, options.kmeans);
  out.labels = std::move(km.labels);
  out.converged = km.converged;
  out.centers = Eigen::MatrixXd::Zero(n_clusters, points.cols());
  std::vector<int> counts(static_cast<std::size_t>(n_clusters), 0);
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    out.centers.row(out.labels[static_cast<std::size_t>(i)]) += points.row(i);
    ++counts[static_cast<std::size_t>(out.labels[static_cast<std::size_t>(i)])];
  }
  for (int c = 0; c < n_clusters; ++c) out.centers.row(c) /= static_cast<double>(counts[static_cast<std::size_t>(c)]);
  return out;
}

}  // namespace

SpectralClustering spectral_embed_cluster(const PixelBlock& points, double sigma, int n_clusters,
                                          std::uint64_t seed, const SpectralOptions& options) {
  if (n_clusters < 1 || n_clusters > points.rows()) throw ValidationError("cluster count must lie in 1..points");
  return cluster_embedding(points, laplacian_eigensystem(points, sigma), n_clusters, seed, options);
}

ReheatTraining train_classifier(const std::vector<std::pair<int, PixelBlock>>& training, const ReheatOptions& options) {
  if (training.empty()) throw ValidationError("no training blocks");
  std::set<int> heat_classes;
  Eigen::Index rows = 0;
  const Eigen::Index dim = training.front().second.cols();
  for (const auto& [heat, block] : training) {
    validate(ClassLabel::heat(heat));
    if (block.cols() != dim) throw ValidationError("training blocks differ in dimension");
    heat_classes.insert(heat);
    rows += block.rows();
  }
  if (!heat_classes.contains(0)) throw ValidationError("pure class (heat 0) absent from training");
  if (heat_classes.size() < 2) throw ValidationError("need the pure class and at least one heated class");

  PixelBlock points(rows, dim);
  std::vector<int> heat_of(static_cast<std::size_t>(rows));
  Eigen::Index r = 0;
  for (const auto& [heat, block] : training) {
    points.middleRows(r, block.rows()) = block;
    std::fill_n(heat_of.begin() + r, block.rows(), heat);
    r += block.rows();
  }

  ReheatTraining out;
  const int n_target = options.n_target.value_or(static_cast<int>(heat_classes.size()));
  const std::vector<double> grid =
      options.sigma_grid.empty() ? default_sigma_grid(points, options.grid_points) : options.sigma_grid;
  out.sweep = sigma_sweep(points, n_target, grid);
  out.eigenvalues_at_opt = symmetric_eigenvalues(laplacian(affinity(points, out.sweep.sigma_opt)).matrix);

  ReheatClassifier& c = out.classifier;
  c.sigma_opt = out.sweep.sigma_opt;
  c.threshold = options.threshold;
  c.row_normalize = options.spectral.row_normalize;
  c.seed = options.seed;
  c.n_heat = static_cast<int>(heat_classes.size());
  c.n_qualitative = count_components(out.eigenvalues_at_opt, options.threshold);
  if (c.n_qualitative < 2) {
    throw NumericalError("fewer than 2 qualitative classes below the eigenvalue threshold");
  }

  const SpectralClustering sc = spectral_embed_cluster(points, c.sigma_opt, c.n_qualitative, options.seed, options.spectral);

  // Reference cluster: the one holding most pure-oil points.
  std::vector<int> pure_counts(static_cast<std::size_t>(c.n_qualitative), 0);
  for (std::size_t i = 0; i < heat_of.size(); ++i) {
    if (heat_of[i] == 0) ++pure_counts[static_cast<std::size_t>(sc.labels[i])];
  }
  const auto ref = static_cast<Eigen::Index>(std::max_element(pure_counts.begin(), pure_counts.end()) - pure_counts.begin());
  c.reference_center = sc.centers.row(ref).transpose();

  std::vector<std::pair<double, int>> by_distance;
  for (int k = 0; k < c.n_qualitative; ++k) {
    by_distance.emplace_back(k == ref ? 0.0 : (sc.centers.row(k).transpose() - c.reference_center).norm(), k);
  }
  std::sort(by_distance.begin(), by_distance.end());
  std::vector<int> rank_of(static_cast<std::size_t>(c.n_qualitative));
  c.cluster_centers.resize(c.n_qualitative, dim);
  for (int q = 0; q < c.n_qualitative; ++q) {
    const auto [d, k] = by_distance[static_cast<std::size_t>(q)];
    rank_of[static_cast<std::size_t>(k)] = q;
    c.center_distances.push_back(d);
    c.cluster_centers.row(q) = sc.centers.row(k);
  }
  for (int q = 0; q < c.n_qualitative; ++q) {
    const double low = q == 0 ? 0.0 : 0.5 * (c.center_distances[static_cast<std::size_t>(q - 1)] +
                                             c.center_distances[static_cast<std::size_t>(q)]);
    const double high = q + 1 == c.n_qualitative
                            ? std::numeric_limits<double>::infinity()
                            : 0.5 * (c.center_distances[static_cast<std::size_t>(q)] +
                                     c.center_distances[static_cast<std::size_t>(q + 1)]);
    c.class_ranges.push_back({low, high});
  }

  out.training_labels.resize(heat_of.size());
  std::map<int, std::vector<int>> votes;
  for (std::size_t i = 0; i < heat_of.size(); ++i) {
    const int q = rank_of[static_cast<std::size_t>(sc.labels[i])];
    out.training_labels[i] = q;
    auto& v = votes[heat_of[i]];
    v.resize(static_cast<std::size_t>(c.n_qualitative), 0);
    ++v[static_cast<std::size_t>(q)];
  }
  for (const auto& [heat, v] : votes) {
    c.heat_to_qualitative[heat] = static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
  }
  return out;
}

ReheatTraining train_reheat(const std::vector<std::pair<int, PixelBlock>>& fda_blocks,
                            const std::vector<std::pair<int, PixelBlock>>& cluster_blocks,
                            const FdaOptions& fda_options, const ReheatOptions& options) {
  std::vector<std::pair<PixelBlock, ClassLabel>> labelled;
  for (const auto& [heat, block] : fda_blocks) labelled.emplace_back(block, ClassLabel::heat(heat));
  FdaModel fda = solve_fda(compute_scatter(build_data_matrix(labelled)), fda_options);
  std::vector<std::pair<int, PixelBlock>> projected;
  for (const auto& [heat, block] : cluster_blocks) projected.emplace_back(heat, project(block, fda));
  ReheatTraining out = train_classifier(projected, options);
  out.classifier.fda = std::move(fda);
  return out;
}

int qualitative_class_for_distance(const ReheatClassifier& classifier, double distance) {
  for (std::size_t q = 0; q < classifier.class_ranges.size(); ++q) {
    const DistanceRange& range = classifier.class_ranges[q];
    if (distance >= range.low && distance < range.high) return static_cast<int>(q);
  }
  return distance < 0.0 ? 0 : static_cast<int>(classifier.class_ranges.size()) - 1;
}

Classification classify(const PixelBlock& sample_pixels, const ReheatClassifier& classifier) {
  if (sample_pixels.rows() == 0) throw ValidationError("empty sample");
  const PixelBlock projected = project(sample_pixels, classifier.fda);
  const Eigen::VectorXd center = projected.colwise().mean().transpose();
  Classification out;
  out.distance = (center - classifier.reference_center).norm();
  out.qualitative_class = qualitative_class_for_distance(classifier, out.distance);
  return out;
}

RepeatabilityReport repeatability(const std::vector<int>& assignments) {
  if (assignments.empty()) throw ValidationError("no trials");
  RepeatabilityReport report;
  for (int a : assignments) ++report.counts[a];
  report.most = 0;
  report.least = std::numeric_limits<int>::max();
  for (const auto& [cls, n] : report.counts) {
    report.most = std::max(report.most, n);
    report.least = std::min(report.least, n);
  }
  if (report.counts.size() == 1) report.least = 0;
  report.resc = 1.0 - static_cast<double>(report.least) / static_cast<double>(report.most);
  return report;
}

// ---------------------------------------------------------------------------

namespace {

void write_vector(std::ostringstream& out, const std::string& tag, const Eigen::VectorXd& v) {
  out << tag;
  for (Eigen::Index i = 0; i < v.size(); ++i) out << ' ' << text::format_double(v(i));
  out << '\n';
}

std::vector<std::string> expect(const std::vector<std::string>& lines, std::size_t& pos, const std::string& tag,
                                std::size_t min_tokens = 2) {
  if (pos >= lines.size()) throw ValidationError("truncated classifier file");
  auto tokens = text::split_ws(lines[pos++]);
  if (tokens.empty() || tokens[0] != tag || tokens.size() < min_tokens) {
    throw ValidationError("malformed classifier line, expected '" + tag + "'");
  }
  return tokens;
}

Eigen::VectorXd to_vector(const std::vector<std::string>& tokens, std::size_t n) {
  if (tokens.size() != n + 1) throw ValidationError("classifier vector has wrong length");
  Eigen::VectorXd v(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) v(static_cast<Eigen::Index>(i)) = text::parse_double(tokens[i + 1]);
  return v;
}

}  // namespace

std::string format_reheat_classifier(const ReheatClassifier& c) {
  std::ostringstream out;
  out << "oilmsi-reheat-classifier 1\n";
  out << "sigma_opt " << text::format_double(c.sigma_opt) << '\n';
  out << "n_qualitative " << c.n_qualitative << '\n';
  out << "n_heat " << c.n_heat << '\n';
  out << "threshold " << text::format_double(c.threshold) << '\n';
  out << "row_normalize " << (c.row_normalize ? 1 : 0) << '\n';
  out << "seed " << c.seed << '\n';
  out << "dim " << c.reference_center.size() << '\n';
  write_vector(out, "reference_center", c.reference_center);
  for (Eigen::Index q = 0; q < c.cluster_centers.rows(); ++q) {
    write_vector(out, "center", c.cluster_centers.row(q).transpose());
  }
  out << "distances";
  for (double d : c.center_distances) out << ' ' << text::format_double(d);
  out << '\n';
  for (const DistanceRange& r : c.class_ranges) {
    out << "range " << text::format_double(r.low) << ' ' << text::format_double(r.high) << '\n';
  }
  out << "heat_map";
  for (const auto& [heat, q] : c.heat_to_qualitative) out << ' ' << heat << ':' << q;
  out << '\n';
  out << format_fda_model(c.fda);
  return out.str();
}

ReheatClassifier parse_reheat_classifier(const std::string& contents) {
  std::vector<std::string> lines;
  for (const std::string& l : text::split(contents, '\n')) {
    if (!text::trim(l).empty()) lines.emplace_back(text::trim(l));
  }
  if (lines.empty() || lines[0] != "oilmsi-reheat-classifier 1") throw ValidationError("not a reheat classifier file");
  std::size_t pos = 1;
  ReheatClassifier c;
  c.sigma_opt = text::parse_double(expect(lines, pos, "sigma_opt")[1]);
  c.n_qualitative = static_cast<int>(text::parse_int(expect(lines, pos, "n_qualitative")[1]));
  c.n_heat = static_cast<int>(text::parse_int(expect(lines, pos, "n_heat")[1]));
  c.threshold = text::parse_double(expect(lines, pos, "threshold")[1]);
  c.row_normalize = text::parse_int(expect(lines, pos, "row_normalize")[1]) != 0;
  c.seed = static_cast<std::uint64_t>(text::parse_int(expect(lines, pos, "seed")[1]));
  const auto dim = static_cast<std::size_t>(text::parse_int(expect(lines, pos, "dim")[1]));
  if (c.n_qualitative < 1 || dim < 1) throw ValidationError("malformed classifier dimensions");
  c.reference_center = to_vector(expect(lines, pos, "reference_center"), dim);
  c.cluster_centers.resize(c.n_qualitative, static_cast<Eigen::Index>(dim));
  for (int q = 0; q < c.n_qualitative; ++q) {
    c.cluster_centers.row(q) = to_vector(expect(lines, pos, "center"), dim).transpose();
  }
  const auto dist = expect(lines, pos, "distances", 1);
  const Eigen::VectorXd dv = to_vector(dist, static_cast<std::size_t>(c.n_qualitative));
  c.center_distances.assign(dv.data(), dv.data() + dv.size());
  for (int q = 0; q < c.n_qualitative; ++q) {
    const auto r = expect(lines, pos, "range", 3);
    c.class_ranges.push_back({text::parse_double(r[1]), text::parse_double(r[2])});
  }
  const auto hm = expect(lines, pos, "heat_map", 1);
  for (std::size_t i = 1; i < hm.size(); ++i) {
    const auto parts = text::split(hm[i], ':');
    if (parts.size() != 2) throw ValidationError("malformed heat map entry");
    c.heat_to_qualitative[static_cast<int>(text::parse_int(parts[0]))] = static_cast<int>(text::parse_int(parts[1]));
  }
  c.fda = parse_fda_model(lines, pos);
  if (static_cast<std::size_t>(c.fda.k) != dim) throw ValidationError("classifier dimension does not match FDA model");
  return c;
}

// ---------------------------------------------------------------------------

AccuracyStats accuracy_stats(const std::vector<double>& accuracies) {
  if (accuracies.empty()) throw ValidationError("no accuracies");
  AccuracyStats s;
  s.max = *std::max_element(accuracies.begin(), accuracies.end());
  s.min = *std::min_element(accuracies.begin(), accuracies.end());
  std::map<long, int> bins;
  for (double a : accuracies) ++bins[std::lround(a * 100.0)];
  long best_bin = 0;
  int best_count = -1;
  for (const auto& [bin, n] : bins) {
    if (n >= best_count) {
      best_count = n;
      best_bin = bin;
    }
  }
  s.mode = static_cast<double>(best_bin) / 100.0;
  return s;
}

double matched_accuracy(const std::vector<int>& truth, const std::vector<int>& clusters) {
  if (truth.size() != clusters.size() || truth.empty()) throw ValidationError("label lists differ in length");
  std::vector<int> truth_ids(truth.begin(), truth.end());
  std::sort(truth_ids.begin(), truth_ids.end());
  truth_ids.erase(std::unique(truth_ids.begin(), truth_ids.end()), truth_ids.end());
  std::vector<int> cluster_ids(clusters.begin(), clusters.end());
  std::sort(cluster_ids.begin(), cluster_ids.end());
  cluster_ids.erase(std::unique(cluster_ids.begin(), cluster_ids.end()), cluster_ids.end());

  const std::size_t nt = truth_ids.size();
  const std::size_t nc = cluster_ids.size();
  const std::size_t n = std::max(nt, nc);
  // Square contingency table padded with zeros.
  std::vector<std::vector<int>> table(n, std::vector<int>(n, 0));
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const auto c = static_cast<std::size_t>(std::lower_bound(cluster_ids.begin(), cluster_ids.end(), clusters[i]) - cluster_ids.begin());
    const auto t = static_cast<std::size_t>(std::lower_bound(truth_ids.begin(), truth_ids.end(), truth[i]) - truth_ids.begin());
    ++table[c][t];
  }
  if (n > 9) throw ValidationError("too many classes for exhaustive matching");
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  int best = 0;
  do {
    int matched = 0;
    for (std::size_t c = 0; c < n; ++c) matched += table[c][perm[c]];
    best = std::max(best, matched);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return static_cast<double>(best) / static_cast<double>(truth.size());
}

EvaluationReport evaluate_reheat(const ReheatClassifier& classifier, const std::vector<ReheatDataset>& datasets,
                                 const EvaluationOptions& options) {
  if (datasets.empty()) throw ValidationError("no evaluation datasets");
  if (options.trials < 1 || options.resc_trials < 1 || options.points_per_class < 1) {
    throw ValidationError("invalid evaluation options");
  }
  SpectralOptions spectral;
  spectral.row_normalize = classifier.row_normalize;

  EvaluationReport report;
  std::vector<double> all_heat, all_qual;
  for (std::size_t d = 0; d < datasets.size(); ++d) {
    const ReheatDataset& dataset = datasets[d];
    DatasetReport dr;
    for (int t = 0; t < options.trials; ++t) {
      const std::uint64_t trial_seed = derive_seed(options.seed, d * 100000 + static_cast<std::uint64_t>(t));
      Rng rng(trial_seed);
      std::vector<PixelBlock> parts;
      std::vector<int> heat_truth, qual_truth;
      Eigen::Index rows = 0;
      for (const auto& [heat, block] : dataset) {
        parts.push_back(project(random_subsample(block, options.points_per_class, rng), classifier.fda));
        heat_truth.insert(heat_truth.end(), static_cast<std::size_t>(parts.back().rows()), heat);
        const auto it = classifier.heat_to_qualitative.find(heat);
        if (it == classifier.heat_to_qualitative.end()) throw ValidationError("heat class unknown to classifier");
        qual_truth.insert(qual_truth.end(), static_cast<std::size_t>(parts.back().rows()), it->second);
        rows += parts.back().rows();
      }
      PixelBlock points(rows, classifier.fda.k);
      Eigen::Index r = 0;
      for (const PixelBlock& p : parts) {
        points.middleRows(r, p.rows()) = p;
        r += p.rows();
      }

      const auto eig = laplacian_eigensystem(points, classifier.sigma_opt);
      const SpectralClustering heat_sc = cluster_embedding(points, eig, classifier.n_heat, trial_seed, spectral);
      dr.heat_accuracy.push_back(matched_accuracy(heat_truth, heat_sc.labels));

      const SpectralClustering qual_sc = cluster_embedding(points, eig, classifier.n_qualitative, trial_seed, spectral);
      std::vector<int> cluster_class(static_cast<std::size_t>(classifier.n_qualitative));
      for (int k = 0; k < classifier.n_qualitative; ++k) {
        const double dist = (qual_sc.centers.row(k).transpose() - classifier.reference_center).norm();
        cluster_class[static_cast<std::size_t>(k)] = qualitative_class_for_distance(classifier, dist);
      }
      std::size_t correct = 0;
      for (std::size_t i = 0; i < qual_truth.size(); ++i) {
        if (cluster_class[static_cast<std::size_t>(qual_sc.labels[i])] == qual_truth[i]) ++correct;
      }
      dr.qualitative_accuracy.push_back(static_cast<double>(correct) / static_cast<double>(qual_truth.size()));
    }
    dr.heat = accuracy_stats(dr.heat_accuracy);
    dr.qualitative = accuracy_stats(dr.qualitative_accuracy);
    all_heat.insert(all_heat.end(), dr.heat_accuracy.begin(), dr.heat_accuracy.end());
    all_qual.insert(all_qual.end(), dr.qualitative_accuracy.begin(), dr.qualitative_accuracy.end());

    double resc_total = 0.0;
    for (std::size_t s = 0; s < dataset.size(); ++s) {
      const auto& [heat, block] = dataset[s];
      std::vector<int> assignments;
      for (int t = 0; t < options.resc_trials; ++t) {
        Rng rng(derive_seed(options.seed, 1000000000ULL + d * 100000 + s * 1000 + static_cast<std::uint64_t>(t)));
        assignments.push_back(classify(random_subsample(block, options.points_per_class, rng), classifier).qualitative_class);
      }
      const double resc = repeatability(assignments).resc;
      dr.resc_assignments[heat] = std::move(assignments);
      dr.resc_per_sample[heat] = resc;
      resc_total += resc;
    }
    dr.resc = resc_total / static_cast<double>(dataset.size());
    report.resc_sum += dr.resc;
    report.datasets.push_back(std::move(dr));
  }
  report.heat = accuracy_stats(all_heat);
  report.qualitative = accuracy_stats(all_qual);
  report.resc_mean = report.resc_sum / static_cast<double>(datasets.size());
  return report;
}

std::string format_evaluation_csv(const EvaluationReport& report) {
  std::ostringstream out;
  auto pct = [](double v) { return text::format_double(std::round(v * 10000.0) / 100.0); };
  out << "dataset,heat_max_accuracy,heat_min_accuracy,heat_mode_accuracy,"
         "qualitative_max_accuracy,qualitative_min_accuracy,qualitative_mode_accuracy,resc\n";
  for (std::size_t d = 0; d < report.datasets.size(); ++d) {
    const DatasetReport& r = report.datasets[d];
    out << "dataset_" << d + 1 << ',' << pct(r.heat.max) << ',' << pct(r.heat.min) << ',' << pct(r.heat.mode) << ','
        << pct(r.qualitative.max) << ',' << pct(r.qualitative.min) << ',' << pct(r.qualitative.mode) << ','
        << text::format_double(r.resc) << '\n';
  }
  out << "all," << pct(report.heat.max) << ',' << pct(report.heat.min) << ',' << pct(report.heat.mode) << ','
      << pct(report.qualitative.max) << ',' << pct(report.qualitative.min) << ',' << pct(report.qualitative.mode)
      << ',' << text::format_double(report.resc_mean) << '\n';
  out << "resc_sum," << text::format_double(report.resc_sum) << '\n';
  out << "\ndataset,trial,heat_accuracy,qualitative_accuracy\n";
  for (std::size_t d = 0; d < report.datasets.size(); ++d) {
    const DatasetReport& r = report.datasets[d];
    for (std::size_t t = 0; t < r.heat_accuracy.size(); ++t) {
      out << d + 1 << ',' << t + 1 << ',' << text::format_double(r.heat_accuracy[t]) << ','
          << text::format_double(r.qualitative_accuracy[t]) << '\n';
    }
  }
  out << "\ndataset,heat_class,resc,assignments\n";
  for (std::size_t d = 0; d < report.datasets.size(); ++d) {
    for (const auto& [heat, assignments] : report.datasets[d].resc_assignments) {
      out << d + 1 << ',' << heat << ',' << text::format_double(report.datasets[d].resc_per_sample.at(heat)) << ',';
      for (std::size_t i = 0; i < assignments.size(); ++i) out << (i ? " " : "") << assignments[i];
      out << '\n';
    }
  }
  return out.str();
}

}  // namespace oilmsi
