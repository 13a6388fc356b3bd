#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <set>

#include "oilmsi/errors.hpp"
#include "oilmsi/reheat.hpp"
#include "test_support.hpp"

using namespace oilmsi;

namespace {

// Planted Gaussian clusters with centres on the coordinate axes.
PixelBlock planted(Rng& rng, int clusters, int per_cluster, int dim, double separation, std::vector<int>& truth) {
  PixelBlock points = testing::random_matrix(rng, static_cast<Eigen::Index>(clusters) * per_cluster, dim, 1.0);
  truth.clear();
  for (int c = 0; c < clusters; ++c) {
    for (int i = 0; i < per_cluster; ++i) {
      const Eigen::Index row = static_cast<Eigen::Index>(c) * per_cluster + i;
      points(row, c % dim) += separation * (1 + c / dim);
      truth.push_back(c);
    }
  }
  return points;
}

bool same_partition(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) return false;
  std::map<int, int> ab, ba;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (ab.emplace(a[i], b[i]).first->second != b[i]) return false;
    if (ba.emplace(b[i], a[i]).first->second != a[i]) return false;
  }
  return true;
}

Eigen::MatrixXd block_diagonal_affinity(Rng& rng, const std::vector<int>& sizes) {
  int m = 0;
  for (int s : sizes) m += s;
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(m, m);
  int start = 0;
  for (int s : sizes) {
    for (int i = 0; i < s; ++i)
      for (int j = i + 1; j < s; ++j) w(start + i, start + j) = w(start + j, start + i) = 0.05 + rng.uniform();
    start += s;
  }
  return w;
}

}  // namespace

TEST_CASE("affinity kernel values") {
  PixelBlock p(3, 2);
  p << 0, 0, 0, 0, std::sqrt(2.0), 0;
  const Eigen::MatrixXd w = affinity(p, 1.0);
  CHECK(w(0, 1) == 1.0);
  CHECK(w(0, 2) == doctest::Approx(std::exp(-1.0)));
  CHECK(w(0, 0) == 0.0);
  CHECK_THROWS_AS(affinity(p, 0.0), ValidationError);
}

TEST_CASE("affinity matches a double loop and is symmetric") {
  Rng rng(3);
  for (int trial = 0; trial < 1000; ++trial) {
    const int m = 2 + static_cast<int>(rng.below(8));
    const PixelBlock p = testing::random_matrix(rng, m, 3);
    const double sigma = 0.2 + 2.0 * rng.uniform();
    const Eigen::MatrixXd w = affinity(p, sigma);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < m; ++j) {
        const double expected = i == j ? 0.0 : std::exp(-(p.row(i) - p.row(j)).squaredNorm() / (2 * sigma * sigma));
        REQUIRE(w(i, j) == doctest::Approx(expected).epsilon(1e-14).scale(1.0));
        REQUIRE(w(i, j) == w(j, i));
      }
    }
  }
}

TEST_CASE("two-node Laplacian is independent of the edge weight") {
  for (double weight : {1e-3, 0.5, 7.0}) {
    Eigen::MatrixXd w(2, 2);
    w << 0, weight, weight, 0;
    const Laplacian l = laplacian(w);
    CHECK(l.matrix(0, 0) == doctest::Approx(1.0));
    CHECK(l.matrix(0, 1) == doctest::Approx(-1.0));
    CHECK(l.degree(0) == weight);
  }
  CHECK_THROWS_AS(laplacian(Eigen::MatrixXd::Zero(2, 2)), NumericalError);
}

TEST_CASE("Laplacian spectrum lies in [0, 2]") {
  Rng rng(14);
  for (int trial = 0; trial < 1000; ++trial) {
    const int m = 2 + static_cast<int>(rng.below(12));
    const PixelBlock p = testing::random_matrix(rng, m, 1 + static_cast<int>(rng.below(4)));
    const Eigen::VectorXd ev = symmetric_eigenvalues(laplacian(affinity(p, 0.5 + 2.0 * rng.uniform())).matrix);
    REQUIRE(ev.minCoeff() >= -1e-8);
    REQUIRE(ev.maxCoeff() <= 2.0 + 1e-8);
  }
}

TEST_CASE("block-diagonal affinities have one zero eigenvalue per block") {
  Rng rng(55);
  for (int trial = 0; trial < 50; ++trial) {
    const int blocks = 1 + static_cast<int>(rng.below(7));
    std::vector<int> sizes;
    for (int b = 0; b < blocks; ++b) sizes.push_back(2 + static_cast<int>(rng.below(10)));
    const Eigen::VectorXd ev = symmetric_eigenvalues(laplacian(block_diagonal_affinity(rng, sizes)).matrix);
    CHECK(count_components(ev, 0.025) == blocks);
    for (int i = 0; i < blocks; ++i) CHECK(std::abs(ev(i)) <= 1e-10);
  }
}

TEST_CASE("counting eigenvalues below the threshold") {
  Eigen::VectorXd ev(6);
  ev << 0.001, 0.010, 0.020, 0.024, 0.30, 0.9;
  CHECK(count_components(ev) == 4);
  CHECK(count_components(Eigen::Vector2d(0.5, 0.7)) == 0);
}

TEST_CASE("sigma grid spans four decades around the median distance") {
  PixelBlock p(3, 1);
  p << 0, 1, 3;
  CHECK(median_pairwise_distance(p) == 2.0);
  const std::vector<double> grid = default_sigma_grid(p, 60);
  REQUIRE(grid.size() == 60);
  CHECK(grid.front() == doctest::Approx(0.02));
  CHECK(grid.back() == doctest::Approx(200.0));
  for (std::size_t i = 1; i < grid.size(); ++i) CHECK(grid[i] > grid[i - 1]);
}

TEST_CASE("sigma sweep picks the largest gap and recovers planted clusters") {
  Rng rng(6);
  std::vector<int> truth;
  const PixelBlock p = planted(rng, 6, 25, 5, 12.0, truth);
  const SigmaSweep sweep = sigma_sweep(p, 6, default_sigma_grid(p, 60));
  for (const GapPoint& g : sweep.curve)
    if (!std::isnan(g.gap)) CHECK(g.gap <= sweep.best_gap);
  const SpectralClustering sc = spectral_embed_cluster(p, sweep.sigma_opt, 6, 1);
  CHECK(same_partition(truth, sc.labels));
  CHECK(sc.eigenvalues.size() == p.rows());
}

TEST_CASE("degenerate sweeps") {
  Rng rng(2);
  const PixelBlock tight = testing::random_matrix(rng, 40, 3, 0.01);
  const SigmaSweep sweep = sigma_sweep(tight, 6, default_sigma_grid(tight, 60));
  CHECK(sweep.curve.size() == 60);
  CHECK(sweep.best_gap < 1.0);

  const SigmaSweep single = sigma_sweep(tight, 2, {0.05});
  CHECK(single.sigma_opt == 0.05);
  CHECK_THROWS_AS(sigma_sweep(tight, 2, {}), ValidationError);
}

TEST_CASE("two far-apart clusters are recovered exactly") {
  Rng rng(10);
  std::vector<int> truth;
  const PixelBlock p = planted(rng, 2, 40, 3, 30.0, truth);
  const SpectralClustering sc = spectral_embed_cluster(p, 3.0, 2, 5);
  CHECK(same_partition(truth, sc.labels));
}

TEST_CASE("identical points form one cluster centred on the point") {
  PixelBlock p(10, 3);
  p.rowwise() = Eigen::RowVector3d(1.0, -2.0, 3.0);
  const SpectralClustering sc = spectral_embed_cluster(p, 1.0, 1, 0);
  CHECK(std::set<int>(sc.labels.begin(), sc.labels.end()).size() == 1);
  CHECK(sc.centers.row(0).isApprox(Eigen::RowVector3d(1.0, -2.0, 3.0)));
}

TEST_CASE("clustering is deterministic for a fixed seed") {
  Rng rng(30);
  std::vector<int> truth;
  const PixelBlock p = planted(rng, 4, 30, 3, 5.0, truth);
  const SpectralClustering a = spectral_embed_cluster(p, 2.0, 4, 77);
  const SpectralClustering b = spectral_embed_cluster(p, 2.0, 4, 77);
  CHECK(a.labels == b.labels);
  CHECK(a.centers == b.centers);
  const KMeansResult k1 = kmeans(p, 4, 3);
  const KMeansResult k2 = kmeans(p, 4, 3);
  CHECK(k1.labels == k2.labels);
}

TEST_CASE("scaling points and sigma together leaves assignments unchanged") {
  Rng rng(44);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<int> truth;
    const PixelBlock p = planted(rng, 2 + static_cast<int>(rng.below(2)), 6, 2, 8.0, truth);
    const double sigma = 0.5 + 2.0 * rng.uniform();
    const double c = std::pow(2.0, static_cast<int>(rng.below(9)) - 4);
    const SpectralClustering a = spectral_embed_cluster(p, sigma, 2, 9, {false, {3, 100}});
    const SpectralClustering b = spectral_embed_cluster(p * c, sigma * c, 2, 9, {false, {3, 100}});
    REQUIRE(a.labels == b.labels);
  }
}

TEST_CASE("k-means rejects impossible cluster counts") {
  CHECK_THROWS_AS(kmeans(Eigen::MatrixXd::Zero(3, 2), 4, 0), ValidationError);
}

TEST_CASE("repeatability score") {
  CHECK(repeatability(std::vector<int>(30, 2)).resc == 1.0);
  std::vector<int> mostly(28, 0);
  mostly.push_back(1);
  mostly.push_back(2);
  const RepeatabilityReport r = repeatability(mostly);
  CHECK(r.resc == doctest::Approx(1.0 - 1.0 / 28.0));
  CHECK(r.resc == doctest::Approx(0.964).epsilon(1e-3));
  CHECK(r.most == 28);
  CHECK(r.least == 1);
}

TEST_CASE("accuracy statistics and matching") {
  const AccuracyStats s = accuracy_stats({0.95, 0.95, 0.97, 0.97, 0.99});
  CHECK(s.max == 0.99);
  CHECK(s.min == 0.95);
  CHECK(s.mode == doctest::Approx(0.97));
  CHECK(matched_accuracy({0, 0, 1, 1, 2}, {2, 2, 0, 0, 1}) == 1.0);
  CHECK(matched_accuracy({0, 0, 1, 1}, {0, 1, 1, 1}) == doctest::Approx(0.75));
}

namespace {

std::vector<std::pair<int, PixelBlock>> two_class_training(Rng& rng) {
  std::vector<std::pair<int, PixelBlock>> training;
  PixelBlock pure = testing::random_matrix(rng, 60, 2, 0.5);
  PixelBlock heated = testing::random_matrix(rng, 60, 2, 0.5);
  heated.col(0).array() += 10.0;
  training.emplace_back(0, pure);
  training.emplace_back(1, heated);
  return training;
}

}  // namespace

TEST_CASE("two well-separated classes give two qualitative classes split at the midpoint") {
  Rng rng(12);
  const auto training = two_class_training(rng);
  const ReheatTraining t = train_classifier(training);
  const ReheatClassifier& c = t.classifier;
  REQUIRE(c.n_qualitative == 2);
  CHECK(c.center_distances[0] == 0.0);
  CHECK(c.center_distances[1] == doctest::Approx(10.0).epsilon(0.05));
  CHECK(c.class_ranges[0].low == 0.0);
  CHECK(c.class_ranges[0].high == doctest::Approx(0.5 * c.center_distances[1]));
  CHECK(c.class_ranges[1].low == c.class_ranges[0].high);
  CHECK(c.heat_to_qualitative.at(0) == 0);
  CHECK(c.heat_to_qualitative.at(1) == 1);
}

TEST_CASE("range boundaries are closed on the left") {
  ReheatClassifier c;
  c.class_ranges = {{0.0, 5.0}, {5.0, 9.0}, {9.0, std::numeric_limits<double>::infinity()}};
  CHECK(qualitative_class_for_distance(c, 0.0) == 0);
  CHECK(qualitative_class_for_distance(c, 4.999) == 0);
  CHECK(qualitative_class_for_distance(c, 5.0) == 1);
  CHECK(qualitative_class_for_distance(c, 9.0) == 2);
  CHECK(qualitative_class_for_distance(c, 1e9) == 2);
}

TEST_CASE("pure-class pixels classify as class 0") {
  Rng rng(13);
  const auto training = two_class_training(rng);
  ReheatClassifier c = train_classifier(training).classifier;
  c.fda.projection = Eigen::MatrixXd::Identity(2, 2);
  c.fda.k = 2;
  const Classification pure = classify(training[0].second, c);
  CHECK(pure.qualitative_class == 0);
  CHECK(pure.distance <= 1e-9);
  CHECK(classify(training[1].second, c).qualitative_class == 1);
}

TEST_CASE("training preconditions") {
  Rng rng(1);
  std::vector<std::pair<int, PixelBlock>> only_heated = {{1, testing::random_matrix(rng, 10, 2)},
                                                         {2, testing::random_matrix(rng, 10, 2)}};
  CHECK_THROWS_AS(train_classifier(only_heated), ValidationError);
  std::vector<std::pair<int, PixelBlock>> only_pure = {{0, testing::random_matrix(rng, 10, 2)}};
  CHECK_THROWS_AS(train_classifier(only_pure), ValidationError);
}

TEST_CASE("classifier text round trip") {
  Rng rng(21);
  const auto training = two_class_training(rng);
  ReheatClassifier c = train_classifier(training).classifier;
  c.fda.projection = Eigen::MatrixXd::Identity(2, 2);
  c.fda.eigenvalues = Eigen::Vector2d(3.0, 1.0);
  c.fda.k = 2;
  c.fda.class_order = {ClassLabel::heat(0), ClassLabel::heat(1)};
  const ReheatClassifier back = parse_reheat_classifier(format_reheat_classifier(c));
  CHECK(back.sigma_opt == c.sigma_opt);
  CHECK(back.reference_center == c.reference_center);
  CHECK(back.cluster_centers == c.cluster_centers);
  CHECK(back.center_distances == c.center_distances);
  CHECK(back.heat_to_qualitative == c.heat_to_qualitative);
  REQUIRE(back.class_ranges.size() == c.class_ranges.size());
  CHECK(std::isinf(back.class_ranges.back().high));
  CHECK(classify(training[1].second, back).distance == classify(training[1].second, c).distance);
}
