#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <string>

#include "oilmsi/errors.hpp"
#include "oilmsi/fda.hpp"
#include "oilmsi/text.hpp"
#include "test_support.hpp"

using namespace oilmsi;

namespace {

DataMatrix random_classes(Rng& rng, int classes, int rows_per_class, int dim, double spread = 3.0) {
  std::vector<std::pair<PixelBlock, ClassLabel>> blocks;
  for (int c = 0; c < classes; ++c) {
    PixelBlock block = testing::random_matrix(rng, rows_per_class, dim);
    for (Eigen::Index j = 0; j < dim; ++j) block.col(j).array() += rng.normal(0.0, spread);
    blocks.emplace_back(block, ClassLabel::heat(c));
  }
  return build_data_matrix(blocks);
}

// Element-by-element sums straight from the definitions.
void scatter_oracle(const DataMatrix& d, Eigen::MatrixXd& sw, Eigen::MatrixXd& sb) {
  const Eigen::Index n = d.cols();
  std::map<ClassLabel, std::vector<Eigen::Index>> members;
  for (Eigen::Index i = 0; i < d.rows(); ++i) members[d.labels[static_cast<std::size_t>(i)]].push_back(i);
  std::vector<double> grand(static_cast<std::size_t>(n), 0.0);
  for (Eigen::Index i = 0; i < d.rows(); ++i)
    for (Eigen::Index a = 0; a < n; ++a) grand[static_cast<std::size_t>(a)] += d.values(i, a) / d.rows();
  sw = Eigen::MatrixXd::Zero(n, n);
  sb = Eigen::MatrixXd::Zero(n, n);
  for (const auto& [label, idx] : members) {
    std::vector<double> mu(static_cast<std::size_t>(n), 0.0);
    for (Eigen::Index i : idx)
      for (Eigen::Index a = 0; a < n; ++a) mu[static_cast<std::size_t>(a)] += d.values(i, a) / idx.size();
    for (Eigen::Index a = 0; a < n; ++a) {
      for (Eigen::Index b = 0; b < n; ++b) {
        for (Eigen::Index i : idx)
          sw(a, b) += (d.values(i, a) - mu[static_cast<std::size_t>(a)]) * (d.values(i, b) - mu[static_cast<std::size_t>(b)]);
        sb(a, b) += (mu[static_cast<std::size_t>(a)] - grand[static_cast<std::size_t>(a)]) *
                    (mu[static_cast<std::size_t>(b)] - grand[static_cast<std::size_t>(b)]);
      }
    }
  }
}

double relative_error(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const double scale = std::max(b.norm(), 1e-300);
  return (a - b).norm() / scale;
}

// Angle between the lines spanned by a and b; atan2 stays accurate near 0.
double angle_between(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const Eigen::VectorXd u = a.normalized();
  const Eigen::VectorXd v = b.normalized();
  const double along = std::abs(u.dot(v));
  const double across = (v - u.dot(v) * u).norm();
  return std::atan2(across, along);
}

}  // namespace

TEST_CASE("identical rows within each class give zero within-class scatter") {
  const DataMatrix d = build_data_matrix({{PixelBlock::Constant(4, 3, 1.0), ClassLabel::heat(0)},
                                          {PixelBlock::Constant(5, 3, 4.0), ClassLabel::heat(1)}});
  const ScatterPair s = compute_scatter(d);
  CHECK(s.within.isZero(0.0));
  CHECK_FALSE(s.between.isZero(0.0));
}

TEST_CASE("equal class means give zero between-class scatter") {
  PixelBlock a(2, 2), b(2, 2);
  a << 0, 0, 2, 2;
  b << 2, 0, 0, 2;
  const ScatterPair s = compute_scatter(build_data_matrix({{a, ClassLabel::heat(0)}, {b, ClassLabel::heat(1)}}));
  CHECK(s.between.isZero(1e-15));
  CHECK_THROWS_AS(solve_fda(s), NumericalError);
}

TEST_CASE("scatter matrices match the double-loop oracle") {
  Rng rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    const DataMatrix d = random_classes(rng, 3, 50 / 3 + 1, 4);
    const ScatterPair s = compute_scatter(d);
    Eigen::MatrixXd sw, sb;
    scatter_oracle(d, sw, sb);
    REQUIRE(relative_error(s.within, sw) <= 1e-10);
    REQUIRE(relative_error(s.between, sb) <= 1e-10);
    REQUIRE(relative_error(s.within, s.within.transpose()) <= 1e-12);
  }
}

TEST_CASE("scatter preconditions") {
  CHECK_THROWS_AS(compute_scatter(build_data_matrix({{PixelBlock::Ones(3, 2), ClassLabel::heat(0)}})),
                  ValidationError);
  CHECK_THROWS_AS(compute_scatter(build_data_matrix(
                      {{PixelBlock::Ones(3, 2), ClassLabel::heat(0)}, {PixelBlock::Ones(1, 2), ClassLabel::heat(1)}})),
                  ValidationError);
}

TEST_CASE("two-class Fisher direction matches the closed form") {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    PixelBlock a = testing::random_matrix(rng, 40, 2);
    PixelBlock b = testing::random_matrix(rng, 40, 2);
    a.col(1) *= 3.0;
    b.col(1) *= 3.0;
    b.col(0).array() += 4.0;
    b.col(1).array() += 1.0;
    const DataMatrix d = build_data_matrix({{a, ClassLabel::heat(0)}, {b, ClassLabel::heat(1)}});
    const ScatterPair s = compute_scatter(d);
    const FdaModel m = solve_fda(s);
    REQUIRE(m.k == 1);
    const Eigen::VectorXd oracle = s.within.ldlt().solve(s.class_means[1] - s.class_means[0]).normalized();
    CHECK(angle_between(oracle, m.projection.col(0)) <= 1e-8);
    CHECK(m.eigenvalues(1) <= 1e-10 * m.eigenvalues(0));
  }
}

TEST_CASE("eigenpairs satisfy the generalized problem") {
  Rng rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    const DataMatrix d = random_classes(rng, 6, 60, 9);
    const ScatterPair s = compute_scatter(d);
    const FdaModel m = solve_fda(s, {0.99, 5});
    REQUIRE(m.k == 5);
    for (int j = 0; j < m.k; ++j) {
      const Eigen::VectorXd v = m.projection.col(j);
      const Eigen::VectorXd sbv = s.between * v;
      CHECK((sbv - m.eigenvalues(j) * (s.within * v)).norm() <= 1e-6 * sbv.norm());
      CHECK(v.norm() == doctest::Approx(1.0).epsilon(1e-12));
    }
    for (Eigen::Index j = 1; j < m.eigenvalues.size(); ++j) CHECK(m.eigenvalues(j - 1) >= m.eigenvalues(j));
  }
}

TEST_CASE("k is the smallest count reaching the variance floor") {
  Rng rng(12);
  const DataMatrix d = random_classes(rng, 6, 80, 9);
  const FdaModel m = solve_fda(compute_scatter(d), {0.99, std::nullopt});
  CHECK(m.retained_variance_fraction >= 0.99 * (1.0 - 1e-12));
  if (m.k > 1) {
    const FdaModel fewer = solve_fda(compute_scatter(d), {0.99, m.k - 1});
    CHECK(fewer.retained_variance_fraction < 0.99);
  }
  // Six classes span at most five directions.
  CHECK(m.k <= 5);
  const FdaModel five = solve_fda(compute_scatter(d), {0.99, 5});
  CHECK(five.k == 5);
  CHECK(five.projection.cols() == 5);
}

TEST_CASE("solutions are deterministic with a fixed sign convention") {
  Rng rng(9);
  const DataMatrix d = random_classes(rng, 4, 30, 5);
  const FdaModel a = solve_fda(compute_scatter(d), {0.99, 3});
  const FdaModel b = solve_fda(compute_scatter(d), {0.99, 3});
  CHECK(a.projection == b.projection);
  for (Eigen::Index j = 0; j < a.projection.cols(); ++j) {
    for (Eigen::Index i = 0; i < a.projection.rows(); ++i) {
      if (std::abs(a.projection(i, j)) > 1e-12) {
        CHECK(a.projection(i, j) > 0.0);
        break;
      }
    }
  }
}

TEST_CASE("projection shapes") {
  Rng rng(1);
  const DataMatrix d = random_classes(rng, 3, 20, 4);
  FdaModel identity;
  identity.projection = Eigen::MatrixXd::Identity(4, 4);
  identity.k = 4;
  CHECK(project(d, identity).values == d.values);
  CHECK(project(d, identity).labels == d.labels);

  FdaModel m = solve_fda(compute_scatter(d), {0.99, 2});
  CHECK(project(d, m).values.cols() == 2);
  CHECK_THROWS_AS(project(PixelBlock::Ones(3, 5), m), ValidationError);

  const std::vector<std::pair<PixelBlock, ClassLabel>> big = {
      {PixelBlock::Random(121500 / 9 * 9, 9), ClassLabel::adulteration(0.0)}};
  FdaModel nine;
  nine.projection = Eigen::MatrixXd::Identity(9, 5);
  nine.k = 5;
  CHECK(project(build_data_matrix(big), nine).values.rows() == 121500);
  CHECK(project(build_data_matrix(big), nine).values.cols() == 5);
}

TEST_CASE("model text round trip is exact") {
  Rng rng(2);
  const FdaModel m = solve_fda(compute_scatter(random_classes(rng, 5, 30, 9)), {0.99, 4});
  const std::string text = format_fda_model(m);
  std::vector<std::string> lines;
  for (const std::string& l : text::split(text, '\n'))
    if (!l.empty()) lines.push_back(l);
  std::size_t pos = 0;
  const FdaModel back = parse_fda_model(lines, pos);
  CHECK(pos == lines.size());
  CHECK(back.projection == m.projection);
  CHECK(back.eigenvalues == m.eigenvalues);
  CHECK(back.k == m.k);
  CHECK(back.class_order == m.class_order);
  CHECK(back.retained_variance_fraction == m.retained_variance_fraction);
}
