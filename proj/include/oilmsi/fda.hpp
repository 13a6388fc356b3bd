#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "oilmsi/preprocess.hpp"

namespace oilmsi {

/// Within- and between-class scatter of a labelled data matrix.
struct ScatterPair {
  Eigen::MatrixXd within;
  Eigen::MatrixXd between;
  std::vector<Eigen::VectorXd> class_means;  // in class_order
  Eigen::VectorXd grand_mean;
  std::vector<ClassLabel> class_order;
};

/// Class means, grand mean, S_w = sum of per-class centred outer products and
/// S_b = sum over classes of (mu_p - mu)(mu_p - mu)^T.
ScatterPair compute_scatter(const DataMatrix& data);

struct FdaModel {
  Eigen::MatrixXd projection;   // n x k, unit-length columns
  Eigen::VectorXd eigenvalues;  // all n, descending
  int k = 0;
  double retained_variance_fraction = 0.0;
  std::vector<ClassLabel> class_order;

  Eigen::Index input_dim() const { return projection.rows(); }
};

struct FdaOptions {
  double variance_floor = 0.99;
  std::optional<int> k_override;
};

/// Solves S_b v = lambda S_w v by Cholesky whitening of the within-class
/// scatter, adding a small ridge (1e-8 * trace / n) when S_w is near-singular.
/// Eigenvectors are normalised to unit length with their first nonzero
/// component positive.
FdaModel solve_fda(const ScatterPair& scatter, const FdaOptions& options = {});

/// Y = X W; labels carried through.
DataMatrix project(const DataMatrix& data, const FdaModel& model);
PixelBlock project(const PixelBlock& block, const FdaModel& model);

std::string format_fda_model(const FdaModel& model);
/// Parses the lines written by format_fda_model; advances `pos` past them.
FdaModel parse_fda_model(const std::vector<std::string>& lines, std::size_t& pos);

}  // namespace oilmsi
