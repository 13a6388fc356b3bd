#include "oilmsi/fda.hpp"

#include <cmath>
#include <sstream>

#include "oilmsi/errors.hpp"
#include "oilmsi/text.hpp"

namespace oilmsi {

ScatterPair compute_scatter(const DataMatrix& data) {
  const std::vector<ClassLabel> classes = data.classes();
  if (classes.size() < 2) throw ValidationError("FDA needs at least 2 classes");
  const Eigen::Index n = data.cols();

  ScatterPair s;
  s.class_order = classes;
  s.within = Eigen::MatrixXd::Zero(n, n);
  s.between = Eigen::MatrixXd::Zero(n, n);
  s.grand_mean = data.values.colwise().mean().transpose();
  for (const ClassLabel& label : classes) {
    const PixelBlock rows = data.rows_for(label);
    if (rows.rows() < 2) throw ValidationError("class with fewer than 2 rows");
    const Eigen::VectorXd mu = rows.colwise().mean().transpose();
    const Eigen::MatrixXd centred = rows.rowwise() - mu.transpose();
    s.within.noalias() += centred.transpose() * centred;
    const Eigen::VectorXd d = mu - s.grand_mean;
    s.between.noalias() += d * d.transpose();
    s.class_means.push_back(mu);
  }
  return s;
}

FdaModel solve_fda(const ScatterPair& scatter, const FdaOptions& options) {
  if (!(options.variance_floor > 0.0 && options.variance_floor <= 1.0)) {
    throw ValidationError("variance floor must lie in (0, 1]");
  }
  const Eigen::Index n = scatter.within.rows();
  if (options.k_override && (*options.k_override < 1 || *options.k_override > n)) {
    throw ValidationError("k override must lie in 1..n");
  }
  if (scatter.between.isZero(0.0)) throw NumericalError("no discriminative direction");

  Eigen::MatrixXd sw = 0.5 * (scatter.within + scatter.within.transpose());
  const Eigen::MatrixXd sb = 0.5 * (scatter.between + scatter.between.transpose());
  if (!(sw.trace() > 0.0)) throw NumericalError("within-class scatter is singular");

  // The ridge eps*I is only added when S_w itself is not comfortably positive
  // definite; otherwise it would tilt the solution by about eps * cond(S_w).
  const double eps = 1e-8 * sw.trace() / static_cast<double>(n);
  Eigen::LLT<Eigen::MatrixXd> llt(sw);
  if (llt.info() != Eigen::Success || llt.matrixLLT().diagonal().array().square().minCoeff() < eps) {
    sw.diagonal().array() += eps;
    llt.compute(sw);
  }
  if (llt.info() != Eigen::Success) throw NumericalError("within-class scatter is singular");
  // M = L^-1 S_b L^-T
  Eigen::MatrixXd m = llt.matrixL().solve(sb);
  m = llt.matrixL().solve(m.transpose()).transpose();
  m = 0.5 * (m + m.transpose());

  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
  if (eig.info() != Eigen::Success) throw NumericalError("symmetric eigensolve failed");

  FdaModel model;
  model.class_order = scatter.class_order;
  model.eigenvalues.resize(n);
  Eigen::MatrixXd vectors(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const Eigen::Index src = n - 1 - j;  // ascending -> descending
    model.eigenvalues(j) = eig.eigenvalues()(src);
    Eigen::VectorXd v = llt.matrixU().solve(eig.eigenvectors().col(src));
    v.normalize();
    for (Eigen::Index i = 0; i < n; ++i) {
      if (std::abs(v(i)) > 1e-12) {
        if (v(i) < 0.0) v = -v;
        break;
      }
    }
    vectors.col(j) = v;
  }

  const double lambda_max = model.eigenvalues(0);
  if (!(lambda_max > 0.0)) throw NumericalError("no discriminative direction");
  const double cutoff = 1e-10 * lambda_max;
  double total = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    if (model.eigenvalues(j) > cutoff) total += model.eigenvalues(j);
  }
  auto retained = [&](int k) {
    double sum = 0.0;
    for (Eigen::Index j = 0; j < k; ++j) {
      if (model.eigenvalues(j) > cutoff) sum += model.eigenvalues(j);
    }
    return sum / total;
  };

  if (options.k_override) {
    model.k = *options.k_override;
  } else {
    model.k = 1;
    while (model.k < n && retained(model.k) < options.variance_floor * (1.0 - 1e-12)) ++model.k;
  }
  model.retained_variance_fraction = retained(model.k);
  model.projection = vectors.leftCols(model.k);
  return model;
}

DataMatrix project(const DataMatrix& data, const FdaModel& model) {
  return {project(data.values, model), data.labels};
}

PixelBlock project(const PixelBlock& block, const FdaModel& model) {
  if (block.cols() != model.projection.rows()) {
    throw ValidationError("dimension mismatch: data has " + std::to_string(block.cols()) +
                          " columns, model expects " + std::to_string(model.projection.rows()));
  }
  return block * model.projection;
}

std::string format_fda_model(const FdaModel& model) {
  std::ostringstream out;
  out << "fda n " << model.projection.rows() << " k " << model.k << " retained_variance "
      << text::format_double(model.retained_variance_fraction) << '\n';
  out << "eigenvalues";
  for (Eigen::Index i = 0; i < model.eigenvalues.size(); ++i) {
    out << ' ' << text::format_double(model.eigenvalues(i));
  }
  out << "\nclasses";
  for (const ClassLabel& l : model.class_order) {
    out << ' ' << to_string(l.kind) << ':' << text::format_double(l.value);
  }
  out << '\n';
  for (Eigen::Index r = 0; r < model.projection.rows(); ++r) {
    out << 'w';
    for (Eigen::Index c = 0; c < model.projection.cols(); ++c) {
      out << ' ' << text::format_double(model.projection(r, c));
    }
    out << '\n';
  }
  return out.str();
}

FdaModel parse_fda_model(const std::vector<std::string>& lines, std::size_t& pos) {
  auto next = [&]() -> std::vector<std::string> {
    if (pos >= lines.size()) throw ValidationError("truncated FDA model");
    return text::split_ws(lines[pos++]);
  };
  const auto head = next();
  if (head.size() != 7 || head[0] != "fda" || head[1] != "n" || head[3] != "k" || head[5] != "retained_variance") {
    throw ValidationError("malformed FDA model header");
  }
  const auto n = static_cast<Eigen::Index>(text::parse_int(head[2]));
  FdaModel model;
  model.k = static_cast<int>(text::parse_int(head[4]));
  model.retained_variance_fraction = text::parse_double(head[6]);
  if (n < 1 || model.k < 1 || model.k > n) throw ValidationError("malformed FDA model dimensions");

  const auto ev = next();
  if (ev.empty() || ev[0] != "eigenvalues" || static_cast<Eigen::Index>(ev.size()) != n + 1) {
    throw ValidationError("malformed FDA eigenvalue line");
  }
  model.eigenvalues.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) model.eigenvalues(i) = text::parse_double(ev[static_cast<std::size_t>(i) + 1]);

  const auto cls = next();
  if (cls.empty() || cls[0] != "classes") throw ValidationError("malformed FDA class line");
  for (std::size_t i = 1; i < cls.size(); ++i) {
    const auto parts = text::split(cls[i], ':');
    if (parts.size() != 2) throw ValidationError("malformed FDA class label");
    model.class_order.push_back({label_kind_from_string(parts[0]), text::parse_double(parts[1])});
  }

  model.projection.resize(n, model.k);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto row = next();
    if (row.empty() || row[0] != "w" || static_cast<int>(row.size()) != model.k + 1) {
      throw ValidationError("malformed FDA projection row");
    }
    for (int c = 0; c < model.k; ++c) model.projection(r, c) = text::parse_double(row[static_cast<std::size_t>(c) + 1]);
  }
  return model;
}

}  // namespace oilmsi
