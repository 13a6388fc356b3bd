#include "oilmsi/cli.hpp"

#include <cmath>
#include <map>
#include <ostream>
#include <sstream>

#include "oilmsi/adulteration.hpp"
#include "oilmsi/corpus.hpp"
#include "oilmsi/errors.hpp"
#include "oilmsi/reheat.hpp"
#include "oilmsi/text.hpp"

namespace oilmsi::cli {

namespace fs = std::filesystem;

namespace {

fs::path resolve(const RunConfig& c, const fs::path& p, const fs::path& fallback) {
  const fs::path chosen = p.empty() ? fallback : p;
  return chosen.is_absolute() ? chosen : c.workdir / chosen;
}

PreprocessOptions preprocess_options(const RunConfig& c) {
  return {c.window, c.median ? SmoothKind::Median : SmoothKind::MovingAverage};
}

Roi roi_for(const RunConfig& c, const SpectralCube& cube) {
  return c.roi.value_or(center_roi(cube.width(), cube.height(), 30));
}

FdaOptions fda_options(const RunConfig& c) {
  FdaOptions o;
  o.variance_floor = c.variance_floor;
  if (c.k > 0) o.k_override = c.k;
  return o;
}

PixelBlock sample_block(const RunConfig& c, const fs::path& dir) {
  const SpectralCube cube = preprocess_sample(dir, preprocess_options(c));
  return extract_roi(cube, roi_for(c, cube));
}

int gen_corpus(const RunConfig& c, std::ostream& out) {
  const fs::path root = resolve(c, c.output, "corpus");
  auto one = [&](const CorpusConfig& cfg, const std::string& name) {
    generate_corpus(cfg, root / name, c.seed);
    out << "wrote " << (root / name).string() << '\n';
  };
  if (!c.corpus_config.empty()) {
    const CorpusConfig cfg = load_corpus_config(resolve(c, c.corpus_config, {}));
    one(cfg, cfg.kind == CorpusKind::Adulteration ? "adulteration" : "reheat");
    return kOk;
  }
  if (c.corpus == "all" || c.corpus == "adulteration") one(default_adulteration_corpus(), "adulteration");
  if (c.corpus == "all" || c.corpus == "reheat") one(default_reheat_corpus(), "reheat");
  return kOk;
}

int show_config(const RunConfig& c, std::ostream& out) {
  if (c.corpus == "reheat") {
    out << format_corpus_config(default_reheat_corpus());
  } else if (c.corpus == "adulteration") {
    out << format_corpus_config(default_adulteration_corpus());
  } else {
    throw ValidationError("show-config needs --corpus adulteration|reheat");
  }
  return kOk;
}

int preprocess_cmd(const RunConfig& c, std::ostream& out) {
  const fs::path input = resolve(c, c.input, "corpus/adulteration/train");
  const fs::path output = resolve(c, c.output, "data/data_matrix.csv");
  std::vector<std::pair<PixelBlock, ClassLabel>> blocks;
  int bit_depth = 10;
  for (const SampleRef& s : list_samples(input)) {
    const SpectralCube cube = preprocess_sample(s.dir, preprocess_options(c));
    bit_depth = cube.bit_depth();
    PixelBlock block = extract_roi(cube, roi_for(c, cube));
    if (c.rescale_8bit) block = rescale_to_8bit(block, bit_depth);
    blocks.emplace_back(std::move(block), s.label);
  }
  const DataMatrix data = build_data_matrix(blocks);
  text::write_file_atomic(output, format_data_matrix_csv(data));

  // Mean spectral signature per class.
  std::ostringstream sig;
  sig << "label_kind,label_value";
  for (const BandSpec& b : default_band_specs()) sig << ",nm_" << text::format_double(b.dominant_wavelength);
  sig << '\n';
  for (const ClassLabel& label : data.classes()) {
    const SpectralSignature s = mean_signature(data.rows_for(label));
    sig << to_string(label.kind) << ',' << text::format_double(label.value);
    for (Eigen::Index i = 0; i < s.mean.size(); ++i) sig << ',' << text::format_double(s.mean(i));
    sig << '\n';
  }
  fs::path sig_path = output;
  sig_path.replace_filename(output.stem().string() + "_signatures.csv");
  text::write_file_atomic(sig_path, sig.str());
  out << "data matrix " << data.rows() << "x" << data.cols() << " -> " << output.string() << '\n';
  return kOk;
}

int train_adulteration_cmd(const RunConfig& c, std::ostream& out) {
  const fs::path input = resolve(c, c.input, "corpus/adulteration/train");
  std::vector<std::pair<double, PixelBlock>> training;
  for (const SampleRef& s : list_samples(input)) {
    if (s.label.kind != LabelKind::AdulterationFraction) throw ValidationError(s.dir.string() + ": not an adulteration sample");
    training.emplace_back(s.label.value, sample_block(c, s.dir));
  }
  FitOptions fit;
  fit.reference_size = c.reference_size;
  fit.seed = c.seed;
  const FitResult result = train_adulteration(training, fda_options(c), fit);
  text::write_file_atomic(resolve(c, c.model, "models/adulteration.model"), format_adulteration_model(result.model));
  text::write_file_atomic(resolve(c, c.curve, "out/calibration.csv"), format_calibration_csv(result.curve));
  out << "Y = " << text::format_double(result.model.coeff_a) << " X^2 + " << text::format_double(result.model.coeff_b)
      << " X  (R^2 = " << text::format_double(result.model.r_squared) << ", k = " << result.model.fda.k << ")\n";
  return kOk;
}

int estimate_cmd(const RunConfig& c, std::ostream& out) {
  const AdulterationModel model =
      parse_adulteration_model(text::read_file(resolve(c, c.model, "models/adulteration.model")));
  const fs::path input = resolve(c, c.input, "corpus/adulteration/validation");
  std::ostringstream csv;
  csv << "sample_id,true_fraction,estimated_fraction,normalized_distance\n";
  std::vector<double> predicted, actual;
  for (const SampleRef& s : list_samples(input)) {
    const SpectralCube cube = preprocess_sample(s.dir, preprocess_options(c));
    const Estimate e = estimate(cube, model, roi_for(c, cube));
    out << s.sample_id << ": " << text::format_double(e.fraction) << '\n';
    csv << s.sample_id << ',';
    if (s.label.kind == LabelKind::AdulterationFraction) {
      csv << text::format_double(s.label.value);
      predicted.push_back(e.fraction);
      actual.push_back(s.label.value);
    }
    csv << ',' << text::format_double(e.fraction) << ',' << text::format_double(e.normalized_distance) << '\n';
  }
  text::write_file_atomic(resolve(c, c.output, "out/estimates.csv"), csv.str());
  if (!predicted.empty()) out << "MSE " << text::format_double(mse(predicted, actual)) << '\n';
  return kOk;
}

ReheatOptions reheat_options(const RunConfig& c) {
  ReheatOptions o;
  o.threshold = c.threshold;
  o.grid_points = c.grid_points;
  o.seed = c.seed;
  o.spectral.row_normalize = c.row_normalize;
  if (c.sigma_min > 0.0 && c.sigma_max > 0.0) {
    for (int i = 0; i < c.grid_points; ++i) {
      const double t = c.grid_points == 1 ? 0.0 : static_cast<double>(i) / (c.grid_points - 1);
      o.sigma_grid.push_back(c.sigma_min * std::pow(c.sigma_max / c.sigma_min, t));
    }
  }
  return o;
}

int train_reheat_cmd(const RunConfig& c, std::ostream& out) {
  const fs::path input = resolve(c, c.input, "corpus/reheat/train");
  std::vector<std::pair<int, PixelBlock>> full, strided;
  for (const SampleRef& s : list_samples(input)) {
    if (s.label.kind != LabelKind::HeatCycles) throw ValidationError(s.dir.string() + ": not a reheat sample");
    const SpectralCube cube = preprocess_sample(s.dir, preprocess_options(c));
    const Roi roi = roi_for(c, cube);
    PixelBlock block = extract_roi(cube, roi);
    strided.emplace_back(s.label.heat_cycles(), stride_subsample(block, roi.side, c.stride));
    full.emplace_back(s.label.heat_cycles(), std::move(block));
  }
  const ReheatTraining t = train_reheat(full, strided, fda_options(c), reheat_options(c));
  text::write_file_atomic(resolve(c, c.model, "models/reheat.model"), format_reheat_classifier(t.classifier));

  std::ostringstream gap;
  gap << "sigma,eigengap\n";
  for (const GapPoint& p : t.sweep.curve) gap << text::format_double(p.sigma) << ',' << text::format_double(p.gap) << '\n';
  text::write_file_atomic(resolve(c, c.gap_curve, "out/gap_curve.csv"), gap.str());

  std::ostringstream ev;
  ev << "index,eigenvalue,below_threshold\n";
  for (Eigen::Index i = 0; i < t.eigenvalues_at_opt.size(); ++i) {
    ev << i + 1 << ',' << text::format_double(t.eigenvalues_at_opt(i)) << ','
       << (t.eigenvalues_at_opt(i) < c.threshold ? 1 : 0) << '\n';
  }
  text::write_file_atomic(resolve(c, c.eigenvalues, "out/eigenvalues.csv"), ev.str());

  out << "sigma_opt " << text::format_double(t.classifier.sigma_opt) << ", qualitative classes "
      << t.classifier.n_qualitative << ", heat map";
  for (const auto& [heat, q] : t.classifier.heat_to_qualitative) out << ' ' << heat << "->" << q;
  out << '\n';
  return kOk;
}

int classify_cmd(const RunConfig& c, std::ostream& out) {
  const ReheatClassifier classifier =
      parse_reheat_classifier(text::read_file(resolve(c, c.model, "models/reheat.model")));
  const fs::path input = resolve(c, c.input, "corpus/reheat/test");
  std::ostringstream csv;
  csv << "sample_id,heat_cycles,qualitative_class,distance\n";
  for (const SampleRef& s : list_samples(input)) {
    const Classification cl = classify(sample_block(c, s.dir), classifier);
    out << s.sample_id << ": qualitative class " << cl.qualitative_class << " (distance "
        << text::format_double(cl.distance) << ")\n";
    csv << s.sample_id << ',' << (s.label.kind == LabelKind::HeatCycles ? std::to_string(s.label.heat_cycles()) : "")
        << ',' << cl.qualitative_class << ',' << text::format_double(cl.distance) << '\n';
  }
  text::write_file_atomic(resolve(c, c.output, "out/classifications.csv"), csv.str());
  return kOk;
}

int evaluate_cmd(const RunConfig& c, std::ostream& out) {
  const ReheatClassifier classifier =
      parse_reheat_classifier(text::read_file(resolve(c, c.model, "models/reheat.model")));
  const fs::path input = resolve(c, c.input, "corpus/reheat/test");
  std::map<fs::path, ReheatDataset> grouped;
  for (const SampleRef& s : list_samples(input)) {
    if (s.label.kind != LabelKind::HeatCycles) throw ValidationError(s.dir.string() + ": not a reheat sample");
    grouped[s.dir.parent_path()].emplace_back(s.label.heat_cycles(), sample_block(c, s.dir));
  }
  std::vector<ReheatDataset> datasets;
  for (auto& [dir, ds] : grouped) datasets.push_back(std::move(ds));

  EvaluationOptions o;
  o.trials = c.trials;
  o.resc_trials = c.resc_trials;
  o.points_per_class = c.points_per_class;
  o.seed = c.seed;
  const EvaluationReport report = evaluate_reheat(classifier, datasets, o);
  text::write_file_atomic(resolve(c, c.output, "out/reheat_report.csv"), format_evaluation_csv(report));
  out << "heat-class mode accuracy " << text::format_double(report.heat.mode) << ", qualitative mode accuracy "
      << text::format_double(report.qualitative.mode) << ", ReSc mean " << text::format_double(report.resc_mean)
      << " (sum over " << report.datasets.size() << " datasets " << text::format_double(report.resc_sum) << ")\n";
  return kOk;
}

}  // namespace

void validate(const RunConfig& c) {
  if (c.window < 1) throw ValidationError("--window must be >= 1");
  if (c.stride < 1) throw ValidationError("--stride must be >= 1");
  if (c.k < 0 || c.k > static_cast<int>(kBandCount)) throw ValidationError("--k must lie in 0..9");
  if (!(c.variance_floor > 0.0 && c.variance_floor <= 1.0)) throw ValidationError("--variance-floor must lie in (0, 1]");
  if (!(c.threshold > 0.0 && c.threshold < 2.0)) throw ValidationError("--threshold must lie in (0, 2)");
  if (c.grid_points < 1) throw ValidationError("--grid-points must be >= 1");
  if (c.sigma_min < 0.0 || c.sigma_max < 0.0 || (c.sigma_min > 0.0) != (c.sigma_max > 0.0) ||
      c.sigma_max < c.sigma_min) {
    throw ValidationError("--sigma-min/--sigma-max must both be positive with min <= max");
  }
  if (c.reference_size < 2) throw ValidationError("--reference-size must be >= 2");
  if (c.trials < 1 || c.resc_trials < 1 || c.points_per_class < 2) throw ValidationError("trial counts must be positive");
  if (c.roi && (c.roi->side < 1 || c.roi->x < 0 || c.roi->y < 0)) throw ValidationError("invalid ROI");
  if (c.corpus != "all" && c.corpus != "adulteration" && c.corpus != "reheat") {
    throw ValidationError("--corpus must be all, adulteration or reheat");
  }
}

int run(const RunConfig& c, std::ostream& out, std::ostream& err) {
  try {
    validate(c);
    switch (c.command) {
      case Command::GenCorpus: return gen_corpus(c, out);
      case Command::ShowConfig: return show_config(c, out);
      case Command::Preprocess: return preprocess_cmd(c, out);
      case Command::TrainAdulteration: return train_adulteration_cmd(c, out);
      case Command::Estimate: return estimate_cmd(c, out);
      case Command::TrainReheat: return train_reheat_cmd(c, out);
      case Command::Classify: return classify_cmd(c, out);
      case Command::Evaluate: return evaluate_cmd(c, out);
    }
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << '\n';
    return kIoError;
  } catch (const ValidationError& e) {
    err << "validation error: " << e.what() << '\n';
    return kValidationError;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return kNumericalError;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "I/O error: " << e.what() << '\n';
    return kIoError;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kInternalError;
  }
  return kInternalError;
}

}  // namespace oilmsi::cli
