#include <CLI11.hpp>

#include <iostream>
#include <map>

#include "oilmsi/cli.hpp"

using oilmsi::cli::Command;
using oilmsi::cli::RunConfig;

namespace {

void add_common(CLI::App* sub, RunConfig& c) {
  sub->add_option("--workdir", c.workdir, "Root for relative paths");
  sub->add_option("--seed", c.seed, "Seed for every random draw");
}

void add_preprocess(CLI::App* sub, RunConfig& c, std::vector<int>& roi) {
  sub->add_option("--window", c.window, "Smoothing window (pixels)");
  sub->add_flag("--median", c.median, "Median filter instead of moving average");
  sub->add_option("--roi", roi, "ROI as x y side")->expected(3);
}

void add_fda(CLI::App* sub, RunConfig& c) {
  sub->add_option("--k", c.k, "Retained FDA components (0: use the variance floor)");
  sub->add_option("--variance-floor", c.variance_floor, "Retained-variance floor");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multispectral olive-oil quality analysis"};
  app.set_config("--config", "", "key=value settings file; [subcommand] sections scope keys");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.require_subcommand(1);

  RunConfig c;
  std::vector<int> roi;
  std::map<CLI::App*, Command> commands;
  auto sub = [&](const char* name, const char* help, Command cmd) {
    CLI::App* s = app.add_subcommand(name, help);
    add_common(s, c);
    commands[s] = cmd;
    return s;
  };

  CLI::App* gen = sub("gen-corpus", "Generate the synthetic corpora", Command::GenCorpus);
  gen->add_option("--output", c.output, "Corpus root (default corpus)");
  gen->add_option("--corpus", c.corpus, "all, adulteration or reheat");
  gen->add_option("--corpus-config", c.corpus_config, "Corpus definition file");

  CLI::App* show = sub("show-config", "Print a default corpus definition", Command::ShowConfig);
  show->add_option("--corpus", c.corpus, "adulteration or reheat")->required();

  CLI::App* pre = sub("preprocess", "Write the labelled data matrix", Command::Preprocess);
  pre->add_option("--input", c.input, "Sample tree");
  pre->add_option("--output", c.output, "Data matrix CSV");
  pre->add_flag("--rescale-8bit", c.rescale_8bit, "Rescale ROI values to 0..255");
  add_preprocess(pre, c, roi);

  CLI::App* ta = sub("train-adulteration", "Fit the adulteration calibration", Command::TrainAdulteration);
  ta->add_option("--input", c.input, "Training sample tree");
  ta->add_option("--model", c.model, "Model output");
  ta->add_option("--curve", c.curve, "Calibration curve CSV");
  ta->add_option("--reference-size", c.reference_size, "Pure-oil reference pixel count");
  add_preprocess(ta, c, roi);
  add_fda(ta, c);

  CLI::App* est = sub("estimate", "Estimate adulteration fractions", Command::Estimate);
  est->add_option("--input", c.input, "Sample or sample tree");
  est->add_option("--model", c.model, "Adulteration model");
  est->add_option("--output", c.output, "Estimates CSV");
  add_preprocess(est, c, roi);

  CLI::App* tr = sub("train-reheat", "Train the reheat classifier", Command::TrainReheat);
  tr->add_option("--input", c.input, "Training sample tree");
  tr->add_option("--model", c.model, "Classifier output");
  tr->add_option("--gap-curve", c.gap_curve, "Eigengap curve CSV");
  tr->add_option("--eigenvalues", c.eigenvalues, "Eigenvalue list CSV");
  tr->add_option("--stride", c.stride, "ROI subsampling stride");
  tr->add_option("--threshold", c.threshold, "Zero-eigenvalue threshold");
  tr->add_option("--grid-points", c.grid_points, "Sigma grid size");
  tr->add_option("--sigma-min", c.sigma_min, "Lowest sigma (absolute)");
  tr->add_option("--sigma-max", c.sigma_max, "Highest sigma (absolute)");
  tr->add_flag("--row-normalize", c.row_normalize, "Row-normalize the spectral embedding");
  add_preprocess(tr, c, roi);
  add_fda(tr, c);

  CLI::App* cl = sub("classify", "Assign qualitative reheat classes", Command::Classify);
  cl->add_option("--input", c.input, "Sample or sample tree");
  cl->add_option("--model", c.model, "Reheat classifier");
  cl->add_option("--output", c.output, "Classification CSV");
  add_preprocess(cl, c, roi);

  CLI::App* ev = sub("evaluate", "Accuracy and repeatability report", Command::Evaluate);
  ev->add_option("--input", c.input, "Test dataset tree");
  ev->add_option("--model", c.model, "Reheat classifier");
  ev->add_option("--output", c.output, "Report CSV");
  ev->add_option("--trials", c.trials, "Accuracy trials");
  ev->add_option("--resc-trials", c.resc_trials, "Repeat classifications per sample");
  ev->add_option("--points-per-class", c.points_per_class, "Pixels drawn per class per trial");
  add_preprocess(ev, c, roi);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int status = app.exit(e);
    return status == 0 ? 0 : oilmsi::cli::kUsage;
  }

  for (const auto& [s, cmd] : commands) {
    if (s->parsed()) c.command = cmd;
  }
  if (!roi.empty()) c.roi = oilmsi::Roi{roi[0], roi[1], roi[2]};
  return oilmsi::cli::run(c, std::cout, std::cerr);
}
