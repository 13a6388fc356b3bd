#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "oilmsi/preprocess.hpp"

namespace oilmsi::cli {

enum class Command {
  GenCorpus,
  ShowConfig,
  Preprocess,
  TrainAdulteration,
  Estimate,
  TrainReheat,
  Classify,
  Evaluate,
};

/// Exit statuses, one per failure class.
enum ExitCode : int {
  kOk = 0,
  kUsage = 2,
  kIoError = 3,
  kValidationError = 4,
  kNumericalError = 5,
  kInternalError = 6,
};

struct RunConfig {
  Command command = Command::GenCorpus;
  std::filesystem::path workdir = ".";
  std::filesystem::path input;   // command-specific default when empty
  std::filesystem::path output;
  std::filesystem::path model;
  std::filesystem::path curve;        // train-adulteration calibration CSV
  std::filesystem::path gap_curve;    // train-reheat
  std::filesystem::path eigenvalues;  // train-reheat
  std::filesystem::path corpus_config;
  std::string corpus = "all";  // gen-corpus / show-config: all|adulteration|reheat

  std::optional<Roi> roi;  // default: image-centred 30x30
  std::uint64_t seed = 7;
  int window = 30;
  bool median = false;
  bool rescale_8bit = false;
  int stride = 3;
  int k = 5;  // 0 selects k from the variance floor
  double variance_floor = 0.99;
  double threshold = 0.025;
  int grid_points = 60;
  double sigma_min = 0.0;  // absolute sigma grid when both bounds are set
  double sigma_max = 0.0;
  bool row_normalize = false;
  std::size_t reference_size = 900;
  int trials = 20;
  int resc_trials = 30;
  std::size_t points_per_class = 100;
};

/// Validates numeric overrides against their operation preconditions.
void validate(const RunConfig& config);

/// Executes one command. Diagnostics go to err as a single line; returns an
/// ExitCode.
int run(const RunConfig& config, std::ostream& out, std::ostream& err);

}  // namespace oilmsi::cli
