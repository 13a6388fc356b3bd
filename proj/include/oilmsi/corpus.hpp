#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "oilmsi/generator.hpp"
#include "oilmsi/preprocess.hpp"

namespace oilmsi {

enum class CorpusKind { Adulteration, Reheat };

/// Generator parameters plus the corpus layout they are sampled into.
struct CorpusConfig {
  CorpusKind kind = CorpusKind::Adulteration;
  GeneratorParams params;
  // adulteration
  int replicates = 15;
  std::vector<double> validation_fractions;
  // reheat
  int train_captures = 1;
  int test_datasets = 5;
};

/// Shipped corpus definitions (also committed under configs/).
CorpusConfig default_adulteration_corpus();
CorpusConfig default_reheat_corpus();

CorpusConfig parse_corpus_config(const std::string& text);
CorpusConfig load_corpus_config(const std::filesystem::path& path);
std::string format_corpus_config(const CorpusConfig& config);

/// Writes every capture of the corpus below root. Layout:
///   adulteration: train/frac_<f>/rep_<r>/{raw,dark}, validation/sample_<i>/{raw,dark}
///   reheat:       train/heat_<h>/capture_<c>/{raw,dark}, test/dataset_<d>/heat_<h>/{raw,dark}
/// Capture seeds derive from `seed` and the capture's position in the layout.
void generate_corpus(const CorpusConfig& config, const std::filesystem::path& root, std::uint64_t seed);

struct SampleRef {
  std::filesystem::path dir;  // holds raw/ and dark/
  ClassLabel label;
  std::string sample_id;
};

/// Every sample directory below dir, sorted by path.
std::vector<SampleRef> list_samples(const std::filesystem::path& dir);

struct PreprocessOptions {
  int window = 30;
  SmoothKind kind = SmoothKind::MovingAverage;
};

/// Loads raw and dark cubes, subtracts the dark frame, then smooths.
SpectralCube preprocess_sample(const std::filesystem::path& sample_dir, const PreprocessOptions& options);

}  // namespace oilmsi
