#include "oilmsi/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "oilmsi/errors.hpp"
#include "oilmsi/rng.hpp"
#include "oilmsi/text.hpp"

namespace oilmsi {

namespace fs = std::filesystem;

namespace {

// Shared rig: 64x64 frames, 10-bit, modest shot noise, fixed illumination
// pattern. Brightest pixel stays below 90% of full scale.
GeneratorParams rig_params() {
  GeneratorParams p;
  p.width = 64;
  p.height = 64;
  p.bit_depth = 10;
  p.noise_sigma.fill(4.0);
  p.dark_offset_mean = 20.0;
  p.dark_offset_sigma = 2.0;
  p.illumination_amplitude = 0.04;
  p.illumination_order = 3;
  p.illumination_seed = 12345;
  return p;
}

constexpr Spectrum kPureCoconut = {620, 600, 640, 660, 700, 720, 690, 650, 600};

double round2(double v) { return std::round(v * 100.0) / 100.0; }

std::string fixed(double v, int digits) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string two_digit(int i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02d", i);
  return buf;
}

}  // namespace

CorpusConfig default_adulteration_corpus() {
  // Palm oil dims the 405 nm band most; the shift magnitude follows
  // sqrt(1.016 X^2 + 2.045 X) so distances grow roughly like that quadratic.
  constexpr Spectrum primary = {1.0, 0.55, 0.4, 0.3, 0.25, 0.2, 0.15, 0.12, 0.1};
  constexpr Spectrum secondary = {0.0, 0.3, -0.2, 0.25, -0.1, 0.2, -0.15, 0.1, 0.05};
  auto shape = [](double x) { return std::sqrt(1.016 * x * x + 2.045 * x); };

  CorpusConfig c;
  c.kind = CorpusKind::Adulteration;
  c.params = rig_params();
  for (int level = 0; level <= 8; ++level) {
    const double x = 0.05 * level;
    Spectrum s{};
    for (std::size_t b = 0; b < kBandCount; ++b) {
      s[b] = round2(kPureCoconut[b] - 40.0 * shape(x) / shape(0.4) * primary[b] -
                    6.0 * (x / 0.4) * (x / 0.4) * secondary[b]);
    }
    c.params.spectra.push_back({ClassLabel::adulteration(round2(x)), s});
  }
  c.replicates = 15;
  for (int i = 0; i < 16; ++i) c.validation_fractions.push_back(std::round((0.02 + 0.024 * i) * 1000.0) / 1000.0);
  return c;
}

CorpusConfig default_reheat_corpus() {
  // Heat classes sit in a plane spanned by two spectral directions: pure oil
  // alone, then pairs {1,2} and {4,5} close together with 3 in between.
  constexpr Spectrum along = {1.0, 0.6, 0.45, 0.3, 0.2, 0.15, 0.1, 0.08, 0.05};
  constexpr Spectrum across = {-0.2, 0.1, 0.5, 0.6, 0.4, 0.2, 0.0, -0.2, -0.3};
  constexpr double positions[6][2] = {{0, 0}, {40, -6}, {40, 6}, {80, 0}, {120, -6}, {120, 6}};

  CorpusConfig c;
  c.kind = CorpusKind::Reheat;
  c.params = rig_params();
  for (int heat = 0; heat < 6; ++heat) {
    Spectrum s{};
    for (std::size_t b = 0; b < kBandCount; ++b) {
      s[b] = round2(kPureCoconut[b] - positions[heat][0] * along[b] + positions[heat][1] * across[b]);
    }
    c.params.spectra.push_back({ClassLabel::heat(heat), s});
  }
  c.train_captures = 1;
  c.test_datasets = 5;
  return c;
}

CorpusConfig parse_corpus_config(const std::string& contents) {
  std::vector<std::pair<std::string, std::string>> extra;
  CorpusConfig c;
  c.params = parse_generator_config(contents, &extra);
  bool kind_seen = false;
  for (const auto& [key, value] : extra) {
    if (key == "corpus") {
      if (value == "adulteration") {
        c.kind = CorpusKind::Adulteration;
      } else if (value == "reheat") {
        c.kind = CorpusKind::Reheat;
      } else {
        throw ValidationError("corpus must be 'adulteration' or 'reheat'");
      }
      kind_seen = true;
    } else if (key == "replicates") {
      c.replicates = static_cast<int>(text::parse_int(value));
    } else if (key == "validation_fractions") {
      for (const std::string& tok : text::split_ws(value)) c.validation_fractions.push_back(text::parse_double(tok));
    } else if (key == "train_captures") {
      c.train_captures = static_cast<int>(text::parse_int(value));
    } else if (key == "test_datasets") {
      c.test_datasets = static_cast<int>(text::parse_int(value));
    } else {
      throw ValidationError("unknown corpus config key '" + key + "'");
    }
  }
  if (!kind_seen) throw ValidationError("corpus config must declare 'corpus = adulteration|reheat'");
  if (c.replicates < 1 || c.train_captures < 1 || c.test_datasets < 1) {
    throw ValidationError("corpus counts must be >= 1");
  }
  for (double f : c.validation_fractions) validate(ClassLabel::adulteration(f));
  return c;
}

CorpusConfig load_corpus_config(const fs::path& path) { return parse_corpus_config(text::read_file(path)); }

std::string format_corpus_config(const CorpusConfig& c) {
  std::ostringstream out;
  out << "corpus = " << (c.kind == CorpusKind::Adulteration ? "adulteration" : "reheat") << '\n';
  out << format_generator_config(c.params);
  if (c.kind == CorpusKind::Adulteration) {
    out << "replicates = " << c.replicates << '\n';
    out << "validation_fractions =";
    for (double f : c.validation_fractions) out << ' ' << text::format_double(f);
    out << '\n';
  } else {
    out << "train_captures = " << c.train_captures << '\n';
    out << "test_datasets = " << c.test_datasets << '\n';
  }
  return out.str();
}

namespace {

void write_capture(const CorpusConfig& c, const ClassLabel& label, std::uint64_t seed, const fs::path& dir,
                   const std::string& sample_id) {
  CapturePair pair = simulate_capture(label, c.params, seed);
  pair.raw.sample_id = sample_id;
  pair.dark.sample_id = sample_id + "_dark";
  save_cube(pair.raw, dir / "raw");
  save_cube(pair.dark, dir / "dark");
}

}  // namespace

void generate_corpus(const CorpusConfig& c, const fs::path& root, std::uint64_t seed) {
  validate(c.params);
  std::uint64_t tag = 0;
  if (c.kind == CorpusKind::Adulteration) {
    for (const ClassSpectrum& cs : c.params.spectra) {
      if (cs.label.kind != LabelKind::AdulterationFraction) continue;
      const std::string level = "frac_" + fixed(cs.label.value, 3);
      for (int r = 1; r <= c.replicates; ++r) {
        const std::string rep = "rep_" + two_digit(r);
        write_capture(c, cs.label, derive_seed(seed, tag++), root / "train" / level / rep, level + "_" + rep);
      }
    }
    tag = 1000000;
    for (std::size_t i = 0; i < c.validation_fractions.size(); ++i) {
      const std::string id = "sample_" + two_digit(static_cast<int>(i) + 1);
      write_capture(c, ClassLabel::adulteration(c.validation_fractions[i]), derive_seed(seed, tag++),
                    root / "validation" / id, id);
    }
  } else {
    for (const ClassSpectrum& cs : c.params.spectra) {
      if (cs.label.kind != LabelKind::HeatCycles) continue;
      const std::string heat = "heat_" + std::to_string(cs.label.heat_cycles());
      for (int k = 1; k <= c.train_captures; ++k) {
        const std::string cap = "capture_" + two_digit(k);
        write_capture(c, cs.label, derive_seed(seed, tag++), root / "train" / heat / cap, heat + "_" + cap);
      }
    }
    tag = 1000000;
    for (int d = 1; d <= c.test_datasets; ++d) {
      const std::string ds = "dataset_" + two_digit(d);
      for (const ClassSpectrum& cs : c.params.spectra) {
        if (cs.label.kind != LabelKind::HeatCycles) continue;
        const std::string heat = "heat_" + std::to_string(cs.label.heat_cycles());
        write_capture(c, cs.label, derive_seed(seed, tag++), root / "test" / ds / heat, ds + "_" + heat);
      }
    }
  }
  text::write_file_atomic(root / "generator.cfg", format_corpus_config(c));
}

std::vector<SampleRef> list_samples(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::vector<fs::path> dirs;
  if (fs::exists(dir / "raw" / "manifest.json")) dirs.push_back(dir);
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_directory() && fs::exists(entry.path() / "raw" / "manifest.json")) dirs.push_back(entry.path());
  }
  std::sort(dirs.begin(), dirs.end());
  std::vector<SampleRef> out;
  for (const fs::path& d : dirs) {
    const SpectralCube raw = load_cube(d / "raw");
    if (!raw.label) throw ValidationError(d.string() + ": sample has no label");
    out.push_back({d, *raw.label, raw.sample_id});
  }
  return out;
}

SpectralCube preprocess_sample(const fs::path& sample_dir, const PreprocessOptions& options) {
  const SpectralCube raw = load_cube(sample_dir / "raw");
  const SpectralCube dark = load_cube(sample_dir / "dark");
  return smooth(subtract_dark(raw, dark), options.window, options.kind);
}

}  // namespace oilmsi
