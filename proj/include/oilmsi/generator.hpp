#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "oilmsi/cube.hpp"

namespace oilmsi {

using Spectrum = std::array<double, kBandCount>;

struct ClassSpectrum {
  ClassLabel label;
  Spectrum base;  // transmitted counts per band at unit illumination gain
};

/// Parameters of the synthetic transmittance rig.
///
/// A capture is raw = dark + base * gain + noise, rounded and clipped to the
/// sensor range, where dark is a per-pixel offset map drawn around
/// dark_offset_mean. gain is a fixed per-band illumination field determined
/// only by illumination_seed, so it is identical for every capture.
struct GeneratorParams {
  int width = 64;
  int height = 64;
  int bit_depth = 10;
  Spectrum noise_sigma{};  // per band
  double dark_offset_mean = 0.0;
  double dark_offset_sigma = 0.0;
  double illumination_amplitude = 0.0;  // std of the relative gain field
  int illumination_order = 3;           // highest cosine mode per axis
  std::uint64_t illumination_seed = 1;
  std::vector<ClassSpectrum> spectra;

  /// Base spectrum for a label. Adulteration fractions between two declared
  /// levels are interpolated linearly per band; heat cycles must match.
  Spectrum base_for(const ClassLabel& label) const;
};

void validate(const GeneratorParams& params);

/// Parses the key=value generator config. Recognised keys:
///   width, height, bit_depth, noise_sigma (9 values), dark_offset_mean,
///   dark_offset_sigma, illumination_amplitude, illumination_order,
///   illumination_seed, spectrum.adulteration.<fraction> (9 values),
///   spectrum.heat.<cycles> (9 values).
/// Unknown keys are collected into `extra` when given, otherwise rejected.
GeneratorParams parse_generator_config(const std::string& text,
                                       std::vector<std::pair<std::string, std::string>>* extra = nullptr);
GeneratorParams load_generator_config(const std::filesystem::path& path,
                                      std::vector<std::pair<std::string, std::string>>* extra = nullptr);
std::string format_generator_config(const GeneratorParams& params);

struct CapturePair {
  SpectralCube raw;
  SpectralCube dark;
};

/// Relative illumination gain field of one band (mean 1).
std::vector<double> illumination_field(const GeneratorParams& params, std::size_t band);

/// Simulates one exposure and its dark frame. Pure function of its inputs.
CapturePair simulate_capture(const ClassLabel& label, const GeneratorParams& params, std::uint64_t seed);

}  // namespace oilmsi
