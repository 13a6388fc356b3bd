#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace oilmsi {

inline constexpr std::size_t kBandCount = 9;

/// One LED band of the transmittance rig.
struct BandSpec {
  int index = 0;  // 1-based
  double dominant_wavelength = 0.0;  // nm
  double band_low = 0.0;             // nm
  double band_high = 0.0;            // nm
  double half_power_bandwidth = 0.0; // nm

  bool operator==(const BandSpec&) const = default;
};

/// The nine LEDs of the imaging rig, ordered from 405 nm to 950 nm.
const std::vector<BandSpec>& default_band_specs();

enum class LabelKind { AdulterationFraction, HeatCycles };

struct ClassLabel {
  LabelKind kind = LabelKind::AdulterationFraction;
  double value = 0.0;

  static ClassLabel adulteration(double fraction);
  static ClassLabel heat(int cycles);

  int heat_cycles() const { return static_cast<int>(value); }

  bool operator==(const ClassLabel&) const = default;
  auto operator<=>(const ClassLabel&) const = default;
};

/// Throws ValidationError when the value is out of range for its kind.
void validate(const ClassLabel& label);

std::string to_string(LabelKind kind);
LabelKind label_kind_from_string(const std::string& text);

/// Single monochrome band. Raw captures hold integral counts; processed
/// images (dark-subtracted, smoothed) may hold fractional values.
struct BandImage {
  int width = 0;
  int height = 0;
  int bit_depth = 10;
  std::vector<double> values;  // row-major

  BandImage() = default;
  BandImage(int w, int h, int depth = 10, double fill = 0.0)
      : width(w), height(h), bit_depth(depth),
        values(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {}

  double& at(int x, int y) { return values[static_cast<std::size_t>(y) * width + x]; }
  double at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }

  double max_value() const { return static_cast<double>((1u << bit_depth) - 1u); }

  bool operator==(const BandImage&) const = default;
};

struct SpectralCube {
  std::vector<BandImage> bands;
  std::vector<BandSpec> band_specs;
  std::string sample_id;
  std::optional<ClassLabel> label;

  int width() const { return bands.empty() ? 0 : bands.front().width; }
  int height() const { return bands.empty() ? 0 : bands.front().height; }
  int bit_depth() const { return bands.empty() ? 0 : bands.front().bit_depth; }

  bool operator==(const SpectralCube&) const = default;
};

/// Blank cube with the default band specs.
SpectralCube make_cube(int width, int height, int bit_depth = 10, double fill = 0.0);

/// Checks band count, band specs, shared dimensions and value ranges.
/// With require_integral, values must also be whole counts (storable form).
void validate(const SpectralCube& cube, bool require_integral = false);

/// Reads a cube directory (manifest.json + 9 PGM bands).
SpectralCube load_cube(const std::filesystem::path& dir);

/// Writes manifest.json and band_1.pgm .. band_9.pgm into dir, replacing any
/// previous contents of those files.
void save_cube(const SpectralCube& cube, const std::filesystem::path& dir);

}  // namespace oilmsi
