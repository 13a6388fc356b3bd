#include "oilmsi/cube.hpp"

#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "oilmsi/errors.hpp"

namespace oilmsi {

namespace fs = std::filesystem;
using nlohmann::json;

const std::vector<BandSpec>& default_band_specs() {
  static const std::vector<BandSpec> specs = {
      {1, 405, 375, 425, 10}, {2, 430, 385, 525, 50}, {3, 505, 450, 550, 20},
      {4, 590, 520, 620, 10}, {5, 660, 630, 685, 20}, {6, 740, 690, 760, 20},
      {7, 850, 825, 875, 10}, {8, 890, 865, 915, 10}, {9, 950, 915, 1000, 20},
  };
  return specs;
}

ClassLabel ClassLabel::adulteration(double fraction) {
  return {LabelKind::AdulterationFraction, fraction};
}

ClassLabel ClassLabel::heat(int cycles) {
  return {LabelKind::HeatCycles, static_cast<double>(cycles)};
}

void validate(const ClassLabel& label) {
  if (label.kind == LabelKind::AdulterationFraction) {
    if (!(label.value >= 0.0 && label.value <= 1.0)) {
      throw ValidationError("adulteration fraction outside [0, 1]");
    }
  } else {
    if (label.value != std::floor(label.value) || label.value < 0.0 || label.value > 5.0) {
      throw ValidationError("heat cycles must be an integer in [0, 5]");
    }
  }
}

std::string to_string(LabelKind kind) {
  return kind == LabelKind::AdulterationFraction ? "adulteration_fraction" : "heat_cycles";
}

LabelKind label_kind_from_string(const std::string& text) {
  if (text == "adulteration_fraction") return LabelKind::AdulterationFraction;
  if (text == "heat_cycles") return LabelKind::HeatCycles;
  throw ValidationError("unknown label kind '" + text + "'");
}

SpectralCube make_cube(int width, int height, int bit_depth, double fill) {
  SpectralCube cube;
  cube.band_specs = default_band_specs();
  cube.bands.assign(kBandCount, BandImage(width, height, bit_depth, fill));
  return cube;
}

void validate(const SpectralCube& cube, bool require_integral) {
  if (cube.bands.size() != kBandCount) {
    throw ValidationError("band count != 9 (got " + std::to_string(cube.bands.size()) + ")");
  }
  if (cube.band_specs.size() != kBandCount) {
    throw ValidationError("band spec count != 9");
  }
  for (std::size_t i = 0; i < kBandCount; ++i) {
    const BandSpec& s = cube.band_specs[i];
    if (s.index != static_cast<int>(i) + 1) {
      throw ValidationError("band indices must be contiguous 1..9");
    }
    if (!(s.band_low < s.dominant_wavelength && s.dominant_wavelength < s.band_high)) {
      throw ValidationError("band " + std::to_string(s.index) +
                            ": dominant wavelength outside its emitting band");
    }
  }
  const BandImage& first = cube.bands.front();
  if (first.width <= 0 || first.height <= 0) {
    throw ValidationError("band images must be non-empty");
  }
  for (const BandImage& band : cube.bands) {
    if (band.width != first.width || band.height != first.height) {
      throw ValidationError("dimension mismatch across bands");
    }
    if (band.bit_depth != first.bit_depth || band.bit_depth < 1 || band.bit_depth > 16) {
      throw ValidationError("bit depth must be shared and within 1..16");
    }
    if (band.values.size() != static_cast<std::size_t>(band.width) * band.height) {
      throw ValidationError("band value count != width * height");
    }
    const double top = band.max_value();
    for (double v : band.values) {
      if (!(v >= 0.0 && v <= top)) {
        throw ValidationError("pixel value exceeds bit depth");
      }
      if (require_integral && v != std::floor(v)) {
        throw ValidationError("non-integral pixel value cannot be stored");
      }
    }
  }
  if (cube.label) validate(*cube.label);
}

namespace {

void write_pgm(const BandImage& band, const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << "P5\n" << band.width << ' ' << band.height << "\n65535\n";
  std::vector<unsigned char> bytes;
  bytes.reserve(band.values.size() * 2);
  for (double v : band.values) {
    const auto u = static_cast<std::uint16_t>(v);
    bytes.push_back(static_cast<unsigned char>(u >> 8));
    bytes.push_back(static_cast<unsigned char>(u & 0xFF));
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to " + path.string());
}

// Reads one whitespace-delimited PGM header token, skipping '#' comments.
std::string pgm_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  return tok;
}

BandImage read_pgm(const fs::path& path, int bit_depth) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("missing band file " + path.string());
  if (pgm_token(in) != "P5") throw ValidationError(path.string() + ": not a binary PGM (P5)");
  int width = 0, height = 0, maxval = 0;
  try {
    width = std::stoi(pgm_token(in));
    height = std::stoi(pgm_token(in));
    maxval = std::stoi(pgm_token(in));
  } catch (const std::exception&) {
    throw ValidationError(path.string() + ": malformed PGM header");
  }
  if (width <= 0 || height <= 0 || maxval <= 0 || maxval > 65535) {
    throw ValidationError(path.string() + ": malformed PGM header");
  }
  const std::size_t n = static_cast<std::size_t>(width) * height;
  const std::size_t bytes_per = maxval > 255 ? 2 : 1;
  std::vector<unsigned char> raw(n * bytes_per);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(in.gcount()) != raw.size()) {
    throw IoError(path.string() + ": truncated pixel data");
  }
  BandImage band(width, height, bit_depth);
  for (std::size_t i = 0; i < n; ++i) {
    band.values[i] = bytes_per == 2 ? static_cast<double>((raw[2 * i] << 8) | raw[2 * i + 1])
                                    : static_cast<double>(raw[i]);
  }
  return band;
}

std::string band_file_name(int index) { return "band_" + std::to_string(index) + ".pgm"; }

}  // namespace

void save_cube(const SpectralCube& cube, const fs::path& dir) {
  validate(cube, /*require_integral=*/true);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  json manifest;
  manifest["format"] = "oilmsi-cube";
  manifest["version"] = 1;
  manifest["sample_id"] = cube.sample_id;
  manifest["width"] = cube.width();
  manifest["height"] = cube.height();
  manifest["bit_depth"] = cube.bit_depth();
  if (cube.label) {
    manifest["label"] = {{"kind", to_string(cube.label->kind)}, {"value", cube.label->value}};
  } else {
    manifest["label"] = nullptr;
  }
  json bands = json::array();
  for (std::size_t i = 0; i < kBandCount; ++i) {
    const BandSpec& s = cube.band_specs[i];
    bands.push_back({{"index", s.index},
                     {"file", band_file_name(s.index)},
                     {"dominant_wavelength_nm", s.dominant_wavelength},
                     {"band_low_nm", s.band_low},
                     {"band_high_nm", s.band_high},
                     {"half_power_bandwidth_nm", s.half_power_bandwidth}});
    write_pgm(cube.bands[i], dir / band_file_name(s.index));
  }
  manifest["bands"] = bands;

  std::ofstream out(dir / "manifest.json", std::ios::trunc);
  if (!out) throw IoError("cannot write " + (dir / "manifest.json").string());
  out << manifest.dump(2) << '\n';
  if (!out) throw IoError("short write to manifest");
}

SpectralCube load_cube(const fs::path& dir) {
  const fs::path manifest_path = dir / "manifest.json";
  std::ifstream in(manifest_path);
  if (!in) throw IoError("missing manifest " + manifest_path.string());
  json manifest;
  try {
    in >> manifest;
  } catch (const json::exception& e) {
    throw ValidationError("malformed manifest: " + std::string(e.what()));
  }

  SpectralCube cube;
  try {
    const int bit_depth = manifest.at("bit_depth").get<int>();
    if (bit_depth < 1 || bit_depth > 16) throw ValidationError("bit depth must be within 1..16");
    cube.sample_id = manifest.value("sample_id", std::string{});
    if (manifest.contains("label") && !manifest["label"].is_null()) {
      cube.label = ClassLabel{label_kind_from_string(manifest["label"].at("kind").get<std::string>()),
                              manifest["label"].at("value").get<double>()};
    }
    const json& bands = manifest.at("bands");
    if (!bands.is_array()) throw ValidationError("malformed manifest: bands must be an array");
    if (bands.size() != kBandCount) {
      throw ValidationError("band count != 9 (got " + std::to_string(bands.size()) + ")");
    }
    for (const json& b : bands) {
      BandSpec spec{b.at("index").get<int>(), b.at("dominant_wavelength_nm").get<double>(),
                    b.at("band_low_nm").get<double>(), b.at("band_high_nm").get<double>(),
                    b.at("half_power_bandwidth_nm").get<double>()};
      cube.band_specs.push_back(spec);
      cube.bands.push_back(read_pgm(dir / b.at("file").get<std::string>(), bit_depth));
    }
    if (manifest.contains("width") &&
        (manifest["width"].get<int>() != cube.width() || manifest["height"].get<int>() != cube.height())) {
      throw ValidationError("dimension mismatch between manifest and band files");
    }
  } catch (const json::exception& e) {
    throw ValidationError("malformed manifest: " + std::string(e.what()));
  }
  validate(cube, /*require_integral=*/true);
  return cube;
}

}  // namespace oilmsi
