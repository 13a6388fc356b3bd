#include "oilmsi/generator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "oilmsi/errors.hpp"
#include "oilmsi/rng.hpp"
#include "oilmsi/text.hpp"

namespace oilmsi {

Spectrum GeneratorParams::base_for(const ClassLabel& label) const {
  for (const ClassSpectrum& cs : spectra) {
    if (cs.label == label) return cs.base;
  }
  if (label.kind == LabelKind::AdulterationFraction) {
    const ClassSpectrum* below = nullptr;
    const ClassSpectrum* above = nullptr;
    for (const ClassSpectrum& cs : spectra) {
      if (cs.label.kind != LabelKind::AdulterationFraction) continue;
      if (cs.label.value < label.value && (!below || cs.label.value > below->label.value)) below = &cs;
      if (cs.label.value > label.value && (!above || cs.label.value < above->label.value)) above = &cs;
    }
    if (below && above) {
      const double t = (label.value - below->label.value) / (above->label.value - below->label.value);
      Spectrum out{};
      for (std::size_t b = 0; b < kBandCount; ++b) {
        out[b] = (1.0 - t) * below->base[b] + t * above->base[b];
      }
      return out;
    }
  }
  throw ValidationError("no base spectrum for " + to_string(label.kind) + " " +
                        text::format_double(label.value));
}

void validate(const GeneratorParams& p) {
  if (p.width <= 0 || p.height <= 0) throw ValidationError("generator image size must be positive");
  if (p.bit_depth < 1 || p.bit_depth > 16) throw ValidationError("bit depth must be within 1..16");
  for (double s : p.noise_sigma) {
    if (!(s >= 0.0)) throw ValidationError("negative noise level");
  }
  if (!(p.dark_offset_sigma >= 0.0)) throw ValidationError("negative noise level");
  if (!(p.illumination_amplitude >= 0.0)) throw ValidationError("negative illumination amplitude");
  if (p.illumination_order < 1) throw ValidationError("illumination order must be >= 1");
  for (const ClassSpectrum& cs : p.spectra) validate(cs.label);
}

namespace {

Spectrum parse_spectrum(const std::string& key, const std::string& value) {
  std::string v = value;
  std::replace(v.begin(), v.end(), ',', ' ');
  const auto tokens = text::split_ws(v);
  if (tokens.size() != kBandCount) {
    throw ValidationError(key + ": base spectrum not length 9");
  }
  Spectrum s{};
  for (std::size_t i = 0; i < kBandCount; ++i) s[i] = text::parse_double(tokens[i]);
  return s;
}

std::string join(const Spectrum& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ' ';
    out += text::format_double(s[i]);
  }
  return out;
}

}  // namespace

GeneratorParams parse_generator_config(const std::string& config,
                                       std::vector<std::pair<std::string, std::string>>* extra) {
  GeneratorParams p;
  std::istringstream in(config);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string_view body = text::trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) {
      throw ValidationError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key(text::trim(body.substr(0, eq)));
    const std::string value(text::trim(body.substr(eq + 1)));

    if (key == "width") {
      p.width = static_cast<int>(text::parse_int(value));
    } else if (key == "height") {
      p.height = static_cast<int>(text::parse_int(value));
    } else if (key == "bit_depth") {
      p.bit_depth = static_cast<int>(text::parse_int(value));
    } else if (key == "noise_sigma") {
      p.noise_sigma = parse_spectrum(key, value);
    } else if (key == "dark_offset_mean") {
      p.dark_offset_mean = text::parse_double(value);
    } else if (key == "dark_offset_sigma") {
      p.dark_offset_sigma = text::parse_double(value);
    } else if (key == "illumination_amplitude") {
      p.illumination_amplitude = text::parse_double(value);
    } else if (key == "illumination_order") {
      p.illumination_order = static_cast<int>(text::parse_int(value));
    } else if (key == "illumination_seed") {
      p.illumination_seed = static_cast<std::uint64_t>(text::parse_int(value));
    } else if (key.rfind("spectrum.adulteration.", 0) == 0) {
      const double f = text::parse_double(key.substr(std::string("spectrum.adulteration.").size()));
      p.spectra.push_back({ClassLabel::adulteration(f), parse_spectrum(key, value)});
    } else if (key.rfind("spectrum.heat.", 0) == 0) {
      const auto c = text::parse_int(key.substr(std::string("spectrum.heat.").size()));
      p.spectra.push_back({ClassLabel::heat(static_cast<int>(c)), parse_spectrum(key, value)});
    } else if (extra) {
      extra->emplace_back(key, value);
    } else {
      throw ValidationError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
  }
  validate(p);
  return p;
}

GeneratorParams load_generator_config(const std::filesystem::path& path,
                                      std::vector<std::pair<std::string, std::string>>* extra) {
  return parse_generator_config(text::read_file(path), extra);
}

std::string format_generator_config(const GeneratorParams& p) {
  std::ostringstream out;
  out << "width = " << p.width << '\n'
      << "height = " << p.height << '\n'
      << "bit_depth = " << p.bit_depth << '\n'
      << "noise_sigma = " << join(p.noise_sigma) << '\n'
      << "dark_offset_mean = " << text::format_double(p.dark_offset_mean) << '\n'
      << "dark_offset_sigma = " << text::format_double(p.dark_offset_sigma) << '\n'
      << "illumination_amplitude = " << text::format_double(p.illumination_amplitude) << '\n'
      << "illumination_order = " << p.illumination_order << '\n'
      << "illumination_seed = " << p.illumination_seed << '\n';
  for (const ClassSpectrum& cs : p.spectra) {
    if (cs.label.kind == LabelKind::AdulterationFraction) {
      out << "spectrum.adulteration." << text::format_double(cs.label.value);
    } else {
      out << "spectrum.heat." << cs.label.heat_cycles();
    }
    out << " = " << join(cs.base) << '\n';
  }
  return out.str();
}

std::vector<double> illumination_field(const GeneratorParams& p, std::size_t band) {
  const std::size_t n = static_cast<std::size_t>(p.width) * p.height;
  std::vector<double> gain(n, 1.0);
  if (p.illumination_amplitude == 0.0) return gain;

  // Coefficients for every band come from one stream so band b's field does
  // not depend on how many bands are requested.
  Rng rng(p.illumination_seed);
  const int modes_per_axis = p.illumination_order + 1;
  const std::size_t n_modes = static_cast<std::size_t>(modes_per_axis * modes_per_axis - 1);
  std::vector<double> coeff(n_modes);
  for (std::size_t b = 0; b <= band; ++b) {
    for (double& c : coeff) c = rng.normal();
  }

  std::vector<double> field(n, 0.0);
  std::size_t m = 0;
  for (int py = 0; py < modes_per_axis; ++py) {
    for (int px = 0; px < modes_per_axis; ++px) {
      if (px == 0 && py == 0) continue;
      const double c = coeff[m++];
      for (int y = 0; y < p.height; ++y) {
        const double cy = std::cos(std::numbers::pi * py * (y + 0.5) / p.height);
        for (int x = 0; x < p.width; ++x) {
          const double cx = std::cos(std::numbers::pi * px * (x + 0.5) / p.width);
          field[static_cast<std::size_t>(y) * p.width + x] += c * cx * cy;
        }
      }
    }
  }
  double mean = 0.0;
  for (double v : field) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double v : field) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / static_cast<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    gain[i] = 1.0 + p.illumination_amplitude * (sd > 0.0 ? (field[i] - mean) / sd : 0.0);
  }
  return gain;
}

CapturePair simulate_capture(const ClassLabel& label, const GeneratorParams& p, std::uint64_t seed) {
  validate(p);
  validate(label);
  const Spectrum base = p.base_for(label);

  CapturePair out{make_cube(p.width, p.height, p.bit_depth), make_cube(p.width, p.height, p.bit_depth)};
  const double top = out.raw.bands[0].max_value();
  auto clip = [top](double v) { return std::clamp(std::round(v), 0.0, top); };

  Rng rng(seed);
  for (std::size_t b = 0; b < kBandCount; ++b) {
    BandImage& dark = out.dark.bands[b];
    for (double& v : dark.values) v = clip(rng.normal(p.dark_offset_mean, p.dark_offset_sigma));
  }
  for (std::size_t b = 0; b < kBandCount; ++b) {
    const std::vector<double> gain = illumination_field(p, b);
    const BandImage& dark = out.dark.bands[b];
    BandImage& raw = out.raw.bands[b];
    for (std::size_t i = 0; i < raw.values.size(); ++i) {
      raw.values[i] = clip(dark.values[i] + base[b] * gain[i] + rng.normal(0.0, p.noise_sigma[b]));
    }
  }

  std::ostringstream id;
  id << (label.kind == LabelKind::AdulterationFraction ? "frac" : "heat") << '_'
     << text::format_double(label.value) << "_seed_" << seed;
  out.raw.sample_id = id.str();
  out.dark.sample_id = id.str() + "_dark";
  out.raw.label = label;
  return out;
}

}  // namespace oilmsi
