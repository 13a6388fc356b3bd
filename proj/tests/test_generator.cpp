#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oilmsi/errors.hpp"
#include "oilmsi/generator.hpp"
#include "oilmsi/rng.hpp"

using namespace oilmsi;

namespace {

GeneratorParams two_class_params() {
  GeneratorParams p;
  p.width = 32;
  p.height = 32;
  p.noise_sigma.fill(3.0);
  p.dark_offset_mean = 15.0;
  p.dark_offset_sigma = 1.0;
  p.spectra.push_back({ClassLabel::adulteration(0.0), {500, 510, 520, 530, 540, 550, 560, 570, 580}});
  p.spectra.push_back({ClassLabel::adulteration(0.4), {400, 420, 440, 460, 480, 500, 520, 540, 560}});
  return p;
}

}  // namespace

TEST_CASE("rng is reproducible and uniform lies in [0, 1)") {
  Rng a(99), b(99);
  for (int i = 0; i < 1000; ++i) {
    const double u = a.uniform();
    CHECK(u == b.uniform());
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
  Rng c(5);
  for (int i = 0; i < 1000; ++i) CHECK(c.below(7) < 7u);
  CHECK(derive_seed(1, 2) != derive_seed(1, 3));
  CHECK(derive_seed(1, 2) == derive_seed(1, 2));
}

TEST_CASE("normal variates have the requested moments") {
  Rng rng(2024);
  const int n = 200000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal(3.0, 2.0);
    sum += x;
    sq += x * x;
  }
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  CHECK(mean == doctest::Approx(3.0).epsilon(0.01));
  CHECK(var == doctest::Approx(4.0).epsilon(0.02));
}

TEST_CASE("noise-free capture reproduces the base spectrum exactly") {
  GeneratorParams p = two_class_params();
  p.noise_sigma.fill(0.0);
  p.dark_offset_mean = 0.0;
  p.dark_offset_sigma = 0.0;
  const CapturePair c = simulate_capture(ClassLabel::adulteration(0.0), p, 1);
  for (std::size_t b = 0; b < kBandCount; ++b) {
    for (double v : c.raw.bands[b].values) CHECK(v == p.spectra[0].base[b]);
    for (double v : c.dark.bands[b].values) CHECK(v == 0.0);
  }
  REQUIRE(c.raw.label.has_value());
  CHECK(*c.raw.label == ClassLabel::adulteration(0.0));
}

TEST_CASE("same seed gives identical captures, different seeds differ") {
  const GeneratorParams p = two_class_params();
  const CapturePair a = simulate_capture(ClassLabel::adulteration(0.4), p, 17);
  const CapturePair b = simulate_capture(ClassLabel::adulteration(0.4), p, 17);
  const CapturePair c = simulate_capture(ClassLabel::adulteration(0.4), p, 18);
  CHECK(a.raw == b.raw);
  CHECK(a.dark == b.dark);
  CHECK_FALSE(a.raw.bands == c.raw.bands);
}

TEST_CASE("pixel means converge to dark plus base") {
  GeneratorParams p = two_class_params();
  p.width = 100;
  p.height = 100;
  const CapturePair c = simulate_capture(ClassLabel::adulteration(0.0), p, 5);
  const double sigma = std::sqrt(3.0 * 3.0 + 1.0 * 1.0 + 2.0 / 12.0);
  for (std::size_t b = 0; b < kBandCount; ++b) {
    double sum = 0.0;
    for (double v : c.raw.bands[b].values) sum += v;
    const double mean = sum / static_cast<double>(c.raw.bands[b].values.size());
    CHECK(std::abs(mean - (p.dark_offset_mean + p.spectra[0].base[b])) <= 3.0 * sigma / 100.0);
  }
}

TEST_CASE("separation between classes converges to the base gap") {
  GeneratorParams p = two_class_params();
  p.width = 128;
  p.height = 128;
  const Spectrum& s0 = p.spectra[0].base;
  const Spectrum& s1 = p.spectra[1].base;
  double gap = 0.0;
  for (std::size_t b = 0; b < kBandCount; ++b) gap += (s0[b] - s1[b]) * (s0[b] - s1[b]);
  gap = std::sqrt(gap);
  const CapturePair a = simulate_capture(ClassLabel::adulteration(0.0), p, 1);
  const CapturePair z = simulate_capture(ClassLabel::adulteration(0.4), p, 2);
  double dist = 0.0;
  for (std::size_t b = 0; b < kBandCount; ++b) {
    double ma = 0.0, mz = 0.0;
    for (std::size_t i = 0; i < a.raw.bands[b].values.size(); ++i) {
      ma += a.raw.bands[b].values[i] - a.dark.bands[b].values[i];
      mz += z.raw.bands[b].values[i] - z.dark.bands[b].values[i];
    }
    const double n = static_cast<double>(a.raw.bands[b].values.size());
    dist += (ma / n - mz / n) * (ma / n - mz / n);
  }
  CHECK(std::sqrt(dist) == doctest::Approx(gap).epsilon(0.005));
}

TEST_CASE("values clip at sensor saturation") {
  GeneratorParams p = two_class_params();
  p.spectra[0].base.fill(1100.0);
  const CapturePair c = simulate_capture(ClassLabel::adulteration(0.0), p, 3);
  for (const BandImage& band : c.raw.bands)
    for (double v : band.values) {
      CHECK(v <= 1023.0);
      CHECK(v >= 0.0);
    }
}

TEST_CASE("illumination field has unit mean gain and the requested spread") {
  GeneratorParams p = two_class_params();
  p.illumination_amplitude = 0.05;
  for (std::size_t b = 0; b < kBandCount; ++b) {
    const std::vector<double> g = illumination_field(p, b);
    double sum = 0.0, sq = 0.0;
    for (double v : g) {
      sum += v;
      sq += v * v;
    }
    const double n = static_cast<double>(g.size());
    const double mean = sum / n;
    CHECK(mean == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::sqrt(sq / n - mean * mean) == doctest::Approx(0.05).epsilon(1e-9));
  }
  p.illumination_amplitude = 0.0;
  for (double v : illumination_field(p, 0)) CHECK(v == 1.0);
}

TEST_CASE("intermediate fractions interpolate the declared spectra") {
  const GeneratorParams p = two_class_params();
  const Spectrum mid = p.base_for(ClassLabel::adulteration(0.1));
  for (std::size_t b = 0; b < kBandCount; ++b) {
    CHECK(mid[b] == doctest::Approx(0.75 * p.spectra[0].base[b] + 0.25 * p.spectra[1].base[b]));
  }
  CHECK_THROWS_AS(p.base_for(ClassLabel::heat(2)), ValidationError);
}

TEST_CASE("negative noise and malformed spectra are rejected") {
  GeneratorParams p = two_class_params();
  p.noise_sigma[3] = -1.0;
  CHECK_THROWS_AS(validate(p), ValidationError);
  CHECK_THROWS_AS(simulate_capture(ClassLabel::adulteration(0.0), p, 1), ValidationError);
  CHECK_THROWS_AS(parse_generator_config("spectrum.heat.0 = 1 2 3\n"), ValidationError);
  CHECK_THROWS_AS(parse_generator_config("bogus = 1\n"), ValidationError);
}

TEST_CASE("generator config round-trips through text") {
  GeneratorParams p = two_class_params();
  p.illumination_amplitude = 0.03;
  p.illumination_seed = 77;
  const GeneratorParams back = parse_generator_config(format_generator_config(p));
  CHECK(back.width == p.width);
  CHECK(back.noise_sigma == p.noise_sigma);
  CHECK(back.dark_offset_mean == p.dark_offset_mean);
  CHECK(back.illumination_amplitude == p.illumination_amplitude);
  CHECK(back.illumination_seed == p.illumination_seed);
  REQUIRE(back.spectra.size() == p.spectra.size());
  for (std::size_t i = 0; i < p.spectra.size(); ++i) {
    CHECK(back.spectra[i].label == p.spectra[i].label);
    CHECK(back.spectra[i].base == p.spectra[i].base);
  }
}
