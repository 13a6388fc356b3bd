#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>
#include <json.hpp>

#include <fstream>

#include "oilmsi/cube.hpp"
#include "oilmsi/errors.hpp"
#include "oilmsi/text.hpp"
#include "test_support.hpp"

using namespace oilmsi;
namespace fs = std::filesystem;

TEST_CASE("band table lists nine LEDs in wavelength order") {
  const auto& specs = default_band_specs();
  REQUIRE(specs.size() == kBandCount);
  CHECK(specs.front().dominant_wavelength == 405.0);
  CHECK(specs.back().dominant_wavelength == 950.0);
  for (std::size_t i = 0; i < specs.size(); ++i) {
    CHECK(specs[i].index == static_cast<int>(i) + 1);
    CHECK(specs[i].band_low < specs[i].dominant_wavelength);
    CHECK(specs[i].dominant_wavelength < specs[i].band_high);
    if (i > 0) CHECK(specs[i - 1].dominant_wavelength < specs[i].dominant_wavelength);
  }
}

TEST_CASE("labels validate their ranges") {
  CHECK_NOTHROW(validate(ClassLabel::adulteration(0.4)));
  CHECK_NOTHROW(validate(ClassLabel::heat(5)));
  CHECK_THROWS_AS(validate(ClassLabel::adulteration(1.5)), ValidationError);
  CHECK_THROWS_AS(validate(ClassLabel::heat(6)), ValidationError);
  ClassLabel fractional_heat{LabelKind::HeatCycles, 1.5};
  CHECK_THROWS_AS(validate(fractional_heat), ValidationError);
  CHECK(label_kind_from_string(to_string(LabelKind::HeatCycles)) == LabelKind::HeatCycles);
  CHECK_THROWS_AS(label_kind_from_string("colour"), ValidationError);
}

TEST_CASE("constant 30x30 cube survives a save/load round trip") {
  testing::TempDir dir("cube_const");
  SpectralCube cube = make_cube(30, 30, 10, 100.0);
  cube.sample_id = "constant";
  save_cube(cube, dir.path());
  const SpectralCube back = load_cube(dir.path());
  REQUIRE(back.bands.size() == 9);
  for (const BandImage& band : back.bands) {
    CHECK(band.width == 30);
    CHECK(band.height == 30);
    for (double v : band.values) CHECK(v == 100.0);
  }
}

TEST_CASE("save writes a manifest and nine band files") {
  testing::TempDir dir("cube_layout");
  save_cube(make_cube(4, 3), dir.path());
  CHECK(fs::exists(dir.path() / "manifest.json"));
  for (int b = 1; b <= 9; ++b) CHECK(fs::exists(dir.path() / ("band_" + std::to_string(b) + ".pgm")));
}

TEST_CASE("random cubes round-trip bit-identically") {
  Rng rng(11);
  testing::TempDir dir("cube_random");
  for (int trial = 0; trial < 25; ++trial) {
    const int depth = trial % 2 == 0 ? 10 : 16;
    SpectralCube cube = testing::random_cube(rng, 1 + static_cast<int>(rng.below(20)),
                                             1 + static_cast<int>(rng.below(20)), depth);
    cube.sample_id = "trial_" + std::to_string(trial);
    if (trial % 3 == 0) cube.label = ClassLabel::adulteration(0.05 * (trial % 9));
    if (trial % 3 == 1) cube.label = ClassLabel::heat(trial % 6);
    save_cube(cube, dir.path());
    CHECK(load_cube(dir.path()) == cube);
  }
}

TEST_CASE("saving over an existing cube is deterministic") {
  testing::TempDir dir("cube_overwrite");
  Rng rng(3);
  const SpectralCube first = testing::random_cube(rng, 8, 8);
  const SpectralCube second = testing::random_cube(rng, 8, 8);
  save_cube(first, dir.path());
  save_cube(second, dir.path());
  const std::string manifest_a = text::read_file(dir.path() / "manifest.json");
  const std::string band_a = text::read_file(dir.path() / "band_5.pgm");
  save_cube(second, dir.path());
  CHECK(text::read_file(dir.path() / "manifest.json") == manifest_a);
  CHECK(text::read_file(dir.path() / "band_5.pgm") == band_a);
  CHECK(load_cube(dir.path()) == second);
}

TEST_CASE("manifest with eight bands is rejected") {
  testing::TempDir dir("cube_eight");
  save_cube(make_cube(5, 5, 10, 1.0), dir.path());
  nlohmann::json manifest = nlohmann::json::parse(text::read_file(dir.path() / "manifest.json"));
  manifest["bands"].erase(manifest["bands"].size() - 1);
  std::ofstream(dir.path() / "manifest.json") << manifest.dump(2);
  try {
    (void)load_cube(dir.path());
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("band count != 9") != std::string::npos);
  }
}

TEST_CASE("missing files are I/O errors, junk manifests are validation errors") {
  testing::TempDir dir("cube_missing");
  CHECK_THROWS_AS(load_cube(dir.path() / "nothing"), IoError);
  save_cube(make_cube(5, 5), dir.path());
  fs::remove(dir.path() / "band_3.pgm");
  CHECK_THROWS_AS(load_cube(dir.path()), IoError);
  std::ofstream(dir.path() / "manifest.json") << "{ not json";
  CHECK_THROWS_AS(load_cube(dir.path()), ValidationError);
}

TEST_CASE("validation catches structural and range faults") {
  SpectralCube cube = make_cube(6, 6);
  CHECK_NOTHROW(validate(cube, true));

  SpectralCube short_cube = cube;
  short_cube.bands.pop_back();
  CHECK_THROWS_AS(validate(short_cube), ValidationError);

  SpectralCube mismatched = cube;
  mismatched.bands[4] = BandImage(7, 6);
  CHECK_THROWS_AS(validate(mismatched), ValidationError);

  SpectralCube saturated = cube;
  saturated.bands[0].at(1, 1) = 1024.0;
  CHECK_THROWS_AS(validate(saturated), ValidationError);

  SpectralCube fractional = cube;
  fractional.bands[2].at(0, 0) = 1.5;
  CHECK_NOTHROW(validate(fractional));
  CHECK_THROWS_AS(validate(fractional, true), ValidationError);

  testing::TempDir dir("cube_fractional");
  CHECK_THROWS_AS(save_cube(fractional, dir.path()), ValidationError);
}
