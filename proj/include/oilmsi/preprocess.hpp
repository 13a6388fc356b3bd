#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "oilmsi/cube.hpp"

namespace oilmsi {

class Rng;

/// Rows are pixels, columns are bands (or reduced dimensions after FDA).
using PixelBlock = Eigen::MatrixXd;

/// Square window, top-left anchored.
struct Roi {
  int x = 0;
  int y = 0;
  int side = 30;

  bool operator==(const Roi&) const = default;
};

/// Image-centred ROI of the given side.
Roi center_roi(int width, int height, int side = 30);

/// raw - dark per pixel, clamped below at zero.
SpectralCube subtract_dark(const SpectralCube& raw, const SpectralCube& dark);

enum class SmoothKind { MovingAverage, Median };

/// Window filter with edge replication. For an even window w the window
/// spans w/2 pixels above/left of the target and w/2 - 1 below/right
/// (15 and 14 for the 30-pixel window); odd windows are centred.
SpectralCube smooth(const SpectralCube& cube, int window, SmoothKind kind = SmoothKind::MovingAverage);

/// side*side rows of 9-band spectra, in row-major ROI order.
PixelBlock extract_roi(const SpectralCube& cube, const Roi& roi);

/// Scales counts of the given bit depth onto 0..255.
PixelBlock rescale_to_8bit(const PixelBlock& block, int bit_depth);

/// Rows (ry, rx) of an ROI block with ry % stride == offset and
/// rx % stride == offset.
PixelBlock stride_subsample(const PixelBlock& roi_block, int side, int stride, int offset = 0);

/// count distinct rows chosen uniformly at random (all rows if count >= rows).
PixelBlock random_subsample(const PixelBlock& block, std::size_t count, Rng& rng);

struct DataMatrix {
  Eigen::MatrixXd values;
  std::vector<ClassLabel> labels;  // one per row

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }

  /// Distinct labels in first-appearance order.
  std::vector<ClassLabel> classes() const;
  /// Rows carrying the given label, in original order.
  PixelBlock rows_for(const ClassLabel& label) const;
};

/// Stacks labelled blocks vertically in the given order.
DataMatrix build_data_matrix(const std::vector<std::pair<PixelBlock, ClassLabel>>& blocks);

struct SpectralSignature {
  Eigen::VectorXd mean;
  Eigen::VectorXd wavelengths;
};

SpectralSignature mean_signature(const PixelBlock& block,
                                 const std::vector<BandSpec>& bands = default_band_specs());

/// CSV with header band_1..band_n,label_kind,label_value.
std::string format_data_matrix_csv(const DataMatrix& data);
DataMatrix parse_data_matrix_csv(const std::string& csv);

}  // namespace oilmsi
