#include "oilmsi/preprocess.hpp"

#include <algorithm>
#include <sstream>

#include "oilmsi/errors.hpp"
#include "oilmsi/rng.hpp"
#include "oilmsi/text.hpp"

namespace oilmsi {

Roi center_roi(int width, int height, int side) {
  return {(width - side) / 2, (height - side) / 2, side};
}

SpectralCube subtract_dark(const SpectralCube& raw, const SpectralCube& dark) {
  if (raw.bands.size() != dark.bands.size() || raw.width() != dark.width() ||
      raw.height() != dark.height()) {
    throw ValidationError("dimension mismatch between raw and dark cubes");
  }
  SpectralCube out = raw;
  for (std::size_t b = 0; b < out.bands.size(); ++b) {
    if (raw.bands[b].values.size() != dark.bands[b].values.size()) {
      throw ValidationError("dimension mismatch between raw and dark cubes");
    }
    auto& v = out.bands[b].values;
    const auto& d = dark.bands[b].values;
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::max(0.0, v[i] - d[i]);
  }
  return out;
}

namespace {

BandImage box_filter(const BandImage& in, int window) {
  const int before = window / 2;
  const int after = window - 1 - before;
  const int w = in.width;
  const int h = in.height;
  auto clamp_x = [w](int x) { return std::clamp(x, 0, w - 1); };
  auto clamp_y = [h](int y) { return std::clamp(y, 0, h - 1); };

  // Separable running sums over the edge-replicated image.
  std::vector<double> rows(in.values.size());
  for (int y = 0; y < h; ++y) {
    double acc = 0.0;
    for (int k = -before; k <= after; ++k) acc += in.at(clamp_x(k), y);
    rows[static_cast<std::size_t>(y) * w] = acc;
    for (int x = 1; x < w; ++x) {
      acc += in.at(clamp_x(x + after), y) - in.at(clamp_x(x - 1 - before), y);
      rows[static_cast<std::size_t>(y) * w + x] = acc;
    }
  }
  BandImage out = in;
  const double n = static_cast<double>(window) * window;
  for (int x = 0; x < w; ++x) {
    auto r = [&](int y) { return rows[static_cast<std::size_t>(clamp_y(y)) * w + x]; };
    double acc = 0.0;
    for (int k = -before; k <= after; ++k) acc += r(k);
    out.at(x, 0) = acc / n;
    for (int y = 1; y < h; ++y) {
      acc += r(y + after) - r(y - 1 - before);
      out.at(x, y) = acc / n;
    }
  }
  return out;
}

BandImage median_filter(const BandImage& in, int window) {
  const int before = window / 2;
  const int after = window - 1 - before;
  BandImage out = in;
  std::vector<double> buf;
  buf.reserve(static_cast<std::size_t>(window) * window);
  for (int y = 0; y < in.height; ++y) {
    for (int x = 0; x < in.width; ++x) {
      buf.clear();
      for (int dy = -before; dy <= after; ++dy) {
        for (int dx = -before; dx <= after; ++dx) {
          buf.push_back(in.at(std::clamp(x + dx, 0, in.width - 1), std::clamp(y + dy, 0, in.height - 1)));
        }
      }
      const std::size_t mid = buf.size() / 2;
      std::nth_element(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(mid), buf.end());
      double med = buf[mid];
      if (buf.size() % 2 == 0) {
        med = 0.5 * (med + *std::max_element(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(mid)));
      }
      out.at(x, y) = med;
    }
  }
  return out;
}

}  // namespace

SpectralCube smooth(const SpectralCube& cube, int window, SmoothKind kind) {
  if (window < 1) throw ValidationError("smoothing window must be >= 1");
  if (window > std::min(cube.width(), cube.height())) {
    throw ValidationError("smoothing window larger than image");
  }
  SpectralCube out = cube;
  for (std::size_t b = 0; b < cube.bands.size(); ++b) {
    out.bands[b] = kind == SmoothKind::MovingAverage ? box_filter(cube.bands[b], window)
                                                     : median_filter(cube.bands[b], window);
  }
  return out;
}

PixelBlock extract_roi(const SpectralCube& cube, const Roi& roi) {
  if (roi.side < 1 || roi.x < 0 || roi.y < 0 || roi.x + roi.side > cube.width() ||
      roi.y + roi.side > cube.height()) {
    throw ValidationError("ROI outside image bounds");
  }
  PixelBlock block(static_cast<Eigen::Index>(roi.side) * roi.side, static_cast<Eigen::Index>(cube.bands.size()));
  for (int ry = 0; ry < roi.side; ++ry) {
    for (int rx = 0; rx < roi.side; ++rx) {
      const Eigen::Index row = static_cast<Eigen::Index>(ry) * roi.side + rx;
      for (std::size_t b = 0; b < cube.bands.size(); ++b) {
        block(row, static_cast<Eigen::Index>(b)) = cube.bands[b].at(roi.x + rx, roi.y + ry);
      }
    }
  }
  return block;
}

PixelBlock rescale_to_8bit(const PixelBlock& block, int bit_depth) {
  const double top = static_cast<double>((1u << bit_depth) - 1u);
  return block * (255.0 / top);
}

PixelBlock stride_subsample(const PixelBlock& roi_block, int side, int stride, int offset) {
  if (stride < 1 || offset < 0 || offset >= stride) throw ValidationError("invalid subsampling stride");
  if (roi_block.rows() != static_cast<Eigen::Index>(side) * side) {
    throw ValidationError("block is not a side x side ROI");
  }
  std::vector<Eigen::Index> keep;
  for (int ry = offset; ry < side; ry += stride) {
    for (int rx = offset; rx < side; rx += stride) keep.push_back(static_cast<Eigen::Index>(ry) * side + rx);
  }
  PixelBlock out(static_cast<Eigen::Index>(keep.size()), roi_block.cols());
  for (std::size_t i = 0; i < keep.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = roi_block.row(keep[i]);
  return out;
}

PixelBlock random_subsample(const PixelBlock& block, std::size_t count, Rng& rng) {
  const auto rows = static_cast<std::size_t>(block.rows());
  if (count >= rows) return block;
  // Partial Fisher-Yates; the chosen rows keep their original order.
  std::vector<std::size_t> idx(rows);
  for (std::size_t i = 0; i < rows; ++i) idx[i] = i;
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(rows - i));
    std::swap(idx[i], idx[j]);
  }
  std::sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(count));
  PixelBlock out(static_cast<Eigen::Index>(count), block.cols());
  for (std::size_t i = 0; i < count; ++i) {
    out.row(static_cast<Eigen::Index>(i)) = block.row(static_cast<Eigen::Index>(idx[i]));
  }
  return out;
}

std::vector<ClassLabel> DataMatrix::classes() const {
  std::vector<ClassLabel> out;
  for (const ClassLabel& l : labels) {
    if (std::find(out.begin(), out.end(), l) == out.end()) out.push_back(l);
  }
  return out;
}

PixelBlock DataMatrix::rows_for(const ClassLabel& label) const {
  const auto n = std::count(labels.begin(), labels.end(), label);
  PixelBlock out(n, values.cols());
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    if (labels[static_cast<std::size_t>(i)] == label) out.row(r++) = values.row(i);
  }
  return out;
}

DataMatrix build_data_matrix(const std::vector<std::pair<PixelBlock, ClassLabel>>& blocks) {
  if (blocks.empty()) throw ValidationError("no blocks");
  const Eigen::Index cols = blocks.front().first.cols();
  Eigen::Index rows = 0;
  for (const auto& [block, label] : blocks) {
    if (block.cols() != cols) throw ValidationError("column-count mismatch between blocks");
    rows += block.rows();
  }
  DataMatrix out;
  out.values.resize(rows, cols);
  out.labels.reserve(static_cast<std::size_t>(rows));
  Eigen::Index r = 0;
  for (const auto& [block, label] : blocks) {
    out.values.middleRows(r, block.rows()) = block;
    out.labels.insert(out.labels.end(), static_cast<std::size_t>(block.rows()), label);
    r += block.rows();
  }
  return out;
}

SpectralSignature mean_signature(const PixelBlock& block, const std::vector<BandSpec>& bands) {
  if (block.rows() == 0) throw ValidationError("empty pixel block");
  SpectralSignature sig;
  sig.mean = block.colwise().mean().transpose();
  sig.wavelengths.resize(block.cols());
  for (Eigen::Index b = 0; b < block.cols(); ++b) {
    sig.wavelengths(b) = static_cast<std::size_t>(b) < bands.size()
                             ? bands[static_cast<std::size_t>(b)].dominant_wavelength
                             : 0.0;
  }
  return sig;
}

std::string format_data_matrix_csv(const DataMatrix& data) {
  std::ostringstream out;
  for (Eigen::Index c = 0; c < data.cols(); ++c) out << "band_" << c + 1 << ',';
  out << "label_kind,label_value\n";
  for (Eigen::Index r = 0; r < data.rows(); ++r) {
    for (Eigen::Index c = 0; c < data.cols(); ++c) out << text::format_double(data.values(r, c)) << ',';
    const ClassLabel& l = data.labels[static_cast<std::size_t>(r)];
    out << to_string(l.kind) << ',' << text::format_double(l.value) << '\n';
  }
  return out.str();
}

DataMatrix parse_data_matrix_csv(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("empty data matrix CSV");
  const auto header = text::split(text::trim(line), ',');
  if (header.size() < 3 || header[header.size() - 2] != "label_kind" || header.back() != "label_value") {
    throw ValidationError("data matrix CSV header must end with label_kind,label_value");
  }
  const std::size_t n_bands = header.size() - 2;
  std::vector<double> values;
  DataMatrix out;
  while (std::getline(in, line)) {
    if (text::trim(line).empty()) continue;
    const auto fields = text::split(text::trim(line), ',');
    if (fields.size() != header.size()) throw ValidationError("data matrix CSV row has wrong field count");
    for (std::size_t c = 0; c < n_bands; ++c) values.push_back(text::parse_double(fields[c]));
    out.labels.push_back({label_kind_from_string(fields[n_bands]), text::parse_double(fields[n_bands + 1])});
  }
  out.values = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      values.data(), static_cast<Eigen::Index>(out.labels.size()), static_cast<Eigen::Index>(n_bands));
  return out;
}

}  // namespace oilmsi
