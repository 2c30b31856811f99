#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "specmix/errors.hpp"

namespace specmix {

// One hyperspectral image: rows x cols pixels with `bands` reflectance values
// each, stored row-major with the band index varying fastest.
struct ImageTensor {
  std::string id;
  int rows = 0;
  int cols = 0;
  int bands = 0;
  std::vector<double> values;

  std::int64_t n_pixels() const {
    return static_cast<std::int64_t>(rows) * cols;
  }

  double at(int r, int c, int b) const {
    return values[(static_cast<std::size_t>(r) * cols + c) * bands + b];
  }

  void validate() const {
    require(rows > 0 && cols > 0 && bands > 0,
            "image '" + id + "': dimensions must be positive");
    if (values.size() != static_cast<std::size_t>(n_pixels()) * bands)
      throw FileDimensionError("image '" + id + "': payload has " +
                               std::to_string(values.size()) +
                               " values, header implies " +
                               std::to_string(n_pixels() * bands));
    for (double v : values)
      if (!std::isfinite(v))
        throw NonFiniteValueError("image '" + id + "': non-finite value");
  }
};

struct ImageGeometry {
  std::string id;
  int rows = 0;
  int cols = 0;
  std::int64_t offset = 0;  // first row of this image in the pixel table
};

// All images stacked into a single N x p matrix, one pixel per row. Images
// are scanned row-major; `geometry` maps table rows back to source images.
struct PixelTable {
  Eigen::MatrixXd data;
  std::vector<ImageGeometry> geometry;

  std::int64_t n() const { return data.rows(); }
  int p() const { return static_cast<int>(data.cols()); }

  std::int64_t global_index(std::size_t image, int r, int c) const {
    const ImageGeometry& g = geometry[image];
    return g.offset + static_cast<std::int64_t>(r) * g.cols + c;
  }

  const ImageGeometry* find(const std::string& id) const {
    for (const auto& g : geometry)
      if (g.id == id) return &g;
    return nullptr;
  }
};

inline PixelTable flatten_images(const std::vector<ImageTensor>& images) {
  require(!images.empty(), "flatten: empty image list");
  const int p = images.front().bands;
  std::int64_t n = 0;
  for (const auto& img : images) {
    require(img.bands == p, "flatten: image '" + img.id + "' has " +
                                std::to_string(img.bands) + " bands, expected " +
                                std::to_string(p));
    n += img.n_pixels();
  }
  PixelTable table;
  table.data.resize(n, p);
  table.geometry.reserve(images.size());
  std::int64_t offset = 0;
  for (const auto& img : images) {
    table.geometry.push_back({img.id, img.rows, img.cols, offset});
    for (std::int64_t px = 0; px < img.n_pixels(); ++px)
      for (int b = 0; b < p; ++b)
        table.data(offset + px, b) = img.values[px * p + b];
    offset += img.n_pixels();
  }
  return table;
}

// Rebuild one source image from the table rows it occupies. Inverse of
// flatten_images, bit-exact.
inline ImageTensor extract_image(const PixelTable& table, std::size_t image) {
  const ImageGeometry& g = table.geometry.at(image);
  ImageTensor img;
  img.id = g.id;
  img.rows = g.rows;
  img.cols = g.cols;
  img.bands = table.p();
  img.values.resize(static_cast<std::size_t>(g.rows) * g.cols * img.bands);
  for (std::int64_t px = 0; px < img.n_pixels(); ++px)
    for (int b = 0; b < img.bands; ++b)
      img.values[px * img.bands + b] = table.data(g.offset + px, b);
  return img;
}

// Per-pixel mean over the spectrum, the usual quick-look rendering.
inline Eigen::MatrixXd greyscale(const ImageTensor& img) {
  img.validate();
  Eigen::MatrixXd out(img.rows, img.cols);
  for (int r = 0; r < img.rows; ++r) {
    for (int c = 0; c < img.cols; ++c) {
      double s = 0.0;
      for (int b = 0; b < img.bands; ++b) s += img.at(r, c, b);
      out(r, c) = s / img.bands;
    }
  }
  return out;
}

}  // namespace specmix
