#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace brushrecon {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised by image IO with the offending path embedded in the message.
class ImageIoError : public Error {
 public:
  ImageIoError(const std::filesystem::path& path, const std::string& reason);
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

struct Rgb {
  double r = 0.0;
  double g = 0.0;
  double b = 0.0;

  double& operator[](int c) { return c == 0 ? r : (c == 1 ? g : b); }
  double operator[](int c) const { return c == 0 ? r : (c == 1 ? g : b); }
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

inline Rgb operator+(Rgb a, Rgb b) { return {a.r + b.r, a.g + b.g, a.b + b.b}; }
inline Rgb operator-(Rgb a, Rgb b) { return {a.r - b.r, a.g - b.g, a.b - b.b}; }
inline Rgb operator*(double s, Rgb a) { return {s * a.r, s * a.g, s * a.b}; }

/// Half-open pixel rectangle [x0, x1) x [y0, y1).
struct Rect {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;

  int width() const { return x1 - x0; }
  int height() const { return y1 - y0; }
  bool empty() const { return x1 <= x0 || y1 <= y0; }
  bool contains(int x, int y) const { return x >= x0 && x < x1 && y >= y0 && y < y1; }
  friend bool operator==(const Rect&, const Rect&) = default;
};

Rect intersect(const Rect& a, const Rect& b);

/// H x W x 3 image with channels in [0,1], row-major, interleaved RGB.
class Canvas {
 public:
  Canvas() = default;
  Canvas(int width, int height, Rgb fill = {});

  int width() const { return width_; }
  int height() const { return height_; }
  Rect bounds() const { return {0, 0, width_, height_}; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }

  double& at(int x, int y, int c) { return data_[index(x, y) + c]; }
  double at(int x, int y, int c) const { return data_[index(x, y) + c]; }
  Rgb pixel(int x, int y) const {
    const std::size_t i = index(x, y);
    return {data_[i], data_[i + 1], data_[i + 2]};
  }
  void set_pixel(int x, int y, Rgb v) {
    const std::size_t i = index(x, y);
    data_[i] = v.r;
    data_[i + 1] = v.g;
    data_[i + 2] = v.b;
  }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  friend bool operator==(const Canvas&, const Canvas&) = default;

 private:
  std::size_t index(int x, int y) const {
    return (static_cast<std::size_t>(y) * width_ + x) * 3;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<double> data_;
};

/// Single-channel real field with the dimensions of its source canvas.
class ScalarField {
 public:
  ScalarField() = default;
  ScalarField(int width, int height, double fill = 0.0);

  int width() const { return width_; }
  int height() const { return height_; }
  double& at(int x, int y) { return values_[static_cast<std::size_t>(y) * width_ + x]; }
  double at(int x, int y) const { return values_[static_cast<std::size_t>(y) * width_ + x]; }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> values_;
};

/// Per-pixel region ids, contiguous in [0, region_count).
class LabelMap {
 public:
  LabelMap() = default;
  /// Raw ids are remapped, order preserving, onto 0..k-1.
  LabelMap(int width, int height, std::vector<int> raw_ids);

  int width() const { return width_; }
  int height() const { return height_; }
  int region_count() const { return region_count_; }
  int at(int x, int y) const { return labels_[static_cast<std::size_t>(y) * width_ + x]; }
  std::span<const int> labels() const { return labels_; }

  LabelMap crop(const Rect& r) const;

 private:
  int width_ = 0;
  int height_ = 0;
  int region_count_ = 0;
  std::vector<int> labels_;
};

struct GradientField {
  int width = 0;
  int height = 0;
  std::vector<double> gx;
  std::vector<double> gy;

  double magnitude(int x, int y) const;
  /// Undirected orientation in [0, pi); zero where the magnitude vanishes.
  double orientation(int x, int y) const;
};

// IO. PPM (P6, maxval 255) for colour, PGM (P5) for label maps.
Canvas load_image(const std::filesystem::path& path);
void save_image(const Canvas& canvas, const std::filesystem::path& path);
LabelMap load_label_map(const std::filesystem::path& path);
void save_label_map(const LabelMap& labels, const std::filesystem::path& path);

/// Round-half-up 8-bit quantization of one channel value.
unsigned char quantize_channel(double v);

double luminance(Rgb c);
ScalarField luminance(const Canvas& canvas);

/// 3x3 Sobel on luminance with edge-clamped borders.
GradientField sobel_gradients(const Canvas& canvas);

/// Per-pixel L1 distance summed over RGB.
ScalarField error_map(const Canvas& render, const Canvas& target);

/// n x n tiling in row-major order; remainders go to the last row/column.
std::vector<Rect> partition_grid(int width, int height, int n);

Canvas crop(const Canvas& canvas, const Rect& r);
void paste(Canvas& canvas, const Canvas& patch, const Rect& r);

double mean_abs_diff(const Canvas& a, const Canvas& b);
double max_abs_diff(const Canvas& a, const Canvas& b);
double psnr(const Canvas& a, const Canvas& b);

void require_same_size(const Canvas& a, const Canvas& b, const char* what);

}  // namespace brushrecon
