#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "livo/geometry.hpp"

namespace livo {

/// Row-major interleaved image with float intensities in [0, 255]. A frame
/// with zero width/height carries only its stamp.
struct ImageFrame {
  Timestamp stamp;
  int width{0};
  int height{0};
  int channels{1};
  std::vector<float> pixels;

  ImageFrame() = default;
  ImageFrame(Timestamp t, int w, int h, int c, float fill = 0.0f)
      : stamp(t), width(w), height(h), channels(c),
        pixels(static_cast<std::size_t>(w) * h * c, fill) {}

  bool empty() const { return width == 0 || height == 0; }
  float& at(int x, int y, int c = 0) {
    return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  float at(int x, int y, int c = 0) const {
    return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
};

/// True when (u, v) lies at least `margin` pixels inside the image.
bool in_bounds(const ImageFrame& img, const Vec2& uv, double margin = 0.0);

/// Bilinear sample of channel c; the caller guarantees 0 <= u <= w-1 and
/// 0 <= v <= h-1.
double sample_bilinear(const ImageFrame& img, double u, double v, int c = 0);

/// Per-channel bilinear sample, unused channels zero.
Vec3 sample_color(const ImageFrame& img, const Vec2& uv);

ImageFrame to_gray(const ImageFrame& img);

struct PinholeIntrinsics {
  double fx{1.0};
  double fy{1.0};
  double cx{0.0};
  double cy{0.0};
};

/// Radial-tangential coefficients (k1, k2, p1, p2[, k3]).
struct Distortion {
  double k1{0.0};
  double k2{0.0};
  double p1{0.0};
  double p2{0.0};
  double k3{0.0};

  /// Accepts 4 or 5 coefficients; throws DomainError otherwise.
  static Distortion from_coefficients(std::span<const double> coeffs);
  bool is_zero() const { return k1 == 0.0 && k2 == 0.0 && p1 == 0.0 && p2 == 0.0 && k3 == 0.0; }
};

/// Maps an undistorted normalized image coordinate to its distorted location.
Vec2 distort_normalized(const Vec2& xy, const Distortion& d);
/// Fixed-point inverse of distort_normalized.
Vec2 undistort_normalized(const Vec2& xy, const Distortion& d, int iterations = 20);

/// Resamples a raw image into the ideal pinhole image: for every output pixel
/// the distorted source location is computed and bilinearly sampled. Pixels
/// whose source falls outside the raw image are zero.
ImageFrame undistort_image(const ImageFrame& raw, const PinholeIntrinsics& k, const Distortion& d);

/// Binary PGM (P5, 1 channel) or PPM (P6, 3 channels), 8-bit.
ImageFrame read_pnm(const std::filesystem::path& path);
void write_pnm(const std::filesystem::path& path, const ImageFrame& img);

}  // namespace livo
