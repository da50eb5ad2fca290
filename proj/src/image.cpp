#include "livo/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include "livo/error.hpp"

namespace livo {

bool in_bounds(const ImageFrame& img, const Vec2& uv, double margin) {
  return uv.x() >= margin && uv.y() >= margin && uv.x() <= img.width - 1 - margin &&
         uv.y() <= img.height - 1 - margin;
}

double sample_bilinear(const ImageFrame& img, double u, double v, int c) {
  const int x0 = std::clamp(static_cast<int>(std::floor(u)), 0, img.width - 1);
  const int y0 = std::clamp(static_cast<int>(std::floor(v)), 0, img.height - 1);
  const int x1 = std::min(x0 + 1, img.width - 1);
  const int y1 = std::min(y0 + 1, img.height - 1);
  const double ax = u - x0;
  const double ay = v - y0;
  const double top = (1.0 - ax) * img.at(x0, y0, c) + ax * img.at(x1, y0, c);
  const double bottom = (1.0 - ax) * img.at(x0, y1, c) + ax * img.at(x1, y1, c);
  return (1.0 - ay) * top + ay * bottom;
}

Vec3 sample_color(const ImageFrame& img, const Vec2& uv) {
  Vec3 out = Vec3::Zero();
  for (int c = 0; c < std::min(img.channels, 3); ++c) out[c] = sample_bilinear(img, uv.x(), uv.y(), c);
  return out;
}

ImageFrame to_gray(const ImageFrame& img) {
  if (img.channels == 1) return img;
  ImageFrame out(img.stamp, img.width, img.height, 1);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      float sum = 0.0f;
      for (int c = 0; c < img.channels; ++c) sum += img.at(x, y, c);
      out.at(x, y) = sum / static_cast<float>(img.channels);
    }
  }
  return out;
}

Distortion Distortion::from_coefficients(std::span<const double> coeffs) {
  if (coeffs.size() != 4 && coeffs.size() != 5) {
    throw DomainError("distortion: expected 4 or 5 coefficients, got " + std::to_string(coeffs.size()));
  }
  Distortion d;
  d.k1 = coeffs[0];
  d.k2 = coeffs[1];
  d.p1 = coeffs[2];
  d.p2 = coeffs[3];
  if (coeffs.size() == 5) d.k3 = coeffs[4];
  return d;
}

Vec2 distort_normalized(const Vec2& xy, const Distortion& d) {
  const double x = xy.x();
  const double y = xy.y();
  const double r2 = x * x + y * y;
  const double radial = 1.0 + r2 * (d.k1 + r2 * (d.k2 + r2 * d.k3));
  const double dx = 2.0 * d.p1 * x * y + d.p2 * (r2 + 2.0 * x * x);
  const double dy = d.p1 * (r2 + 2.0 * y * y) + 2.0 * d.p2 * x * y;
  return {x * radial + dx, y * radial + dy};
}

Vec2 undistort_normalized(const Vec2& xy, const Distortion& d, int iterations) {
  Vec2 guess = xy;
  for (int i = 0; i < iterations; ++i) {
    const Vec2 err = distort_normalized(guess, d) - xy;
    guess -= err;
  }
  return guess;
}

ImageFrame undistort_image(const ImageFrame& raw, const PinholeIntrinsics& k, const Distortion& d) {
  if (d.is_zero() || raw.empty()) return raw;
  ImageFrame out(raw.stamp, raw.width, raw.height, raw.channels);
  for (int y = 0; y < raw.height; ++y) {
    for (int x = 0; x < raw.width; ++x) {
      const Vec2 n((x - k.cx) / k.fx, (y - k.cy) / k.fy);
      const Vec2 dn = distort_normalized(n, d);
      const Vec2 src(k.fx * dn.x() + k.cx, k.fy * dn.y() + k.cy);
      if (!in_bounds(raw, src)) continue;
      for (int c = 0; c < raw.channels; ++c) {
        out.at(x, y, c) = static_cast<float>(sample_bilinear(raw, src.x(), src.y(), c));
      }
    }
  }
  return out;
}

namespace {

void skip_pnm_whitespace(std::istream& in) {
  while (true) {
    const int c = in.peek();
    if (c == '#') {
      std::string line;
      std::getline(in, line);
    } else if (std::isspace(c)) {
      in.get();
    } else {
      return;
    }
  }
}

}  // namespace

ImageFrame read_pnm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open image " + path.string());
  std::string magic;
  in >> magic;
  int channels = 0;
  if (magic == "P5") {
    channels = 1;
  } else if (magic == "P6") {
    channels = 3;
  } else {
    throw ParseError(path.string() + ": unsupported image magic '" + magic + "'");
  }
  int w = 0, h = 0, maxval = 0;
  skip_pnm_whitespace(in);
  in >> w;
  skip_pnm_whitespace(in);
  in >> h;
  skip_pnm_whitespace(in);
  in >> maxval;
  in.get();
  if (!in || w <= 0 || h <= 0 || maxval != 255) {
    throw ParseError(path.string() + ": bad image header");
  }
  std::vector<unsigned char> bytes(static_cast<std::size_t>(w) * h * channels);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (in.gcount() != static_cast<std::streamsize>(bytes.size())) {
    throw ParseError(path.string() + ": truncated pixel data");
  }
  ImageFrame img(Timestamp{}, w, h, channels);
  std::transform(bytes.begin(), bytes.end(), img.pixels.begin(),
                 [](unsigned char b) { return static_cast<float>(b); });
  return img;
}

void write_pnm(const std::filesystem::path& path, const ImageFrame& img) {
  if (img.channels != 1 && img.channels != 3) throw DomainError("write_pnm: need 1 or 3 channels");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write image " + path.string());
  out << (img.channels == 1 ? "P5" : "P6") << "\n" << img.width << " " << img.height << "\n255\n";
  std::vector<unsigned char> bytes(img.pixels.size());
  std::transform(img.pixels.begin(), img.pixels.end(), bytes.begin(), [](float v) {
    return static_cast<unsigned char>(std::clamp(std::lround(v), 0L, 255L));
  });
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace livo
