#include "livo/optical_flow.hpp"

#include <cmath>

#include "livo/error.hpp"

namespace livo {

ImagePyramid::ImagePyramid(const ImageFrame& gray, int levels) {
  if (gray.channels != 1) throw DomainError("ImagePyramid expects a single-channel image");
  levels_.push_back(gray);
  for (int l = 1; l < levels; ++l) {
    const ImageFrame& src = levels_.back();
    const int w = src.width / 2;
    const int h = src.height / 2;
    if (w < 8 || h < 8) break;
    ImageFrame dst(src.stamp, w, h, 1);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        dst.at(x, y) = 0.25f * (src.at(2 * x, 2 * y) + src.at(2 * x + 1, 2 * y) + src.at(2 * x, 2 * y + 1) +
                                src.at(2 * x + 1, 2 * y + 1));
      }
    }
    levels_.push_back(std::move(dst));
  }
}

namespace {

// Windows reaching past the border read clamped pixels.
// Coordinates at level l of a full-resolution position under 2x box
// averaging: x_l = (x + 0.5) / 2^l - 0.5.
Vec2 to_level(const Vec2& p, int l) {
  const double s = std::ldexp(1.0, -l);
  return (p.array() + 0.5).matrix() * s - Vec2::Constant(0.5);
}

bool track_one(const ImagePyramid& prev, const ImagePyramid& cur, const Vec2& point, const Vec2& guess,
               const LkParams& prm, Vec2& result) {
  const int half = prm.window / 2;
  const int n = prm.window * prm.window;
  std::vector<double> tmpl(static_cast<std::size_t>(n));
  std::vector<double> gx(static_cast<std::size_t>(n));
  std::vector<double> gy(static_cast<std::size_t>(n));

  const int top = std::min(prev.levels(), cur.levels()) - 1;
  // displacement carried across levels, expressed at the current level
  Vec2 flow = to_level(guess, top) - to_level(point, top);

  for (int l = top; l >= 0; --l) {
    const ImageFrame& a = prev.level(l);
    const ImageFrame& b = cur.level(l);
    const Vec2 p = to_level(point, l);
    if (!in_bounds(a, p)) return false;

    Eigen::Matrix2d g = Eigen::Matrix2d::Zero();
    int k = 0;
    for (int dy = -half; dy <= half; ++dy) {
      for (int dx = -half; dx <= half; ++dx, ++k) {
        const double u = p.x() + dx;
        const double v = p.y() + dy;
        tmpl[k] = sample_bilinear(a, u, v);
        gx[k] = 0.5 * (sample_bilinear(a, u + 1.0, v) - sample_bilinear(a, u - 1.0, v));
        gy[k] = 0.5 * (sample_bilinear(a, u, v + 1.0) - sample_bilinear(a, u, v - 1.0));
        g(0, 0) += gx[k] * gx[k];
        g(0, 1) += gx[k] * gy[k];
        g(1, 1) += gy[k] * gy[k];
      }
    }
    g(1, 0) = g(0, 1);
    const double tr = g.trace();
    const double det = g.determinant();
    const double min_eig = 0.5 * (tr - std::sqrt(std::max(0.0, tr * tr - 4.0 * det)));
    if (min_eig / n < prm.min_eigen) return false;
    const Eigen::Matrix2d g_inv = g.inverse();

    for (int it = 0; it < prm.max_iterations; ++it) {
      const Vec2 q = p + flow;
      if (!in_bounds(b, q)) return false;
      Vec2 rhs = Vec2::Zero();
      k = 0;
      for (int dy = -half; dy <= half; ++dy) {
        for (int dx = -half; dx <= half; ++dx, ++k) {
          const double diff = tmpl[k] - sample_bilinear(b, q.x() + dx, q.y() + dy);
          rhs.x() += diff * gx[k];
          rhs.y() += diff * gy[k];
        }
      }
      const Vec2 delta = g_inv * rhs;
      flow += delta;
      if (delta.norm() < prm.epsilon) break;
    }
    if (l > 0) flow *= 2.0;
  }
  result = point + flow;
  return result.allFinite();
}

}  // namespace

std::vector<FlowResult> lucas_kanade(const ImagePyramid& prev, const ImagePyramid& cur, std::span<const Vec2> points,
                                     std::span<const Vec2> guesses, const LkParams& params) {
  std::vector<FlowResult> out(points.size());
  const ImageFrame& full = cur.level(0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Vec2 guess = guesses.empty() ? points[i] : guesses[i];
    Vec2 r;
    if (track_one(prev, cur, points[i], guess, params, r) && in_bounds(full, r, params.border)) {
      out[i] = {r, true};
    }
  }
  return out;
}

std::vector<FlowResult> track_with_check(const ImagePyramid& prev, const ImagePyramid& cur,
                                         std::span<const Vec2> points, const LkParams& params,
                                         std::span<const Vec2> guesses) {
  std::vector<FlowResult> fwd = lucas_kanade(prev, cur, points, guesses, params);
  std::vector<Vec2> back_from;
  std::vector<Vec2> back_guess;
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < fwd.size(); ++i) {
    if (fwd[i].ok) {
      back_from.push_back(fwd[i].position);
      back_guess.push_back(guesses.empty() ? fwd[i].position : fwd[i].position - (guesses[i] - points[i]));
      idx.push_back(i);
    }
  }
  const std::vector<FlowResult> bwd =
      lucas_kanade(cur, prev, back_from, back_guess, params);
  for (std::size_t j = 0; j < idx.size(); ++j) {
    FlowResult& f = fwd[idx[j]];
    if (!bwd[j].ok || (bwd[j].position - points[idx[j]]).norm() > params.fb_threshold) f.ok = false;
  }
  return fwd;
}

}  // namespace livo
