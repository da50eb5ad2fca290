#pragma once

#include <span>
#include <vector>

#include "livo/geometry.hpp"
#include "livo/image.hpp"

namespace livo {

struct LkParams {
  int levels{3};          // pyramid levels including full resolution
  int window{21};         // odd window side, pixels
  int max_iterations{30};
  double epsilon{0.01};   // pixels
  double min_eigen{1e-2}; // smallest eigenvalue of the mean gradient matrix
  double fb_threshold{1.5};
  double border{3.0};
};

/// Gaussian-free 2x box pyramid of a single-channel image.
class ImagePyramid {
 public:
  ImagePyramid(const ImageFrame& gray, int levels);
  int levels() const { return static_cast<int>(levels_.size()); }
  const ImageFrame& level(int i) const { return levels_[static_cast<std::size_t>(i)]; }

 private:
  std::vector<ImageFrame> levels_;
};

struct FlowResult {
  Vec2 position{Vec2::Zero()};
  bool ok{false};
};

/// Pyramidal Lucas-Kanade from `prev` to `cur`, starting each point at its
/// guess (or its own position when guesses are empty).
std::vector<FlowResult> lucas_kanade(const ImagePyramid& prev, const ImagePyramid& cur, std::span<const Vec2> points,
                                     std::span<const Vec2> guesses, const LkParams& params);

/// Forward track plus reverse-track consistency check. With guesses, the
/// reverse track starts from the result shifted back by the guessed motion.
std::vector<FlowResult> track_with_check(const ImagePyramid& prev, const ImagePyramid& cur,
                                         std::span<const Vec2> points, const LkParams& params,
                                         std::span<const Vec2> guesses = {});

}  // namespace livo
