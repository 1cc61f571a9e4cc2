#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "vic/rng.hpp"

namespace vic {

/// A head-center coordinate in pixel units, optionally tagged with a
/// persistent identity.
struct HeadPoint {
  double row = 0.0;
  double col = 0.0;
  std::optional<std::int64_t> identity;
};

/// Ordered head points of a single frame.
struct PointSet {
  int frame_index = 0;
  int frame_height = 0;
  int frame_width = 0;
  std::vector<HeadPoint> points;

  std::size_t size() const { return points.size(); }

  bool in_bounds(const HeadPoint& p) const {
    return std::isfinite(p.row) && std::isfinite(p.col) && p.row >= 0.0 &&
           p.col >= 0.0 && p.row <= frame_height - 1.0 &&
           p.col <= frame_width - 1.0;
  }

  // Throws if a point is out of bounds or a present identity repeats.
  void validate() const {
    if (frame_height <= 0 || frame_width <= 0)
      throw std::invalid_argument("PointSet: non-positive frame size");
    std::set<std::int64_t> seen;
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (!in_bounds(points[i]))
        throw std::invalid_argument("PointSet: point " + std::to_string(i) +
                                    " out of bounds");
      if (points[i].identity) {
        if (*points[i].identity < 0)
          throw std::invalid_argument("PointSet: point " + std::to_string(i) +
                                      " has negative identity");
        if (!seen.insert(*points[i].identity).second)
          throw std::invalid_argument("PointSet: duplicate identity " +
                                      std::to_string(*points[i].identity));
      }
    }
  }
};

/// Per-pixel person mass on the frame grid.
struct DensityMap {
  Eigen::MatrixXd values;  // frame_height x frame_width
  double kernel_sigma = 4.0;
  int window = 15;
  int frame_index = 0;

  double total_mass() const { return values.sum(); }
};

/// Renders each point as a truncated Gaussian blob, renormalized so every
/// point deposits total mass 1 inside its (frame-clipped) window. The map sum
/// therefore equals the point count.
inline DensityMap render_density(const PointSet& points, double sigma = 4.0,
                                 int window = 15) {
  if (!(sigma > 0.0)) throw std::invalid_argument("render_density: sigma must be positive");
  if (window < 3 || window % 2 == 0)
    throw std::invalid_argument("render_density: window must be odd and >= 3");
  points.validate();

  const int height = points.frame_height;
  const int width = points.frame_width;
  DensityMap map;
  map.values = Eigen::MatrixXd::Zero(height, width);
  map.kernel_sigma = sigma;
  map.window = window;
  map.frame_index = points.frame_index;

  const int half = window / 2;
  const double inv_two_sigma_sq = 1.0 / (2.0 * sigma * sigma);
  for (std::size_t idx = 0; idx < points.points.size(); ++idx) {
    const HeadPoint& p = points.points[idx];
    const int r0 = static_cast<int>(std::lround(p.row));
    const int c0 = static_cast<int>(std::lround(p.col));
    const int r_lo = std::max(0, r0 - half);
    const int r_hi = std::min(height - 1, r0 + half);
    const int c_lo = std::max(0, c0 - half);
    const int c_hi = std::min(width - 1, c0 + half);

    double weight_sum = 0.0;
    for (int r = r_lo; r <= r_hi; ++r) {
      for (int c = c_lo; c <= c_hi; ++c) {
        const double dr = r - p.row;
        const double dc = c - p.col;
        weight_sum += std::exp(-(dr * dr + dc * dc) * inv_two_sigma_sq);
      }
    }
    double deposited = 0.0;
    for (int r = r_lo; r <= r_hi; ++r) {
      for (int c = c_lo; c <= c_hi; ++c) {
        const double dr = r - p.row;
        const double dc = c - p.col;
        const double v = std::exp(-(dr * dr + dc * dc) * inv_two_sigma_sq) / weight_sum;
        map.values(r, c) += v;
        deposited += v;
      }
    }
    // Fold rounding residue into the center cell so each blob carries mass 1.
    map.values(r0, c0) += 1.0 - deposited;
  }
  return map;
}

struct PeakOptions {
  double min_peak = -1.0;  // negative selects the default 0.1 * max(map)
  int nms_radius = 4;
};

/// Strict 8-neighborhood local maxima above the threshold, with greedy
/// non-maximum suppression inside nms_radius. Proposals carry no identities.
inline PointSet extract_head_proposals(const DensityMap& map,
                                       const PeakOptions& opts = {}) {
  if (opts.nms_radius < 1)
    throw std::invalid_argument("extract_head_proposals: nms_radius must be >= 1");
  const int height = static_cast<int>(map.values.rows());
  const int width = static_cast<int>(map.values.cols());

  PointSet out;
  out.frame_index = map.frame_index;
  out.frame_height = height;
  out.frame_width = width;
  if (height == 0 || width == 0) return out;

  const double max_value = map.values.maxCoeff();
  const double threshold =
      opts.min_peak < 0.0 ? 0.1 * max_value : opts.min_peak;
  if (max_value <= 0.0) return out;

  struct Peak {
    double value;
    int row, col;
  };
  std::vector<Peak> peaks;
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      const double v = map.values(r, c);
      if (!(v > threshold)) continue;
      bool is_max = true;
      for (int dr = -1; dr <= 1 && is_max; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          if (dr == 0 && dc == 0) continue;
          const int rr = r + dr;
          const int cc = c + dc;
          if (rr < 0 || rr >= height || cc < 0 || cc >= width) continue;
          if (map.values(rr, cc) >= v) {
            is_max = false;
            break;
          }
        }
      }
      if (is_max) peaks.push_back({v, r, c});
    }
  }

  std::sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) {
    if (a.value != b.value) return a.value > b.value;
    if (a.row != b.row) return a.row < b.row;
    return a.col < b.col;
  });

  const double radius_sq =
      static_cast<double>(opts.nms_radius) * opts.nms_radius;
  std::vector<Peak> kept;
  for (const Peak& p : peaks) {
    bool suppressed = false;
    for (const Peak& k : kept) {
      const double dr = p.row - k.row;
      const double dc = p.col - k.col;
      if (dr * dr + dc * dc <= radius_sq) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) kept.push_back(p);
  }
  std::sort(kept.begin(), kept.end(), [](const Peak& a, const Peak& b) {
    if (a.row != b.row) return a.row < b.row;
    return a.col < b.col;
  });
  for (const Peak& p : kept)
    out.points.push_back({static_cast<double>(p.row), static_cast<double>(p.col),
                          std::nullopt});
  return out;
}

/// Perturbs every coordinate with independent Gaussian noise of standard
/// deviation noise_level, clamping the result to the frame. Identities and
/// ordering are preserved; noise_level 0 returns the input unchanged.
inline PointSet augment_proposals(const PointSet& points, double noise_level,
                                  std::uint64_t rng_seed) {
  if (!(noise_level >= 0.0))
    throw std::invalid_argument("augment_proposals: noise level must be >= 0");
  points.validate();
  if (noise_level == 0.0) return points;

  PointSet out = points;
  Rng rng(rng_seed);
  const double max_row = points.frame_height - 1.0;
  const double max_col = points.frame_width - 1.0;
  for (HeadPoint& p : out.points) {
    p.row = std::clamp(p.row + noise_level * rng.normal(), 0.0, max_row);
    p.col = std::clamp(p.col + noise_level * rng.normal(), 0.0, max_col);
  }
  return out;
}

}  // namespace vic
