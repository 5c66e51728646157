#pragma once

// Thin-plate-spline warps. A TpsTransform maps output coordinates to input
// coordinates (backward warping); warp_region resamples a bounding-box crop
// of a texture through one transform with bilinear interpolation.

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "texc/uv_ops.hpp"
#include "texc/uv_types.hpp"

namespace texc {

struct Point2 {
  float x = 0.0f;
  float y = 0.0f;
};

class TpsTransform {
public:
  /// Fits the interpolating spline taking src_pts to dst_pts. With zero
  /// regularization the fitted map reproduces each dst point exactly (up to
  /// solver precision). Coordinates are normalized region coordinates.
  static TpsTransform fit(const std::vector<Point2>& src_pts, const std::vector<Point2>& dst_pts,
                          double regularization = 0.0) {
    const int k = static_cast<int>(src_pts.size());
    if (k < 3 || src_pts.size() != dst_pts.size())
      throw std::invalid_argument("tps_fit: need K >= 3 matched points");
    if (regularization < 0.0) throw std::invalid_argument("tps_fit: negative regularization");

    const int n = k + 3;
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n, 2);
    for (int i = 0; i < k; ++i) {
      for (int j = 0; j < k; ++j)
        a(i, j) = kernel(src_pts[static_cast<std::size_t>(i)], src_pts[static_cast<std::size_t>(j)]);
      a(i, i) += regularization;
      a(i, k) = 1.0;
      a(i, k + 1) = src_pts[static_cast<std::size_t>(i)].x;
      a(i, k + 2) = src_pts[static_cast<std::size_t>(i)].y;
      a(k, i) = 1.0;
      a(k + 1, i) = src_pts[static_cast<std::size_t>(i)].x;
      a(k + 2, i) = src_pts[static_cast<std::size_t>(i)].y;
      b(i, 0) = dst_pts[static_cast<std::size_t>(i)].x;
      b(i, 1) = dst_pts[static_cast<std::size_t>(i)].y;
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
    if (!lu.isInvertible())
      throw std::runtime_error("tps_fit: singular system (collinear control points?)");
    Eigen::MatrixXd coef = lu.solve(b);

    TpsTransform t;
    t.src_pts_ = src_pts;
    t.coef_x_.resize(static_cast<std::size_t>(n));
    t.coef_y_.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      t.coef_x_[static_cast<std::size_t>(i)] = coef(i, 0);
      t.coef_y_[static_cast<std::size_t>(i)] = coef(i, 1);
    }
    t.regularization_ = regularization;
    return t;
  }

  Point2 apply(Point2 p) const {
    const std::size_t k = src_pts_.size();
    double x = coef_x_[k] + coef_x_[k + 1] * p.x + coef_x_[k + 2] * p.y;
    double y = coef_y_[k] + coef_y_[k + 1] * p.x + coef_y_[k + 2] * p.y;
    for (std::size_t i = 0; i < k; ++i) {
      double u = kernel(src_pts_[i], p);
      x += coef_x_[i] * u;
      y += coef_y_[i] * u;
    }
    return {static_cast<float>(x), static_cast<float>(y)};
  }

  const std::vector<Point2>& control_points() const { return src_pts_; }
  double regularization() const { return regularization_; }

private:
  static double kernel(Point2 a, Point2 b) {
    double dx = static_cast<double>(a.x) - b.x;
    double dy = static_cast<double>(a.y) - b.y;
    double r2 = dx * dx + dy * dy;
    return r2 > 0.0 ? r2 * std::log(r2) : 0.0;  // U(r) = r^2 log r^2
  }

  std::vector<Point2> src_pts_;
  std::vector<double> coef_x_, coef_y_;
  double regularization_ = 0.0;
};

namespace detail {

inline float bilinear_crop(const TextureMap& t, const BBox& box, float fx, float fy, int c) {
  // fx,fy in crop-local pixel coordinates; zero outside the crop
  int x0 = static_cast<int>(std::floor(fx));
  int y0 = static_cast<int>(std::floor(fy));
  float wx = fx - static_cast<float>(x0);
  float wy = fy - static_cast<float>(y0);
  float acc = 0.0f;
  for (int dy = 0; dy <= 1; ++dy)
    for (int dx = 0; dx <= 1; ++dx) {
      int cx = x0 + dx, cy = y0 + dy;
      if (cx < 0 || cy < 0 || cx >= box.width() || cy >= box.height()) continue;
      float w = (dx ? wx : 1.0f - wx) * (dy ? wy : 1.0f - wy);
      acc += w * t.at(box.y0 + cy, box.x0 + cx, c);
    }
  return acc;
}

}  // namespace detail

/// Backward-warps the bbox crop of `texture` through `tps`; texels outside
/// the bbox stay zero. `texture` is expected to be pre-masked by the region
/// mask. TPS coordinates are normalized to [0,1] over the bbox.
inline TextureMap warp_region(const TextureMap& texture, const Mask& region_mask, const BBox& bbox,
                              const TpsTransform& tps) {
  (void)region_mask;
  TextureMap out(texture.height, texture.width);
  if (bbox.empty()) return out;
  const float sx = static_cast<float>(bbox.width() - 1);
  const float sy = static_cast<float>(bbox.height() - 1);
  for (int y = 0; y < bbox.height(); ++y) {
    for (int x = 0; x < bbox.width(); ++x) {
      Point2 p{sx > 0 ? static_cast<float>(x) / sx : 0.0f,
               sy > 0 ? static_cast<float>(y) / sy : 0.0f};
      Point2 q = tps.apply(p);
      float fx = q.x * sx, fy = q.y * sy;
      for (int c = 0; c < 3; ++c)
        out.at(bbox.y0 + y, bbox.x0 + x, c) = detail::bilinear_crop(texture, bbox, fx, fy, c);
    }
  }
  return out;
}

}  // namespace texc
