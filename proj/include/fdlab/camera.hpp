#pragma once

namespace fdlab {

/// Rectified stereo rig. Target is the left view, source the right view, so
/// target->source flow is negative.
class CameraRig {
 public:
  CameraRig(double focal_x, double baseline);

  double focal_x() const noexcept { return focal_x_; }
  double baseline() const noexcept { return baseline_; }
  /// f_x * b, the constant linking depth and disparity.
  double focal_baseline() const noexcept { return focal_x_ * baseline_; }

  friend bool operator==(const CameraRig&, const CameraRig&) = default;

 private:
  double focal_x_;
  double baseline_;
};

}  // namespace fdlab
