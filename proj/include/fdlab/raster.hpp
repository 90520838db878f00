#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fdlab/error.hpp"

namespace fdlab {

/// H x W x C grid of float64 values, row-major with channel innermost:
/// index = (row * W + col) * C + channel. Images, depths, flows and masks all
/// live in this container.
class Raster {
 public:
  Raster() = default;
  Raster(int height, int width, int channels, double fill = 0.0);

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  int channels() const noexcept { return channels_; }
  std::size_t size() const noexcept { return data_.size(); }
  std::size_t pixel_count() const noexcept { return static_cast<std::size_t>(height_) * width_; }
  bool empty() const noexcept { return data_.empty(); }

  std::size_t index(int row, int col, int channel = 0) const noexcept {
    return (static_cast<std::size_t>(row) * width_ + col) * channels_ + channel;
  }

  double& operator()(int row, int col, int channel = 0) noexcept { return data_[index(row, col, channel)]; }
  double operator()(int row, int col, int channel = 0) const noexcept { return data_[index(row, col, channel)]; }
  double& operator[](std::size_t i) noexcept { return data_[i]; }
  double operator[](std::size_t i) const noexcept { return data_[i]; }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }

  bool same_shape(const Raster& other) const noexcept {
    return height_ == other.height_ && width_ == other.width_ && channels_ == other.channels_;
  }
  bool same_extent(const Raster& other) const noexcept {
    return height_ == other.height_ && width_ == other.width_;
  }
  bool contains(int row, int col) const noexcept {
    return row >= 0 && row < height_ && col >= 0 && col < width_;
  }

  bool all_finite() const noexcept;

  friend bool operator==(const Raster&, const Raster&) = default;

 private:
  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  std::vector<double> data_;
};

Raster raster_new(int height, int width, int channels, double fill);

void require_same_shape(const Raster& a, const Raster& b, const char* context);
void require_same_extent(const Raster& a, const Raster& b, const char* context);
void require_single_channel(const Raster& r, const char* context);

template <class F>
Raster raster_map(const Raster& a, F&& f) {
  Raster out(a.height(), a.width(), a.channels());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i]);
  return out;
}

template <class F>
Raster raster_map2(const Raster& a, const Raster& b, F&& f) {
  require_same_shape(a, b, "raster_map2");
  Raster out(a.height(), a.width(), a.channels());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i], b[i]);
  return out;
}

/// Channel-mean of a multi-channel raster; identity copy for 1-channel input.
Raster channel_mean(const Raster& r);

/// Sum(mask * values) / Sum(mask). Masked-out entries are never read, so the
/// result does not depend on them at all.
double reduce_masked_mean(const Raster& values, const Raster& mask);

Raster ones_like_extent(const Raster& r);

/// Binary {0,1} check used by every mask consumer.
bool is_binary_mask(const Raster& mask);

/// 1-channel depth in metres; every value finite and strictly positive.
class DepthMap {
 public:
  explicit DepthMap(Raster values);
  static DepthMap uniform(int height, int width, double depth);

  int height() const noexcept { return values_.height(); }
  int width() const noexcept { return values_.width(); }
  double operator()(int row, int col) const noexcept { return values_(row, col); }
  const Raster& raster() const noexcept { return values_; }

 private:
  Raster values_;
};

/// Signed horizontal displacement (px) from target to source view. The
/// vertical component of a rectified pair is zero and not stored.
class FlowField {
 public:
  explicit FlowField(Raster values);

  int height() const noexcept { return values_.height(); }
  int width() const noexcept { return values_.width(); }
  double operator()(int row, int col) const noexcept { return values_(row, col); }
  const Raster& raster() const noexcept { return values_; }

 private:
  Raster values_;
};

}  // namespace fdlab
