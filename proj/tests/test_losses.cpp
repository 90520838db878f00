#include <cmath>
#include <cstring>

#include "fdlab/losses.hpp"
#include "support.hpp"

using namespace fdlab;
using fdlab::testing::random_mask;
using fdlab::testing::random_raster;
using fdlab::testing::rel_diff;

namespace {

constexpr double kC1 = 1e-4;
constexpr double kC2 = 9e-4;

double ssim_scalar(double mu_a, double mu_b, double var_a, double var_b, double cov) {
  return ((2 * mu_a * mu_b + kC1) * (2 * cov + kC2)) / ((mu_a * mu_a + mu_b * mu_b + kC1) * (var_a + var_b + kC2));
}

// Brute-force SSIM on an explicitly edge-padded copy.
double ssim_oracle(const Raster& a, const Raster& b, int row, int col) {
  double total = 0.0;
  for (int ch = 0; ch < a.channels(); ++ch) {
    double xa[9], xb[9];
    int k = 0;
    for (int dr = -1; dr <= 1; ++dr) {
      for (int dc = -1; dc <= 1; ++dc, ++k) {
        const int rr = std::min(std::max(row + dr, 0), a.height() - 1);
        const int cc = std::min(std::max(col + dc, 0), a.width() - 1);
        xa[k] = a(rr, cc, ch);
        xb[k] = b(rr, cc, ch);
      }
    }
    double ma = 0, mb = 0;
    for (int i = 0; i < 9; ++i) {
      ma += xa[i] / 9;
      mb += xb[i] / 9;
    }
    double va = 0, vb = 0, cv = 0;
    for (int i = 0; i < 9; ++i) {
      va += (xa[i] - ma) * (xa[i] - ma) / 9;
      vb += (xb[i] - mb) * (xb[i] - mb) / 9;
      cv += (xa[i] - ma) * (xb[i] - mb) / 9;
    }
    total += std::clamp(ssim_scalar(ma, mb, va, vb, cv), -1.0, 1.0);
  }
  return total / a.channels();
}

Raster ramp(int h, int w) {
  Raster r(h, w, 3);
  for (int row = 0; row < h; ++row) {
    for (int col = 0; col < w; ++col) {
      for (int ch = 0; ch < 3; ++ch) r(row, col, ch) = static_cast<double>(col) / w;
    }
  }
  return r;
}

}  // namespace

TEST_CASE("ssim of constant patches") {
  const LossConfig cfg;
  const Raster a(4, 4, 3, 0.5);
  const Raster b(4, 4, 3, 0.7);
  const double expected = (2 * 0.5 * 0.7 + kC1) / (0.25 + 0.49 + kC1);
  CHECK(expected == doctest::Approx(0.945953).epsilon(1e-6));
  for (double v : fdlab::testing::values_of(ssim(a, b, cfg))) CHECK(v == doctest::Approx(expected).epsilon(1e-13));

  const Raster zero(3, 3, 1, 0.0);
  const Raster one(3, 3, 1, 1.0);
  for (double v : fdlab::testing::values_of(ssim(zero, one, cfg))) CHECK(v == doctest::Approx(kC1 / (1 + kC1)).epsilon(1e-12));
  CHECK(kC1 / (1 + kC1) == doctest::Approx(9.999e-5).epsilon(1e-4));
}

TEST_CASE("ssim matches a brute-force oracle") {
  Rng rng(1);
  const LossConfig cfg;
  for (int trial = 0; trial < 20; ++trial) {
    const Raster a = random_raster(rng, 5, 6, 3);
    const Raster b = random_raster(rng, 5, 6, 3);
    const Raster s = ssim(a, b, cfg);
    for (int r = 0; r < 5; ++r) {
      for (int c = 0; c < 6; ++c) CHECK(std::fabs(s(r, c) - ssim_oracle(a, b, r, c)) < 1e-12);
    }
  }
}

TEST_CASE("ssim is exactly 1 on identical input and exactly symmetric") {
  Rng rng(2);
  const LossConfig cfg;
  for (int trial = 0; trial < 100; ++trial) {
    const int h = rng.uniform_int(1, 8);
    const int w = rng.uniform_int(1, 8);
    const Raster a = random_raster(rng, h, w, 3);
    const Raster b = random_raster(rng, h, w, 3);
    for (double v : fdlab::testing::values_of(ssim(a, a, cfg))) REQUIRE(v == 1.0);
    CHECK(ssim(a, b, cfg) == ssim(b, a, cfg));
  }
}

TEST_CASE("photometric error examples") {
  LossConfig cfg;
  const Raster a(3, 3, 3, 0.5);
  const Raster b(3, 3, 3, 0.7);
  const double s = (2 * 0.5 * 0.7 + kC1) / (0.25 + 0.49 + kC1);
  const double expected = 0.425 * (1 - s) + 0.15 * 0.2;
  CHECK(expected == doctest::Approx(0.052970).epsilon(1e-5));
  for (double v : fdlab::testing::values_of(photometric_error(a, b, cfg))) CHECK(v == doctest::Approx(expected).epsilon(1e-12));

  cfg.alpha = 0.0;
  for (double v : fdlab::testing::values_of(photometric_error(a, b, cfg))) CHECK(v == doctest::Approx(0.2).epsilon(1e-14));
  CHECK_ERROR_KIND(photometric_error(Raster(2, 2, 3), Raster(2, 2, 1), cfg), ErrorKind::Shape);
}

TEST_CASE("photometric error is zero on identical images and bounded by 1") {
  Rng rng(3);
  const LossConfig cfg;
  for (int trial = 0; trial < 100; ++trial) {
    const int h = rng.uniform_int(1, 8);
    const int w = rng.uniform_int(1, 8);
    const Raster a = random_raster(rng, h, w, 3);
    const Raster b = random_raster(rng, h, w, 3);
    for (double v : fdlab::testing::values_of(photometric_error(a, a, cfg))) REQUIRE(v == 0.0);
    for (double v : fdlab::testing::values_of(photometric_error(a, b, cfg))) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
  // extreme contrast still respects the bound
  Raster black(3, 3, 3, 0.0);
  Raster checker(3, 3, 3, 0.0);
  for (int i = 0; i < 9; ++i) checker[i * 3] = checker[i * 3 + 1] = checker[i * 3 + 2] = (i % 2) ? 1.0 : 0.0;
  for (double v : fdlab::testing::values_of(photometric_error(black, checker, cfg))) CHECK(v <= 1.0);
}

TEST_CASE("photometric backward matches finite differences") {
  Rng rng(4);
  const LossConfig cfg;
  double worst = 0.0;
  int checked = 0;
  for (int trial = 0; trial < 30; ++trial) {
    const int h = 5;
    const int w = 6;
    const Raster t = random_raster(rng, h, w, 3);
    const Raster cand = random_raster(rng, h, w, 3);
    const Raster weights = random_raster(rng, h, w, 1);
    const Raster g = photometric_error_backward(t, cand, cfg, weights);
    auto total = [&](const Raster& c) {
      const Raster pe = photometric_error(t, c, cfg);
      double acc = 0.0;
      for (std::size_t p = 0; p < pe.size(); ++p) acc += weights[p] * pe[p];
      return acc;
    };
    for (int k = 0; k < 10; ++k) {
      const auto i = static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(cand.size()) - 1));
      const double step = 1e-5;
      if (std::fabs(cand[i] - t[i]) < 10 * step) continue;
      Raster plus = cand;
      Raster minus = cand;
      plus[i] += step;
      minus[i] -= step;
      const double fd = (total(plus) - total(minus)) / (2 * step);
      worst = std::max(worst, rel_diff(g[i], fd));
      ++checked;
    }
  }
  CHECK(checked > 200);
  CHECK(worst < 1e-5);
}

TEST_CASE("photometric loss of an identity warp") {
  const CameraRig rig(100.0, 0.5);
  Raster img(6, 400, 3);
  for (int r = 0; r < 6; ++r) {
    for (int c = 0; c < 400; ++c) {
      for (int ch = 0; ch < 3; ++ch) img(r, c, ch) = 0.2 + 1e-3 * c + 0.01 * r + 0.1 * ch;
    }
  }
  const DepthMap far = DepthMap::uniform(6, 400, rig.focal_baseline() / kFlowEpsilon);
  for (double v : fdlab::testing::values_of(photometric_loss(img, img, far, rig, LossConfig{}))) CHECK(v < 1e-9);

  // on a busy texture the residual is the L1 share of an eps-sized shift
  Rng rng(5);
  const Raster busy = random_raster(rng, 6, 10, 3);
  const DepthMap far_small = DepthMap::uniform(6, 10, rig.focal_baseline() / kFlowEpsilon);
  for (double v : fdlab::testing::values_of(photometric_loss(busy, busy, far_small, rig, LossConfig{}))) {
    CHECK(v < 2e-7);
  }
}

TEST_CASE("auto mask is strict") {
  const CameraRig rig(100.0, 0.5);
  const Raster img(4, 8, 3, 0.3);
  // warping a constant image changes nothing, so the comparison ties everywhere
  for (double v : fdlab::testing::values_of(auto_mask(img, img, DepthMap::uniform(4, 8, 10.0), rig, LossConfig{}))) CHECK(v == 0.0);

  Raster target(3, 12, 3);
  Raster source(3, 12, 3);
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 12; ++c) {
      for (int ch = 0; ch < 3; ++ch) {
        target(r, c, ch) = (c % 3 == 0) ? 0.9 : 0.1;
        source(r, c, ch) = ((c + 1) % 3 == 0) ? 0.9 : 0.1;  // target shifted left by one
      }
    }
  }
  const Raster m = auto_mask(target, source, DepthMap::uniform(3, 12, 50.0), rig, LossConfig{});
  CHECK(m(1, 5) == 1.0);
}

TEST_CASE("depth regression loss") {
  CHECK(depth_regression_value(3.0, 3.0) == 0.0);
  CHECK(depth_regression_value(5.0, 3.0) == doctest::Approx(std::log(3.0)));
  CHECK(depth_regression_value(1.0, 3.0) == doctest::Approx(std::log(3.0)));
  CHECK(depth_regression_derivative(3.0, 3.0) == 0.0);
  CHECK(depth_regression_derivative(5.0, 3.0) == doctest::Approx(1.0 / 3.0));
  CHECK(depth_regression_derivative(1.0, 3.0) == doctest::Approx(-1.0 / 3.0));

  Rng rng(6);
  for (int trial = 0; trial < 200; ++trial) {
    const double label = rng.uniform(0.1, 80.0);
    const double g1 = rng.uniform(1e-9, 10.0);
    const double g2 = g1 + rng.uniform(1e-6, 10.0);
    const double l1 = depth_regression_value(label + g1, label);
    const double l2 = depth_regression_value(label + g2, label);
    CHECK(l1 > 0.0);
    CHECK(l2 > l1);
    CHECK(depth_regression_value(label - g1 * 0.01, label) > 0.0);
  }
  const DepthMap d(random_raster(rng, 4, 4, 1, 1.0, 9.0));
  for (double v : fdlab::testing::values_of(depth_regression_loss(d, d))) CHECK(v == 0.0);
}

TEST_CASE("flow-guided photometric loss") {
  Rng rng(7);
  const CameraRig rig(100.0, 0.5);
  const Raster src = random_raster(rng, 5, 20, 3);
  for (int trial = 0; trial < 20; ++trial) {
    const DepthMap d(random_raster(rng, 5, 20, 1, 1.0, 80.0));
    for (double v : fdlab::testing::values_of(flow_guided_photometric_loss(src, d, d, rig))) REQUIRE(v == 0.0);
    const DepthMap other(random_raster(rng, 5, 20, 1, 1.0, 80.0));
    for (double v : fdlab::testing::values_of(flow_guided_photometric_loss(Raster(5, 20, 3, 0.25), d, other, rig))) CHECK(v == 0.0);
  }

  // ramp: a gap of `gap` px between the two samples costs gap/W
  const int w = 40;
  const double gap = 1.75;
  const DepthMap d = DepthMap::uniform(2, w, 50.0 / 2.0);             // flow -2
  const DepthMap pseudo = DepthMap::uniform(2, w, 50.0 / (2.0 + gap));  // flow -3.75
  const Raster l = flow_guided_photometric_loss(ramp(2, w), d, pseudo, rig);
  for (int c = 5; c < w; ++c) CHECK(l(1, c) == doctest::Approx(gap / w).epsilon(1e-12));
}

TEST_CASE("flow distillation loss") {
  Rng rng(8);
  const CameraRig rig(100.0, 0.5);
  const Raster src = random_raster(rng, 5, 16, 3);
  const DepthMap gt(random_raster(rng, 5, 16, 1, 2.0, 60.0));
  const FlowField flow = flow_from_depth(gt, rig);
  const DepthMap pseudo = depth_from_flow(flow, rig);
  for (double v : fdlab::testing::values_of(flow_distillation_loss(src, pseudo, flow, rig))) CHECK(v == 0.0);

  for (int trial = 0; trial < 20; ++trial) {
    const DepthMap d(random_raster(rng, 5, 16, 1, 0.5, 80.0));
    const Raster fd = flow_distillation_loss(src, d, flow, rig);
    const Raster dr = depth_regression_loss(d, pseudo);
    const Raster fp = flow_guided_photometric_loss(src, d, pseudo, rig);
    for (std::size_t i = 0; i < fd.size(); ++i) {
      CHECK(fd[i] >= std::max(dr[i], fp[i]));
      CHECK(std::fabs(fd[i] - (dr[i] + fp[i])) < 1e-14);
    }
  }

  Raster zero_flow = flow.raster();
  zero_flow(2, 3) = 0.0;
  CHECK_ERROR_KIND(flow_distillation_loss(src, gt, FlowField(zero_flow), rig), ErrorKind::DegenerateFlow);
  const Raster mask = prior_flow_mask(FlowField(zero_flow), rig, MaskConfig{});
  CHECK(mask(2, 3) == 0.0);
  const Raster masked = flow_distillation_loss(src, gt, FlowField(zero_flow), rig, PaddingMode::Border, &mask);
  CHECK(masked(2, 3) == 0.0);
}

TEST_CASE("prior flow mask examples") {
  const CameraRig rig(100.0, 0.5);
  Raster f(1, 4, 1);
  f[0] = -1.0;
  f[1] = -0.5;
  f[2] = -0.625;
  f[3] = 0.0;
  const Raster m = prior_flow_mask(FlowField(f), rig, MaskConfig{});
  CHECK(m[0] == 1.0);
  CHECK(m[1] == 0.0);
  CHECK(m[2] == 0.0);
  CHECK(m[3] == 0.0);
  CHECK_ERROR_KIND(prior_flow_mask(FlowField(f), rig, MaskConfig{0.0}), ErrorKind::Spec);
}

TEST_CASE("prior flow mask keeps exactly the pixels with pseudo depth below delta") {
  Rng rng(9);
  int violations = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const CameraRig rig(rng.uniform(50.0, 1000.0), rng.uniform(0.05, 1.0));
    const MaskConfig cfg{rng.uniform(10.0, 120.0)};
    Raster f(10, 10, 1);
    for (double& v : f.values()) v = -std::exp(rng.uniform(std::log(2 * kFlowEpsilon), std::log(500.0)));
    const Raster m = prior_flow_mask(FlowField(f), rig, cfg);
    for (std::size_t i = 0; i < f.size(); ++i) {
      const bool near = depth_from_flow_value(f[i], rig) < cfg.delta;
      if ((m[i] == 1.0) != near) ++violations;
    }
  }
  CHECK(violations == 0);
}

TEST_CASE("sigma to depth activation") {
  const DepthActivation act;
  CHECK(act.depth(0.0) == doctest::Approx(80.0).epsilon(1e-14));
  CHECK(act.depth(1.0) == doctest::Approx(0.1).epsilon(1e-14));
  const double a = 1 / 0.1 - 1 / 80.0;
  const double b = 1 / 80.0;
  CHECK(act.a_coef() == a);
  CHECK(act.b_coef() == b);
  CHECK(act.depth(0.5) == doctest::Approx(1.0 / (0.5 * 9.9875 + 0.0125)).epsilon(1e-14));
  CHECK(act.depth(0.5) == doctest::Approx(0.199750).epsilon(1e-5));
  CHECK_ERROR_KIND(act.depth(-0.01), ErrorKind::Domain);
  CHECK_ERROR_KIND(act.depth(1.01), ErrorKind::Domain);
  CHECK_ERROR_KIND(DepthActivation(0.0, 80.0), ErrorKind::Spec);
  CHECK_ERROR_KIND(DepthActivation(10.0, 5.0), ErrorKind::Spec);

  Rng rng(10);
  double prev = act.depth(0.0);
  for (int i = 1; i <= 1000; ++i) {
    const double d = act.depth(i / 1000.0);
    CHECK(d < prev);
    CHECK(d >= 0.1);
    CHECK(d <= 80.0);
    prev = d;
  }
  for (int trial = 0; trial < 100; ++trial) {
    const double d = rng.uniform(0.1, 80.0);
    CHECK(rel_diff(act.depth(act.sigma(d)), d) < 1e-12);
    const double s = rng.uniform(0.0, 1.0);
    const double h = 1e-7;
    const double fd = (act.depth(s + h) - act.depth(s - h)) / (2 * h);
    if (s > h && s < 1 - h) CHECK(rel_diff(act.depth_derivative(act.depth(s)), fd) < 1e-6);
  }
  const DepthMap dm = sigma_to_depth(Raster(2, 2, 1, 0.0), act);
  CHECK(dm(1, 1) == doctest::Approx(80.0));
}

TEST_CASE("final loss examples") {
  Raster l(1, 4, 1);
  for (int i = 0; i < 4; ++i) l[i] = i + 1.0;
  CHECK(final_loss(l, Raster(1, 4, 1, 1.0)) == doctest::Approx(2.5));
  Raster m(1, 4, 1);
  m[1] = m[3] = 1.0;
  CHECK(final_loss(l, m) == doctest::Approx(3.0));
  CHECK_ERROR_KIND(final_loss(l, Raster(1, 4, 1, 0.0)), ErrorKind::EmptyMask);

  const std::vector<Raster> scales{Raster(2, 2, 1, 0.2), Raster(2, 2, 1, 0.4)};
  CHECK(final_loss(std::span<const Raster>(scales), Raster(2, 2, 1, 1.0)) == doctest::Approx(0.3));
  CHECK_ERROR_KIND(final_loss(std::span<const Raster>(), Raster(2, 2, 1, 1.0)), ErrorKind::Length);
}

TEST_CASE("final loss ignores masked-out pixels bitwise") {
  Rng rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    Raster l = random_raster(rng, 6, 6, 1);
    Raster m = random_mask(rng, 6, 6);
    m[0] = 1.0;
    const double before = final_loss(l, m);
    for (std::size_t i = 0; i < l.size(); ++i) {
      if (m[i] == 0.0) l[i] = rng.uniform(0.0, 1e6);
    }
    const double after = final_loss(l, m);
    CHECK(std::memcmp(&before, &after, sizeof before) == 0);
  }
}

TEST_CASE("scale set brings every scale to full resolution") {
  const std::vector<DepthMap> pyramid{DepthMap::uniform(8, 12, 5.0), DepthMap::uniform(4, 6, 5.0),
                                      DepthMap::uniform(2, 3, 5.0)};
  const ScaleSet set(pyramid, 8, 12);
  REQUIRE(set.size() == 3);
  for (const DepthMap& d : set.scales()) {
    CHECK(d.height() == 8);
    CHECK(d.width() == 12);
    for (double v : d.raster().values()) CHECK(v == doctest::Approx(5.0).epsilon(1e-15));
  }
  Rng rng(12);
  const Raster r = random_raster(rng, 5, 7, 1);
  CHECK(resample_bilinear(r, 5, 7) == r);
  CHECK_ERROR_KIND(ScaleSet({}, 4, 4), ErrorKind::Length);

  // a horizontal ramp stays a ramp with half-pixel centres
  Raster small(1, 2, 1);
  small[0] = 0.0;
  small[1] = 1.0;
  const Raster big = resample_bilinear(small, 1, 4);
  CHECK(big[0] == 0.0);
  CHECK(big[1] == doctest::Approx(0.25));
  CHECK(big[2] == doctest::Approx(0.75));
  CHECK(big[3] == 1.0);
}

TEST_CASE("loss config validation") {
  LossConfig cfg;
  cfg.alpha = 1.5;
  CHECK_ERROR_KIND(cfg.validate(), ErrorKind::Spec);
  cfg = LossConfig{};
  cfg.ssim_window = 4;
  CHECK_ERROR_KIND(cfg.validate(), ErrorKind::Spec);
  cfg = LossConfig{};
  cfg.ssim_c1 = 0.0;
  CHECK_ERROR_KIND(cfg.validate(), ErrorKind::Spec);
}
