#include <gtest/gtest.h>

#include "ciede2000_cases.hpp"
#include "test_util.hpp"

namespace wbrf {
namespace {

using test::random_image;

PixelMatrix px(const Rgb& p) { return PixelMatrix(1, 1, {p[0], p[1], p[2]}); }

TEST(Mse, Examples) {
  std::mt19937_64 rng(1);
  const PixelMatrix img = random_image(8, 8, rng);
  EXPECT_EQ(mse(img, img), 0.0);
  EXPECT_DOUBLE_EQ(mse(px({1, 1, 1}), px({0, 0, 0})), 65025.0);
  EXPECT_NEAR(mse(px({0.5, 0.5, 0.5}), px({0.5, 0.5, 0.6})), 216.75, 1e-9);
}

TEST(Mae, Examples) {
  std::mt19937_64 rng(2);
  const PixelMatrix img = random_image(8, 8, rng, 0.01, 1.0);
  EXPECT_EQ(mae(img, img), 0.0);
  EXPECT_EQ(mae(px({1, 0, 0}), px({0, 1, 0})), 90.0);
  EXPECT_EQ(mae(px({1, 1, 0}), px({1, 0, 0})), 45.0);
}

TEST(Mae, SkipsDegeneratePixels) {
  const PixelMatrix a(2, 1, {0, 0, 0, 1, 0, 0});
  const PixelMatrix b(2, 1, {1, 1, 1, 0, 1, 0});
  EXPECT_EQ(mae(a, b), 90.0);
  try {
    (void)mae(px({0, 0, 0}), px({1, 1, 1}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::AllPixelsDegenerate);
  }
}

TEST(Mae, ScaleInvariant) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const PixelMatrix a = random_image(6, 6, rng, 0.01, 1.0);
    const PixelMatrix b = random_image(6, 6, rng, 0.01, 1.0);
    const double s = uniform_in(rng, 0.05, 1.0);
    std::vector<double> as(a.data().begin(), a.data().end());
    std::vector<double> bs(b.data().begin(), b.data().end());
    for (double& x : as) x *= s;
    for (double& x : bs) x *= s;
    EXPECT_NEAR(mae(PixelMatrix(6, 6, as), PixelMatrix(6, 6, bs)), mae(a, b), 1e-10);
  }
}

TEST(DeltaE2000, ConformancePairs) {
  for (const test::Ciede2000Case& c : test::kCiede2000Cases) {
    EXPECT_NEAR(ciede2000({c.l1, c.a1, c.b1}, {c.l2, c.a2, c.b2}), c.expected, 1e-4);
    EXPECT_NEAR(ciede2000({c.l2, c.a2, c.b2}, {c.l1, c.a1, c.b1}), c.expected, 1e-4);
  }
}

TEST(DeltaE2000, ImageExamples) {
  std::mt19937_64 rng(4);
  const PixelMatrix a = random_image(8, 8, rng);
  const PixelMatrix b = random_image(8, 8, rng);
  EXPECT_EQ(delta_e_2000(a, a), 0.0);
  EXPECT_NEAR(delta_e_2000(a, b), delta_e_2000(b, a), 1e-10);
  EXPECT_GT(delta_e_2000(a, b), 0.0);
}

TEST(DeltaE2000, LabReference) {
  const Lab white = srgb_to_lab({1, 1, 1});
  EXPECT_NEAR(white.l, 100.0, 1e-4);
  EXPECT_NEAR(white.a, 0.0, 1e-3);
  EXPECT_NEAR(white.b, 0.0, 1e-3);
  const Lab black = srgb_to_lab({0, 0, 0});
  EXPECT_NEAR(black.l, 0.0, 1e-12);
  // sRGB red, D65: L* 53.24, a* 80.09, b* 67.20.
  const Lab red = srgb_to_lab({1, 0, 0});
  EXPECT_NEAR(red.l, 53.24, 0.01);
  EXPECT_NEAR(red.a, 80.09, 0.01);
  EXPECT_NEAR(red.b, 67.20, 0.01);
}

TEST(DeltaE2000, LabRoundTripSelfConsistent) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 500; ++i) {
    const Rgb p{uniform01(rng), uniform01(rng), uniform01(rng)};
    const Lab lab = srgb_to_lab(p);
    const Rgb back = lab_to_srgb(lab);
    for (int c = 0; c < 3; ++c) EXPECT_NEAR(back[c], p[c], 1e-9);
    EXPECT_LT(ciede2000(lab, srgb_to_lab(back)), 1e-6);
  }
}

TEST(Metrics, ZeroIffIdentical) {
  std::mt19937_64 rng(6);
  for (int i = 0; i < 20; ++i) {
    const PixelMatrix a = random_image(4, 4, rng, 0.01, 1.0);
    const ImageError same = image_error(a, a);
    EXPECT_EQ(same.mse, 0.0);
    EXPECT_EQ(same.mae_deg, 0.0);
    EXPECT_EQ(same.de2000, 0.0);
    std::vector<double> v(a.data().begin(), a.data().end());
    v[5] = v[5] > 0.5 ? v[5] - 0.1 : v[5] + 0.1;
    const ImageError diff = image_error(PixelMatrix(4, 4, v), a);
    EXPECT_GT(diff.mse, 0.0);
    EXPECT_GT(diff.mae_deg, 0.0);
    EXPECT_GT(diff.de2000, 0.0);
    EXPECT_LE(diff.mae_deg, 180.0);
  }
}

TEST(Metrics, DimensionMismatch) {
  const PixelMatrix a = PixelMatrix::filled(2, 2, {0.5, 0.5, 0.5});
  const PixelMatrix b = PixelMatrix::filled(4, 1, {0.5, 0.5, 0.5});
  for (const auto& fn : std::vector<std::function<void()>>{[&] { (void)mse(a, b); },
                                                           [&] { (void)mae(a, b); },
                                                           [&] { (void)delta_e_2000(a, b); }}) {
    try {
      fn();
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
    }
  }
}

TEST(Summary, Quartiles) {
  const MetricSummary one = summarize_values({3.5});
  EXPECT_EQ(one.mean, 3.5);
  EXPECT_EQ(one.q1, 3.5);
  EXPECT_EQ(one.q2, 3.5);
  EXPECT_EQ(one.q3, 3.5);
  EXPECT_EQ(summarize_values({4, 1, 3, 2}).q2, 2.5);
  const MetricSummary five = summarize_values({5, 3, 1, 4, 2});
  EXPECT_EQ(five.q1, 2.0);
  EXPECT_EQ(five.q2, 3.0);
  EXPECT_EQ(five.q3, 4.0);
  EXPECT_EQ(five.mean, 3.0);
  EXPECT_DOUBLE_EQ(summarize_values({1, 2, 3, 4}).q1, 1.75);
}

TEST(Summary, OrderedQuartilesProperty) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> v(1 + uniform_index(rng, 40));
    for (double& x : v) x = uniform_in(rng, -10, 10);
    const MetricSummary s = summarize_values(v);
    EXPECT_LE(s.q1, s.q2);
    EXPECT_LE(s.q2, s.q3);
    std::vector<double> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    const double median = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    EXPECT_NEAR(s.q2, median, 1e-12);
  }
}

TEST(Summary, EmptyList) {
  try {
    (void)summarize({});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyList);
  }
}

TEST(Summary, Serialization) {
  const EvalReport r = summarize({{100, 2, 3}, {300, 4, 5}});
  const std::vector<NamedReport> rows{{"diag-gw", r}};
  const std::string table = to_text_table(rows);
  EXPECT_NE(table.find("diag-gw"), std::string::npos);
  EXPECT_NE(table.find("200.00"), std::string::npos);
  const nlohmann::json j = to_json(std::span<const NamedReport>(rows));
  EXPECT_EQ(j["diag-gw"]["mse"]["mean"], 200.0);
  EXPECT_EQ(j["diag-gw"]["mae_deg"]["q2"], 3.0);
  EXPECT_EQ(j["diag-gw"]["per_image"].size(), 2u);
}

}  // namespace
}  // namespace wbrf
