#include <gtest/gtest.h>

#include <algorithm>

#include "test_util.hpp"

namespace wbrf {
namespace {

using test::random_image;

std::vector<TrainingPair> identity_pairs(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<TrainingPair> pairs;
  for (std::size_t i = 0; i < n; ++i) {
    const Rgb cast{uniform_in(rng, 0.3, 1.0), uniform_in(rng, 0.3, 1.0), uniform_in(rng, 0.3, 1.0)};
    std::vector<double> v(3 * 24 * 16);
    for (std::size_t j = 0; j < v.size(); ++j) v[j] = cast[j % 3] * uniform01(rng);
    PixelMatrix img(24, 16, v);
    pairs.emplace_back(img, img);
  }
  return pairs;
}

// Two cast families, each with its own fixed mapping from input to target.
struct Families {
  std::vector<TrainingPair> train;
  std::vector<TrainingPair> test;
};

Families two_families(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  PolyMatrix maps[2];
  for (PolyMatrix& a : maps) {
    a = PolyMatrix::Zero();
    a.leftCols(3).setIdentity();
    for (int j = 3; j < kKernelTerms - 1; ++j) {
      for (int c = 0; c < 3; ++c) a(c, j) = uniform_in(rng, -0.25, 0.25);
    }
  }
  maps[0].leftCols(3).diagonal() = Eigen::Vector3d(0.7, 1.0, 1.3);
  maps[1].leftCols(3).diagonal() = Eigen::Vector3d(1.3, 1.0, 0.7);
  const auto make = [&](int family) {
    const double strong = uniform_in(rng, 1.0, 1.0 / 0.55);
    const double weak = uniform_in(rng, 0.45, 0.55);
    const Rgb gain = family == 0 ? Rgb{strong * 0.55, 0.55, weak} : Rgb{weak, 0.55, strong * 0.55};
    std::vector<double> v(3 * 32 * 24);
    for (std::size_t j = 0; j < v.size(); ++j) v[j] = gain[j % 3] * uniform_in(rng, 0.05, 1.0);
    PixelMatrix input(32, 24, v);
    const Eigen::MatrixXd out = maps[family] * kernel_expand(input);
    return TrainingPair(input, PixelMatrix::clipped(32, 24, std::vector<double>(out.data(), out.data() + out.size())));
  };
  Families f;
  for (int i = 0; i < 60; ++i) f.train.push_back(make(i % 2));
  for (int i = 0; i < 20; ++i) f.test.push_back(make(i % 2));
  return f;
}

double held_out_mse(const RectificationModel& model, const std::vector<TrainingPair>& pairs) {
  double sum = 0.0;
  for (const TrainingPair& p : pairs) {
    sum += mse(correct(p.input, {AutoSource{model.estimator}}, model).corrected, p.target);
  }
  return sum / static_cast<double>(pairs.size());
}

TEST(Train, IdentityPairsGiveIdentityCorrection) {
  const auto pairs = identity_pairs(30, 1);
  const TrainConfig cfg{.k = 4};
  const RectificationModel model = train(std::span<const TrainingPair>(pairs), cfg);
  EXPECT_EQ(model.k(), 4u);
  for (const TrainingPair& p : pairs) {
    const PixelMatrix out = correct(p.input, {AutoSource{}}, model).corrected;
    EXPECT_LE(test::max_abs_diff(out.data(), p.input.data()), 1e-3);
  }
}

TEST(Train, ReportAndMetadata) {
  const auto pairs = identity_pairs(20, 2);
  const TrainConfig cfg{.k = 3,
                        .seed = 9,
                        .estimator = {.kind = EstimatorKind::ShadesOfGray, .minkowski_p = 5, .strict = true}};
  const TrainReport r = train_with_report(std::span<const TrainingPair>(pairs), cfg);
  EXPECT_EQ(r.assignments.size(), 20u);
  EXPECT_EQ(std::accumulate(r.occupancy.begin(), r.occupancy.end(), std::size_t{0}), 20u);
  for (std::size_t n : r.occupancy) EXPECT_GT(n, 0u);
  EXPECT_LT(r.mean_fit_rms, 1e-6);
  EXPECT_GE(r.cluster_iterations, 1);
  EXPECT_EQ(r.model.estimator.kind, EstimatorKind::ShadesOfGray);
  EXPECT_EQ(r.model.estimator.minkowski_p, 5.0);
  EXPECT_FALSE(r.model.estimator.strict);
  for (std::size_t c = 0; c < 3; ++c) {
    std::vector<CastVector> members;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      if (r.assignments[i] == c) members.push_back(estimate(pairs[i].input, cfg.estimator));
    }
    EXPECT_EQ(r.model.centers[c], mean_direction(members));
  }
}

TEST(Train, StreamingMatchesSpan) {
  const auto pairs = identity_pairs(12, 3);
  std::size_t i = 0;
  const PairSource source = [&]() -> std::optional<TrainingPair> {
    if (i == pairs.size()) return std::nullopt;
    return pairs[i++];
  };
  const TrainConfig cfg{.k = 3};
  EXPECT_EQ(serialize_model(train(source, cfg)),
            serialize_model(train(std::span<const TrainingPair>(pairs), cfg)));
}

TEST(Train, Deterministic) {
  const Families f = two_families(4);
  const TrainConfig cfg{.k = 5, .seed = 17};
  EXPECT_EQ(serialize_model(train(std::span<const TrainingPair>(f.train), cfg)),
            serialize_model(train(std::span<const TrainingPair>(f.train), cfg)));
}

TEST(Train, TwoFamiliesNeedTwoClusters) {
  const Families f = two_families(5);
  const RectificationModel one = train(std::span<const TrainingPair>(f.train), {.k = 1});
  const RectificationModel two = train(std::span<const TrainingPair>(f.train), {.k = 2});
  const double e1 = held_out_mse(one, f.test);
  const double e2 = held_out_mse(two, f.test);
  EXPECT_GT(e1, 1.0);
  EXPECT_LE(e2, 0.1 * e1) << "k=1: " << e1 << " k=2: " << e2;
}

TEST(Train, PermutationStability) {
  const Families f = two_families(6);
  const TrainConfig cfg{.k = 2};
  const RectificationModel a = train(std::span<const TrainingPair>(f.train), cfg);
  std::vector<TrainingPair> shuffled = f.train;
  std::mt19937_64 rng(1);
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  const RectificationModel b = train(std::span<const TrainingPair>(shuffled), cfg);
  for (std::size_t c = 0; c < 2; ++c) {
    const std::size_t m = nearest_cluster(a.centers[c], b);
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(a.centers[c][i], b.centers[m][i], 1e-9);
    EXPECT_LE((a.rects[c] - b.rects[m]).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(Train, FiftyClusterModelSize) {
  const auto pairs = identity_pairs(60, 7);
  const RectificationModel m = train(std::span<const TrainingPair>(pairs), {.k = 50});
  EXPECT_EQ(m.parameter_count(), 5100u);
  EXPECT_EQ(serialize_model(m).size(), 40'800u + kModelHeaderBytes + 4);
}

TEST(Train, Errors) {
  const auto pairs = identity_pairs(3, 8);
  try {
    (void)train(std::span<const TrainingPair>(pairs), {.k = 4});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InsufficientData);
  }
  EXPECT_THROW((void)train(std::span<const TrainingPair>(pairs), {.k = 0}), Error);
  EXPECT_THROW((void)train(std::span<const TrainingPair>(pairs),
                           {.k = 1, .estimator = {.kind = EstimatorKind::ShadesOfGray, .minkowski_p = 0.5}}),
               Error);
}

}  // namespace
}  // namespace wbrf
