#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "oracles.hpp"
#include "scenemotion/anchors/body.hpp"
#include "scenemotion/anchors/pose.hpp"
#include "scenemotion/metrics/body_scores.hpp"
#include "scenemotion/metrics/cluster.hpp"
#include "scenemotion/metrics/distribution.hpp"
#include "scenemotion/metrics/path_deviation.hpp"

using namespace scenemotion;

namespace {

std::vector<std::vector<double>> blobs(int count, int per, Rng& rng, std::vector<int>* labels) {
  std::vector<std::vector<double>> pts;
  for (int b = 0; b < count; ++b) {
    double cx = 100.0 * (b % 5), cy = 100.0 * (b / 5);
    for (int n = 0; n < per; ++n) {
      pts.push_back({cx + 0.01 * rng.normal(), cy + 0.01 * rng.normal()});
      if (labels) labels->push_back(b);
    }
  }
  return pts;
}

// Stand body with feet at the floor of oracle::plane_grid for frames marked grounded, 1 m higher otherwise.
std::pair<Trajectory, std::vector<ProxyBody>> standing_frames(const std::vector<double>& lift) {
  PoseVector theta = PoseSampler{}.sample(ActionLabel::kStand, 3);
  ProxyBody body = proxy_body(theta, ActionLabel::kStand);
  const double pelvis = 0.1 - lowest_contact_offset(body);
  Trajectory t;
  std::vector<ProxyBody> bodies;
  for (std::size_t k = 0; k < lift.size(); ++k) {
    t.frames.push_back({{1.0 + 0.05 * double(k), 2.0, pelvis + lift[k]}, rot6_from_yaw(0.0), ActionLabel::kStand});
    bodies.push_back(body);
  }
  return {t, bodies};
}

}  // namespace

TEST(Cluster, DegenerateSingleCluster) {
  std::vector<std::vector<double>> pts(30, std::vector<double>{1.0, 2.0});
  ClusterReport r = kmeans(pts, 1, 0);
  EXPECT_EQ(r.entropy, 0.0);
  EXPECT_EQ(r.mean_distance, 0.0);
}

TEST(Cluster, TwentyBlobs) {
  Rng rng(4);
  std::vector<int> labels;
  auto pts = blobs(20, 10, rng, &labels);
  ClusterReport r = kmeans(pts, 20, 7);
  EXPECT_NEAR(r.entropy, std::log(20.0), 1e-6);
  std::map<int, int> blob_to_cluster;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    auto [it, inserted] = blob_to_cluster.emplace(labels[i], r.assignments[i]);
    EXPECT_EQ(it->second, r.assignments[i]);
  }
  std::set<int> used;
  for (auto [b, c] : blob_to_cluster) used.insert(c);
  EXPECT_EQ(used.size(), 20u);
}

TEST(Cluster, UniformTwentyClusterEntropy) {
  std::vector<int> sizes(20, 5);
  EXPECT_NEAR(size_entropy(sizes), std::log(20.0), 1e-9);
}

TEST(Cluster, DeterministicAndBounded) {
  Rng rng(5);
  std::vector<std::vector<double>> pts;
  for (int i = 0; i < 200; ++i) pts.push_back({rng.normal(), rng.normal(), rng.normal()});
  ClusterReport a = kmeans(pts, 8, 3), b = kmeans(pts, 8, 3);
  EXPECT_EQ(a.assignments, b.assignments);
  EXPECT_EQ(a.entropy, b.entropy);
  EXPECT_LE(a.entropy, std::log(8.0) + 1e-12);
  for (int v : a.assignments) {
    EXPECT_GE(v, 0);
    EXPECT_LT(v, 8);
  }
  for (std::size_t i = 1; i < a.inertia.size(); ++i) EXPECT_LE(a.inertia[i], a.inertia[i - 1] + 1e-9);
}

TEST(Cluster, FewerPointsThanK) {
  std::vector<std::vector<double>> pts(19, std::vector<double>{0.0});
  try {
    kmeans(pts, 20, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("fewer points than K"), std::string::npos);
  }
}

TEST(AnchorDiversity, DuplicatedAnchor) {
  Anchor a;
  a.t = {1, 2, 0.5};
  a.theta = PoseSampler{}.sample(ActionLabel::kSit, 0);
  std::vector<Anchor> many(100, a);
  EXPECT_EQ(anchor_diversity(many, DiversityMode::kFull).entropy, 0.0);
  EXPECT_EQ(anchor_diversity(many, DiversityMode::kPosition).entropy, 0.0);
}

TEST(AnchorDiversity, TwoRoomsPosition) {
  Rng rng(8);
  std::vector<Anchor> anchors;
  for (int i = 0; i < 100; ++i) {
    Anchor a;
    double room = i % 2 ? 10.0 : 0.0;
    a.t = {room + rng.uniform(0, 4), rng.uniform(0, 4), 0.9};
    anchors.push_back(a);
  }
  EXPECT_GT(anchor_diversity(anchors, DiversityMode::kPosition).entropy, 0.5);
}

TEST(PathDeviation, SymmetricPairsHaveZeroStd) {
  std::vector<Vec3> ref{{0, 0, 0}, {6, 0, 0}};
  std::vector<std::vector<Vec3>> s{{{0, 0, 0}, {3, 1, 0}, {6, 0, 0}}, {{0, 0, 0}, {3, -1, 0}, {6, 0, 0}}};
  auto r = path_deviation_std(s, ref);
  EXPECT_NEAR(r.std[2], 0.0, 1e-15);
}

TEST(PathDeviation, PopulationStd) {
  std::vector<Vec3> ref{{0, 0, 0}, {6, 0, 0}};
  std::vector<std::vector<Vec3>> s{ref, {{0, 0, 0}, {3, 2, 0}, {6, 0, 0}}};
  auto r = path_deviation_std(s, ref);
  EXPECT_NEAR(r.std[2], 1.0, 1e-12);
}

TEST(PathDeviation, IdenticalPathsAreZero) {
  std::vector<Vec3> ref{{0, 0, 0}, {1, 1, 0}, {3, 1, 0}, {4, 2, 0}};
  std::vector<std::vector<Vec3>> s(100, ref);
  for (double v : path_deviation_std(s, ref).std) EXPECT_EQ(v, 0.0);
}

TEST(PathDeviation, Preconditions) {
  std::vector<Vec3> ref{{0, 0, 0}, {6, 0, 0}};
  std::vector<std::vector<Vec3>> one{ref};
  EXPECT_THROW(path_deviation_std(one, ref), Error);
  std::vector<std::vector<Vec3>> moved{ref, {{0, 0, 0}, {6, 1, 0}}};
  EXPECT_THROW(path_deviation_std(moved, ref), Error);
}

TEST(Apd, ClosedForms) {
  EXPECT_EQ(apd({{1.0, 2.0}, {1.0, 2.0}, {1.0, 2.0}}), 0.0);
  EXPECT_EQ(apd({{0.0}, {2.0}}), 2.0);
  EXPECT_EQ(apd({{0.0}, {1.0}, {2.0}}), 4.0 / 3.0);
  EXPECT_EQ(apd({{2.0}, {0.0}, {1.0}}), apd({{0.0}, {1.0}, {2.0}}));
}

TEST(Frechet, SelfDistanceIsZero) {
  Rng rng(2);
  std::vector<std::vector<double>> a;
  for (int i = 0; i < 50; ++i) a.push_back({rng.normal(), rng.normal() * 2 + 1, rng.uniform()});
  EXPECT_LT(std::abs(frechet_gaussian(a, a)), 1e-8);
}

TEST(Frechet, OneDimensionalClosedForm) {
  const double h = 1.0 / std::sqrt(2.0);
  std::vector<std::vector<double>> a{{-h}, {h}}, b{{1.0 - h}, {1.0 + h}};
  GaussianMoments ma = fit_gaussian(a), mb = fit_gaussian(b);
  ASSERT_NEAR(ma.cov(0, 0), 1.0, 1e-15);
  ASSERT_NEAR(mb.mean(0), 1.0, 1e-15);
  EXPECT_NEAR(frechet_gaussian(a, b), 1.0, 1e-6);
}

TEST(Frechet, DiagonalCovarianceClosedForm) {
  // Cross-shaped sets have exactly diagonal sample covariance.
  auto cross_set = [](double mx, double my, double ax, double ay) {
    return std::vector<std::vector<double>>{{mx + ax, my}, {mx - ax, my}, {mx, my + ay}, {mx, my - ay}};
  };
  auto a = cross_set(0.5, -1.0, 2.0, 0.5), b = cross_set(1.5, 0.0, 1.0, 3.0);
  GaussianMoments ma = fit_gaussian(a), mb = fit_gaussian(b);
  double want = 0.0;
  for (int i = 0; i < 2; ++i) {
    want += (ma.mean(i) - mb.mean(i)) * (ma.mean(i) - mb.mean(i));
    want += (std::sqrt(ma.cov(i, i)) - std::sqrt(mb.cov(i, i))) * (std::sqrt(ma.cov(i, i)) - std::sqrt(mb.cov(i, i)));
  }
  EXPECT_NEAR(frechet_gaussian(a, b), want, 1e-6);
}

TEST(Frechet, NeedsEnoughSamples) {
  EXPECT_THROW(fit_gaussian({{0.0, 1.0}, {1.0, 2.0}}), Error);
}

TEST(BodyScores, OpenSpaceAndEmptyGrid) {
  auto [t, bodies] = standing_frames(std::vector<double>(10, 1.0));
  VoxelGrid g = oracle::plane_grid(60, 60, 40, 0.1);
  EXPECT_EQ(non_collision(t, bodies, g), 1.0);
  EXPECT_EQ(contact(t, bodies, g), 0.0);
  VoxelGrid empty = VoxelGrid::filled({0, 0, 0}, 0.1, {60, 60, 40}, false, std::numeric_limits<double>::infinity());
  EXPECT_EQ(non_collision(t, bodies, empty), 1.0);
}

TEST(BodyScores, HalfInsideObstacle) {
  std::vector<double> lift;
  for (int k = 0; k < 12; ++k) lift.push_back(k % 2 ? -0.5 : 1.0);
  auto [t, bodies] = standing_frames(lift);
  VoxelGrid g = oracle::plane_grid(60, 60, 40, 0.1);
  EXPECT_EQ(non_collision(t, bodies, g), 0.5);
}

TEST(BodyScores, ContactFractions) {
  VoxelGrid g = oracle::plane_grid(60, 60, 40, 0.1);
  auto [grounded, gb] = standing_frames(std::vector<double>(8, 0.0));
  EXPECT_EQ(contact(grounded, gb, g), 1.0);
  std::vector<double> half;
  for (int k = 0; k < 8; ++k) half.push_back(k < 4 ? 0.0 : 1.0);
  auto [mixed, mb] = standing_frames(half);
  EXPECT_EQ(contact(mixed, mb, g), 0.5);
  mb.pop_back();
  try {
    contact(mixed, mb, g);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDimension);
  }
}

TEST(TrajectoryFrechet, IdenticalSetsNearZero) {
  auto [t, bodies] = standing_frames({0.0, 0.1, 0.3, 0.2, 0.5, 0.4, 0.1, 0.0, 0.2, 0.3, 0.6, 0.2, 0.1, 0.05});
  std::vector<Trajectory> a{t, t};
  for (auto& f : a[1].frames) f.t.y += 0.3 * f.t.z;
  EXPECT_LT(std::abs(trajectory_frechet(a, a)), 1e-8);
}
