#include <gtest/gtest.h>

#include <random>

#include "bladescan/clustering.hpp"
#include "oracles.hpp"

using namespace bladescan;

TEST(Dbscan, ThreeSeparatedGroups) {
  std::vector<Point3> pts;
  for (const Point3 c : {Point3(0, 0, 0), Point3(10, 0, 0), Point3(0, 10, 0)})
    for (int i = 0; i < 4; ++i) pts.push_back(c + Vector3(0.3 * i, 0, 0));
  const auto r = dbscan(pts, 1.0, 2);
  EXPECT_EQ(r.k, 3);
  EXPECT_NEAR((r.centers[1] - Point3(10.45, 0, 0)).norm(), 0.0, 1e-12);
}

TEST(Dbscan, IsolatedPointsAreNoise) {
  const std::vector<Point3> pts{{0, 0, 0}, {5, 0, 0}, {10, 0, 0}};
  const auto r = dbscan(pts, 1.0, 2);
  EXPECT_EQ(r.k, 0);
  for (int l : r.labels) EXPECT_EQ(l, kNoise);
}

TEST(Dbscan, EmptyInputAndBadParams) {
  EXPECT_EQ(dbscan(std::vector<Point3>{}, 1.0, 2).k, 0);
  EXPECT_THROW((void)dbscan(std::vector<Point3>{}, 0.0, 2), Error);
  EXPECT_THROW((void)dbscan(std::vector<Point3>{}, 1.0, 0), Error);
}

TEST(Dbscan, ChainIsOneCluster) {
  std::vector<Point3> pts;
  for (int i = 0; i < 20; ++i) pts.push_back({0.9 * i, 0, 0});
  EXPECT_EQ(dbscan(pts, 1.0, 2).k, 1);
}
