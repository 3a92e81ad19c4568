#include <gtest/gtest.h>

#include <sstream>

#include "bladescan/io.hpp"

using namespace bladescan;
using io::json;

TEST(CloudCsv, HeaderOptionalAndSeparators) {
  std::istringstream a("x,y,z\n1,2,3\n4.5, -6 ,7e1\n");
  const auto ca = io::read_cloud_csv(a);
  ASSERT_EQ(ca.size(), 2u);
  EXPECT_EQ(ca.points[1], Point3(4.5, -6, 70));
  std::istringstream b("# comment\n1 2 3\n\n0.5\t0.25\t0\n");
  const auto cb = io::read_cloud_csv(b);
  ASSERT_EQ(cb.size(), 2u);
  EXPECT_EQ(cb.points[1], Point3(0.5, 0.25, 0));
}

TEST(CloudCsv, MalformedRowThrows) {
  std::istringstream in("1,2,3\n1,2\n");
  EXPECT_THROW((void)io::read_cloud_csv(in), Error);
}

TEST(CloudCsv, RoundTripExact) {
  PointCloud c;
  c.push_back({0.1, -1e-7, 123456.789});
  c.push_back({1.0 / 3.0, 2.0 / 7.0, -5.5});
  std::stringstream ss;
  io::write_cloud_csv(ss, c);
  const auto back = io::read_cloud_csv(ss);
  EXPECT_EQ(back.points, c.points);
}

TEST(CloudPly, RoundTripFloat32) {
  PointCloud c;
  c.push_back({0.5, -1.25, 130.0});
  c.push_back({3.0, 4.0, 5.0});
  std::stringstream ss(std::ios::in | std::ios::out | std::ios::binary);
  io::write_cloud_ply(ss, c);
  const auto back = io::read_cloud_ply(ss);
  EXPECT_EQ(back.points, c.points);
}

TEST(CloudPly, DoubleVerticesAndExtraProperties) {
  std::stringstream ss(std::ios::in | std::ios::out | std::ios::binary);
  ss << "ply\nformat binary_little_endian 1.0\nelement vertex 1\nproperty double x\n"
        "property uchar intensity\nproperty double y\nproperty double z\nend_header\n";
  const double x = 1.5, y = -2.0, z = 9.25;
  const unsigned char i = 7;
  ss.write(reinterpret_cast<const char*>(&x), 8);
  ss.write(reinterpret_cast<const char*>(&i), 1);
  ss.write(reinterpret_cast<const char*>(&y), 8);
  ss.write(reinterpret_cast<const char*>(&z), 8);
  const auto c = io::read_cloud_ply(ss);
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c.points[0], Point3(1.5, -2.0, 9.25));
}

TEST(CloudPly, AsciiRejected) {
  std::istringstream in("ply\nformat ascii 1.0\nelement vertex 0\nend_header\n");
  EXPECT_THROW((void)io::read_cloud_ply(in), Error);
}

TEST(Pgm, RoundTrip) {
  GrayImage img(3, 2);
  img.pixels = {0, 1, 2, 253, 254, 255};
  std::stringstream ss(std::ios::in | std::ios::out | std::ios::binary);
  io::write_pgm(ss, img);
  const auto back = io::read_pgm(ss);
  EXPECT_EQ(back.width, 3);
  EXPECT_EQ(back.height, 2);
  EXPECT_EQ(back.pixels, img.pixels);
}

TEST(Json, ConfigRoundTrip) {
  EstimatorConfig c;
  c.standoff = 12.0;
  c.bri_arc_pad = 1;
  EstimatorConfig d;
  io::update_from_json(d, io::to_json(c));
  EXPECT_EQ(io::to_json(d), io::to_json(c));

  SceneSpec s;
  s.stop_angle_deg = 74.0;
  s.clutter.enabled = true;
  SceneSpec t;
  io::update_from_json(t, io::to_json(s));
  EXPECT_EQ(io::to_json(t), io::to_json(s));
}

TEST(Json, BadValuesAreConfigErrors) {
  EstimatorConfig c;
  auto code = [&](const char* text) {
    try {
      io::update_from_json(c, json::parse(text));
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::Io;
  };
  EXPECT_EQ(code(R"({"standoff": "far"})"), ErrorCode::InvalidConfig);
  EXPECT_EQ(code(R"({"axial_step": -1})"), ErrorCode::InvalidConfig);
  EXPECT_EQ(code(R"([1, 2])"), ErrorCode::InvalidConfig);
  std::istringstream bad("{oops");
  EXPECT_THROW((void)io::parse_json(bad, "x"), Error);
}

TEST(Json, ClutterAcceptsBool) {
  SceneSpec s;
  io::update_from_json(s, json::parse(R"({"clutter": true})"));
  EXPECT_TRUE(s.clutter.enabled);
  io::update_from_json(s, json::parse(R"({"clutter": {"boxes": 3, "enabled": false}})"));
  EXPECT_FALSE(s.clutter.enabled);
  EXPECT_EQ(s.clutter.boxes, 3);
}
