#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Core>
#include <cmath>

#include "sociopose/geometry.hpp"
#include "sociopose/rng.hpp"
#include "test_util.hpp"

using namespace sociopose;
using test_util::make_agent;
using test_util::one_frame_track;
using test_util::random_track;
using Catch::Approx;

TEST_CASE("fuse_depth replaces only the z component") {
  CHECK(fuse_depth({0.1, 0.2, 5.0}, 2.5) == Eigen::Vector3d(0.1, 0.2, 2.5));
  CHECK(fuse_depth({0.0, 0.0, 0.0}, 1.0) == Eigen::Vector3d(0.0, 0.0, 1.0));
  CHECK(fuse_depth({-0.3, 1.7, 9.9}, 9.9) == Eigen::Vector3d(-0.3, 1.7, 9.9));
}

TEST_CASE("fuse_depth rejects bad depths with context") {
  CHECK_THROWS_AS(fuse_depth({0, 0, 0}, 0.0), DataError);
  CHECK_THROWS_AS(fuse_depth({0, 0, 0}, -1.0), DataError);
  CHECK_THROWS_AS(fuse_depth({0, 0, 0}, std::nan("")), DataError);
  try {
    fuse_depth({0, 0, 0}, -2.0, "clip c1, frame 3, agent 0");
    FAIL("expected throw");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("clip c1, frame 3, agent 0") != std::string::npos);
  }
}

TEST_CASE("fuse_depth is idempotent") {
  Rng rng(7);
  for (int i = 0; i < 100; ++i) {
    const Eigen::Vector3d t(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5));
    const double z = rng.uniform(0.1, 10.0);
    CHECK(fuse_depth(fuse_depth(t, z), z) == fuse_depth(t, z));
  }
}

TEST_CASE("absolute_joints adds the fused translation componentwise") {
  AgentFrame a;
  a.joints.setZero();
  a.translation = {1, 2, 3};
  a.bev_depth = 4;
  const JointSet abs = absolute_joints(a);
  for (int j = 0; j < kJointCount; ++j) CHECK(abs.row(j) == Eigen::RowVector3d(1, 2, 4));

  a.joints.setZero();
  a.joints.row(0) << 0.5, 0, 0;
  a.translation = {0, 0, 0};
  a.bev_depth = 2;
  CHECK(absolute_joints(a).row(0) == Eigen::RowVector3d(0.5, 0, 2));

  // componentwise addition oracle
  a.joints.setConstant(1.0);
  a.translation = {1, 1, 1};
  a.bev_depth = 1;
  const JointSet got = absolute_joints(a);
  for (int j = 0; j < kJointCount; ++j)
    for (int k = 0; k < 3; ++k) {
      const double expected = a.joints(j, k) + (k == 2 ? a.bev_depth : a.translation[k]);
      CHECK(got(j, k) == expected);
    }
}

TEST_CASE("head_center is the eye midpoint") {
  JointMap map;
  JointSet joints = JointSet::Zero();
  joints.row(map.left_eye) << 1, 2, 3;
  joints.row(map.right_eye) << 3, 2, 1;
  CHECK(head_center(joints, map) == Eigen::Vector3d(2, 2, 2));

  joints.row(map.left_eye) << 0, 1, 0;
  joints.row(map.right_eye) << 0, 1, 0;
  CHECK(head_center(joints, map) == Eigen::Vector3d(0, 1, 0));

  joints.row(map.left_eye) << -1, 0, 0;
  joints.row(map.right_eye) << 1, 0, 0;
  CHECK(head_center(joints, map) == Eigen::Vector3d(0, 0, 0));
}

TEST_CASE("head_direction averages the raw component vectors then normalizes") {
  JointMap map;
  JointSet joints = JointSet::Zero();
  joints.row(map.left_eye) << -1, 0, 0;
  joints.row(map.right_eye) << 1, 0, 0;
  joints.row(map.neck) << 0, 0, 0;
  joints.row(map.nose) << 0, 1, 0;
  CHECK(head_direction(joints, map).isApprox(Eigen::Vector3d(0, 1, 0), 1e-12));

  // hand computation: avg of (0,1,0) and (0,2,0) is (0,1.5,0) -> (0,1,0)
  joints.row(map.neck) << 0, -1, 0;
  const Eigen::Vector3d hc(0, 0, 0);
  const Eigen::Vector3d nose(0, 1, 0);
  const Eigen::Vector3d neck(0, -1, 0);
  const Eigen::Vector3d oracle = (0.5 * ((nose - hc) + (nose - neck))).normalized();
  CHECK(head_direction(joints, map).isApprox(oracle, 1e-12));
  CHECK(oracle == Eigen::Vector3d(0, 1, 0));

  // nose == head_center == neck: zero vector
  joints.row(map.neck) << 0, 0, 0;
  joints.row(map.nose) << 0, 0, 0;
  CHECK_THROWS_AS(head_direction(joints, map), DataError);
}

TEST_CASE("JointMap validation") {
  JointMap bad;
  bad.nose = 45;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = {};
  bad.left_eye = bad.right_eye;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("clip_social_pose_3d on hand-built tracks") {
  JointMap map;
  const auto a = make_agent({0, 0, 2}, {0, 0, -0.3});
  const auto b = make_agent({1, 0, 2}, {0, 0, -0.3});
  Eigen::VectorXd expected(12);
  expected << 0, 0, 2, 0, 0, -1, 1, 0, 2, 0, 0, -1;

  SECTION("single frame is the identity average") {
    const auto f = clip_social_pose_3d(one_frame_track("c", a, b), map);
    CHECK(f.values.isApprox(expected, 1e-12));
    CHECK(f.kind == FeatureKind::social3d);
  }
  SECTION("averaging is idempotent on identical frames") {
    JointTrack t = one_frame_track("c", a, b);
    t.frames.push_back({a, b});
    CHECK(clip_social_pose_3d(t, map).values.isApprox(expected, 1e-12));
  }
  SECTION("two frames average positions (arithmetic mean oracle)") {
    JointTrack t = one_frame_track("c", a, b);
    t.frames.push_back({make_agent({0, 0, 4}, {0, 0, -0.3}), b});
    const auto f = clip_social_pose_3d(t, map);
    CHECK(f.values[0] == Approx(0.0).margin(1e-12));
    CHECK(f.values[2] == Approx((2.0 + 4.0) / 2.0).epsilon(1e-12));
  }
  SECTION("degenerate direction on any frame rejects the clip") {
    JointTrack t = one_frame_track("c", a, b);
    AgentFrame degenerate = a;
    degenerate.joints.row(map.nose) = 0.5 * (degenerate.joints.row(map.left_eye) +
                                             degenerate.joints.row(map.right_eye));
    degenerate.joints.row(map.neck) = degenerate.joints.row(map.nose);
    t.frames.push_back({degenerate, b});
    CHECK_THROWS_AS(clip_social_pose_3d(t, map), DataError);
  }
}

TEST_CASE("project_2d drops z/dz without renormalizing") {
  ClipFeature f;
  f.clip_id = "c";
  f.kind = FeatureKind::social3d;
  f.values.resize(12);

  f.values << 0, 0, 2, 0, 0, -1, 1, 0, 2, 0, 0, -1;
  Eigen::VectorXd expected(8);
  expected << 0, 0, 0, 0, 1, 0, 0, 0;
  CHECK(project_2d(f).values == expected);

  f.values << 1, 2, 3, 0, 1, 0, 4, 5, 6, 1, 0, 0;
  expected << 1, 2, 0, 1, 4, 5, 1, 0;
  CHECK(project_2d(f).values == expected);

  // (0.6, 0, 0.8) keeps 2D norm 0.6 (Pythagorean check, no renormalization)
  f.values << 0, 0, 2, 0.6, 0, 0.8, 1, 0, 2, 0, 0, -1;
  const auto g = project_2d(f);
  CHECK(g.values[2] == 0.6);
  CHECK(g.values[3] == 0.0);
  CHECK(std::hypot(g.values[2], g.values[3]) == Approx(0.6).epsilon(1e-15));
  CHECK(g.kind == FeatureKind::social2d);
}

TEST_CASE("clip_joint_feature averages scene-space joints") {
  JointMap map;
  SECTION("constant joints cycle through the first agent block") {
    AgentFrame a;
    a.joints.setZero();
    a.translation = {1, 2, 0};
    a.bev_depth = 3;  // every joint lands at (1,2,3)
    const auto b = make_agent({5, 0, 3}, {0, 0, 1});
    const auto f = clip_joint_feature(one_frame_track("c", a, b), map);
    REQUIRE(f.values.size() == 270);
    for (int j = 0; j < kJointCount; ++j) {
      CHECK(f.values[3 * j + 0] == 1.0);
      CHECK(f.values[3 * j + 1] == 2.0);
      CHECK(f.values[3 * j + 2] == 3.0);
    }
  }
  SECTION("opposite frames cancel to zero") {
    Rng rng(3);
    auto base = test_util::random_agent(rng);
    const Eigen::Vector3d fused(base.translation.x(), base.translation.y(), base.bev_depth);
    AgentFrame f1 = base, f2 = base;
    // absolute joints +p then -p
    const JointSet abs_p = base.joints.rowwise() + fused.transpose();
    f2.joints = (-abs_p).rowwise() - fused.transpose();
    const auto other = make_agent({9, 0, 1}, {0, 0, 1});
    JointTrack t = one_frame_track("c", f1, other);
    t.frames.push_back({f2, other});
    const auto f = clip_joint_feature(t, map);
    for (int j = 0; j < kJointCount * 3; ++j) CHECK(f.values[j] == Approx(0.0).margin(1e-12));
  }
  SECTION("frame x-values 1,2,3 average to 2") {
    auto mk = [&](double x) {
      AgentFrame a;
      a.joints.setZero();
      a.translation = {x, 0, 0};
      a.bev_depth = 1;
      return a;
    };
    const auto other = make_agent({9, 0, 1}, {0, 0, 1});
    JointTrack t;
    t.clip_id = "c";
    for (double x : {1.0, 2.0, 3.0}) t.frames.push_back({mk(x), other});
    const auto f = clip_joint_feature(t, map);
    const double oracle = (1.0 + 2.0 + 3.0) / 3.0;
    CHECK(f.values[0] == Approx(oracle).epsilon(1e-15));
  }
  SECTION("coincident face joints are fine for joint features") {
    AgentFrame a;
    a.joints.setZero();
    a.translation = {0, 0, 0};
    a.bev_depth = 1;
    AgentFrame b = a;
    b.translation = {3, 0, 0};
    CHECK_NOTHROW(clip_joint_feature(one_frame_track("c", a, b), map));
    CHECK_THROWS_AS(clip_social_pose_3d(one_frame_track("c", a, b), map), DataError);
  }
}

TEST_CASE("feature widths are exactly 270 / 12 / 8") {
  Rng rng(11);
  const auto t = random_track(rng, "c", 5);
  JointMap map;
  const auto s3 = clip_social_pose_3d(t, map);
  CHECK(s3.values.size() == 12);
  CHECK(project_2d(s3).values.size() == 8);
  CHECK(clip_joint_feature(t, map).values.size() == 270);
}

TEST_CASE("rigid-translation equivariance") {
  Rng rng(13);
  JointMap map;
  for (int trial = 0; trial < 20; ++trial) {
    const auto t = random_track(rng, "c", 4);
    const Eigen::Vector3d delta(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(0.1, 2));
    JointTrack shifted = t;
    for (auto& frame : shifted.frames)
      for (auto& agent : frame) {
        agent.translation.x() += delta.x();
        agent.translation.y() += delta.y();
        agent.bev_depth += delta.z();
      }
    const auto f0 = clip_social_pose_3d(t, map);
    const auto f1 = clip_social_pose_3d(shifted, map);
    for (int a = 0; a < 2; ++a) {
      CHECK((f1.values.segment<3>(6 * a) - f0.values.segment<3>(6 * a) - delta).norm() < 1e-12);
      CHECK((f1.values.segment<3>(6 * a + 3) - f0.values.segment<3>(6 * a + 3)).norm() < 1e-12);
    }
  }
}

TEST_CASE("per-frame directions are unit; temporal averages are not longer") {
  Rng rng(17);
  JointMap map;
  for (int trial = 0; trial < 20; ++trial) {
    const auto t = random_track(rng, "c", 6);
    for (const auto& frame : t.frames)
      for (const auto& agent : frame)
        CHECK(std::abs(head_direction(absolute_joints(agent), map).norm() - 1.0) < 1e-12);
    const auto f = clip_social_pose_3d(t, map);
    CHECK(f.values.segment<3>(3).norm() <= 1.0 + 1e-12);
    CHECK(f.values.segment<3>(9).norm() <= 1.0 + 1e-12);
  }
}

TEST_CASE("agent input order does not matter under canonical ordering") {
  Rng rng(19);
  JointMap map;
  for (int trial = 0; trial < 20; ++trial) {
    const auto t = random_track(rng, "c", 3);
    JointTrack swapped = t;
    for (auto& frame : swapped.frames) std::swap(frame[0], frame[1]);
    CHECK(clip_social_pose_3d(t, map).values == clip_social_pose_3d(swapped, map).values);
    CHECK(clip_joint_feature(t, map).values == clip_joint_feature(swapped, map).values);
  }
}

TEST_CASE("projecting then averaging equals averaging then projecting") {
  Rng rng(23);
  JointMap map;
  for (int trial = 0; trial < 10; ++trial) {
    const auto t = random_track(rng, "c", 5);
    const auto avg_then_2d = project_2d(clip_social_pose_3d(t, map));

    // framewise oracle: canonical agent order from the temporal means, then
    // per-frame (x, y, dx, dy) averaged over frames
    std::array<Eigen::Vector3d, 2> mean_center = {Eigen::Vector3d::Zero(), Eigen::Vector3d::Zero()};
    for (const auto& frame : t.frames)
      for (int a = 0; a < 2; ++a)
        mean_center[static_cast<std::size_t>(a)] += head_center(absolute_joints(frame[a]), map);
    const bool swap = mean_center[1].x() < mean_center[0].x();
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(8);
    for (const auto& frame : t.frames)
      for (int slot = 0; slot < 2; ++slot) {
        const auto& agent = frame[static_cast<std::size_t>(swap ? 1 - slot : slot)];
        const auto abs = absolute_joints(agent);
        const Eigen::Vector3d hc = head_center(abs, map);
        const Eigen::Vector3d dir = head_direction(abs, map);
        acc[4 * slot + 0] += hc.x();
        acc[4 * slot + 1] += hc.y();
        acc[4 * slot + 2] += dir.x();
        acc[4 * slot + 3] += dir.y();
      }
    acc /= static_cast<double>(t.frames.size());
    CHECK(avg_then_2d.values.isApprox(acc, 1e-12));
  }
}

TEST_CASE("permissive mode keeps clips with enough valid frames") {
  JointMap map;
  const auto good_a = make_agent({0, 0, 2}, {0, 0, -0.3});
  const auto good_b = make_agent({1, 0, 2}, {0, 0, -0.3});
  AgentFrame bad = good_a;
  bad.bev_depth = -1.0;

  JointTrack t = one_frame_track("c", good_a, good_b);
  t.frames.push_back({good_a, good_b});
  t.frames.push_back({bad, good_b});

  CHECK_THROWS_AS(clip_social_pose_3d(t, map), DataError);  // strict default

  ExtractOptions permissive;
  permissive.min_frame_coverage = 0.5;
  const auto f = clip_social_pose_3d(t, map, permissive);
  Eigen::VectorXd expected(12);
  expected << 0, 0, 2, 0, 0, -1, 1, 0, 2, 0, 0, -1;
  CHECK(f.values.isApprox(expected, 1e-12));

  permissive.min_frame_coverage = 0.9;  // 2/3 valid < 0.9
  CHECK_THROWS_AS(clip_social_pose_3d(t, map, permissive), DataError);
}
