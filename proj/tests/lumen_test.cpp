#include "softscreen/lumen.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace softscreen;
using namespace softscreen::lumen;

TEST(Lumen, PipeFixturesHaveTheirDiameters) {
    const auto f = paper_fixtures();
    for (auto [name, d] : {std::pair{"pipe74", 74.0}, std::pair{"pipe84", 84.0}, std::pair{"pipe94", 94.0}}) {
        const auto& l = f.at(name);
        EXPECT_TRUE(l.is_rigid());
        EXPECT_DOUBLE_EQ(l.local_radius(0.0), 0.5 * d);
        EXPECT_DOUBLE_EQ(l.local_radius(l.total_length()), 0.5 * d);
        EXPECT_EQ(l.elbows_entered(l.total_length()), 0);
    }
}

TEST(Lumen, PhantomHasOneRightAngleElbow) {
    const auto l = make_phantom(false);
    EXPECT_NEAR(l.total_length(), 600.0, 1e-9);
    const auto end = l.centerline_pose(l.total_length());
    EXPECT_NEAR(end.tangent[0], 0.0, 1e-12);
    EXPECT_NEAR(end.tangent[1], 1.0, 1e-12);
    EXPECT_EQ(l.elbows_entered(l.total_length()), 1);
    EXPECT_EQ(l.elbows_entered(10.0), 0);
}

TEST(Lumen, CenterlineIsArclengthParametrized) {
    const auto l = make_phantom(true);
    double len = 0.0;
    const int n = 6000;
    for (int i = 0; i < n; ++i) {
        const auto a = l.centerline_pose(l.total_length() * i / n).position;
        const auto b = l.centerline_pose(l.total_length() * (i + 1) / n).position;
        len += std::hypot(b[0] - a[0], b[1] - a[1], b[2] - a[2]);
    }
    EXPECT_NEAR(len, l.total_length(), 1e-3);
}

TEST(Lumen, WavinessStaysWithinAmplitude) {
    const auto l = make_phantom(false);
    for (double s = 0.0; s <= l.total_length(); s += 3.7) {
        EXPECT_LE(std::abs(l.local_radius(s) - 42.5), 2.0 + 1e-12);
    }
}

TEST(Lumen, SupportsMakeTheWallRigidLocally) {
    const auto l = make_phantom(false);
    EXPECT_TRUE(l.local_wall(0.0).rigid);
    const auto mid = l.local_wall(100.0);
    EXPECT_FALSE(mid.rigid);
    EXPECT_FALSE(mid.collapsed);
    EXPECT_GT(mid.stiffness_N_per_mm, 0.0);
}

TEST(Lumen, CollapsedPhantomHasNoSupportsAndPreloads) {
    const auto l = make_phantom(true);
    EXPECT_TRUE(l.supports().empty());
    EXPECT_TRUE(l.is_collapsed());
    const auto w = l.local_wall(0.0);
    EXPECT_TRUE(w.collapsed);
    EXPECT_GT(w.collapse_preload_N, 0.0);
}

TEST(Lumen, LubricationLowersSlidingFriction) {
    const auto l = make_phantom(false);
    EXPECT_LT(l.sliding_friction(), l.mu_wall());
    EXPECT_DOUBLE_EQ(make_pipe(84.0).sliding_friction(), make_pipe(84.0).mu_wall());
}

TEST(Lumen, OutOfRangeArclengthIsRejected) {
    const auto l = make_pipe(84.0);
    EXPECT_THROW(l.local_radius(-1.0), InvalidArgument);
    EXPECT_THROW(l.local_radius(l.total_length() + 1.0), InvalidArgument);
    EXPECT_THROW(l.local_radius(NAN), InvalidArgument);
}

TEST(Lumen, InvalidSegmentsAreRejected) {
    EXPECT_THROW(LumenModel({}, RigidWall{}, 0.5), InvalidArgument);
    EXPECT_THROW(LumenModel({LumenSegment{Straight{-5.0}, 80.0, {}}}, RigidWall{}, 0.5), InvalidArgument);
    EXPECT_THROW(LumenModel({LumenSegment{Straight{50.0}, 0.0, {}}}, RigidWall{}, 0.5), InvalidArgument);
    // diameter jump at a joint
    EXPECT_THROW(LumenModel({LumenSegment{Straight{50.0}, 80.0, {}}, LumenSegment{Straight{50.0}, 70.0, {}}},
                            RigidWall{}, 0.5),
                 InvalidArgument);
}
