#include <doctest.h>

#include <cmath>
#include <random>

#include "fedloc/trilateration.hpp"

using namespace fedloc;

namespace {

std::vector<double> ranges(const std::vector<Eigen::Vector2d>& anchors,
                           const Eigen::Vector2d& p) {
    std::vector<double> out;
    for (const auto& a : anchors) out.push_back((p - a).norm());
    return out;
}

}  // namespace

TEST_CASE("trilaterate: recovers a known point from exact ranges") {
    const AnchorSet anchors{{{0, 0}, {4, 0}, {0, 4}, {4, 4}}};
    const Eigen::Vector2d truth(1.0, 1.0);
    const auto fix = trilaterate(anchors, ranges(anchors.positions, truth));
    CHECK((fix.p - truth).norm() < 1e-6);
    CHECK(fix.residual <= 1e-6);
}

TEST_CASE("trilaterate: equal ranges from square corners give the center") {
    const AnchorSet anchors{{{0, 0}, {4, 0}, {0, 4}, {4, 4}}};
    const double r = std::sqrt(8.0);
    const auto fix = trilaterate(anchors, {r, r, r, r});
    CHECK(fix.p.x() == doctest::Approx(2.0));
    CHECK(fix.p.y() == doctest::Approx(2.0));
}

TEST_CASE("trilaterate: exactly three anchors solve the square system") {
    const AnchorSet anchors{{{0, 0}, {2, 0}, {1, 2}}};
    const Eigen::Vector2d truth(1.0, 0.5);
    const auto fix = trilaterate(anchors, ranges(anchors.positions, truth));
    CHECK((fix.p - truth).norm() < 1e-6);
}

TEST_CASE("trilaterate: collinear anchors and count mismatches are rejected") {
    CHECK_THROWS_AS(trilaterate({{{0, 0}, {1, 0}, {2, 0}}}, {1.0, 1.0, 1.0}), ShapeError);
    CHECK_THROWS_AS(trilaterate({{{0, 0}, {1, 0}, {0, 1}}}, {1.0, 1.0}), ShapeError);
    CHECK_THROWS_AS(trilaterate({{{0, 0}, {1, 0}}}, {1.0, 1.0}), ShapeError);
}

TEST_CASE("trilaterate: random noiseless instances recover exactly") {
    std::mt19937_64 eng(5);
    std::uniform_real_distribution<double> coord(0.0, 10.0);
    std::uniform_int_distribution<int> count(3, 6);
    int done = 0;
    while (done < 200) {
        const int n = count(eng);
        std::vector<Eigen::Vector2d> anchors;
        for (int i = 0; i < n; ++i) anchors.push_back({coord(eng), coord(eng)});
        const Eigen::Vector2d truth(coord(eng), coord(eng));
        const auto dists = ranges(anchors, truth);
        bool degenerate = false;
        for (double d : dists) degenerate = degenerate || d < 1e-6;
        if (degenerate) continue;
        PositionFix fix;
        try {
            fix = trilaterate({anchors}, dists);
        } catch (const ShapeError&) {
            continue;  // random collinear draw
        }
        REQUIRE((fix.p - truth).norm() < 1e-6);
        REQUIRE(fix.residual <= 1e-6);
        ++done;
    }
}

TEST_CASE("trilaterate: rigid motion equivariance") {
    std::mt19937_64 eng(17);
    std::uniform_real_distribution<double> coord(0.0, 10.0);
    std::uniform_real_distribution<double> angle(0.0, 2 * M_PI);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<Eigen::Vector2d> anchors = {{coord(eng), coord(eng)},
                                                {coord(eng), coord(eng)},
                                                {coord(eng), coord(eng)},
                                                {coord(eng), coord(eng)}};
        const Eigen::Vector2d truth(coord(eng), coord(eng));
        const double th = angle(eng);
        const Eigen::Rotation2D<double> rot(th);
        const Eigen::Vector2d shift(coord(eng), coord(eng));

        PositionFix base;
        try {
            base = trilaterate({anchors}, ranges(anchors, truth));
        } catch (const ShapeError&) {
            continue;
        }
        std::vector<Eigen::Vector2d> moved;
        for (const auto& a : anchors) moved.push_back(rot * a + shift);
        const Eigen::Vector2d moved_truth = rot * truth + shift;
        const auto fix = trilaterate({moved}, ranges(moved, moved_truth));
        REQUIRE((fix.p - (rot * base.p + shift)).norm() < 1e-6);
    }
}

TEST_CASE("trilaterate: residual is positive for inconsistent ranges") {
    const AnchorSet anchors{{{0, 0}, {4, 0}, {0, 4}, {4, 4}}};
    auto dists = ranges(anchors.positions, {1.0, 1.0});
    dists[2] += 0.5;
    const auto fix = trilaterate(anchors, dists);
    CHECK(fix.residual > 0.0);
}
