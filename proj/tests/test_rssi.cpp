#include <doctest.h>

#include <cmath>
#include <vector>

#include "fedloc/rssi.hpp"

using namespace fedloc;

namespace {
const ChannelParams kClean{2.0, 57.0, 0.0, 0.0, 0.0};
}

TEST_CASE("rssi_from_distance: reference constants") {
    CHECK(rssi_from_distance(1.0, kClean) == doctest::Approx(-57.0));
    CHECK(rssi_from_distance(2.0, kClean) == doctest::Approx(-63.0206).epsilon(1e-4));
    CHECK(rssi_from_distance(2.5, kClean) == doctest::Approx(-64.9588).epsilon(1e-4));
    CHECK_THROWS_AS(rssi_from_distance(0.0, kClean), std::domain_error);
    CHECK_THROWS_AS(rssi_from_distance(-1.0, kClean), std::domain_error);
}

TEST_CASE("distance_from_rssi: inverse model") {
    CHECK(distance_from_rssi(-57.0, kClean) == doctest::Approx(1.0));
    CHECK(distance_from_rssi(-63.0206, kClean) == doctest::Approx(2.0).epsilon(1e-3));
    CHECK(distance_from_rssi(-60.5227, kClean) == doctest::Approx(1.5).epsilon(1e-3));
}

TEST_CASE("round-trip identity and monotonicity over [0.1, 100]") {
    double prev_rssi = 1e300;
    for (int i = 0; i <= 1000; ++i) {
        const double d = 0.1 * std::pow(1000.0, i / 1000.0);
        const double rssi = rssi_from_distance(d, kClean);
        CHECK(distance_from_rssi(rssi, kClean) == doctest::Approx(d).epsilon(1e-9));
        CHECK(rssi < prev_rssi);
        prev_rssi = rssi;
    }
}

TEST_CASE("sample_noisy_rssi: noiseless channel is exact and integral") {
    Rng rng(1);
    for (int i = 0; i < 10; ++i) CHECK(sample_noisy_rssi(1.0, kClean, rng) == -57.0);
}

TEST_CASE("sample_noisy_rssi: whole numbers and seeded determinism") {
    ChannelParams noisy{2.0, 57.0, 2.0, 0.05, 8.0};
    Rng a(42), b(42);
    std::vector<double> seq;
    for (int i = 0; i < 200; ++i) {
        const double s = sample_noisy_rssi(2.0, noisy, a);
        CHECK(s == std::nearbyint(s));
        seq.push_back(s);
    }
    for (int i = 0; i < 200; ++i) CHECK(sample_noisy_rssi(2.0, noisy, b) == seq[size_t(i)]);
}

TEST_CASE("sample_noisy_rssi: empirical mean matches the noiseless value") {
    ChannelParams p{2.0, 57.0, 2.0, 0.0, 0.0};
    Rng rng(7);
    double sum = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) sum += sample_noisy_rssi(2.0, p, rng);
    CHECK(std::abs(sum / n - (-63.0206)) < 0.05);
}
