#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>

namespace fedloc {

// Log-distance path-loss channel parameters.
struct ChannelParams {
    double n = 2.0;           // path-loss exponent
    double A = 57.0;          // system loss constant, dB (RSSI magnitude at 1 m)
    double sigma = 2.0;       // Gaussian shadowing std-dev, dB
    double spike_prob = 0.05; // probability of an impulse per sample
    double spike_mag = 8.0;   // impulse magnitude, dB
};

// Noiseless model value: RSSI(d) = -(10 n log10(d) + A), in dBm.
inline double rssi_from_distance(double d, const ChannelParams& params) {
    if (!(d > 0.0)) throw std::domain_error("rssi_from_distance: distance must be positive");
    return -(10.0 * params.n * std::log10(d) + params.A);
}

// Exact inverse: d = 10^((-rssi - A) / (10 n)).
inline double distance_from_rssi(double rssi, const ChannelParams& params) {
    return std::pow(10.0, (-rssi - params.A) / (10.0 * params.n));
}

// Seeded deterministic generator. Gaussian variates come from a fixed
// Box-Muller transform rather than std::normal_distribution, whose output
// sequence is implementation-defined; traces must be byte-identical across
// standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    // Uniform in [0, 1) with 53 random bits.
    double uniform() { return double(eng_() >> 11) * 0x1.0p-53; }

    double gaussian() {
        const double u1 = 1.0 - uniform();  // (0, 1], keeps log finite
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    bool bernoulli(double p) { return uniform() < p; }

    std::uint64_t raw() { return eng_(); }

private:
    std::mt19937_64 eng_;
};

// One channel sample: model value + shadowing + occasional impulse, rounded
// to the nearest whole dBm (RSSI readings are integers).
inline double sample_noisy_rssi(double d, const ChannelParams& params, Rng& rng) {
    double rssi = rssi_from_distance(d, params);
    rssi += params.sigma * rng.gaussian();
    if (rng.bernoulli(params.spike_prob))
        rssi += rng.bernoulli(0.5) ? params.spike_mag : -params.spike_mag;
    return std::nearbyint(rssi);
}

}  // namespace fedloc
