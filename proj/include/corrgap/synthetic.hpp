#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "corrgap/facility.hpp"

namespace corrgap::synth {

// Counter-based SplitMix64 stream: the i-th output is a pure function of
// (seed, i), so streams are bit-reproducible across platforms.
class SplitMix64 {
  public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t x = (state_ += 0x9E3779B97F4A7C15ull);
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
        x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
        return x ^ (x >> 31);
    }

    // uniform in (0, 1]
    double next_unit() {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    // standard normal via Box-Muller (cosine branch)
    double next_normal();

    static std::uint64_t mix(std::uint64_t a, std::uint64_t b);

  private:
    std::uint64_t state_;
};

struct DistConfig {
    int n = 20;
    int m = 20;
    int k = 1;
    double rho = 0.0;
    double sigma_li = 20.25;
    double sigma_t = 3.0;
    double sigma_d = 3.0;
    double mu_f1 = 5.5;
    double mu_f2 = 6.0;
    double mu_d = 5.0;

    void validate() const;
    fl::FLInstance instance() const { return fl::FLInstance::make(n, m, k); }
};

struct Sample {
    Eigen::MatrixXd T;  // n x m travel times
    Eigen::VectorXd d;  // n demands
};

struct SynthError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct TestCountTooLarge : SynthError {
    using SynthError::SynthError;
};

// Latent-factor model coupling travel times and demand. Per customer c:
//   l_c     ~ N(0, rho^2 sigma_li^2)
//   T_{c,f} ~ N(mu_f1 + sign(rho) l_c, (1 - rho^2) sigma_t^2)   f in F1
//   T_{c,f} ~ N(mu_f2, sigma_t^2)                               f in F2
//   d_c     ~ N(l_c + mu_d, sigma_d^2)
// The latent factor enters the F1 travel-time mean with the sign of rho, so
// corr(T, d) on F1 edges moves from -1 through 0 to +1 as rho does.
std::vector<Sample> sample(const DistConfig& cfg, int count, std::uint64_t seed);

std::pair<std::vector<Sample>, std::vector<Sample>> split(
    const std::vector<Sample>& samples, int test_count);

}  // namespace corrgap::synth
