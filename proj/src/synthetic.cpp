#include "corrgap/synthetic.hpp"

#include <cmath>
#include <cstring>

namespace corrgap::synth {

double SplitMix64::next_normal() {
    double u1 = next_unit();
    double u2 = next_unit();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

std::uint64_t SplitMix64::mix(std::uint64_t a, std::uint64_t b) {
    SplitMix64 g(a ^ (b * 0xD1B54A32D192ED03ull + 0x2545F4914F6CDD1Dull));
    return g.next_u64();
}

void DistConfig::validate() const {
    if (std::abs(rho) > 1.0) throw SynthError("|rho| must be <= 1");
    if (sigma_li < 0 || sigma_t < 0 || sigma_d < 0)
        throw SynthError("sigmas must be nonnegative");
    instance().validate();
}

std::vector<Sample> sample(const DistConfig& cfg, int count, std::uint64_t seed) {
    cfg.validate();
    if (count < 1) throw SynthError("count must be >= 1");

    std::uint64_t rho_bits;
    double rho = cfg.rho;
    std::memcpy(&rho_bits, &rho, sizeof(rho_bits));
    SplitMix64 rng(SplitMix64::mix(seed, rho_bits));

    const fl::FLInstance inst = cfg.instance();
    std::vector<bool> in_f1(cfg.m, false);
    for (int f : inst.f1) in_f1[f] = true;

    const double l_std = std::abs(cfg.rho) * cfg.sigma_li;
    const double t1_std = std::sqrt(std::max(0.0, 1.0 - cfg.rho * cfg.rho)) * cfg.sigma_t;
    const double coupling_sign = cfg.rho > 0 ? 1.0 : (cfg.rho < 0 ? -1.0 : 0.0);

    std::vector<Sample> out;
    out.reserve(count);
    for (int s = 0; s < count; ++s) {
        Sample smp;
        smp.T.resize(cfg.n, cfg.m);
        smp.d.resize(cfg.n);
        for (int c = 0; c < cfg.n; ++c) {
            double l = l_std * rng.next_normal();
            for (int f = 0; f < cfg.m; ++f) {
                if (in_f1[f])
                    smp.T(c, f) = cfg.mu_f1 + coupling_sign * l + t1_std * rng.next_normal();
                else
                    smp.T(c, f) = cfg.mu_f2 + cfg.sigma_t * rng.next_normal();
            }
            smp.d(c) = l + cfg.mu_d + cfg.sigma_d * rng.next_normal();
        }
        out.push_back(std::move(smp));
    }
    return out;
}

std::pair<std::vector<Sample>, std::vector<Sample>> split(
    const std::vector<Sample>& samples, int test_count) {
    if (test_count < 0 || test_count >= static_cast<int>(samples.size()))
        throw TestCountTooLarge("test_count must be < sample count");
    const std::size_t cut = samples.size() - static_cast<std::size_t>(test_count);
    std::vector<Sample> train(samples.begin(), samples.begin() + cut);
    std::vector<Sample> test(samples.begin() + cut, samples.end());
    return {std::move(train), std::move(test)};
}

}  // namespace corrgap::synth
