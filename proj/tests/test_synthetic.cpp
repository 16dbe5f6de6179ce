#include "doctest.h"

#include <cmath>

#include "corrgap/synthetic.hpp"

using namespace corrgap;

namespace {

// empirical correlation between T(., f) entries over F1 and d
double corr_t_d(const std::vector<synth::Sample>& samples,
                const std::vector<int>& facilities) {
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    double count = 0;
    for (const auto& s : samples) {
        for (int c = 0; c < s.T.rows(); ++c) {
            for (int f : facilities) {
                double x = s.T(c, f), y = s.d(c);
                sx += x;
                sy += y;
                sxx += x * x;
                syy += y * y;
                sxy += x * y;
                count += 1;
            }
        }
    }
    double mx = sx / count, my = sy / count;
    double vx = sxx / count - mx * mx, vy = syy / count - my * my;
    return (sxy / count - mx * my) / std::sqrt(vx * vy);
}

}  // namespace

TEST_CASE("config validation") {
    synth::DistConfig cfg;
    cfg.rho = 1.5;
    CHECK_THROWS_AS(cfg.validate(), synth::SynthError);
    cfg = {};
    cfg.n = 0;
    CHECK_THROWS_AS(cfg.validate(), std::runtime_error);
    cfg = {};
    CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("sampling is bit-reproducible and seed-sensitive") {
    synth::DistConfig cfg;
    cfg.n = 5;
    cfg.m = 4;
    cfg.rho = 0.6;
    auto a = synth::sample(cfg, 10, 42);
    auto b = synth::sample(cfg, 10, 42);
    auto c = synth::sample(cfg, 10, 43);
    REQUIRE(a.size() == 10);
    for (int i = 0; i < 10; ++i) {
        CHECK(a[i].T == b[i].T);
        CHECK(a[i].d == b[i].d);
    }
    CHECK(a[0].T != c[0].T);
}

TEST_CASE("rho streams differ but share the seed derivation") {
    synth::DistConfig cfg;
    cfg.n = 3;
    cfg.m = 3;
    cfg.rho = 0.2;
    auto a = synth::sample(cfg, 3, 7);
    cfg.rho = 0.4;
    auto b = synth::sample(cfg, 3, 7);
    CHECK(a[0].T != b[0].T);
}

TEST_CASE("moments at rho = 0") {
    synth::DistConfig cfg;  // n = m = 20
    auto samples = synth::sample(cfg, 3000, 1);
    double t1 = 0, t2 = 0, d1 = 0;
    int n1 = 0, nd = 0;
    for (const auto& s : samples) {
        for (int c = 0; c < cfg.n; ++c) {
            for (int f = 0; f < cfg.m / 2; ++f) {
                t1 += s.T(c, f);
                ++n1;
            }
            for (int f = cfg.m / 2; f < cfg.m; ++f) t2 += s.T(c, f);
            d1 += s.d(c);
            ++nd;
        }
    }
    CHECK(t1 / n1 == doctest::Approx(5.5).epsilon(0.01));   // mu_f1
    CHECK(t2 / n1 == doctest::Approx(6.0).epsilon(0.01));   // mu_f2
    CHECK(d1 / nd == doctest::Approx(5.0).epsilon(0.02));   // mu_d, no latent
}

TEST_CASE("correlation between F1 travel times and demand tracks rho") {
    synth::DistConfig cfg;
    cfg.n = 10;
    cfg.m = 10;
    std::vector<int> f1{0, 1, 2, 3, 4}, f2{5, 6, 7, 8, 9};
    double prev = -2.0;
    for (double rho : {-1.0, -0.5, 0.0, 0.5, 1.0}) {
        cfg.rho = rho;
        auto samples = synth::sample(cfg, 2000, 3);
        double c1 = corr_t_d(samples, f1);
        CHECK(c1 > prev);  // strictly increasing in rho
        prev = c1;
        if (rho == -1.0) CHECK(c1 < -0.9);
        if (rho == 0.0) CHECK(std::abs(c1) < 0.05);
        if (rho == 1.0) CHECK(c1 > 0.9);
        CHECK(std::abs(corr_t_d(samples, f2)) < 0.05);  // F2 stays decoupled
    }
}

TEST_CASE("split preserves order and sizes") {
    synth::DistConfig cfg;
    cfg.n = 2;
    cfg.m = 2;
    auto samples = synth::sample(cfg, 10, 5);
    auto [train, test] = synth::split(samples, 3);
    REQUIRE(train.size() == 7);
    REQUIRE(test.size() == 3);
    CHECK(train[0].T == samples[0].T);
    CHECK(test[0].T == samples[7].T);
    CHECK_THROWS_AS(synth::split(samples, 10), synth::SynthError);
}

TEST_CASE("SplitMix64 stream is a pure function of seed and index") {
    synth::SplitMix64 a(123), b(123);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
    CHECK(synth::SplitMix64::mix(1, 2) != synth::SplitMix64::mix(2, 1));
    synth::SplitMix64 c(9);
    for (int i = 0; i < 1000; ++i) {
        double u = c.next_unit();
        CHECK(u > 0.0);
        CHECK(u <= 1.0);
    }
}
