#include "doctest.h"

#include <cmath>
#include <limits>

#include "corrgap/stochastic.hpp"
#include "generators.hpp"

using namespace corrgap;
using Eigen::VectorXd;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

VectorXd vec(std::initializer_list<double> vals) {
    VectorXd v(static_cast<Eigen::Index>(vals.size()));
    int i = 0;
    for (double x : vals) v(i++) = x;
    return v;
}

stoch::LossSpec linear_spec(int d) {
    stoch::LossSpec spec;
    spec.f = [](const VectorXd& y, const VectorXd& z) { return y.dot(z); };
    for (int i = 0; i < d; ++i) {
        VectorXd z = VectorXd::Zero(d);
        z(i) = 1.0;
        spec.decisions.candidates.push_back(z);
    }
    return spec;
}

}  // namespace

TEST_CASE("validate rejects bad distributions") {
    stoch::DiscreteDistribution dist;
    CHECK_THROWS_AS(dist.validate(), stoch::StochError);
    dist.scenarios = {{vec({1.0}), 0.7}, {vec({0.0}), 0.2}};
    CHECK_THROWS_AS(dist.validate(), stoch::StochError);  // sums to 0.9
    dist.scenarios = {{vec({1.0}), 1.5}, {vec({0.0}), -0.5}};
    CHECK_THROWS_AS(dist.validate(), stoch::StochError);
    dist.scenarios = {{vec({1.0}), 0.5}, {vec({0.0, 1.0}), 0.5}};
    CHECK_THROWS_AS(dist.validate(), stoch::StochError);
}

TEST_CASE("expected loss skips zero-probability infinite scenarios") {
    stoch::DiscreteDistribution dist;
    dist.scenarios = {{vec({0.0}), 1.0}, {vec({1.0}), 0.0}};
    stoch::LossSpec spec;
    spec.f = [](const VectorXd& y, const VectorXd&) {
        return y(0) > 0.5 ? kInf : 2.0;
    };
    spec.decisions.candidates = {vec({0.0})};
    CHECK(stoch::expected_loss(dist, vec({0.0}), spec) == 2.0);
    dist.scenarios[1].p = 0.5;
    dist.scenarios[0].p = 0.5;
    CHECK(stoch::expected_loss(dist, vec({0.0}), spec) == kInf);
}

TEST_CASE("solve_stochastic breaks ties toward the lowest index") {
    stoch::DiscreteDistribution dist;
    dist.scenarios = {{vec({1.0}), 1.0}};
    stoch::LossSpec spec;
    spec.f = [](const VectorXd&, const VectorXd&) { return 3.0; };
    spec.decisions.candidates = {vec({0.0}), vec({1.0}), vec({2.0})};
    CHECK(stoch::solve_stochastic(dist, spec).index == 0);
    stoch::LossSpec empty;
    empty.f = spec.f;
    CHECK_THROWS_AS(stoch::solve_stochastic(dist, empty),
                    stoch::EmptyDecisionSpace);
}

TEST_CASE("independent proxy is idempotent on product measures") {
    // independent coordinates: P(y0=1)=1/4, P(y1=1)=1/2
    stoch::DiscreteDistribution dist;
    dist.scenarios = {{vec({0.0, 0.0}), 0.375},
                      {vec({0.0, 1.0}), 0.375},
                      {vec({1.0, 0.0}), 0.125},
                      {vec({1.0, 1.0}), 0.125}};
    stoch::DiscreteDistribution prod = stoch::independent_proxy(dist);
    REQUIRE(prod.scenarios.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(prod.scenarios[i].y == dist.scenarios[i].y);
        CHECK(prod.scenarios[i].p == dist.scenarios[i].p);
    }
}

TEST_CASE("independent proxy of a correlated pair") {
    stoch::DiscreteDistribution dist;
    dist.scenarios = {{vec({1.0, 1.0}), 0.5}, {vec({0.0, 0.0}), 0.5}};
    stoch::DiscreteDistribution prod = stoch::independent_proxy(dist);
    REQUIRE(prod.scenarios.size() == 4);
    // coordinate 0 most significant, values ascending
    CHECK(prod.scenarios[0].y == vec({0.0, 0.0}));
    CHECK(prod.scenarios[1].y == vec({0.0, 1.0}));
    CHECK(prod.scenarios[2].y == vec({1.0, 0.0}));
    CHECK(prod.scenarios[3].y == vec({1.0, 1.0}));
    for (const auto& s : prod.scenarios) CHECK(s.p == 0.25);
}

TEST_CASE("bernoulli product drops zero atoms and matches the proxy") {
    VectorXd marg = vec({0.25, 0.0, 0.5});
    stoch::DiscreteDistribution prod = stoch::bernoulli_product(marg);
    CHECK(prod.scenarios.size() == 4);  // middle coordinate pinned to 0
    double total = 0.0;
    for (const auto& s : prod.scenarios) {
        CHECK(s.y(1) == 0.0);
        total += s.p;
    }
    CHECK(total == 1.0);
    CHECK_THROWS_AS(stoch::bernoulli_product(VectorXd::Constant(21, 0.5)),
                    stoch::SupportTooLarge);
    CHECK_THROWS_AS(stoch::bernoulli_product(vec({1.5})), stoch::StochError);
}

TEST_CASE("bernoulli product equals independent proxy on dyadic Boolean dists") {
    gen::SplitMix64 rng(101);
    for (int trial = 0; trial < 40; ++trial) {
        int dim = 2 + static_cast<int>(rng.next_u64() % 4);
        auto dist = gen::random_boolean_dist(rng, dim, 3 + rng.next_u64() % 4);
        auto proxy = stoch::independent_proxy(dist);
        auto bern = stoch::bernoulli_product(dist.mean());
        // identical supports in identical order with identical probabilities,
        // except coordinates with a degenerate marginal collapse identically
        REQUIRE(proxy.scenarios.size() == bern.scenarios.size());
        for (std::size_t i = 0; i < proxy.scenarios.size(); ++i) {
            CHECK(proxy.scenarios[i].y == bern.scenarios[i].y);
            CHECK(proxy.scenarios[i].p == bern.scenarios[i].p);
        }
    }
}

TEST_CASE("two-stage point-value vs Bernoulli-marginal semantics") {
    // mean demand 0.5 each; f = z cost when any demand realizes
    stoch::DiscreteDistribution dist;
    dist.scenarios = {{vec({1.0, 1.0}), 0.5}, {vec({0.0, 0.0}), 0.5}};
    stoch::LossSpec spec;
    spec.f = [](const VectorXd& y, const VectorXd& z) {
        double any = std::max(y(0), y(1));
        return z(0) * 1.0 + (1.0 - z(0)) * 3.0 * any;
    };
    spec.decisions.candidates = {vec({0.0}), vec({1.0})};
    // point value: any = max(0.5,0.5) = 0.5 -> not buying costs 1.5 > 1
    auto pv = stoch::two_stage_decision(dist, spec, stoch::PredictionUse::kPointValue);
    CHECK(pv.decision(0) == 1.0);
    // Bernoulli: P(any) = 3/4 -> not buying costs 2.25 > 1, same here
    auto bm = stoch::two_stage_decision(dist, spec,
                                        stoch::PredictionUse::kBernoulliMarginal);
    CHECK(bm.decision(0) == 1.0);
    CHECK(pv.loss_true == 1.0);
}

TEST_CASE("two-stage consults the optional deterministic solver") {
    stoch::DiscreteDistribution dist;
    dist.scenarios = {{vec({2.0}), 1.0}};
    stoch::LossSpec spec;
    spec.f = [](const VectorXd& y, const VectorXd& z) {
        return (z(0) - y(0)) * (z(0) - y(0));
    };
    spec.decisions.candidates = {vec({0.0}), vec({1.0})};
    spec.decisions.solver = [](const VectorXd& y) { return y; };
    auto res = stoch::two_stage_decision(dist, spec);
    CHECK(res.decision(0) == 2.0);
    CHECK(res.index == -1);
}

TEST_CASE("price of correlation on a comonotone pair with a coupling loss") {
    // pay 2 if both fire under min; independence halves the joint probability
    stoch::DiscreteDistribution dist;
    dist.scenarios = {{vec({1.0, 1.0}), 0.5}, {vec({0.0, 0.0}), 0.5}};
    stoch::LossSpec spec;
    spec.f = [](const VectorXd& y, const VectorXd& z) {
        double both = y(0) * y(1);
        return z(0) * 1.2 + (1.0 - z(0)) * 2.0 * both;
    };
    spec.decisions.candidates = {vec({0.0}), vec({1.0})};
    auto rep = stoch::price_of_correlation(dist, spec);
    // truth: not buying costs 1.0 < 1.2; proxy: 2 * 1/4 = 0.5 -> also not buy
    CHECK(rep.loss_star == 1.0);
    CHECK(rep.loss_proxy == 1.0);
    CHECK(rep.poc == 1.0);
    CHECK(rep.boolean_support);
}

TEST_CASE("nonlinearity witness for the product and absence for linear") {
    auto prod = [](double a, double b) { return a * b; };
    auto w = stoch::find_nonlinearity_witness(prod, {0.0, 1.0, 2.0},
                                              {0.0, 1.0, 2.0});
    CHECK(std::abs(w.jensen_gap) > 1e-9);
    Eigen::Vector2d mix = w.alpha * w.y + (1.0 - w.alpha) * w.y_prime;
    double gap = prod(mix(0), mix(1)) -
                 (w.alpha * prod(w.y(0), w.y(1)) +
                  (1.0 - w.alpha) * prod(w.y_prime(0), w.y_prime(1)));
    CHECK(gap == w.jensen_gap);

    auto lin = [](double a, double b) { return 2.0 * a - 3.0 * b + 1.0; };
    CHECK_THROWS_AS(
        stoch::find_nonlinearity_witness(lin, {0.0, 1.0, 2.0}, {0.0, 1.0, 2.0}),
        stoch::NoWitnessFound);
}

TEST_CASE("boolean support detection ignores zero-probability scenarios") {
    stoch::DiscreteDistribution dist;
    dist.scenarios = {{vec({1.0, 0.0}), 1.0}, {vec({2.0, 0.0}), 0.0}};
    CHECK(dist.boolean_support());
    dist.scenarios[1].p = 0.0;
    dist.scenarios[0].p = 0.5;
    dist.scenarios.push_back({vec({0.5, 0.0}), 0.5});
    CHECK(!dist.boolean_support());
}

TEST_CASE("mean of a mixed-support distribution") {
    stoch::DiscreteDistribution dist;
    dist.scenarios = {{vec({4.0, -2.0}), 0.25}, {vec({0.0, 2.0}), 0.75}};
    CHECK(dist.mean() == vec({1.0, 1.0}));
}
