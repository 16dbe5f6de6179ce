#include "doctest.h"

#include <cmath>
#include <vector>

#include "corrgap/learners.hpp"
#include "corrgap/qp.hpp"

using namespace corrgap;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

std::vector<synth::Sample> hand_samples() {
    // two samples with correlated T(.,0) and d: the product mean differs from
    // the product of means on column 0
    synth::Sample a, b;
    a.T = MatrixXd(2, 2);
    a.T << 2, 1, 4, 1;
    a.d = VectorXd(2);
    a.d << 1, 3;
    b.T = MatrixXd(2, 2);
    b.T << 6, 1, 8, 1;
    b.d = VectorXd(2);
    b.d << 3, 5;
    return {a, b};
}

}  // namespace

TEST_CASE("two-stage fit multiplies the separate means") {
    auto model = learn::fit_two_stage(hand_samples());
    CHECK(model.provenance == "two_stage");
    // mean T = [[4,1],[6,1]], mean d = (2,4)
    MatrixXd expected(2, 2);
    expected << 8, 2, 24, 4;
    CHECK(model.theta == expected);
    CHECK_THROWS_AS(learn::fit_two_stage({}), learn::EmptyTrainingSet);
}

TEST_CASE("opt fit averages the realized products") {
    auto model = learn::fit_opt(hand_samples());
    CHECK(model.provenance == "opt");
    // row 0: (1*2+3*6)/2=10, (1*1+3*1)/2=2; row 1: (3*4+5*8)/2=26, (3+5)/2=4
    MatrixXd expected(2, 2);
    expected << 10, 2, 26, 4;
    CHECK(model.theta == expected);
    CHECK(learn::mean_product_costs(hand_samples()) == expected);
    CHECK_THROWS_AS(learn::fit_opt({}), learn::EmptyTrainingSet);
}

TEST_CASE("train config validation") {
    learn::TrainConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.lr = 0.0;
    CHECK_THROWS_AS(cfg.validate(), learn::LearnError);
    cfg = {};
    cfg.zeta = -1.0;
    CHECK_THROWS_AS(cfg.validate(), learn::LearnError);
    cfg = {};
    cfg.iterations = 0;
    CHECK_THROWS_AS(cfg.validate(), learn::LearnError);
}

TEST_CASE("adam step matches a hand-rolled scalar reference") {
    learn::TrainConfig cfg;
    cfg.lr = 0.05;

    // first step with unit gradient moves by about -lr
    learn::AdamState st = learn::AdamState::zero(1, 1);
    MatrixXd params = MatrixXd::Zero(1, 1);
    learn::adam_step(st, params, MatrixXd::Ones(1, 1), cfg);
    CHECK(params(0, 0) == doctest::Approx(-cfg.lr).epsilon(1e-6));
    CHECK(st.t == 1);

    // several steps with varying gradients against an independent scalar loop
    st = learn::AdamState::zero(1, 1);
    params.setConstant(2.0);
    double p = 2.0, m = 0.0, v = 0.0;
    const double grads[] = {1.5, -0.3, 0.0, 4.0};
    for (int t = 1; t <= 4; ++t) {
        double g = grads[t - 1];
        learn::adam_step(st, params, MatrixXd::Constant(1, 1, g), cfg);
        m = cfg.adam_beta1 * m + (1.0 - cfg.adam_beta1) * g;
        v = cfg.adam_beta2 * v + (1.0 - cfg.adam_beta2) * g * g;
        double mhat = m / (1.0 - std::pow(cfg.adam_beta1, t));
        double vhat = v / (1.0 - std::pow(cfg.adam_beta2, t));
        p -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.adam_eps);
        CHECK(params(0, 0) == doctest::Approx(p).epsilon(1e-14));
    }
}

TEST_CASE("end-to-end loss gradient agrees with finite differences") {
    fl::FLInstance inst = fl::FLInstance::make(2, 2, 1);
    MatrixXd theta(2, 2), cbar(2, 2);
    theta << 3.0, 2.5, 1.0, 4.0;
    cbar << 2.0, 1.0, 5.0, 0.5;
    const double zeta = 5.0;

    fl::SmoothedQp sq = fl::to_smoothed_qp(inst, theta, zeta);
    qp::SolverOptions opts;
    opts.tol = 1e-11;
    qp::Solution sol = qp::solve(sq.problem, opts);
    VectorXd upstream = VectorXd::Zero(sq.problem.c.size());
    for (int c = 0; c < 2; ++c)
        for (int f = 0; f < 2; ++f) upstream(sq.z_index(c, f)) = cbar(c, f);
    VectorXd g = qp::differentiate_wrt_cost(sq.problem, sol, upstream);

    const double h = 1e-5;
    for (int c = 0; c < 2; ++c) {
        for (int f = 0; f < 2; ++f) {
            MatrixXd tp = theta, tm = theta;
            tp(c, f) += h;
            tm(c, f) -= h;
            double fd = (learn::end_to_end_loss(tp, cbar, inst, zeta, 1e-11) -
                         learn::end_to_end_loss(tm, cbar, inst, zeta, 1e-11)) /
                        (2 * h);
            CHECK(g(sq.z_index(c, f)) == doctest::Approx(fd).epsilon(1e-4));
        }
    }
}

TEST_CASE("end-to-end training reduces the loss under correlation") {
    synth::DistConfig dc;
    dc.n = 2;
    dc.m = 2;
    dc.rho = 0.9;
    auto train = synth::sample(dc, 60, 5);

    learn::TrainConfig cfg;
    cfg.iterations = 40;
    cfg.lr = 0.5;
    fl::FLInstance inst = fl::FLInstance::make(dc.n, dc.m, 1);
    auto [model, trace] = learn::fit_end_to_end(train, inst, cfg, 11);
    CHECK(model.provenance == "end_to_end");
    REQUIRE(trace.loss_per_iteration.size() == 40);
    REQUIRE(trace.gradient_norms.size() == 40);
    CHECK(trace.loss_per_iteration.back() < trace.loss_per_iteration.front());

    // bit-reproducible given the same seed, jitter differs across seeds
    auto [again, trace2] = learn::fit_end_to_end(train, inst, cfg, 11);
    CHECK(again.theta == model.theta);
    CHECK(trace2.loss_per_iteration == trace.loss_per_iteration);
    cfg.iterations = 1;
    auto [other, trace3] = learn::fit_end_to_end(train, inst, cfg, 12);
    CHECK(other.theta != model.theta);

    CHECK_THROWS_AS(learn::fit_end_to_end({}, inst, cfg, 1),
                    learn::EmptyTrainingSet);
}
