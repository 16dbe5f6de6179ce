#include "corrgap/learners.hpp"

#include <cmath>

#include "corrgap/qp.hpp"

namespace corrgap::learn {

void TrainConfig::validate() const {
    if (lr <= 0.0) throw LearnError("learning rate must be positive");
    if (zeta <= 0.0) throw LearnError("zeta must be positive");
    if (iterations < 1) throw LearnError("iterations must be >= 1");
}

CoefficientModel fit_two_stage(const std::vector<synth::Sample>& train) {
    if (train.empty()) throw EmptyTrainingSet("two-stage fit needs samples");
    const auto n = train.front().T.rows();
    const auto m = train.front().T.cols();
    MatrixXd mean_t = MatrixXd::Zero(n, m);
    Eigen::VectorXd mean_d = Eigen::VectorXd::Zero(n);
    for (const auto& s : train) {
        mean_t += s.T;
        mean_d += s.d;
    }
    mean_t /= static_cast<double>(train.size());
    mean_d /= static_cast<double>(train.size());
    CoefficientModel model;
    model.theta = mean_d.asDiagonal() * mean_t;
    model.provenance = "two_stage";
    return model;
}

MatrixXd mean_product_costs(const std::vector<synth::Sample>& train) {
    if (train.empty()) throw EmptyTrainingSet("cost target needs samples");
    const auto n = train.front().T.rows();
    const auto m = train.front().T.cols();
    MatrixXd acc = MatrixXd::Zero(n, m);
    for (const auto& s : train) acc += s.d.asDiagonal() * s.T;
    return acc / static_cast<double>(train.size());
}

CoefficientModel fit_opt(const std::vector<synth::Sample>& train) {
    CoefficientModel model;
    model.theta = mean_product_costs(train);
    model.provenance = "opt";
    return model;
}

void adam_step(AdamState& state, MatrixXd& params, const MatrixXd& grad,
               const TrainConfig& cfg) {
    state.t += 1;
    state.m = cfg.adam_beta1 * state.m + (1.0 - cfg.adam_beta1) * grad;
    state.v = cfg.adam_beta2 * state.v.array().matrix() +
              (1.0 - cfg.adam_beta2) * grad.cwiseProduct(grad);
    const double bc1 = 1.0 - std::pow(cfg.adam_beta1, state.t);
    const double bc2 = 1.0 - std::pow(cfg.adam_beta2, state.t);
    MatrixXd mhat = state.m / bc1;
    MatrixXd vhat = state.v / bc2;
    params.array() -=
        cfg.lr * mhat.array() / (vhat.array().sqrt() + cfg.adam_eps);
}

namespace {

struct ForwardResult {
    double loss = 0.0;
    qp::Solution solution;
};

ForwardResult forward(fl::SmoothedQp& sq, const MatrixXd& theta,
                      const Eigen::VectorXd& cbar_flat, double tol) {
    const int n = sq.n, m = sq.m;
    for (int c = 0; c < n; ++c)
        for (int f = 0; f < m; ++f) sq.problem.c(sq.z_index(c, f)) = theta(c, f);
    qp::SolverOptions opts;
    opts.tol = tol;
    ForwardResult res;
    res.solution = qp::solve(sq.problem, opts);
    res.loss = cbar_flat.dot(res.solution.z.head(n * m));
    return res;
}

Eigen::VectorXd flatten(const MatrixXd& M) {
    Eigen::VectorXd v(M.size());
    for (int c = 0; c < M.rows(); ++c)
        for (int f = 0; f < M.cols(); ++f) v(c * M.cols() + f) = M(c, f);
    return v;
}

}  // namespace

double end_to_end_loss(const MatrixXd& theta, const MatrixXd& cbar,
                       const fl::FLInstance& inst, double zeta, double solver_tol) {
    fl::SmoothedQp sq = fl::to_smoothed_qp(inst, theta, zeta);
    return forward(sq, theta, flatten(cbar), solver_tol).loss;
}

std::pair<CoefficientModel, TrainTrace> fit_end_to_end(
    const std::vector<synth::Sample>& train, const fl::FLInstance& inst,
    const TrainConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    if (train.empty()) throw EmptyTrainingSet("end-to-end fit needs samples");

    const int n = inst.n, m = inst.m;
    MatrixXd cbar = mean_product_costs(train);
    Eigen::VectorXd cbar_flat = flatten(cbar);

    // warm start at the two-stage table plus a small jitter
    MatrixXd theta = fit_two_stage(train).theta;
    synth::SplitMix64 rng(synth::SplitMix64::mix(seed, 0x7261696E696E67ull));
    for (int c = 0; c < n; ++c)
        for (int f = 0; f < m; ++f) theta(c, f) += 0.01 * rng.next_normal();

    fl::SmoothedQp sq = fl::to_smoothed_qp(inst, theta, cfg.zeta);
    AdamState adam = AdamState::zero(n, m);
    TrainTrace trace;

    for (int it = 0; it < cfg.iterations; ++it) {
        // 1e-6 sits safely above the IPM's numerical floor at this data
        // scale; the full-system backward pass is insensitive to the rest
        ForwardResult fwd = forward(sq, theta, cbar_flat, 1e-6);
        if (!std::isfinite(fwd.loss))
            throw NonFiniteLoss("training loss diverged at iteration " +
                                std::to_string(it));
        Eigen::VectorXd upstream = Eigen::VectorXd::Zero(n * m + m);
        upstream.head(n * m) = cbar_flat;
        Eigen::VectorXd g = qp::differentiate_wrt_cost(sq.problem, fwd.solution, upstream);
        MatrixXd grad(n, m);
        for (int c = 0; c < n; ++c)
            for (int f = 0; f < m; ++f) grad(c, f) = g(sq.z_index(c, f));
        trace.loss_per_iteration.push_back(fwd.loss);
        trace.gradient_norms.push_back(grad.norm());
        adam_step(adam, theta, grad, cfg);
    }

    CoefficientModel model;
    model.theta = theta;
    model.provenance = "end_to_end";
    return {model, trace};
}

}  // namespace corrgap::learn
