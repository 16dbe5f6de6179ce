#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "corrgap/facility.hpp"
#include "corrgap/synthetic.hpp"

namespace corrgap::learn {

using Eigen::MatrixXd;

struct CoefficientModel {
    MatrixXd theta;  // n x m predicted demand-weighted travel times
    std::string provenance;
};

struct TrainConfig {
    double lr = 0.01;
    int iterations = 500;
    double zeta = 10.0;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;

    void validate() const;
};

struct TrainTrace {
    std::vector<double> loss_per_iteration;
    std::vector<double> gradient_norms;
};

struct LearnError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct EmptyTrainingSet : LearnError {
    using LearnError::LearnError;
};
struct NonFiniteLoss : LearnError {
    using LearnError::LearnError;
};

// theta_{c,f} = mean(T_{c,f}) * mean(d_c)
CoefficientModel fit_two_stage(const std::vector<synth::Sample>& train);

// theta_{c,f} = mean(T_{c,f} * d_c)
CoefficientModel fit_opt(const std::vector<synth::Sample>& train);

// per-edge empirical mean of T (.) d over the training set; the full-batch
// training target for the end-to-end loss c'z
MatrixXd mean_product_costs(const std::vector<synth::Sample>& train);

struct AdamState {
    MatrixXd m;
    MatrixXd v;
    int t = 0;

    static AdamState zero(int rows, int cols) {
        return {MatrixXd::Zero(rows, cols), MatrixXd::Zero(rows, cols), 0};
    }
};

void adam_step(AdamState& state, MatrixXd& params, const MatrixXd& grad,
               const TrainConfig& cfg);

// Backpropagation through the smoothed assignment QP: per iteration solve the
// relaxation for the current theta, evaluate c'z against the empirical mean
// product costs, pull the gradient back through the KKT system, ADAM-update.
std::pair<CoefficientModel, TrainTrace> fit_end_to_end(
    const std::vector<synth::Sample>& train, const fl::FLInstance& inst,
    const TrainConfig& cfg, std::uint64_t seed);

// Forward training loss for a given theta (used by gradient checks).
double end_to_end_loss(const MatrixXd& theta, const MatrixXd& cbar,
                       const fl::FLInstance& inst, double zeta,
                       double solver_tol = 1e-10);

}  // namespace corrgap::learn
