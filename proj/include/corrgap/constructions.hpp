#pragma once

#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "corrgap/stochastic.hpp"

namespace corrgap::cons {

using Eigen::VectorXd;

struct ClosedForms {
    double loss_two_stage = 0.0;
    double loss_e2e = 0.0;
};

// A constructed stochastic optimization problem together with the candidate
// deterministic predictions an end-to-end learner could output.
struct GapInstance {
    stoch::DiscreteDistribution dist;
    stoch::LossSpec spec;
    std::optional<ClosedForms> closed_forms;
    std::string label;
    stoch::PredictionUse prediction_use = stoch::PredictionUse::kPointValue;
    std::vector<VectorXd> e2e_predictions;
    std::optional<VectorXd> constructive_prediction;
};

struct GapReport {
    double loss_two_stage = 0.0;
    double loss_e2e = 0.0;
    double loss_opt = 0.0;
    double ratio_ts_over_e2e = 1.0;
    double ratio_ts_over_opt = 1.0;
    VectorXd z_two_stage, z_e2e, z_opt;
    std::string label;
};

struct ConsError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct WitnessInvalid : ConsError {
    using ConsError::ConsError;
};
struct InvariantViolation : ConsError {
    using ConsError::ConsError;
};
struct NoSupportingSet : ConsError {
    using ConsError::ConsError;
};

// Decision induced by a deterministic prediction under the instance's
// prediction semantics.
stoch::Optimum decision_from_prediction(const GapInstance& inst,
                                        const VectorXd& prediction);

// Measures two-stage / end-to-end / stochastic-optimum losses with the
// enumeration oracle. End-to-end is taken as the best candidate prediction;
// when a constructive prediction is present it must attain that best value.
GapReport measure_gap(const GapInstance& inst);

// ---- pairwise-product gap (unbounded in d) ------------------------------

struct ProductGap {
    int d = 1;
    double big_n = 10.0;
    double eps = 0.01;
    double constant = 1.0;
    GapInstance block;  // a single coordinate block: y in R^4, z in R^2
    std::optional<GapInstance> explicit_instance;  // populated when 2^d is small
    ClosedForms closed;
};

ProductGap build_product_gap(int d, double big_n, double eps, double constant);
// Per-block enumeration composed over the d independent blocks.
GapReport measure_product_gap(const ProductGap& pg);

// ---- generic nonlinear-gamma gap ----------------------------------------

GapInstance build_nonlinear_gap(const std::function<double(double, double)>& gamma,
                                const stoch::NonlinearityWitness& witness);

// ---- end-to-end suboptimality counterexample ----------------------------

GapInstance build_prop1_counterexample(double big_c, double eps);

struct Prop1GridReport {
    double loss_star = 0.0;
    double min_true_loss = 0.0;
    double argmin_p1 = 0.0, argmin_p2 = 0.0;
    bool every_point_exceeds_star = false;
};

Prop1GridReport verify_e2e_suboptimal(const GapInstance& inst, double grid_step);

// ---- price-of-correlation example problems ------------------------------

// First stage buys hub capacity z at c_first[z]; realized unit demands are
// topped up at c_second per shortfall schedule.
struct FlowParams {
    std::vector<double> c_first;   // index by capacity 0..n
    std::vector<double> c_second;  // index by shortfall 0..n
    stoch::DiscreteDistribution events;
};

// Disjoint subsets covering the item set; second stage pays c_second per
// realized item in the uncovered subset holding the most realized items.
struct SetCoverParams {
    int n_items = 0;
    std::vector<std::vector<int>> subsets;
    double c_first = 0.0;
    double c_second = 0.0;
    stoch::DiscreteDistribution events;
};

// Choose between paying the realized submodular cost c(S) or a constant.
struct SubmodularParams {
    int n_items = 0;
    std::vector<double> cost;  // indexed by item bitmask, size 2^n
    double threshold = 0.0;
    stoch::DiscreteDistribution events;
};

enum class PocKind { kFlow, kSetCover, kSubmodular };

struct PocInstance {
    PocKind kind = PocKind::kFlow;
    stoch::DiscreteDistribution dist;
    stoch::LossSpec spec;
    std::variant<FlowParams, SetCoverParams, SubmodularParams> params;
};

PocInstance build_poc_example(const FlowParams& params);
PocInstance build_poc_example(const SetCoverParams& params);
PocInstance build_poc_example(const SubmodularParams& params);

// Marginals that make the independent proxy reproduce the stochastic optimum.
VectorXd e2e_constructive_marginals(const PocInstance& inst,
                                    const stoch::Optimum& z_star);

}  // namespace corrgap::cons
