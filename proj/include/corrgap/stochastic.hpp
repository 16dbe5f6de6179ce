#pragma once

#include <Eigen/Core>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace corrgap::stoch {

using Eigen::VectorXd;

struct Scenario {
    VectorXd y;
    double p = 0.0;
};

struct DiscreteDistribution {
    std::vector<Scenario> scenarios;
    std::vector<std::string> coord_names;

    int dim() const {
        return scenarios.empty() ? 0 : static_cast<int>(scenarios.front().y.size());
    }
    void validate() const;
    VectorXd mean() const;
    // true when every coordinate support is contained in {0, 1}
    bool boolean_support() const;
};

struct DecisionSpace {
    std::vector<VectorXd> candidates;
    // optional deterministic solver z(y); candidates must still be provided
    // so enumeration stays exact
    std::function<VectorXd(const VectorXd&)> solver;
};

// Extended-real losses: f may return +infinity; inf * p = inf for p > 0 and
// inf * 0 = 0 (zero-probability scenarios are never evaluated).
struct LossSpec {
    std::function<double(const VectorXd& y, const VectorXd& z)> f;
    DecisionSpace decisions;
};

struct Optimum {
    VectorXd decision;
    int index = -1;
    double loss = 0.0;
};

struct PocReport {
    VectorXd z_star;
    double loss_star = 0.0;
    VectorXd z_proxy;
    double loss_proxy = 0.0;
    double poc = 1.0;
    bool boolean_support = true;
    int star_index = -1;
    int proxy_index = -1;
};

enum class PredictionUse {
    kPointValue,        // plug E[y] into f directly
    kBernoulliMarginal  // treat E[y] as independent Bernoulli marginals
};

struct TwoStageResult {
    VectorXd decision;
    int index = -1;
    double loss_true = 0.0;
};

struct NonlinearityWitness {
    Eigen::Vector2d y;
    Eigen::Vector2d y_prime;
    double alpha = 0.5;
    double jensen_gap = 0.0;  // gamma(mix) - mix of gammas, signed
};

struct StochError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct EmptyDecisionSpace : StochError {
    using StochError::StochError;
};
struct SupportTooLarge : StochError {
    using StochError::StochError;
};
struct NoWitnessFound : StochError {
    using StochError::StochError;
};

double expected_loss(const DiscreteDistribution& dist, const VectorXd& z,
                     const LossSpec& spec);

Optimum solve_stochastic(const DiscreteDistribution& dist, const LossSpec& spec);

DiscreteDistribution independent_proxy(const DiscreteDistribution& dist,
                                       std::size_t max_scenarios = 1000000);

// Independent product of Bernoulli marginals over {0,1}^d; zero-probability
// atoms are dropped. Coordinate 0 is the most significant enumeration digit.
DiscreteDistribution bernoulli_product(const VectorXd& marginals);

TwoStageResult two_stage_decision(const DiscreteDistribution& dist,
                                  const LossSpec& spec,
                                  PredictionUse use = PredictionUse::kPointValue);

PocReport price_of_correlation(const DiscreteDistribution& dist,
                               const LossSpec& spec);

NonlinearityWitness find_nonlinearity_witness(
    const std::function<double(double, double)>& gamma,
    const std::vector<double>& grid_a, const std::vector<double>& grid_b,
    double threshold = 1e-9);

}  // namespace corrgap::stoch
