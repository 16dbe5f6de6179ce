#pragma once

#include <Eigen/Core>
#include <optional>
#include <stdexcept>
#include <vector>

namespace corrgap::qp {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// minimize 1/2 z'Qz + c'z  subject to  Az = b,  Gz <= h.
struct Problem {
    MatrixXd Q;
    VectorXd c;
    MatrixXd A;  // n_eq x n_var (may have zero rows)
    VectorXd b;
    MatrixXd G;  // n_ineq x n_var (may have zero rows)
    VectorXd h;

    int n_var() const { return static_cast<int>(c.size()); }
    int n_eq() const { return static_cast<int>(b.size()); }
    int n_ineq() const { return static_cast<int>(h.size()); }
    void check_dimensions() const;
};

struct Residuals {
    double stationarity = 0.0;
    double primal_eq = 0.0;    // ||Az - b||_inf
    double primal_ineq = 0.0;  // max(Gz - h, 0)_inf
    double complementarity = 0.0;
};

struct Solution {
    VectorXd z;
    VectorXd nu;      // equality duals
    VectorXd lambda;  // inequality duals, >= 0
    VectorXd slack;   // h - Gz at the solution
    int iterations = 0;
    Residuals residuals;
    std::vector<double> gap_history;  // mean complementarity per iteration
};

struct SolverOptions {
    double tol = 1e-8;
    int max_iter = 100;
    std::optional<VectorXd> z0;  // interior starting hint
};

struct QpError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct Infeasible : QpError {
    using QpError::QpError;
};
struct MaxIterations : QpError {
    using QpError::QpError;
};
struct IllConditioned : QpError {
    using QpError::QpError;
};
struct SingularKktSystem : QpError {
    using QpError::QpError;
};

Solution solve(const Problem& p, const SolverOptions& opts = {});

Residuals kkt_residuals(const Problem& p, const VectorXd& z, const VectorXd& nu,
                        const VectorXd& lambda);

// Given dL/dz* = upstream, returns dL/dc via the KKT system linearized at the
// optimum. Only the linear cost is differentiated.
VectorXd differentiate_wrt_cost(const Problem& p, const Solution& sol,
                                const VectorXd& upstream);

}  // namespace corrgap::qp
