#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <vector>

#include "corrgap/qp.hpp"

namespace corrgap::fl {

using Eigen::MatrixXd;

// n customers, m facilities, at most k open; F1/F2 partition the facilities
// into the correlated and independent halves of the benchmark.
struct FLInstance {
    int n = 0;
    int m = 0;
    int k = 0;
    std::vector<int> f1;
    std::vector<int> f2;

    static FLInstance make(int n, int m, int k);
    void validate() const;
};

// w(c, f): expected demand-weighted travel time per edge; negative entries
// are allowed.
using CoefficientMatrix = MatrixXd;

struct Assignment {
    std::vector<int> open;         // sorted facility indices
    std::vector<int> facility_of;  // per customer
    double cost = 0.0;             // under the matrix it was solved against
};

struct FlError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct BudgetExceedsFacilities : FlError {
    using FlError::FlError;
};
struct NonPositiveZeta : FlError {
    using FlError::FlError;
};

// Exhaustive enumeration over facility subsets of size exactly k; each
// customer goes to its cheapest open facility. Ties break toward the
// lexicographically smallest open set, then the smallest facility index.
Assignment solve_exact(const FLInstance& inst, const CoefficientMatrix& w);

double evaluate(const Assignment& assign, const CoefficientMatrix& w_true);

// LP relaxation with quadratic smoothing on both the assignment and the
// opening variables:
//   min  sum w.z + zeta*(||z||^2 + ||x||^2)
//   s.t. sum_f z_{c,f} = 1,  z_{c,f} <= x_f,  sum_f x_f <= k,
//        0 <= z <= 1, 0 <= x <= 1
struct SmoothedQp {
    qp::Problem problem;
    int n = 0;
    int m = 0;
    int z_index(int c, int f) const { return c * m + f; }
    int x_index(int f) const { return n * m + f; }
};

SmoothedQp to_smoothed_qp(const FLInstance& inst, const CoefficientMatrix& w,
                          double zeta);

}  // namespace corrgap::fl
