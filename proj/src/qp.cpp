#include "corrgap/qp.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <limits>

namespace corrgap::qp {

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

struct RowPattern {
    std::vector<int> cols;
    std::vector<double> vals;
};

std::vector<RowPattern> row_patterns(const MatrixXd& M) {
    std::vector<RowPattern> rows(M.rows());
    for (int i = 0; i < M.rows(); ++i) {
        for (int j = 0; j < M.cols(); ++j) {
            if (M(i, j) != 0.0) {
                rows[i].cols.push_back(j);
                rows[i].vals.push_back(M(i, j));
            }
        }
    }
    return rows;
}

// Assembles [[Q + G'WG, A'], [A, 0]] as a sparse matrix.
SpMat assemble_kkt(const Problem& p, const std::vector<RowPattern>& grows,
                   const VectorXd& w, double damping) {
    const int n = p.n_var();
    const int ne = p.n_eq();
    std::vector<Triplet> trips;
    trips.reserve(static_cast<size_t>(n) * 4);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (p.Q(i, j) != 0.0) trips.emplace_back(i, j, p.Q(i, j));
        }
        if (damping != 0.0) trips.emplace_back(i, i, damping);
    }
    for (int r = 0; r < p.n_ineq(); ++r) {
        const auto& row = grows[r];
        const double wr = w(r);
        for (size_t a = 0; a < row.cols.size(); ++a) {
            for (size_t b = 0; b < row.cols.size(); ++b) {
                trips.emplace_back(row.cols[a], row.cols[b],
                                   wr * row.vals[a] * row.vals[b]);
            }
        }
    }
    for (int r = 0; r < ne; ++r) {
        for (int j = 0; j < n; ++j) {
            if (p.A(r, j) != 0.0) {
                trips.emplace_back(n + r, j, p.A(r, j));
                trips.emplace_back(j, n + r, p.A(r, j));
            }
        }
        // keeps the diagonal structurally present for the factorization
        trips.emplace_back(n + r, n + r, -1e-13);
    }
    SpMat M(n + ne, n + ne);
    M.setFromTriplets(trips.begin(), trips.end());
    return M;
}

double step_to_boundary(const VectorXd& v, const VectorXd& dv) {
    double alpha = 1.0;
    for (int i = 0; i < v.size(); ++i) {
        if (dv(i) < 0.0) alpha = std::min(alpha, -v(i) / dv(i));
    }
    return alpha;
}

}  // namespace

void Problem::check_dimensions() const {
    const int n = n_var();
    if (Q.rows() != n || Q.cols() != n) throw QpError("Q dimension mismatch");
    if (A.size() > 0 && A.cols() != n) throw QpError("A dimension mismatch");
    if (A.rows() != n_eq()) throw QpError("A/b dimension mismatch");
    if (G.size() > 0 && G.cols() != n) throw QpError("G dimension mismatch");
    if (G.rows() != n_ineq()) throw QpError("G/h dimension mismatch");
}

Residuals kkt_residuals(const Problem& p, const VectorXd& z, const VectorXd& nu,
                        const VectorXd& lambda) {
    Residuals r;
    VectorXd stat = p.Q * z + p.c;
    if (p.n_eq() > 0) stat += p.A.transpose() * nu;
    if (p.n_ineq() > 0) stat += p.G.transpose() * lambda;
    r.stationarity = stat.lpNorm<Eigen::Infinity>();
    if (p.n_eq() > 0) r.primal_eq = (p.A * z - p.b).lpNorm<Eigen::Infinity>();
    if (p.n_ineq() > 0) {
        VectorXd viol = p.G * z - p.h;
        r.primal_ineq = viol.cwiseMax(0.0).lpNorm<Eigen::Infinity>();
        r.complementarity = (lambda.array() * viol.array()).abs().maxCoeff();
    }
    return r;
}

Solution solve(const Problem& p, const SolverOptions& opts) {
    p.check_dimensions();
    const int n = p.n_var();
    const int ne = p.n_eq();
    const int mi = p.n_ineq();

    const auto grows = row_patterns(p.G);

    Solution sol;
    sol.nu = VectorXd::Zero(ne);
    sol.lambda = VectorXd::Zero(mi);
    sol.slack = VectorXd::Zero(mi);

    if (mi == 0) {
        // pure equality-constrained QP: one linear solve
        SpMat M = assemble_kkt(p, grows, VectorXd(), 0.0);
        Eigen::SparseLU<SpMat> lu(M);
        if (lu.info() != Eigen::Success) throw IllConditioned("singular KKT matrix");
        VectorXd rhs(n + ne);
        rhs.head(n) = -p.c;
        rhs.tail(ne) = p.b;
        VectorXd x = lu.solve(rhs);
        sol.z = x.head(n);
        sol.nu = x.tail(ne);
        sol.iterations = 1;
        sol.residuals = kkt_residuals(p, sol.z, sol.nu, sol.lambda);
        if (!sol.z.allFinite()) throw IllConditioned("non-finite solution");
        return sol;
    }

    // primal-dual interior point with a Mehrotra predictor-corrector step
    VectorXd z = opts.z0 ? *opts.z0 : VectorXd::Zero(n);
    VectorXd nu = VectorXd::Zero(ne);
    VectorXd s(mi), lambda(mi);
    {
        VectorXd gap = p.h - p.G * z;
        for (int i = 0; i < mi; ++i) s(i) = std::max(gap(i), 1.0);
        lambda.setOnes();
    }

    Eigen::SparseLU<SpMat> lu;
    bool analyzed = false;

    // residual thresholds scale with the data so convergence is relative on
    // badly scaled instances and plain `tol` on unit-scale ones
    const double c_scale = 1.0 + p.c.lpNorm<Eigen::Infinity>();
    const double rhs_scale =
        1.0 + std::max(mi > 0 ? p.h.lpNorm<Eigen::Infinity>() : 0.0,
                       ne > 0 ? p.b.lpNorm<Eigen::Infinity>() : 0.0);

    for (int iter = 0; iter < opts.max_iter; ++iter) {
        VectorXd r_d = p.Q * z + p.c + p.G.transpose() * lambda;
        if (ne > 0) r_d += p.A.transpose() * nu;
        VectorXd r_p = ne > 0 ? VectorXd(p.A * z - p.b) : VectorXd();
        VectorXd r_g = p.G * z + s - p.h;
        double mu = s.dot(lambda) / mi;
        sol.gap_history.push_back(mu);

        double pinf = std::max(r_g.lpNorm<Eigen::Infinity>(),
                               ne > 0 ? r_p.lpNorm<Eigen::Infinity>() : 0.0);
        double comp = (s.array() * lambda.array()).maxCoeff();
        if (r_d.lpNorm<Eigen::Infinity>() <= opts.tol * c_scale &&
            pinf <= opts.tol * rhs_scale && comp <= opts.tol * c_scale) {
            sol.z = z;
            sol.nu = nu;
            sol.lambda = lambda;
            sol.slack = p.h - p.G * z;
            sol.iterations = iter;
            sol.residuals = kkt_residuals(p, z, nu, lambda);
            return sol;
        }

        VectorXd w = lambda.cwiseQuotient(s);
        SpMat M = assemble_kkt(p, grows, w, 0.0);
        if (!analyzed) {
            lu.analyzePattern(M);
            analyzed = true;
        }
        lu.factorize(M);
        if (lu.info() != Eigen::Success) throw IllConditioned("KKT factorization failed");

        auto reduced_solve = [&](const VectorXd& r_c, VectorXd& dz, VectorXd& dnu,
                                 VectorXd& ds, VectorXd& dlam) {
            VectorXd rhs(n + ne);
            rhs.head(n) = -r_d + p.G.transpose() *
                                     (r_c.cwiseQuotient(s) - w.cwiseProduct(r_g));
            if (ne > 0) rhs.tail(ne) = -r_p;
            VectorXd x = lu.solve(rhs);
            x += lu.solve(VectorXd(rhs - M * x));  // one refinement step
            dz = x.head(n);
            dnu = x.tail(ne);
            ds = -r_g - p.G * dz;
            dlam = -r_c.cwiseQuotient(s) - w.cwiseProduct(ds);
        };

        // predictor
        VectorXd r_c = lambda.cwiseProduct(s);
        VectorXd dz, dnu, ds, dlam;
        reduced_solve(r_c, dz, dnu, ds, dlam);
        double a_aff = std::min(step_to_boundary(s, ds), step_to_boundary(lambda, dlam));
        double mu_aff =
            (s + a_aff * ds).dot(lambda + a_aff * dlam) / mi;
        double sigma = std::pow(std::max(mu_aff, 0.0) / mu, 3.0);

        // corrector
        r_c = lambda.cwiseProduct(s) + dlam.cwiseProduct(ds) -
              VectorXd::Constant(mi, sigma * mu);
        reduced_solve(r_c, dz, dnu, ds, dlam);

        // a single step length keeps the dual residual linearly decreasing
        // (Q couples z into the dual residual, unlike the LP case)
        const double tau = 0.995;
        double alpha = std::min(1.0, tau * std::min(step_to_boundary(s, ds),
                                                    step_to_boundary(lambda, dlam)));
        z += alpha * dz;
        s += alpha * ds;
        nu += alpha * dnu;
        lambda += alpha * dlam;
        if (!z.allFinite() || !lambda.allFinite())
            throw IllConditioned("iterates diverged");
    }

    Residuals r = kkt_residuals(p, z, nu, lambda);
    if (std::max(r.primal_eq, r.primal_ineq) > 1e-4)
        throw Infeasible("primal residual not reduced to tolerance");
    throw MaxIterations("interior point did not converge");
}

VectorXd differentiate_wrt_cost(const Problem& p, const Solution& sol,
                                const VectorXd& upstream) {
    p.check_dimensions();
    const int n = p.n_var();
    const int ne = p.n_eq();
    const int mi = p.n_ineq();
    if (upstream.size() != n) throw QpError("upstream dimension mismatch");

    // Transposed linearization of the full KKT system at the optimum:
    //   [[Q, A', G'D(lambda)], [A, 0, 0], [G, 0, -D(s)]] v = [upstream; 0; 0]
    // Unlike the lambda/s-reduced form this keeps every entry O(1), so the
    // factorization stays well conditioned even with near-zero slacks.
    const int total = n + ne + mi;
    VectorXd rhs = VectorXd::Zero(total);
    rhs.head(n) = upstream;

    for (double damping : {0.0, 1e-10}) {
        std::vector<Triplet> trips;
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                if (p.Q(i, j) != 0.0) trips.emplace_back(i, j, p.Q(i, j));
            }
            if (damping != 0.0) trips.emplace_back(i, i, damping);
        }
        for (int r = 0; r < ne; ++r) {
            for (int j = 0; j < n; ++j) {
                if (p.A(r, j) != 0.0) {
                    trips.emplace_back(j, n + r, p.A(r, j));
                    trips.emplace_back(n + r, j, p.A(r, j));
                }
            }
            trips.emplace_back(n + r, n + r, -1e-13);
        }
        for (int r = 0; r < mi; ++r) {
            for (int j = 0; j < n; ++j) {
                if (p.G(r, j) != 0.0) {
                    trips.emplace_back(j, n + ne + r, p.G(r, j) * sol.lambda(r));
                    trips.emplace_back(n + ne + r, j, p.G(r, j));
                }
            }
            trips.emplace_back(n + ne + r, n + ne + r, -sol.slack(r) - damping);
        }
        SpMat M(total, total);
        M.setFromTriplets(trips.begin(), trips.end());
        Eigen::SparseLU<SpMat> lu(M);
        if (lu.info() != Eigen::Success) continue;
        VectorXd v = lu.solve(rhs);
        if (v.head(n).allFinite()) return -v.head(n);
    }
    throw SingularKktSystem("degenerate active set in backward pass");
}

}  // namespace corrgap::qp
