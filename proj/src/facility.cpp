#include "corrgap/facility.hpp"

#include <algorithm>
#include <limits>

namespace corrgap::fl {

FLInstance FLInstance::make(int n, int m, int k) {
    FLInstance inst;
    inst.n = n;
    inst.m = m;
    inst.k = k;
    for (int f = 0; f < m / 2; ++f) inst.f1.push_back(f);
    for (int f = m / 2; f < m; ++f) inst.f2.push_back(f);
    inst.validate();
    return inst;
}

void FLInstance::validate() const {
    if (n < 1 || m < 1) throw FlError("instance must have customers and facilities");
    if (k < 1) throw FlError("budget must be at least 1");
    if (k > m) throw BudgetExceedsFacilities("budget exceeds facility count");
    std::vector<bool> seen(m, false);
    for (int f : f1) seen.at(f) = true;
    for (int f : f2) {
        if (seen.at(f)) throw FlError("F1/F2 overlap");
        seen[f] = true;
    }
    if (std::count(seen.begin(), seen.end(), true) != m)
        throw FlError("F1/F2 do not cover all facilities");
}

namespace {

double assign_cheapest(const CoefficientMatrix& w, const std::vector<int>& open,
                       std::vector<int>& facility_of) {
    const int n = static_cast<int>(w.rows());
    double total = 0.0;
    for (int c = 0; c < n; ++c) {
        int best_f = open.front();
        double best = w(c, best_f);
        for (int f : open) {
            if (w(c, f) < best) {
                best = w(c, f);
                best_f = f;
            }
        }
        facility_of[c] = best_f;
        total += best;
    }
    return total;
}

}  // namespace

Assignment solve_exact(const FLInstance& inst, const CoefficientMatrix& w) {
    inst.validate();
    if (w.rows() != inst.n || w.cols() != inst.m)
        throw FlError("coefficient matrix dimension mismatch");

    Assignment best;
    best.cost = std::numeric_limits<double>::infinity();
    std::vector<int> subset(inst.k);
    for (int i = 0; i < inst.k; ++i) subset[i] = i;
    std::vector<int> facility_of(inst.n);

    bool first = true;
    while (true) {
        double cost = assign_cheapest(w, subset, facility_of);
        if (first || cost < best.cost) {
            best.open = subset;
            best.facility_of = facility_of;
            best.cost = cost;
            first = false;
        }
        // next lexicographic k-subset of {0..m-1}
        int i = inst.k - 1;
        while (i >= 0 && subset[i] == inst.m - inst.k + i) --i;
        if (i < 0) break;
        ++subset[i];
        for (int j = i + 1; j < inst.k; ++j) subset[j] = subset[j - 1] + 1;
    }
    return best;
}

double evaluate(const Assignment& assign, const CoefficientMatrix& w_true) {
    double total = 0.0;
    for (std::size_t c = 0; c < assign.facility_of.size(); ++c)
        total += w_true(static_cast<int>(c), assign.facility_of[c]);
    return total;
}

SmoothedQp to_smoothed_qp(const FLInstance& inst, const CoefficientMatrix& w,
                          double zeta) {
    inst.validate();
    if (zeta <= 0.0) throw NonPositiveZeta("zeta must be positive");
    const int n = inst.n, m = inst.m;
    const int nv = n * m + m;
    const int n_eq = n;
    const int n_ineq = n * m + 1 + 2 * (n * m + m);

    SmoothedQp sq;
    sq.n = n;
    sq.m = m;
    qp::Problem& p = sq.problem;
    p.Q = 2.0 * zeta * Eigen::MatrixXd::Identity(nv, nv);
    p.c = Eigen::VectorXd::Zero(nv);
    for (int c = 0; c < n; ++c)
        for (int f = 0; f < m; ++f) p.c(sq.z_index(c, f)) = w(c, f);

    p.A = Eigen::MatrixXd::Zero(n_eq, nv);
    p.b = Eigen::VectorXd::Ones(n_eq);
    for (int c = 0; c < n; ++c)
        for (int f = 0; f < m; ++f) p.A(c, sq.z_index(c, f)) = 1.0;

    p.G = Eigen::MatrixXd::Zero(n_ineq, nv);
    p.h = Eigen::VectorXd::Zero(n_ineq);
    int r = 0;
    for (int c = 0; c < n; ++c) {  // z_{c,f} - x_f <= 0
        for (int f = 0; f < m; ++f) {
            p.G(r, sq.z_index(c, f)) = 1.0;
            p.G(r, sq.x_index(f)) = -1.0;
            ++r;
        }
    }
    for (int f = 0; f < m; ++f) p.G(r, sq.x_index(f)) = 1.0;  // sum x <= k
    p.h(r) = inst.k;
    ++r;
    for (int i = 0; i < nv; ++i) {  // 0 <= vars <= 1
        p.G(r, i) = -1.0;
        p.h(r) = 0.0;
        ++r;
        p.G(r, i) = 1.0;
        p.h(r) = 1.0;
        ++r;
    }
    return sq;
}

}  // namespace corrgap::fl
