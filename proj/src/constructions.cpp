#include "corrgap/constructions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace corrgap::cons {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

VectorXd vec(std::initializer_list<double> vals) {
    VectorXd v(static_cast<Eigen::Index>(vals.size()));
    int i = 0;
    for (double x : vals) v(i++) = x;
    return v;
}

std::uint32_t mask_of(const VectorXd& y) {
    std::uint32_t mask = 0;
    for (int i = 0; i < y.size(); ++i)
        if (y(i) > 0.5) mask |= (1u << i);
    return mask;
}

}  // namespace

stoch::Optimum decision_from_prediction(const GapInstance& inst,
                                        const VectorXd& prediction) {
    if (inst.prediction_use == stoch::PredictionUse::kBernoulliMarginal) {
        return stoch::solve_stochastic(stoch::bernoulli_product(prediction),
                                       inst.spec);
    }
    stoch::Optimum best;
    const auto& cands = inst.spec.decisions.candidates;
    if (cands.empty()) throw stoch::EmptyDecisionSpace("no candidate decisions");
    for (std::size_t i = 0; i < cands.size(); ++i) {
        double v = inst.spec.f(prediction, cands[i]);
        if (best.index < 0 || v < best.loss) {
            best.index = static_cast<int>(i);
            best.loss = v;
            best.decision = cands[i];
        }
    }
    return best;
}

GapReport measure_gap(const GapInstance& inst) {
    GapReport rep;
    rep.label = inst.label;

    stoch::Optimum opt = stoch::solve_stochastic(inst.dist, inst.spec);
    rep.loss_opt = opt.loss;
    rep.z_opt = opt.decision;

    stoch::TwoStageResult ts =
        stoch::two_stage_decision(inst.dist, inst.spec, inst.prediction_use);
    rep.loss_two_stage = ts.loss_true;
    rep.z_two_stage = ts.decision;

    std::vector<VectorXd> preds = inst.e2e_predictions;
    if (inst.constructive_prediction)
        preds.push_back(*inst.constructive_prediction);
    if (preds.empty()) throw ConsError("no end-to-end predictions to search");

    double best = kInf;
    bool first = true;
    for (const auto& p : preds) {
        stoch::Optimum dec = decision_from_prediction(inst, p);
        double true_loss = stoch::expected_loss(inst.dist, dec.decision, inst.spec);
        if (first || true_loss < best) {
            best = true_loss;
            rep.z_e2e = dec.decision;
            first = false;
        }
    }
    rep.loss_e2e = best;

    if (inst.constructive_prediction) {
        stoch::Optimum dec = decision_from_prediction(inst, *inst.constructive_prediction);
        double loss = stoch::expected_loss(inst.dist, dec.decision, inst.spec);
        if (!(loss <= best + 1e-9 * (1.0 + std::abs(best))))
            throw ConsError("constructive prediction does not attain the best "
                            "searched loss: " + inst.label);
    }

    rep.ratio_ts_over_e2e = rep.loss_two_stage / rep.loss_e2e;
    rep.ratio_ts_over_opt = rep.loss_two_stage / rep.loss_opt;
    return rep;
}

// ---- pairwise-product gap ------------------------------------------------

ProductGap build_product_gap(int d, double big_n, double eps, double constant) {
    if (d < 1) throw ConsError("d must be >= 1");
    if (big_n <= 0 || eps <= 0 || eps >= big_n / 2 || constant <= 0)
        throw ConsError("require N > 0, 0 < eps < N/2, C > 0");

    ProductGap pg;
    pg.d = d;
    pg.big_n = big_n;
    pg.eps = eps;
    pg.constant = constant;
    const double half = big_n / 2 - eps;

    GapInstance& blk = pg.block;
    blk.label = "product_gap_block";
    blk.dist.scenarios = {{vec({0.0, big_n, half, half}), 0.5},
                          {vec({big_n, 0.0, half, half}), 0.5}};
    blk.spec.f = [](const VectorXd& y, const VectorXd& z) {
        return y(0) * y(1) * z(0) + y(2) * y(3) * z(1);
    };
    blk.spec.decisions.candidates = {vec({1.0, 0.0}), vec({0.0, 1.0})};
    blk.e2e_predictions = {vec({0.0, big_n, half, half}),
                           vec({big_n, 0.0, half, half}),
                           vec({big_n / 2, big_n / 2, half, half})};
    blk.constructive_prediction = vec({0.0, big_n, half, half});

    pg.closed.loss_two_stage = constant + d * half * half;
    pg.closed.loss_e2e = constant;

    if (d <= 10) {
        GapInstance ex;
        ex.label = "product_gap_explicit_d" + std::to_string(d);
        const std::size_t count = std::size_t{1} << d;
        const double p = 1.0 / static_cast<double>(count);
        for (std::size_t mask = 0; mask < count; ++mask) {
            stoch::Scenario s;
            s.y = VectorXd(4 * d);
            s.p = p;
            for (int i = 0; i < d; ++i) {
                bool flip = (mask >> i) & 1u;
                s.y(4 * i) = flip ? big_n : 0.0;
                s.y(4 * i + 1) = flip ? 0.0 : big_n;
                s.y(4 * i + 2) = half;
                s.y(4 * i + 3) = half;
            }
            ex.dist.scenarios.push_back(std::move(s));
        }
        for (std::size_t mask = 0; mask < count; ++mask) {
            VectorXd z(2 * d);
            for (int i = 0; i < d; ++i) {
                bool second = (mask >> i) & 1u;
                z(2 * i) = second ? 0.0 : 1.0;
                z(2 * i + 1) = second ? 1.0 : 0.0;
            }
            ex.spec.decisions.candidates.push_back(std::move(z));
        }
        ex.spec.f = [d, constant](const VectorXd& y, const VectorXd& z) {
            double acc = constant;
            for (int i = 0; i < d; ++i) {
                acc += y(4 * i) * y(4 * i + 1) * z(2 * i) +
                       y(4 * i + 2) * y(4 * i + 3) * z(2 * i + 1);
            }
            return acc;
        };
        ex.closed_forms = pg.closed;
        // predictions are per-block support values replicated across blocks
        for (const auto& bp : blk.e2e_predictions) {
            VectorXd p_full(4 * d);
            for (int i = 0; i < d; ++i) p_full.segment(4 * i, 4) = bp;
            ex.e2e_predictions.push_back(std::move(p_full));
        }
        {
            VectorXd p_full(4 * d);
            for (int i = 0; i < d; ++i)
                p_full.segment(4 * i, 4) = *blk.constructive_prediction;
            ex.constructive_prediction = p_full;
        }
        pg.explicit_instance = std::move(ex);
    }
    return pg;
}

GapReport measure_product_gap(const ProductGap& pg) {
    GapReport rep;
    rep.label = "product_gap_d" + std::to_string(pg.d);
    GapReport blk = measure_gap(pg.block);
    rep.loss_two_stage = pg.constant + pg.d * blk.loss_two_stage;
    rep.loss_e2e = pg.constant + pg.d * blk.loss_e2e;
    rep.loss_opt = pg.constant + pg.d * blk.loss_opt;
    rep.ratio_ts_over_e2e = rep.loss_two_stage / rep.loss_e2e;
    rep.ratio_ts_over_opt = rep.loss_two_stage / rep.loss_opt;
    rep.z_two_stage = blk.z_two_stage;
    rep.z_e2e = blk.z_e2e;
    rep.z_opt = blk.z_opt;
    return rep;
}

// ---- generic nonlinear-gamma gap ----------------------------------------

GapInstance build_nonlinear_gap(const std::function<double(double, double)>& gamma,
                                const stoch::NonlinearityWitness& w) {
    if (std::abs(w.jensen_gap) <= 1e-9)
        throw WitnessInvalid("witness does not certify nonlinearity");

    // jensen_gap = gamma(mix) - E[gamma]; when it is negative we are in the
    // E[gamma] > gamma(E) case and the construction maximizes instead, which
    // is the same program on the negated coefficient function
    const double flip = w.jensen_gap > 0 ? 1.0 : -1.0;
    auto g = [gamma, flip](double a, double b) { return flip * gamma(a, b); };

    const Eigen::Vector2d mix = w.alpha * w.y + (1.0 - w.alpha) * w.y_prime;
    const double g_y = g(w.y(0), w.y(1));
    const double g_yp = g(w.y_prime(0), w.y_prime(1));
    const double expect_g = w.alpha * g_y + (1.0 - w.alpha) * g_yp;
    const double g_mix = g(mix(0), mix(1));
    // expect_g < g_mix by the witness (after the flip)

    // point mass for the second coordinate pair: near the first pair's mean,
    // with g strictly between E[g] and g(mean)
    Eigen::Vector2d pt;
    bool found = false;
    double eps0 = std::min(std::abs(w.jensen_gap) / 4.0, 0.1);
    for (double eps = eps0; eps > eps0 * 1e-6 && !found; eps *= 0.1) {
        for (double sa : {-1.0, 1.0}) {
            for (double sb : {-1.0, 1.0}) {
                Eigen::Vector2d cand = mix + Eigen::Vector2d(sa * eps, sb * eps);
                double gc = g(cand(0), cand(1));
                if (gc > expect_g && gc < g_mix) {
                    pt = cand;
                    found = true;
                    break;
                }
            }
            if (found) break;
        }
    }
    if (!found)
        throw WitnessInvalid("no perturbed point mass separates the Jensen gap");

    GapInstance inst;
    inst.label = flip > 0 ? "nonlinear_gap_min" : "nonlinear_gap_max";
    inst.dist.scenarios = {
        {vec({w.y(0), w.y(1), pt(0), pt(1)}), w.alpha},
        {vec({w.y_prime(0), w.y_prime(1), pt(0), pt(1)}), 1.0 - w.alpha}};
    inst.spec.f = [g](const VectorXd& y, const VectorXd& z) {
        return g(y(0), y(1)) * z(0) + g(y(2), y(3)) * z(1);
    };
    inst.spec.decisions.candidates = {vec({1.0, 0.0}), vec({0.0, 1.0})};
    inst.e2e_predictions = {
        vec({w.y(0), w.y(1), pt(0), pt(1)}),
        vec({w.y_prime(0), w.y_prime(1), pt(0), pt(1)}),
        vec({mix(0), mix(1), pt(0), pt(1)})};
    inst.constructive_prediction =
        g_y <= g_yp ? inst.e2e_predictions[0] : inst.e2e_predictions[1];
    inst.closed_forms = ClosedForms{g(pt(0), pt(1)), expect_g};
    return inst;
}

// ---- end-to-end suboptimality counterexample ----------------------------

GapInstance build_prop1_counterexample(double big_c, double eps) {
    if (big_c <= 2.0) throw ConsError("require C > 2");
    if (eps <= 0.0 || eps >= 1.0) throw ConsError("require 0 < eps < 1");

    GapInstance inst;
    inst.label = "prop1_counterexample";
    inst.prediction_use = stoch::PredictionUse::kBernoulliMarginal;
    inst.dist.scenarios = {{vec({1.0, 1.0}), 0.5}, {vec({0.0, 0.0}), 0.5}};
    // rows: z_star, z1, z2; columns: S1=(T,T), S2=(F,F), S3=(T,F), S4=(F,T)
    inst.spec.f = [big_c, eps](const VectorXd& y, const VectorXd& z) {
        static const int kCol[2][2] = {{1, 3}, {2, 0}};  // [b1][b2]
        const int col = kCol[y(0) > 0.5 ? 1 : 0][y(1) > 0.5 ? 1 : 0];
        const double cost[3][4] = {{1.0, 1.0, kInf, kInf},
                                   {eps, big_c, eps, eps},
                                   {big_c, eps, eps, eps}};
        return cost[static_cast<int>(std::lround(z(0)))][col];
    };
    inst.spec.decisions.candidates = {vec({0.0}), vec({1.0}), vec({2.0})};
    inst.e2e_predictions = {vec({1.0, 1.0}), vec({0.0, 0.0}), vec({0.5, 0.5}),
                            vec({1.0, 0.0}), vec({0.0, 1.0})};
    inst.constructive_prediction = vec({1.0, 1.0});
    const double proxy_loss = 0.5 * (eps + big_c);
    inst.closed_forms = ClosedForms{proxy_loss, proxy_loss};
    return inst;
}

Prop1GridReport verify_e2e_suboptimal(const GapInstance& inst, double grid_step) {
    if (grid_step <= 0.0 || grid_step > 1.0) throw ConsError("bad grid step");
    Prop1GridReport rep;
    rep.loss_star = stoch::solve_stochastic(inst.dist, inst.spec).loss;
    rep.min_true_loss = kInf;
    rep.every_point_exceeds_star = true;
    const int steps = static_cast<int>(std::lround(1.0 / grid_step));
    for (int i = 0; i <= steps; ++i) {
        for (int j = 0; j <= steps; ++j) {
            VectorXd p = vec({std::min(1.0, i * grid_step),
                              std::min(1.0, j * grid_step)});
            stoch::Optimum dec =
                stoch::solve_stochastic(stoch::bernoulli_product(p), inst.spec);
            double true_loss =
                stoch::expected_loss(inst.dist, dec.decision, inst.spec);
            if (true_loss < rep.min_true_loss) {
                rep.min_true_loss = true_loss;
                rep.argmin_p1 = p(0);
                rep.argmin_p2 = p(1);
            }
            if (!(true_loss > rep.loss_star)) rep.every_point_exceeds_star = false;
        }
    }
    return rep;
}

// ---- price-of-correlation example problems ------------------------------

PocInstance build_poc_example(const FlowParams& params) {
    params.events.validate();
    const int n = params.events.dim();
    if (static_cast<int>(params.c_first.size()) != n + 1 ||
        static_cast<int>(params.c_second.size()) != n + 1)
        throw InvariantViolation("cost schedules must have n+1 entries");
    for (int k = 1; k <= n; ++k) {
        if (!(params.c_second[k] > params.c_first[k]))
            throw InvariantViolation("second-stage cost must exceed first-stage");
        if (params.c_first[k] < params.c_first[k - 1] ||
            params.c_second[k] < params.c_second[k - 1])
            throw InvariantViolation("cost schedules must be nondecreasing");
    }
    if (!params.events.boolean_support())
        throw InvariantViolation("flow events must be Boolean");

    PocInstance inst;
    inst.kind = PocKind::kFlow;
    inst.dist = params.events;
    inst.params = params;
    auto c1 = params.c_first;
    auto c2 = params.c_second;
    inst.spec.f = [c1, c2](const VectorXd& y, const VectorXd& z) {
        const int cap = static_cast<int>(std::lround(z(0)));
        const int demand = static_cast<int>(std::lround(y.sum()));
        const int shortfall = std::max(demand - cap, 0);
        return c1[cap] + c2[shortfall];
    };
    for (int z = 0; z <= n; ++z)
        inst.spec.decisions.candidates.push_back(vec({static_cast<double>(z)}));
    return inst;
}

PocInstance build_poc_example(const SetCoverParams& params) {
    params.events.validate();
    if (params.events.dim() != params.n_items)
        throw InvariantViolation("event dimension must equal item count");
    if (!(params.c_first < params.c_second) || params.c_first <= 0.0)
        throw InvariantViolation("require 0 < c_first < c_second");
    std::vector<int> owner(params.n_items, -1);
    for (std::size_t i = 0; i < params.subsets.size(); ++i) {
        if (params.subsets[i].empty())
            throw InvariantViolation("subsets must be nonempty");
        for (int item : params.subsets[i]) {
            if (item < 0 || item >= params.n_items || owner[item] != -1)
                throw InvariantViolation("subsets must be disjoint over the items");
            owner[item] = static_cast<int>(i);
        }
    }
    if (std::count(owner.begin(), owner.end(), -1) != 0)
        throw InvariantViolation("subset union must cover all items");
    if (!params.events.boolean_support())
        throw InvariantViolation("set-cover events must be Boolean");

    PocInstance inst;
    inst.kind = PocKind::kSetCover;
    inst.dist = params.events;
    inst.params = params;
    const auto subsets = params.subsets;
    const double c1 = params.c_first, c2 = params.c_second;
    inst.spec.f = [subsets, c1, c2](const VectorXd& y, const VectorXd& z) {
        double cost = 0.0;
        int worst = 0;
        for (std::size_t i = 0; i < subsets.size(); ++i) {
            if (z(static_cast<int>(i)) > 0.5) {
                cost += c1;
                continue;
            }
            int realized = 0;
            for (int item : subsets[i])
                if (y(item) > 0.5) ++realized;
            worst = std::max(worst, realized);
        }
        return cost + c2 * worst;
    };
    const int k = static_cast<int>(params.subsets.size());
    for (std::uint32_t mask = 0; mask < (1u << k); ++mask) {
        VectorXd z(k);
        for (int i = 0; i < k; ++i) z(i) = (mask >> i) & 1u ? 1.0 : 0.0;
        inst.spec.decisions.candidates.push_back(std::move(z));
    }
    return inst;
}

PocInstance build_poc_example(const SubmodularParams& params) {
    params.events.validate();
    const int n = params.n_items;
    if (params.events.dim() != n)
        throw InvariantViolation("event dimension must equal ground set size");
    if (n < 1 || n > 10) throw InvariantViolation("ground set size out of range");
    if (static_cast<int>(params.cost.size()) != (1 << n))
        throw InvariantViolation("cost table must have 2^n entries");
    if (params.cost[0] < 0.0) throw InvariantViolation("cost must be nonnegative");
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
        for (int a = 0; a < n; ++a) {
            if (mask & (1u << a)) continue;
            if (params.cost[mask | (1u << a)] < params.cost[mask] - 1e-12)
                throw InvariantViolation("cost is not monotone");
            for (int b = a + 1; b < n; ++b) {
                if (mask & (1u << b)) continue;
                double lhs = params.cost[mask | (1u << a)] + params.cost[mask | (1u << b)];
                double rhs = params.cost[mask | (1u << a) | (1u << b)] + params.cost[mask];
                if (lhs < rhs - 1e-12)
                    throw InvariantViolation("cost is not submodular");
            }
        }
    }
    if (!params.events.boolean_support())
        throw InvariantViolation("submodular events must be Boolean");

    PocInstance inst;
    inst.kind = PocKind::kSubmodular;
    inst.dist = params.events;
    inst.params = params;
    const auto cost = params.cost;
    const double threshold = params.threshold;
    inst.spec.f = [cost, threshold](const VectorXd& y, const VectorXd& z) {
        return z(0) * cost[mask_of(y)] + z(1) * threshold;
    };
    inst.spec.decisions.candidates = {vec({1.0, 0.0}), vec({0.0, 1.0})};
    return inst;
}

VectorXd e2e_constructive_marginals(const PocInstance& inst,
                                    const stoch::Optimum& z_star) {
    const int n = inst.dist.dim();
    VectorXd p = VectorXd::Zero(n);
    switch (inst.kind) {
        case PocKind::kFlow: {
            const int cap = static_cast<int>(std::lround(z_star.decision(0)));
            for (int i = 0; i < cap; ++i) p(i) = 1.0;
            return p;
        }
        case PocKind::kSetCover: {
            const auto& params = std::get<SetCoverParams>(inst.params);
            for (std::size_t i = 0; i < params.subsets.size(); ++i) {
                if (z_star.decision(static_cast<int>(i)) > 0.5)
                    for (int item : params.subsets[i]) p(item) = 1.0;
            }
            return p;
        }
        case PocKind::kSubmodular: {
            const auto& params = std::get<SubmodularParams>(inst.params);
            double cstar = 0.0;  // E[c(S)] over the true joint
            for (const auto& s : inst.dist.scenarios)
                cstar += s.p * params.cost[mask_of(s.y)];
            for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
                if (params.cost[mask] < cstar - 1e-12) continue;
                for (int e = 0; e < n; ++e) {
                    if (!(mask & (1u << e))) continue;
                    const std::uint32_t without = mask & ~(1u << e);
                    if (params.cost[without] > cstar + 1e-12) continue;
                    for (int i = 0; i < n; ++i)
                        p(i) = (without & (1u << i)) ? 1.0 : 0.0;
                    const double denom = params.cost[mask] - params.cost[without];
                    double pe = denom > 0.0
                                    ? (cstar - params.cost[without]) / denom
                                    : 1.0;
                    p(e) = std::clamp(pe, 0.0, 1.0);
                    return p;
                }
            }
            throw NoSupportingSet("no supporting set for the expected cost");
        }
    }
    throw ConsError("unknown POC kind");
}

}  // namespace corrgap::cons
