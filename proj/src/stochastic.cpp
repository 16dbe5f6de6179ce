#include "corrgap/stochastic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace corrgap::stoch {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

void DiscreteDistribution::validate() const {
    if (scenarios.empty()) throw StochError("distribution has no scenarios");
    const int d = dim();
    double total = 0.0;
    for (const auto& s : scenarios) {
        if (s.p < 0.0) throw StochError("negative scenario probability");
        if (s.y.size() != d) throw StochError("inconsistent scenario dimension");
        total += s.p;
    }
    if (std::abs(total - 1.0) > 1e-12)
        throw StochError("scenario probabilities do not sum to 1");
}

VectorXd DiscreteDistribution::mean() const {
    VectorXd m = VectorXd::Zero(dim());
    for (const auto& s : scenarios) m += s.p * s.y;
    return m;
}

bool DiscreteDistribution::boolean_support() const {
    for (const auto& s : scenarios) {
        if (s.p == 0.0) continue;
        for (int i = 0; i < s.y.size(); ++i) {
            if (s.y(i) != 0.0 && s.y(i) != 1.0) return false;
        }
    }
    return true;
}

double expected_loss(const DiscreteDistribution& dist, const VectorXd& z,
                     const LossSpec& spec) {
    double acc = 0.0;
    for (const auto& s : dist.scenarios) {
        if (s.p == 0.0) continue;  // inf * 0 = 0
        double v = spec.f(s.y, z);
        if (std::isinf(v)) return v;
        acc += s.p * v;
    }
    return acc;
}

Optimum solve_stochastic(const DiscreteDistribution& dist, const LossSpec& spec) {
    if (spec.decisions.candidates.empty())
        throw EmptyDecisionSpace("no candidate decisions");
    Optimum best;
    best.loss = kInf;
    for (std::size_t i = 0; i < spec.decisions.candidates.size(); ++i) {
        double loss = expected_loss(dist, spec.decisions.candidates[i], spec);
        if (best.index < 0 || loss < best.loss) {
            best.index = static_cast<int>(i);
            best.loss = loss;
            best.decision = spec.decisions.candidates[i];
        }
    }
    return best;
}

DiscreteDistribution independent_proxy(const DiscreteDistribution& dist,
                                       std::size_t max_scenarios) {
    dist.validate();
    const int d = dist.dim();
    // coordinate-wise marginals; values accumulated in scenario order, then
    // sorted ascending for a deterministic product order
    std::vector<std::vector<std::pair<double, double>>> marg(d);
    for (int i = 0; i < d; ++i) {
        for (const auto& s : dist.scenarios) {
            if (s.p == 0.0) continue;
            double v = s.y(i);
            auto it = std::find_if(marg[i].begin(), marg[i].end(),
                                   [&](const auto& e) { return e.first == v; });
            if (it == marg[i].end())
                marg[i].emplace_back(v, s.p);
            else
                it->second += s.p;
        }
        std::sort(marg[i].begin(), marg[i].end());
    }

    std::size_t count = 1;
    for (int i = 0; i < d; ++i) {
        if (count > max_scenarios / marg[i].size() &&
            count * marg[i].size() > max_scenarios)
            throw SupportTooLarge("product support exceeds scenario cap");
        count *= marg[i].size();
    }

    DiscreteDistribution out;
    out.coord_names = dist.coord_names;
    out.scenarios.reserve(count);
    std::vector<std::size_t> idx(d, 0);
    for (std::size_t k = 0; k < count; ++k) {
        Scenario s;
        s.y = VectorXd(d);
        s.p = 1.0;
        for (int i = 0; i < d; ++i) {
            s.y(i) = marg[i][idx[i]].first;
            s.p *= marg[i][idx[i]].second;
        }
        out.scenarios.push_back(std::move(s));
        // mixed-radix increment, last coordinate fastest
        for (int i = d - 1; i >= 0; --i) {
            if (++idx[i] < marg[i].size()) break;
            idx[i] = 0;
        }
    }
    return out;
}

DiscreteDistribution bernoulli_product(const VectorXd& marginals) {
    const int d = static_cast<int>(marginals.size());
    if (d > 20) throw SupportTooLarge("Bernoulli product support too large");
    for (int i = 0; i < d; ++i) {
        if (marginals(i) < 0.0 || marginals(i) > 1.0)
            throw StochError("marginal outside [0,1]");
    }
    DiscreteDistribution prod;
    const std::size_t count = std::size_t{1} << d;
    for (std::size_t mask = 0; mask < count; ++mask) {
        Scenario s;
        s.y = VectorXd(d);
        s.p = 1.0;
        for (int i = 0; i < d; ++i) {
            // coordinate 0 most significant, value 0 before value 1
            bool on = (mask >> (d - 1 - i)) & 1u;
            s.y(i) = on ? 1.0 : 0.0;
            s.p *= on ? marginals(i) : 1.0 - marginals(i);
        }
        if (s.p > 0.0) prod.scenarios.push_back(std::move(s));
    }
    return prod;
}

TwoStageResult two_stage_decision(const DiscreteDistribution& dist,
                                  const LossSpec& spec, PredictionUse use) {
    dist.validate();
    if (spec.decisions.candidates.empty())
        throw EmptyDecisionSpace("no candidate decisions");
    VectorXd ybar = dist.mean();

    TwoStageResult res;
    if (use == PredictionUse::kPointValue) {
        double best = kInf;
        for (std::size_t i = 0; i < spec.decisions.candidates.size(); ++i) {
            double v = spec.f(ybar, spec.decisions.candidates[i]);
            if (res.index < 0 || v < best) {
                res.index = static_cast<int>(i);
                best = v;
                res.decision = spec.decisions.candidates[i];
            }
        }
        if (spec.decisions.solver) {
            VectorXd zs = spec.decisions.solver(ybar);
            if (spec.f(ybar, zs) < best) {
                res.decision = zs;
                res.index = -1;
            }
        }
    } else {
        // marginal expectations of Boolean targets are Bernoulli marginals;
        // the deterministic proxy is the induced independent product program
        Optimum opt = solve_stochastic(bernoulli_product(ybar), spec);
        res.decision = opt.decision;
        res.index = opt.index;
    }
    res.loss_true = expected_loss(dist, res.decision, spec);
    return res;
}

PocReport price_of_correlation(const DiscreteDistribution& dist,
                               const LossSpec& spec) {
    dist.validate();
    PocReport rep;
    rep.boolean_support = dist.boolean_support();
    Optimum star = solve_stochastic(dist, spec);
    DiscreteDistribution proxy = independent_proxy(dist);
    Optimum prox = solve_stochastic(proxy, spec);
    rep.z_star = star.decision;
    rep.star_index = star.index;
    rep.loss_star = star.loss;
    rep.z_proxy = prox.decision;
    rep.proxy_index = prox.index;
    rep.loss_proxy = expected_loss(dist, prox.decision, spec);
    rep.poc = rep.loss_proxy / rep.loss_star;
    return rep;
}

NonlinearityWitness find_nonlinearity_witness(
    const std::function<double(double, double)>& gamma,
    const std::vector<double>& grid_a, const std::vector<double>& grid_b,
    double threshold) {
    const double alphas[] = {0.5, 0.25, 0.75};
    std::vector<Eigen::Vector2d> points;
    for (double a : grid_a)
        for (double b : grid_b) points.emplace_back(a, b);
    for (const auto& y : points) {
        for (const auto& yp : points) {
            for (double alpha : alphas) {
                Eigen::Vector2d mix = alpha * y + (1.0 - alpha) * yp;
                double gap = gamma(mix(0), mix(1)) -
                             (alpha * gamma(y(0), y(1)) +
                              (1.0 - alpha) * gamma(yp(0), yp(1)));
                if (std::abs(gap) > threshold) {
                    NonlinearityWitness w;
                    w.y = y;
                    w.y_prime = yp;
                    w.alpha = alpha;
                    w.jensen_gap = gap;
                    return w;
                }
            }
        }
    }
    throw NoWitnessFound("gamma is linear on the supplied grid");
}

}  // namespace corrgap::stoch
