#include "corrgap/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "corrgap/qp.hpp"

namespace corrgap::harness {

using json = nlohmann::ordered_json;

void SweepConfig::validate() const {
    if (rho_values.empty()) throw HarnessError("rho_values is empty");
    for (double rho : rho_values) {
        if (rho < -1.0 || rho > 1.0)
            throw HarnessError("rho values must lie in [-1, 1]");
    }
    if (seeds.empty()) throw HarnessError("seeds is empty");
    if (samples < 1) throw HarnessError("samples must be positive");
    if (test_count < 1 || test_count >= samples)
        throw HarnessError("require 0 < test_count < samples");
    if (parallelism < 1) throw HarnessError("parallelism must be >= 1");
    dist.validate();
    train.validate();
}

SweepConfig SweepConfig::fast_profile() {
    SweepConfig cfg;
    cfg.rho_values = {-1.0, -0.5, 0.0, 0.5, 1.0};
    cfg.seeds = {1, 2, 3};
    cfg.train.iterations = 200;
    return cfg;
}

std::uint64_t cell_seed(const SweepConfig& cfg, int rho_index, int seed_index) {
    std::uint64_t s = cfg.seeds.at(static_cast<std::size_t>(seed_index));
    return synth::SplitMix64::mix(
        synth::SplitMix64::mix(s, static_cast<std::uint64_t>(rho_index)),
        static_cast<std::uint64_t>(seed_index));
}

namespace {

double test_loss_of(const learn::CoefficientModel& model,
                    const fl::FLInstance& inst,
                    const std::vector<synth::Sample>& test) {
    fl::Assignment assign = fl::solve_exact(inst, model.theta);
    double acc = 0.0;
    for (const auto& s : test)
        acc += fl::evaluate(assign, s.d.asDiagonal() * s.T);
    return acc / static_cast<double>(test.size());
}

}  // namespace

std::vector<ResultsRow> run_sweep_cell(const SweepConfig& cfg, int rho_index,
                                       int seed_index) {
    const double rho = cfg.rho_values.at(static_cast<std::size_t>(rho_index));
    const std::uint64_t seed = cfg.seeds.at(static_cast<std::size_t>(seed_index));

    synth::DistConfig dist = cfg.dist;
    dist.rho = rho;
    fl::FLInstance inst = dist.instance();

    std::uint64_t stream = cell_seed(cfg, rho_index, seed_index);
    auto all = synth::sample(dist, cfg.samples, stream);
    auto [train, test] = synth::split(all, cfg.test_count);

    using clock = std::chrono::steady_clock;
    std::vector<ResultsRow> rows;
    auto record = [&](const std::string& method,
                      const learn::CoefficientModel& model, double seconds) {
        ResultsRow row;
        row.rho = rho;
        row.seed = seed;
        row.method = method;
        row.test_loss = test_loss_of(model, inst, test);
        row.train_seconds = seconds;
        if (!std::isfinite(row.test_loss))
            throw HarnessError(method + " produced a non-finite test loss");
        rows.push_back(std::move(row));
    };

    auto t0 = clock::now();
    learn::CoefficientModel two_stage = learn::fit_two_stage(train);
    record("two_stage", two_stage,
           std::chrono::duration<double>(clock::now() - t0).count());

    t0 = clock::now();
    learn::CoefficientModel opt = learn::fit_opt(train);
    record("opt", opt, std::chrono::duration<double>(clock::now() - t0).count());

    t0 = clock::now();
    auto [e2e, trace] = learn::fit_end_to_end(train, inst, cfg.train, stream);
    (void)trace;
    record("end_to_end", e2e,
           std::chrono::duration<double>(clock::now() - t0).count());

    sort_rows(rows);
    return rows;
}

SweepResults run_rho_sweep(const SweepConfig& cfg) {
    cfg.validate();
    const int nr = static_cast<int>(cfg.rho_values.size());
    const int ns = static_cast<int>(cfg.seeds.size());
    const int cells = nr * ns;

    std::vector<std::vector<ResultsRow>> per_cell(cells);
    std::vector<std::optional<CellFailure>> failed(cells);
    std::atomic<int> next{0};

    auto worker = [&]() {
        for (;;) {
            int cell = next.fetch_add(1);
            if (cell >= cells) return;
            int ri = cell / ns, si = cell % ns;
            try {
                per_cell[cell] = run_sweep_cell(cfg, ri, si);
            } catch (const std::exception& e) {
                failed[cell] = CellFailure{cfg.rho_values[ri], cfg.seeds[si],
                                           e.what()};
            }
        }
    };

    int threads = std::min(cfg.parallelism, cells);
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    SweepResults out;
    for (int cell = 0; cell < cells; ++cell) {
        for (auto& row : per_cell[cell]) out.rows.push_back(std::move(row));
        if (failed[cell]) out.failures.push_back(*failed[cell]);
    }
    sort_rows(out.rows);
    return out;
}

// ---- gap-construction suite ---------------------------------------------

namespace {

std::function<double(double, double)> named_gamma(const std::string& name) {
    if (name == "product") return [](double a, double b) { return a * b; };
    if (name == "min") return [](double a, double b) { return std::min(a, b); };
    if (name == "max") return [](double a, double b) { return std::max(a, b); };
    if (name == "abs_diff")
        return [](double a, double b) { return std::abs(a - b); };
    if (name == "linear") return [](double a, double b) { return a + 2 * b; };
    throw HarnessError("unknown gamma '" + name + "'");
}

bool close_rel(double a, double b, double tol) {
    return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace

GapSuiteResult run_gap_suite(const GapSuiteParams& params) {
    GapSuiteResult out;

    for (int d : params.product_d) {
        try {
            cons::ProductGap pg = cons::build_product_gap(
                d, params.big_n, params.eps, params.constant);
            cons::GapReport rep = cons::measure_product_gap(pg);
            if (!close_rel(rep.loss_two_stage, pg.closed.loss_two_stage, 1e-9) ||
                !close_rel(rep.loss_e2e, pg.closed.loss_e2e, 1e-9))
                throw cons::ConsError("closed-form mismatch");
            if (pg.explicit_instance) {
                cons::GapReport ex = cons::measure_gap(*pg.explicit_instance);
                if (!close_rel(ex.loss_two_stage, rep.loss_two_stage, 1e-9) ||
                    !close_rel(ex.loss_e2e, rep.loss_e2e, 1e-9))
                    throw cons::ConsError("block/explicit mismatch");
            }
            out.reports.push_back(std::move(rep));
        } catch (const std::exception& e) {
            out.failures.push_back("product_gap_d" + std::to_string(d) + ": " +
                                   e.what());
        }
    }

    for (const auto& name : params.gammas) {
        try {
            auto gamma = named_gamma(name);
            stoch::NonlinearityWitness w = stoch::find_nonlinearity_witness(
                gamma, params.witness_grid, params.witness_grid);
            cons::GapInstance inst = cons::build_nonlinear_gap(gamma, w);
            inst.label = "nonlinear_gap_" + name;
            cons::GapReport rep = cons::measure_gap(inst);
            if (inst.closed_forms &&
                (!close_rel(rep.loss_two_stage, inst.closed_forms->loss_two_stage,
                            1e-9) ||
                 !close_rel(rep.loss_e2e, inst.closed_forms->loss_e2e, 1e-9)))
                throw cons::ConsError("closed-form mismatch");
            if (!(rep.loss_two_stage > rep.loss_e2e))
                throw cons::ConsError("no strict two-stage gap");
            out.reports.push_back(std::move(rep));
        } catch (const std::exception& e) {
            out.failures.push_back("nonlinear_gap_" + name + ": " + e.what());
        }
    }

    try {
        cons::GapInstance inst =
            cons::build_prop1_counterexample(params.prop1_c, params.prop1_eps);
        cons::GapReport rep = cons::measure_gap(inst);
        if (inst.closed_forms &&
            !close_rel(rep.loss_e2e, inst.closed_forms->loss_e2e, 1e-9))
            throw cons::ConsError("closed-form mismatch");
        cons::Prop1GridReport grid =
            cons::verify_e2e_suboptimal(inst, params.grid_step);
        if (!grid.every_point_exceeds_star)
            throw cons::ConsError("some grid point matched the stochastic optimum");
        out.reports.push_back(std::move(rep));
        out.prop1_grid = grid;
    } catch (const std::exception& e) {
        out.failures.push_back(std::string("prop1: ") + e.what());
    }

    const std::pair<cons::PocKind, std::string> kinds[] = {
        {cons::PocKind::kFlow, "flow"},
        {cons::PocKind::kSetCover, "setcover"},
        {cons::PocKind::kSubmodular, "submodular"}};
    for (const auto& [kind, name] : kinds) {
        try {
            cons::PocInstance inst = worked_poc_instance(kind);
            stoch::PocReport rep = stoch::price_of_correlation(inst.dist, inst.spec);
            if (kind == cons::PocKind::kFlow && !close_rel(rep.poc, 7.0 / 6.0, 1e-9))
                throw cons::ConsError("flow POC is not 7/6");
            out.poc_reports.emplace_back(name, std::move(rep));
        } catch (const std::exception& e) {
            out.failures.push_back("poc_" + name + ": " + e.what());
        }
    }
    return out;
}

cons::PocInstance worked_poc_instance(cons::PocKind kind) {
    auto comonotone = [](int d) {
        stoch::DiscreteDistribution dist;
        dist.scenarios = {{Eigen::VectorXd::Ones(d), 0.5},
                          {Eigen::VectorXd::Zero(d), 0.5}};
        return dist;
    };
    switch (kind) {
        case cons::PocKind::kFlow: {
            cons::FlowParams params;
            params.c_first = {0.0, 3.0, 6.0};
            params.c_second = {0.0, 8.0, 16.0};
            params.events = comonotone(2);
            return cons::build_poc_example(params);
        }
        case cons::PocKind::kSetCover: {
            cons::SetCoverParams params;
            params.n_items = 4;
            params.subsets = {{0, 1}, {2, 3}};
            params.c_first = 1.0;
            params.c_second = 3.0;
            params.events = comonotone(4);
            return cons::build_poc_example(params);
        }
        case cons::PocKind::kSubmodular: {
            cons::SubmodularParams params;
            params.n_items = 2;
            params.cost = {0.0, 2.0, 2.0, 3.0};
            params.threshold = 1.6;
            params.events = comonotone(2);
            return cons::build_poc_example(params);
        }
    }
    throw HarnessError("unknown POC kind");
}

// ---- QP gradient check ---------------------------------------------------

GradCheckReport run_gradient_check(int trials, double tol, std::uint64_t seed) {
    if (trials < 1) throw HarnessError("trials must be >= 1");
    synth::SplitMix64 rng(synth::SplitMix64::mix(seed, 0x67726164ull));
    GradCheckReport rep;
    qp::SolverOptions opts;
    opts.tol = 1e-11;
    const double h = 1e-5;

    int attempts = 0;
    while (rep.trials < trials) {
        if (++attempts > trials * 50)
            throw HarnessError("too many degenerate random QPs");
        const int n = 2 + static_cast<int>(rng.next_u64() % 29);   // <= 30
        const int ne = static_cast<int>(rng.next_u64() % (n / 2 + 1));
        const int ni = 1 + static_cast<int>(rng.next_u64() % 60);  // <= 60

        qp::Problem p;
        Eigen::MatrixXd B(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) B(i, j) = rng.next_normal();
        p.Q = B * B.transpose() + Eigen::MatrixXd::Identity(n, n);
        p.c = Eigen::VectorXd::Zero(n);
        for (int i = 0; i < n; ++i) p.c(i) = rng.next_normal();
        Eigen::VectorXd z0(n);
        for (int i = 0; i < n; ++i) z0(i) = rng.next_normal();
        p.A = Eigen::MatrixXd(ne, n);
        for (int i = 0; i < ne; ++i)
            for (int j = 0; j < n; ++j) p.A(i, j) = rng.next_normal();
        p.b = p.A * z0;
        p.G = Eigen::MatrixXd(ni, n);
        for (int i = 0; i < ni; ++i)
            for (int j = 0; j < n; ++j) p.G(i, j) = rng.next_normal();
        p.h = p.G * z0;
        for (int i = 0; i < ni; ++i) p.h(i) += 0.1 + rng.next_unit();

        Eigen::VectorXd w(n);
        for (int i = 0; i < n; ++i) w(i) = rng.next_normal();

        try {
            qp::Solution sol = qp::solve(p, opts);
            // strict complementarity with a margin: every constraint clearly
            // active or clearly inactive, else the finite-difference step
            // crosses an active-set kink and measures the wrong thing
            double margin = 1.0;
            for (int i = 0; i < ni; ++i)
                margin = std::min(margin,
                                  std::max(sol.slack(i), sol.lambda(i)));
            if (margin < 1e-2) continue;
            Eigen::VectorXd analytic = qp::differentiate_wrt_cost(p, sol, w);
            Eigen::VectorXd fd(n);
            for (int i = 0; i < n; ++i) {
                qp::Problem pp = p;
                pp.c(i) += h;
                double up = w.dot(qp::solve(pp, opts).z);
                pp.c(i) -= 2 * h;
                double dn = w.dot(qp::solve(pp, opts).z);
                fd(i) = (up - dn) / (2 * h);
            }
            double err = (analytic - fd).lpNorm<Eigen::Infinity>() /
                         std::max(1.0, fd.lpNorm<Eigen::Infinity>());
            rep.trials += 1;
            rep.max_rel_error = std::max(rep.max_rel_error, err);
            if (err > tol) rep.failures += 1;
        } catch (const qp::QpError&) {
            // degenerate draw (e.g. near-loss of strict complementarity);
            // redraw without counting the trial
        }
    }
    return rep;
}

// ---- emission ------------------------------------------------------------

std::string format_float(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g", x);
    return buf;
}

double nearest_rank_percentile(std::vector<double> values, double pct) {
    if (values.empty()) throw HarnessError("percentile of empty vector");
    if (pct <= 0.0 || pct > 100.0) throw HarnessError("percentile out of range");
    std::sort(values.begin(), values.end());
    const auto n = static_cast<double>(values.size());
    auto rank = static_cast<std::size_t>(std::ceil(pct / 100.0 * n));
    return values[rank - 1];
}

void sort_rows(std::vector<ResultsRow>& rows) {
    std::sort(rows.begin(), rows.end(),
              [](const ResultsRow& a, const ResultsRow& b) {
                  if (a.rho != b.rho) return a.rho < b.rho;
                  if (a.seed != b.seed) return a.seed < b.seed;
                  return a.method < b.method;
              });
}

std::vector<PlotRow> aggregate_plotdata(const std::vector<ResultsRow>& rows) {
    if (rows.empty()) throw HarnessError("no rows to aggregate");
    std::vector<std::pair<std::pair<double, std::string>, std::vector<double>>>
        groups;
    for (const auto& row : rows) {
        std::pair<double, std::string> key{row.rho, row.method};
        auto it = std::find_if(groups.begin(), groups.end(),
                               [&](const auto& g) { return g.first == key; });
        if (it == groups.end()) {
            groups.push_back({key, {row.test_loss}});
        } else {
            it->second.push_back(row.test_loss);
        }
    }
    std::sort(groups.begin(), groups.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<PlotRow> out;
    for (const auto& [key, losses] : groups) {
        PlotRow pr;
        pr.rho = key.first;
        pr.method = key.second;
        pr.mean = 0.0;
        for (double v : losses) pr.mean += v;
        pr.mean /= static_cast<double>(losses.size());
        pr.p10 = nearest_rank_percentile(losses, 10.0);
        pr.p90 = nearest_rank_percentile(losses, 90.0);
        out.push_back(std::move(pr));
    }
    return out;
}

std::string to_csv(const std::vector<ResultsRow>& rows) {
    if (rows.empty()) throw HarnessError("no rows to emit");
    std::string out = "rho,seed,method,test_loss,train_seconds\n";
    for (const auto& row : rows) {
        out += format_float(row.rho);
        out += ',';
        out += std::to_string(row.seed);
        out += ',';
        out += row.method;
        out += ',';
        out += format_float(row.test_loss);
        out += ',';
        out += format_float(row.train_seconds);
        out += '\n';
    }
    return out;
}

std::string to_json(const std::vector<ResultsRow>& rows) {
    if (rows.empty()) throw HarnessError("no rows to emit");
    json arr = json::array();
    for (const auto& row : rows) {
        arr.push_back({{"rho", row.rho},
                       {"seed", row.seed},
                       {"method", row.method},
                       {"test_loss", row.test_loss},
                       {"train_seconds", row.train_seconds}});
    }
    return arr.dump(2) + "\n";
}

std::string to_plotdata(const std::vector<ResultsRow>& rows) {
    std::string out = "rho,method,mean,p10,p90\n";
    for (const auto& pr : aggregate_plotdata(rows)) {
        out += format_float(pr.rho);
        out += ',';
        out += pr.method;
        out += ',';
        out += format_float(pr.mean);
        out += ',';
        out += format_float(pr.p10);
        out += ',';
        out += format_float(pr.p90);
        out += '\n';
    }
    return out;
}

namespace {

std::vector<std::string> split_line(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream ss(line);
    while (std::getline(ss, item, sep)) out.push_back(item);
    return out;
}

}  // namespace

std::vector<ResultsRow> parse_csv(const std::string& text) {
    std::istringstream ss(text);
    std::string line;
    if (!std::getline(ss, line) ||
        line != "rho,seed,method,test_loss,train_seconds")
        throw HarnessError("bad CSV header");
    std::vector<ResultsRow> rows;
    while (std::getline(ss, line)) {
        if (line.empty()) continue;
        auto fields = split_line(line, ',');
        if (fields.size() != 5) throw HarnessError("bad CSV row: " + line);
        ResultsRow row;
        row.rho = std::stod(fields[0]);
        row.seed = std::stoull(fields[1]);
        row.method = fields[2];
        row.test_loss = std::stod(fields[3]);
        row.train_seconds = std::stod(fields[4]);
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<ResultsRow> parse_json(const std::string& text) {
    json arr = json::parse(text);
    if (!arr.is_array()) throw HarnessError("JSON results must be an array");
    std::vector<ResultsRow> rows;
    for (const auto& obj : arr) {
        ResultsRow row;
        row.rho = obj.at("rho").get<double>();
        row.seed = obj.at("seed").get<std::uint64_t>();
        row.method = obj.at("method").get<std::string>();
        row.test_loss = obj.at("test_loss").get<double>();
        row.train_seconds = obj.at("train_seconds").get<double>();
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string gap_suite_json(const GapSuiteResult& result) {
    json doc;
    doc["reports"] = json::array();
    for (const auto& rep : result.reports) {
        doc["reports"].push_back({{"label", rep.label},
                                  {"loss_two_stage", rep.loss_two_stage},
                                  {"loss_e2e", rep.loss_e2e},
                                  {"loss_opt", rep.loss_opt},
                                  {"ratio_ts_over_e2e", rep.ratio_ts_over_e2e},
                                  {"ratio_ts_over_opt", rep.ratio_ts_over_opt}});
    }
    if (result.prop1_grid) {
        const auto& g = *result.prop1_grid;
        doc["prop1_grid"] = {
            {"loss_star", g.loss_star},
            {"min_true_loss", g.min_true_loss},
            {"argmin_p1", g.argmin_p1},
            {"argmin_p2", g.argmin_p2},
            {"every_point_exceeds_star", g.every_point_exceeds_star}};
    }
    doc["poc"] = json::array();
    for (const auto& [name, rep] : result.poc_reports) {
        doc["poc"].push_back({{"kind", name},
                              {"loss_star", rep.loss_star},
                              {"loss_proxy", rep.loss_proxy},
                              {"poc", rep.poc},
                              {"boolean_support", rep.boolean_support}});
    }
    doc["failures"] = result.failures;
    return doc.dump(2) + "\n";
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoFailure("cannot open for writing: " + path);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoFailure("write failed: " + path);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoFailure("cannot open for reading: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace corrgap::harness
