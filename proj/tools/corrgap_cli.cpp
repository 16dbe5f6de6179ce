#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "corrgap/config.hpp"
#include "corrgap/harness.hpp"

namespace {

using namespace corrgap;
using json = nlohmann::ordered_json;

constexpr const char* kVersion = "1.0.0";

// "p: v0 v1 ..." scenario rows
stoch::DiscreteDistribution parse_events(const std::vector<std::string>& rows) {
    stoch::DiscreteDistribution dist;
    for (const auto& row : rows) {
        auto colon = row.find(':');
        if (colon == std::string::npos)
            throw config::ConfigError("event row needs 'prob: values': " + row);
        stoch::Scenario s;
        s.p = std::stod(row.substr(0, colon));
        std::istringstream ss(row.substr(colon + 1));
        std::vector<double> vals;
        double v;
        while (ss >> v) vals.push_back(v);
        s.y = Eigen::VectorXd(static_cast<Eigen::Index>(vals.size()));
        for (std::size_t i = 0; i < vals.size(); ++i)
            s.y(static_cast<Eigen::Index>(i)) = vals[i];
        dist.scenarios.push_back(std::move(s));
    }
    dist.validate();
    return dist;
}

cons::PocInstance load_poc_instance(const std::string& kind,
                                    const std::string& params_path) {
    if (params_path.empty()) {
        if (kind == "flow") return harness::worked_poc_instance(cons::PocKind::kFlow);
        if (kind == "setcover")
            return harness::worked_poc_instance(cons::PocKind::kSetCover);
        if (kind == "submodular")
            return harness::worked_poc_instance(cons::PocKind::kSubmodular);
        throw config::ConfigError("unknown POC kind '" + kind + "'");
    }
    config::Document doc = config::parse_toml(harness::read_file(params_path));
    const auto& root = doc[""];
    auto numbers = [&](const std::string& key) {
        std::vector<double> out;
        for (const auto& e : root.at(key).array) out.push_back(e.number);
        return out;
    };
    auto strings = [&](const std::string& key) {
        std::vector<std::string> out;
        for (const auto& e : root.at(key).array) out.push_back(e.str);
        return out;
    };
    try {
        if (kind == "flow") {
            cons::FlowParams params;
            params.c_first = numbers("c_first");
            params.c_second = numbers("c_second");
            params.events = parse_events(strings("events"));
            return cons::build_poc_example(params);
        }
        if (kind == "setcover") {
            cons::SetCoverParams params;
            params.n_items = static_cast<int>(root.at("n_items").number);
            for (const auto& row : strings("subsets")) {
                std::istringstream ss(row);
                std::vector<int> subset;
                int item;
                while (ss >> item) subset.push_back(item);
                params.subsets.push_back(std::move(subset));
            }
            params.c_first = root.at("c_first").number;
            params.c_second = root.at("c_second").number;
            params.events = parse_events(strings("events"));
            return cons::build_poc_example(params);
        }
        if (kind == "submodular") {
            cons::SubmodularParams params;
            params.n_items = static_cast<int>(root.at("n_items").number);
            params.cost = numbers("cost");
            params.threshold = root.at("threshold").number;
            params.events = parse_events(strings("events"));
            return cons::build_poc_example(params);
        }
    } catch (const std::out_of_range&) {
        throw config::ConfigError("missing key in POC params for kind " + kind);
    }
    throw config::ConfigError("unknown POC kind '" + kind + "'");
}

int cmd_sweep(const std::string& config_path, const std::string& out_dir,
              const std::string& format, bool fast) {
    harness::SweepConfig cfg = fast ? harness::SweepConfig::fast_profile()
                                    : harness::SweepConfig{};
    if (!config_path.empty()) cfg = config::load_sweep_config(config_path);
    cfg.validate();

    std::filesystem::create_directories(out_dir);
    harness::SweepResults results = harness::run_rho_sweep(cfg);
    for (const auto& f : results.failures) {
        std::cerr << "cell failed: rho=" << f.rho << " seed=" << f.seed << ": "
                  << f.message << "\n";
    }
    if (results.rows.empty()) {
        std::cerr << "every cell failed\n";
        return 3;
    }

    std::string path = out_dir + "/results." +
                       (format == "plotdata" ? "plot.csv" : format);
    if (format == "csv") {
        harness::write_file(path, harness::to_csv(results.rows));
    } else if (format == "json") {
        harness::write_file(path, harness::to_json(results.rows));
    } else if (format == "plotdata") {
        harness::write_file(path, harness::to_plotdata(results.rows));
    } else {
        std::cerr << "unknown format '" << format << "'\n";
        return 1;
    }
    std::cout << "wrote " << path << " (" << results.rows.size() << " rows)\n";
    return results.failures.empty() ? 0 : 2;
}

int cmd_gaps(const std::string& params_path, const std::string& out_dir) {
    harness::GapSuiteParams params;
    if (!params_path.empty()) params = config::load_gap_params(params_path);
    std::filesystem::create_directories(out_dir);
    harness::GapSuiteResult result = harness::run_gap_suite(params);
    std::string path = out_dir + "/gaps.json";
    harness::write_file(path, harness::gap_suite_json(result));
    for (const auto& f : result.failures) std::cerr << "failed: " << f << "\n";
    std::cout << "wrote " << path << " (" << result.reports.size()
              << " reports)\n";
    return result.failures.empty() ? 0 : 2;
}

int cmd_poc(const std::string& kind, const std::string& params_path) {
    cons::PocInstance inst = load_poc_instance(kind, params_path);
    stoch::PocReport rep = stoch::price_of_correlation(inst.dist, inst.spec);
    stoch::Optimum star = stoch::solve_stochastic(inst.dist, inst.spec);
    Eigen::VectorXd marginals = cons::e2e_constructive_marginals(inst, star);
    stoch::Optimum reproduced =
        stoch::solve_stochastic(stoch::bernoulli_product(marginals), inst.spec);
    double reproduced_loss =
        stoch::expected_loss(inst.dist, reproduced.decision, inst.spec);

    json doc;
    doc["kind"] = kind;
    doc["loss_star"] = rep.loss_star;
    doc["loss_proxy"] = rep.loss_proxy;
    doc["poc"] = rep.poc;
    doc["boolean_support"] = rep.boolean_support;
    doc["constructive_marginals"] = json::array();
    for (int i = 0; i < marginals.size(); ++i)
        doc["constructive_marginals"].push_back(marginals(i));
    doc["constructive_reproduces_optimum"] = reproduced_loss == star.loss;
    std::cout << doc.dump(2) << "\n";
    return reproduced_loss == star.loss ? 0 : 2;
}

int cmd_gradcheck(int trials, double tol, std::uint64_t seed) {
    harness::GradCheckReport rep = harness::run_gradient_check(trials, tol, seed);
    std::printf("trials=%d failures=%d max_rel_error=%.3e tol=%.3e\n",
                rep.trials, rep.failures, rep.max_rel_error, tol);
    return rep.failures == 0 ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"correlation-gap laboratory"};
    app.require_subcommand(1);

    std::string config_path, out_dir = ".", format = "csv";
    bool fast = false;
    auto* sweep = app.add_subcommand("sweep", "run the rho sweep");
    sweep->add_option("--config", config_path, "TOML sweep config");
    sweep->add_option("--out", out_dir, "output directory");
    sweep->add_option("--format", format, "csv|json|plotdata");
    sweep->add_flag("--fast", fast, "reduced profile (5 rho, 3 seeds, 200 iters)");

    std::string gap_params, gaps_out = ".";
    auto* gaps = app.add_subcommand("gaps", "run the gap-construction suite");
    gaps->add_option("--params", gap_params, "TOML gap parameters");
    gaps->add_option("--out", gaps_out, "output directory");

    std::string poc_kind, poc_params;
    auto* poc = app.add_subcommand("poc", "price-of-correlation example");
    poc->add_option("--kind", poc_kind, "flow|setcover|submodular")->required();
    poc->add_option("--params", poc_params, "TOML instance parameters");

    int trials = 200;
    double tol = 1e-4;
    std::uint64_t gc_seed = 7;
    auto* gradcheck = app.add_subcommand("gradcheck", "QP gradient check");
    gradcheck->add_option("--trials", trials, "number of random QPs");
    gradcheck->add_option("--tol", tol, "relative error tolerance");
    gradcheck->add_option("--seed", gc_seed, "RNG seed");

    auto* version = app.add_subcommand("version", "print version");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (sweep->parsed()) return cmd_sweep(config_path, out_dir, format, fast);
        if (gaps->parsed()) return cmd_gaps(gap_params, gaps_out);
        if (poc->parsed()) return cmd_poc(poc_kind, poc_params);
        if (gradcheck->parsed()) return cmd_gradcheck(trials, tol, gc_seed);
        if (version->parsed()) {
            std::cout << "corrgap " << kVersion << "\n";
            return 0;
        }
    } catch (const config::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const harness::HarnessError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "fatal: " << e.what() << "\n";
        return 3;
    }
    return 1;
}
