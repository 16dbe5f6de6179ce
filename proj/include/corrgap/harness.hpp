#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "corrgap/constructions.hpp"
#include "corrgap/learners.hpp"
#include "corrgap/synthetic.hpp"

namespace corrgap::harness {

struct SweepConfig {
    std::vector<double> rho_values = {-1.0, -0.8, -0.6, -0.4, -0.2, 0.0,
                                      0.2,  0.4,  0.6,  0.8,  1.0};
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    int samples = 1000;
    int test_count = 200;
    synth::DistConfig dist;
    learn::TrainConfig train;
    int parallelism = 1;

    void validate() const;
    // reduced profile: 5 rho values, 3 seeds, 200 iterations
    static SweepConfig fast_profile();
};

struct ResultsRow {
    double rho = 0.0;
    std::uint64_t seed = 0;
    std::string method;  // two_stage | end_to_end | opt
    double test_loss = 0.0;
    double train_seconds = 0.0;
};

struct CellFailure {
    double rho = 0.0;
    std::uint64_t seed = 0;
    std::string message;
};

struct SweepResults {
    std::vector<ResultsRow> rows;  // sorted by (rho, seed, method)
    std::vector<CellFailure> failures;
};

struct PlotRow {
    double rho = 0.0;
    std::string method;
    double mean = 0.0;
    double p10 = 0.0;
    double p90 = 0.0;
};

struct HarnessError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct IoFailure : HarnessError {
    using HarnessError::HarnessError;
};

// Deterministic per-cell stream: hash(seed value, rho index, seed index),
// so every cell is reproducible in isolation under any schedule.
std::uint64_t cell_seed(const SweepConfig& cfg, int rho_index, int seed_index);

// One (rho, seed) cell: sample, split, fit two_stage / opt / end_to_end,
// solve the facility problem exactly on each model's table, average the true
// demand-weighted cost over the held-out samples.
std::vector<ResultsRow> run_sweep_cell(const SweepConfig& cfg, int rho_index,
                                       int seed_index);

// Pool over cells up to cfg.parallelism; failed cells are recorded and the
// sweep continues. Rows come back sorted by (rho, seed, method).
SweepResults run_rho_sweep(const SweepConfig& cfg);

// ---- gap-construction suite ---------------------------------------------

struct GapSuiteParams {
    std::vector<int> product_d = {1, 10, 50};
    double big_n = 10.0;
    double eps = 0.01;
    double constant = 1.0;
    std::vector<std::string> gammas = {"product", "min"};
    std::vector<double> witness_grid = {0.0, 1.0, 2.0, 3.0};
    double prop1_c = 3.0;
    double prop1_eps = 0.1;
    double grid_step = 0.01;
};

struct GapSuiteResult {
    std::vector<cons::GapReport> reports;
    std::optional<cons::Prop1GridReport> prop1_grid;
    std::vector<std::pair<std::string, stoch::PocReport>> poc_reports;
    std::vector<std::string> failures;
};

GapSuiteResult run_gap_suite(const GapSuiteParams& params);

// Worked example instances for the three POC kinds. The flow instance is
// built so the independent proxy overpays: POC = 7/6.
cons::PocInstance worked_poc_instance(cons::PocKind kind);

// ---- QP gradient check ---------------------------------------------------

struct GradCheckReport {
    int trials = 0;
    int failures = 0;
    double max_rel_error = 0.0;
};

// Random strongly convex QPs (n_var <= 30, n_ineq <= 60) with a strictly
// feasible point; analytic cost gradient vs central finite differences.
GradCheckReport run_gradient_check(int trials, double tol, std::uint64_t seed);

// ---- emission ------------------------------------------------------------

// %.9g, matching the file schemas
std::string format_float(double x);

// nearest-rank percentile, pct in (0, 100]: sort ascending, take the value at
// rank ceil(pct/100 * n)
double nearest_rank_percentile(std::vector<double> values, double pct);

std::vector<PlotRow> aggregate_plotdata(const std::vector<ResultsRow>& rows);

std::string to_csv(const std::vector<ResultsRow>& rows);
std::string to_json(const std::vector<ResultsRow>& rows);
std::string to_plotdata(const std::vector<ResultsRow>& rows);
std::vector<ResultsRow> parse_csv(const std::string& text);
std::vector<ResultsRow> parse_json(const std::string& text);

std::string gap_suite_json(const GapSuiteResult& result);

void write_file(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

void sort_rows(std::vector<ResultsRow>& rows);

}  // namespace corrgap::harness
