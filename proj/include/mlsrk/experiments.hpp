#pragma once

#include <cstdint>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mlsrk/discretize.hpp"
#include "mlsrk/model.hpp"
#include "mlsrk/multilevel.hpp"

namespace mlsrk {

/// Everything an experiment run needs. Loaded from JSON; unspecified keys
/// keep the per-model defaults from default_config().
struct ExperimentConfig {
    std::string model = "gbm1d";
    std::vector<std::string> schemes;
    std::vector<double> mse_targets;  // eps^2, strictly decreasing
    std::size_t repetitions = 20;
    std::size_t particles = 120;
    std::size_t burn_in = 8000;
    int l0 = 1;
    std::map<std::string, int> beta_overrides;
    std::uint64_t seed = 1;
    std::string output_dir = "out";

    std::size_t observations = 120;  // K
    int data_level = 10;             // generation level of the synthetic data
    double proposal_step = 0.0;      // 0 = preset value
    double reference_factor = 4.0;   // reference eps^2 = min target / factor

    int rate_min_level = 3;
    int rate_max_level = 8;
    int rate_reference_level = 12;
    std::size_t rate_samples = 10000;
    double rate_horizon = 1.0;

    // Wall-clock is the only non-reproducible output column; switching it
    // off makes the CSVs byte-identical across runs and thread counts.
    bool record_wall_clock = true;

    /// Throws std::invalid_argument (or UnsupportedDimension) on violation.
    void validate() const;
    /// Scheme with the configured strong-rate override applied.
    Scheme scheme(const std::string& name) const;
    /// FNV-1a over the canonical JSON dump minus output_dir, as 16 hex digits.
    std::string hash() const;
};

/// Paper-scale defaults for "gbm1d", "gbm3d" or "nonlinear2d".
ExperimentConfig default_config(const std::string& model);

/// Keys missing from `j` fall back to default_config(j["model"]).
/// Unknown keys are rejected so typos do not pass silently.
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& config);

/// Comma-separated list -> names; empty items are an error.
std::vector<std::string> split_list(const std::string& text);

// ---------------------------------------------------------------------------
// Strong / weak rates

struct RateRow {
    std::string scheme;
    int level;
    double strong_err;  // E|X_ref - X_l|^2
    double weak_err;    // |E[X_ref - X_l]| (Euclidean norm of the mean)
    std::size_t n;
};

struct SlopeFit {
    std::string scheme;
    std::string quantity;  // "strong", "weak" or "cost_vs_mse"
    double slope;
    double intercept;
    bool valid;  // false when the data cannot be fitted (e.g. zero errors)
};

struct RateTable {
    std::vector<RateRow> rows;
    std::vector<SlopeFit> fits;  // strong and weak fits of -log2(err) vs level
};

/// For each scheme and each level in [rate_min_level, rate_max_level]:
/// rate_samples Brownian paths over [0, rate_horizon] at the reference level
/// are coarsened to every level, and the terminal states are compared with the
/// reference-level solution on the same path. Fits are positive rates: the
/// slope of -log2(error) against the level.
RateTable run_rate_experiment(const ExperimentConfig& config, const SdeModel& model,
                              Execution exec = Execution::parallel);
RateTable run_rate_experiment(const ExperimentConfig& config, Execution exec = Execution::parallel);

// ---------------------------------------------------------------------------
// Cost vs MSE

struct CostMseRow {
    std::string scheme;
    double eps2;
    double mse;
    double cost;    // sum (N_l - N_burn) 2^l
    double wall_s;  // mean wall-clock per repetition
    std::size_t n_reps;
};

struct SchemeReference {
    std::string scheme;
    double eps2;
    double estimate;
    double cost;
};

struct CostMseTable {
    std::vector<CostMseRow> rows;
    std::vector<SlopeFit> fits;  // log cost vs log mse, per scheme
    std::vector<SchemeReference> references;
    // estimates[scheme][target][rep]
    std::map<std::string, std::vector<std::vector<double>>> estimates;
};

/// Per scheme: one reference multilevel run at min(target) / reference_factor,
/// then `repetitions` independent runs for each target. Cells run in parallel
/// on independent sub-streams; results do not depend on the thread count.
CostMseTable run_cost_mse_experiment(const ExperimentConfig& config, const Dataset& data,
                                     Execution exec = Execution::parallel);
CostMseTable run_cost_mse_experiment(const ExperimentConfig& config, Execution exec = Execution::parallel);

/// The synthetic dataset an experiment uses: preset model at theta*, K
/// observations, generated at data_level from config.seed.
Dataset experiment_dataset(const ExperimentConfig& config);

/// Ordinary least squares y = slope * x + intercept.
SlopeFit least_squares(std::span<const double> x, std::span<const double> y);

/// Fitted cost at a given MSE from a cost-vs-MSE fit (natural-log space).
double fitted_cost(const SlopeFit& fit, double mse);

// CSV writers. Provenance (config hash, seed) leads as '#' comment lines and
// the fits trail the table, so the first non-comment line is the fixed
// header.
void write_rates_csv(const RateTable& table, const ExperimentConfig& config, std::ostream& out);
void write_cost_mse_csv(const CostMseTable& table, const ExperimentConfig& config, std::ostream& out);
nlohmann::json to_json(const CostMseTable& table);

}  // namespace mlsrk
