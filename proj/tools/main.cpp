// mlsrk command-line driver: data generation, rate and cost-vs-MSE sweeps,
// single multilevel and single-level runs.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <omp.h>

#include "CLI11.hpp"
#include "mlsrk/experiments.hpp"
#include "mlsrk/mcmc.hpp"
#include "mlsrk/multilevel.hpp"

namespace fs = std::filesystem;
using namespace mlsrk;

namespace {

// Flags shared by every subcommand. Each one that is set overrides the
// matching key of the JSON config.
struct CommonFlags {
    std::string config_path;
    std::optional<std::string> model;
    std::optional<std::string> schemes;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<std::size_t> observations;
    std::optional<std::size_t> particles;
    std::optional<std::size_t> burn_in;
    std::optional<std::size_t> repetitions;
    std::optional<std::string> targets;
    bool no_wall_clock = false;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--config", f.config_path, "JSON config file")->check(CLI::ExistingFile);
    cmd->add_option("--model", f.model, "gbm1d | gbm3d | nonlinear2d");
    cmd->add_option("--schemes", f.schemes, "comma-separated subset of em,milstein,heun,rk4");
    cmd->add_option("--seed", f.seed, "master seed");
    cmd->add_option("--out", f.out, "output directory");
    cmd->add_option("--observations", f.observations, "number of observations K");
    cmd->add_option("--particles", f.particles, "particles per filter M");
    cmd->add_option("--burn-in", f.burn_in, "MCMC burn-in per level");
    cmd->add_option("--repetitions", f.repetitions, "repetitions per MSE target");
    cmd->add_option("--targets", f.targets, "comma-separated MSE targets, decreasing");
    cmd->add_flag("--no-wall-clock", f.no_wall_clock, "write wall_s = 0 for byte-reproducible output");
}

ExperimentConfig load_config(const CommonFlags& f) {
    nlohmann::json j = nlohmann::json::object();
    if (!f.config_path.empty()) {
        std::ifstream in(f.config_path);
        try {
            j = nlohmann::json::parse(in);
        } catch (const nlohmann::json::parse_error& e) {
            throw std::invalid_argument("config: cannot parse " + f.config_path + ": " + e.what());
        }
    }
    // Keys the file leaves out fall back to the defaults of the final model.
    if (f.model) j["model"] = *f.model;
    if (f.schemes) j["schemes"] = split_list(*f.schemes);
    if (f.seed) j["seed"] = *f.seed;
    if (f.out) j["output_dir"] = *f.out;
    if (f.observations) j["observations"] = *f.observations;
    if (f.particles) j["particles"] = *f.particles;
    if (f.burn_in) j["burn_in"] = *f.burn_in;
    if (f.repetitions) j["repetitions"] = *f.repetitions;
    if (f.targets) {
        std::vector<double> t;
        for (const auto& item : split_list(*f.targets)) t.push_back(std::stod(item));
        j["mse_targets"] = t;
    }
    if (f.no_wall_clock) j["record_wall_clock"] = false;
    return config_from_json(j);
}

fs::path prepare_out(const ExperimentConfig& c) {
    fs::path dir(c.output_dir);
    fs::create_directories(dir);
    return dir;
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    return out;
}

void apply_thread_env() {
    if (const char* env = std::getenv("MLSRK_THREADS")) {
        const int n = std::atoi(env);
        if (n < 1) throw std::invalid_argument("MLSRK_THREADS must be a positive integer");
        omp_set_num_threads(n);
    }
}

Dataset load_or_generate(const ExperimentConfig& c, const std::string& data_prefix) {
    if (data_prefix.empty()) return experiment_dataset(c);
    Dataset d = read_dataset(data_prefix + ".csv", data_prefix + ".json");
    if (d.model_name != c.model)
        throw std::invalid_argument("dataset was generated for " + d.model_name + ", config model is " + c.model);
    return d;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multilevel PMMH with stochastic Runge-Kutta discretizations"};
    app.require_subcommand(1);

    CommonFlags gen_f, rates_f, cost_f, ml_f, single_f;

    auto* gen = app.add_subcommand("generate-data", "simulate a synthetic dataset");
    add_common(gen, gen_f);
    std::optional<int> data_level;
    gen->add_option("--level", data_level, "generation level");

    auto* rates = app.add_subcommand("rates", "strong/weak error rates against a fine reference");
    add_common(rates, rates_f);
    std::optional<std::size_t> rate_samples;
    rates->add_option("--samples", rate_samples, "Brownian paths per scheme");

    auto* cost = app.add_subcommand("cost-mse", "cost versus MSE sweep of the multilevel estimator");
    add_common(cost, cost_f);

    auto* ml = app.add_subcommand("ml-run", "one multilevel estimate of E[theta | y]");
    add_common(ml, ml_f);
    std::string ml_scheme = "rk4";
    double ml_eps2 = 2e-3;
    std::string ml_data;
    ml->add_option("--scheme", ml_scheme, "discretization scheme");
    ml->add_option("--eps2", ml_eps2, "target MSE")->check(CLI::PositiveNumber);
    ml->add_option("--data", ml_data, "dataset prefix (reads PREFIX.csv and PREFIX.json)");

    auto* single = app.add_subcommand("single-run", "one single-level PMMH chain");
    add_common(single, single_f);
    std::string single_scheme = "rk4";
    int single_level = 3;
    std::size_t single_iters = 20000;
    std::string single_data;
    single->add_option("--scheme", single_scheme, "discretization scheme");
    single->add_option("--level", single_level, "discretization level")->check(CLI::NonNegativeNumber);
    single->add_option("--iterations", single_iters, "MCMC iterations")->check(CLI::PositiveNumber);
    single->add_option("--data", single_data, "dataset prefix (reads PREFIX.csv and PREFIX.json)");

    CLI11_PARSE(app, argc, argv);

    try {
        apply_thread_env();

        if (*gen) {
            ExperimentConfig c = load_config(gen_f);
            if (data_level) {
                c.data_level = *data_level;
                c.validate();
            }
            const fs::path dir = prepare_out(c);
            const Dataset d = experiment_dataset(c);
            const std::string stem = "data_" + c.model;
            write_dataset(d, (dir / (stem + ".csv")).string(), (dir / (stem + ".json")).string());
            std::cout << "wrote " << (dir / (stem + ".csv")).string() << " (" << d.size() << " observations)\n";
        } else if (*rates) {
            ExperimentConfig c = load_config(rates_f);
            if (rate_samples) {
                c.rate_samples = *rate_samples;
                c.validate();
            }
            const fs::path dir = prepare_out(c);
            const RateTable table = run_rate_experiment(c);
            const fs::path path = dir / ("rates_" + c.model + ".csv");
            auto out = open_out(path);
            write_rates_csv(table, c, out);
            for (const auto& f : table.fits)
                if (f.quantity == "strong")
                    std::cout << f.scheme << ": strong rate " << (f.valid ? std::to_string(f.slope) : "n/a") << '\n';
            std::cout << "wrote " << path.string() << '\n';
        } else if (*cost) {
            const ExperimentConfig c = load_config(cost_f);
            const fs::path dir = prepare_out(c);
            const CostMseTable table = run_cost_mse_experiment(c);
            const fs::path path = dir / ("cost_mse_" + c.model + ".csv");
            auto out = open_out(path);
            write_cost_mse_csv(table, c, out);
            nlohmann::json j = to_json(table);
            j["config"] = to_json(c);
            j["config_hash"] = c.hash();
            auto js = open_out(dir / ("cost_mse_" + c.model + ".json"));
            js << j.dump(2) << '\n';
            for (const auto& f : table.fits)
                std::cout << f.scheme << ": cost ~ MSE^" << (f.valid ? std::to_string(f.slope) : "n/a") << '\n';
            std::cout << "wrote " << path.string() << '\n';
        } else if (*ml) {
            const ExperimentConfig c = load_config(ml_f);
            const Scheme scheme = c.scheme(ml_scheme);
            const ModelPreset preset = make_preset(c.model);
            validate_scheme_for_dim(scheme, preset.sde->dim());
            const fs::path dir = prepare_out(c);
            const Dataset data = load_or_generate(c, ml_data);
            MlConfig cfg = allocate(std::sqrt(ml_eps2), scheme.beta, c.l0, c.burn_in);
            cfg.n_particles = c.particles;
            cfg.seed = RngStream(c.seed).derive(StreamPurpose::reference)();
            const GaussianRandomWalk proposal(c.proposal_step > 0 ? c.proposal_step : preset.proposal_step);
            const MlResult r = ml_estimate(cfg, scheme, *preset.sde, *preset.obs, preset.prior, proposal, data,
                                           theta_functional());
            nlohmann::json j = to_json(r);
            j["scheme"] = ml_scheme;
            j["model"] = c.model;
            j["config_hash"] = c.hash();
            if (!c.record_wall_clock) j["wall_seconds"] = 0.0;
            const fs::path path = dir / ("ml_" + c.model + "_" + ml_scheme + ".json");
            auto out = open_out(path);
            out << j.dump(2) << '\n';
            std::cout << "estimate " << r.estimate << " (L = " << cfg.L << ", cost " << r.cost << ")\n";
            std::cout << "wrote " << path.string() << '\n';
        } else if (*single) {
            const ExperimentConfig c = load_config(single_f);
            const Scheme scheme = c.scheme(single_scheme);
            const ModelPreset preset = make_preset(c.model);
            validate_scheme_for_dim(scheme, preset.sde->dim());
            if (single_iters <= c.burn_in)
                throw std::invalid_argument("--iterations must exceed the burn-in (" + std::to_string(c.burn_in) + ")");
            const fs::path dir = prepare_out(c);
            const Dataset data = load_or_generate(c, single_data);
            const GaussianRandomWalk proposal(c.proposal_step > 0 ? c.proposal_step : preset.proposal_step);
            const auto chain = pmmh_single(single_level, scheme, *preset.sde, *preset.obs, preset.prior, proposal,
                                           c.particles, single_iters, c.burn_in, data,
                                           RngStream(c.seed).derive(StreamPurpose::level, single_level));
            const double mean = chain_average(chain, theta_functional());
            const fs::path path = dir / ("chain_" + c.model + "_" + single_scheme + "_l" +
                                         std::to_string(single_level) + ".csv");
            auto out = open_out(path);
            out << "# config_hash=" << c.hash() << " seed=" << c.seed << '\n';
            write_chain_csv(chain, out);
            std::cout << "posterior mean " << mean << ", acceptance " << chain.acceptance_rate() << '\n';
            std::cout << "wrote " << path.string() << '\n';
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
