#include "mlsrk/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <iomanip>
#include <set>
#include <sstream>
#include <stdexcept>

#include "mlsrk/errors.hpp"
#include "mlsrk/paths.hpp"

namespace mlsrk {

namespace {

std::uint64_t fnv1a(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Streams are keyed by scheme name rather than list position so a scheme's
// results do not change when other schemes are added or reordered.
std::uint64_t scheme_key(const std::string& name) { return fnv1a(name); }

std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

void rethrow_first(const std::vector<std::exception_ptr>& failures) {
    for (const auto& f : failures)
        if (f) std::rethrow_exception(f);
}

const std::set<std::string> kConfigKeys = {
    "model",          "schemes",         "mse_targets",    "repetitions",       "particles",
    "burn_in",        "l0",              "beta_overrides", "seed",              "output_dir",
    "observations",   "data_level",      "proposal_step",  "reference_factor",  "rate_min_level",
    "rate_max_level", "rate_reference_level", "rate_samples", "rate_horizon", "record_wall_clock"};

}  // namespace

// --- configuration ----------------------------------------------------------

ExperimentConfig default_config(const std::string& model) {
    ExperimentConfig c;
    c.model = model;
    c.mse_targets = {2e-2, 2e-3, 2e-4, 2e-5};
    if (model == "gbm1d") {
        c.schemes = {"milstein", "heun", "rk4"};
    } else if (model == "gbm3d") {
        c.schemes = {"heun", "rk4"};
    } else if (model == "nonlinear2d") {
        c.schemes = {"heun", "rk4"};
        // Non-commutative-in-the-RK4-sense drift: both schemes drop to rate 2.
        c.beta_overrides = {{"heun", 2}, {"rk4", 2}};
    } else {
        throw std::invalid_argument("unknown model preset: " + model);
    }
    return c;
}

void ExperimentConfig::validate() const {
    const auto names = preset_names();
    if (std::find(names.begin(), names.end(), model) == names.end())
        throw std::invalid_argument("unknown model preset: " + model);
    if (schemes.empty()) throw std::invalid_argument("config: scheme list is empty");
    const std::size_t dim = make_preset(model).sde->dim();
    for (const auto& s : schemes) validate_scheme_for_dim(this->scheme(s), dim);
    for (const auto& [name, beta] : beta_overrides) {
        make_scheme(name);  // unknown names throw
        if (beta < 1 || beta > 4) throw std::invalid_argument("config: beta override for " + name + " must lie in 1..4");
    }
    for (std::size_t i = 0; i < mse_targets.size(); ++i) {
        if (!(mse_targets[i] > 0.0 && mse_targets[i] < 1.0))
            throw std::invalid_argument("config: MSE targets must lie in (0, 1)");
        if (i > 0 && !(mse_targets[i] < mse_targets[i - 1]))
            throw std::invalid_argument("config: MSE targets must be strictly decreasing");
    }
    if (repetitions < 1) throw std::invalid_argument("config: repetitions must be positive");
    if (particles < 2) throw std::invalid_argument("config: need at least two particles");
    if (l0 < 0) throw std::invalid_argument("config: l0 must be non-negative");
    if (observations < 1) throw std::invalid_argument("config: need at least one observation");
    if (data_level < 0) throw std::invalid_argument("config: data_level must be non-negative");
    if (!(proposal_step >= 0.0)) throw std::invalid_argument("config: proposal_step must be non-negative");
    if (!(reference_factor >= 1.0)) throw std::invalid_argument("config: reference_factor must be >= 1");
    if (rate_min_level < 1 || rate_max_level < rate_min_level || rate_max_level > rate_reference_level - 2)
        throw std::invalid_argument("config: rate levels must satisfy 1 <= min <= max <= reference - 2");
    if (rate_samples < 2) throw std::invalid_argument("config: need at least two rate samples");
    if (!(rate_horizon > 0.0)) throw std::invalid_argument("config: rate_horizon must be positive");
}

Scheme ExperimentConfig::scheme(const std::string& name) const {
    const auto it = beta_overrides.find(name);
    return make_scheme(name, it == beta_overrides.end() ? 0 : it->second);
}

std::string ExperimentConfig::hash() const {
    // Where results are written does not change them.
    nlohmann::json j = to_json(*this);
    j.erase("output_dir");
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(j.dump())));
    return buf;
}

nlohmann::json to_json(const ExperimentConfig& c) {
    return {{"model", c.model},
            {"schemes", c.schemes},
            {"mse_targets", c.mse_targets},
            {"repetitions", c.repetitions},
            {"particles", c.particles},
            {"burn_in", c.burn_in},
            {"l0", c.l0},
            {"beta_overrides", c.beta_overrides},
            {"seed", c.seed},
            {"output_dir", c.output_dir},
            {"observations", c.observations},
            {"data_level", c.data_level},
            {"proposal_step", c.proposal_step},
            {"reference_factor", c.reference_factor},
            {"rate_min_level", c.rate_min_level},
            {"rate_max_level", c.rate_max_level},
            {"rate_reference_level", c.rate_reference_level},
            {"rate_samples", c.rate_samples},
            {"rate_horizon", c.rate_horizon},
            {"record_wall_clock", c.record_wall_clock}};
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw std::invalid_argument("config: top level must be a JSON object");
    for (const auto& [key, value] : j.items())
        if (!kConfigKeys.count(key)) throw std::invalid_argument("config: unknown key '" + key + "'");
    ExperimentConfig c = default_config(j.value("model", std::string("gbm1d")));
    try {
        auto get = [&](const char* key, auto& field) {
            if (j.contains(key)) j.at(key).get_to(field);
        };
        get("schemes", c.schemes);
        get("mse_targets", c.mse_targets);
        get("repetitions", c.repetitions);
        get("particles", c.particles);
        get("burn_in", c.burn_in);
        get("l0", c.l0);
        get("beta_overrides", c.beta_overrides);
        get("seed", c.seed);
        get("output_dir", c.output_dir);
        get("observations", c.observations);
        get("data_level", c.data_level);
        get("proposal_step", c.proposal_step);
        get("reference_factor", c.reference_factor);
        get("rate_min_level", c.rate_min_level);
        get("rate_max_level", c.rate_max_level);
        get("rate_reference_level", c.rate_reference_level);
        get("rate_samples", c.rate_samples);
        get("rate_horizon", c.rate_horizon);
        get("record_wall_clock", c.record_wall_clock);
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("config: malformed value: ") + e.what());
    }
    c.validate();
    return c;
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        if (item.empty()) throw std::invalid_argument("empty item in list '" + text + "'");
        out.push_back(item);
    }
    if (out.empty()) throw std::invalid_argument("empty list");
    return out;
}

// --- fitting ------------------------------------------------------------------

SlopeFit least_squares(std::span<const double> x, std::span<const double> y) {
    SlopeFit fit{"", "", 0.0, 0.0, false};
    const std::size_t n = x.size();
    if (n != y.size() || n < 2) return fit;
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(x[i]) || !std::isfinite(y[i])) return fit;
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (!(sxx > 0.0)) return fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.valid = true;
    return fit;
}

double fitted_cost(const SlopeFit& fit, double mse) { return std::exp(fit.intercept + fit.slope * std::log(mse)); }

// --- rates --------------------------------------------------------------------

RateTable run_rate_experiment(const ExperimentConfig& config, const SdeModel& model, Execution exec) {
    config.validate();
    const ModelPreset preset = make_preset(config.model);
    const Param& theta = preset.theta_star;
    const std::size_t d = model.dim();
    const int lmin = config.rate_min_level;
    const int lmax = config.rate_max_level;
    const int ref = config.rate_reference_level;
    const std::size_t n_levels = static_cast<std::size_t>(lmax - lmin + 1);
    const std::size_t n = config.rate_samples;
    const RngStream root = RngStream(config.seed).derive(StreamPurpose::sample);

    RateTable table;
    for (const auto& name : config.schemes) {
        const Scheme scheme = config.scheme(name);
        validate_scheme_for_dim(scheme, d);
        const IntervalSimulator simulate(scheme, model);
        const Vec x0 = model.initial_state();

        // diffs[i * n_levels + j] = X_ref - X_{lmin + j} for sample i. Each
        // sample owns its slots, so the serial reduction below sees the same
        // values whatever the thread count.
        std::vector<Vec> diffs(n * n_levels);
        std::vector<std::exception_ptr> failures(n);

        auto one_sample = [&](std::size_t i) {
            try {
                // Same Brownian paths for every scheme.
                RngStream rng = root.derive(i);
                BrownianIncrements incs = sample_increments(ref, config.rate_horizon, d, rng);
                const Vec x_ref = simulate(theta, x0, incs);
                for (int l = ref - 1; l >= lmin; --l) {
                    incs = coarsen(incs);
                    if (l > lmax) continue;
                    diffs[i * n_levels + static_cast<std::size_t>(l - lmin)] = x_ref - simulate(theta, x0, incs);
                }
            } catch (...) {
                failures[i] = std::current_exception();
            }
        };

        if (exec == Execution::parallel) {
#pragma omp parallel for schedule(static)
            for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) one_sample(static_cast<std::size_t>(i));
        } else {
            for (std::size_t i = 0; i < n; ++i) one_sample(i);
        }
        rethrow_first(failures);

        std::vector<double> levels, strong_y, weak_y;
        for (std::size_t j = 0; j < n_levels; ++j) {
            double strong = 0.0;
            Vec mean(d);
            for (std::size_t i = 0; i < n; ++i) {
                const Vec& e = diffs[i * n_levels + j];
                strong += squared_norm(e);
                mean += e;
            }
            strong /= static_cast<double>(n);
            mean *= 1.0 / static_cast<double>(n);
            const double weak = std::sqrt(squared_norm(mean));
            const int level = lmin + static_cast<int>(j);
            table.rows.push_back({name, level, strong, weak, n});
            levels.push_back(level);
            strong_y.push_back(strong > 0.0 ? -std::log2(strong) : std::nan(""));
            weak_y.push_back(weak > 0.0 ? -std::log2(weak) : std::nan(""));
        }
        SlopeFit s = least_squares(levels, strong_y);
        s.scheme = name;
        s.quantity = "strong";
        SlopeFit w = least_squares(levels, weak_y);
        w.scheme = name;
        w.quantity = "weak";
        table.fits.push_back(s);
        table.fits.push_back(w);
    }
    return table;
}

RateTable run_rate_experiment(const ExperimentConfig& config, Execution exec) {
    return run_rate_experiment(config, *make_preset(config.model).sde, exec);
}

// --- cost vs MSE --------------------------------------------------------------

Dataset experiment_dataset(const ExperimentConfig& config) {
    const ModelPreset preset = make_preset(config.model);
    return generate_data(*preset.sde, *preset.obs, preset.theta_star, config.observations, config.data_level,
                         config.seed);
}

CostMseTable run_cost_mse_experiment(const ExperimentConfig& config, const Dataset& data, Execution exec) {
    config.validate();
    if (config.mse_targets.empty()) throw std::invalid_argument("config: cost-mse needs at least one MSE target");
    for (const auto& name : config.schemes)
        if (config.scheme(name).beta < 2)
            throw std::invalid_argument("config: scheme " + name +
                                        " has strong rate < 2; multilevel allocation needs beta >= 2 "
                                        "(set a beta override)");

    const ModelPreset preset = make_preset(config.model);
    const GaussianRandomWalk proposal(config.proposal_step > 0.0 ? config.proposal_step : preset.proposal_step);
    const Functional phi = theta_functional();
    const RngStream root(config.seed);
    const std::size_t n_targets = config.mse_targets.size();
    const std::size_t reps = config.repetitions;

    auto make_config = [&](double eps2, std::uint64_t seed, int beta) {
        MlConfig cfg = allocate(std::sqrt(eps2), beta, config.l0, config.burn_in);
        cfg.n_particles = config.particles;
        cfg.seed = seed;
        return cfg;
    };

    CostMseTable table;
    for (const auto& name : config.schemes) {
        const Scheme scheme = config.scheme(name);
        const std::uint64_t key = scheme_key(name);

        // Reference from a finer-tolerance multilevel run.
        const double ref_eps2 = config.mse_targets.back() / config.reference_factor;
        RngStream ref_stream = root.derive(StreamPurpose::reference, key);
        const MlConfig ref_cfg = make_config(ref_eps2, ref_stream(), scheme.beta);
        const MlResult ref = ml_estimate(ref_cfg, scheme, *preset.sde, *preset.obs, preset.prior, proposal, data,
                                         phi, exec);
        table.references.push_back({name, ref_eps2, ref.estimate, ref.cost});

        std::vector<double> estimates(n_targets * reps);
        std::vector<double> walls(n_targets * reps);
        std::vector<std::exception_ptr> failures(n_targets * reps);
        auto one_cell = [&](std::size_t cell) {
            const std::size_t t = cell / reps;
            const std::size_t r = cell % reps;
            try {
                RngStream s = root.derive(StreamPurpose::repetition, key, t, r);
                const MlConfig cfg = make_config(config.mse_targets[t], s(), scheme.beta);
                const MlResult res = ml_estimate(cfg, scheme, *preset.sde, *preset.obs, preset.prior, proposal,
                                                 data, phi, Execution::serial);
                estimates[cell] = res.estimate;
                walls[cell] = res.wall_seconds;
            } catch (...) {
                failures[cell] = std::current_exception();
            }
        };
        const std::size_t n_cells = n_targets * reps;
        if (exec == Execution::parallel) {
            // Most expensive (smallest target) cells first.
#pragma omp parallel for schedule(dynamic, 1)
            for (std::ptrdiff_t c = static_cast<std::ptrdiff_t>(n_cells) - 1; c >= 0; --c)
                one_cell(static_cast<std::size_t>(c));
        } else {
            for (std::size_t c = 0; c < n_cells; ++c) one_cell(c);
        }
        rethrow_first(failures);

        auto& per_target = table.estimates[name];
        std::vector<double> log_mse, log_cost;
        for (std::size_t t = 0; t < n_targets; ++t) {
            const double eps2 = config.mse_targets[t];
            double sq = 0.0, wall = 0.0;
            std::vector<double> row(reps);
            for (std::size_t r = 0; r < reps; ++r) {
                const double e = estimates[t * reps + r];
                row[r] = e;
                sq += (e - ref.estimate) * (e - ref.estimate);
                wall += walls[t * reps + r];
            }
            per_target.push_back(row);
            const double mse = sq / static_cast<double>(reps);
            const double c = cost(make_config(eps2, 0, scheme.beta));
            table.rows.push_back(
                {name, eps2, mse, c, config.record_wall_clock ? wall / static_cast<double>(reps) : 0.0, reps});
            log_mse.push_back(std::log(mse));
            log_cost.push_back(std::log(c));
        }
        SlopeFit fit = least_squares(log_mse, log_cost);
        fit.scheme = name;
        fit.quantity = "cost_vs_mse";
        table.fits.push_back(fit);
    }
    return table;
}

CostMseTable run_cost_mse_experiment(const ExperimentConfig& config, Execution exec) {
    return run_cost_mse_experiment(config, experiment_dataset(config), exec);
}

// --- output -------------------------------------------------------------------

namespace {

void write_provenance(const ExperimentConfig& config, const char* kind, std::ostream& out) {
    out << "# mlsrk " << kind << " model=" << config.model << '\n';
    out << "# config_hash=" << config.hash() << " seed=" << config.seed << '\n';
}

void write_fits(const std::vector<SlopeFit>& fits, std::ostream& out) {
    for (const auto& f : fits) {
        out << "# fit scheme=" << f.scheme << " quantity=" << f.quantity;
        if (f.valid)
            out << " slope=" << format_number(f.slope) << " intercept=" << format_number(f.intercept) << '\n';
        else
            out << " skipped\n";
    }
}

}  // namespace

void write_rates_csv(const RateTable& table, const ExperimentConfig& config, std::ostream& out) {
    write_provenance(config, "rates", out);
    out << "scheme,level,strong_err,weak_err,n\n";
    for (const auto& r : table.rows)
        out << r.scheme << ',' << r.level << ',' << format_number(r.strong_err) << ',' << format_number(r.weak_err)
            << ',' << r.n << '\n';
    write_fits(table.fits, out);
}

void write_cost_mse_csv(const CostMseTable& table, const ExperimentConfig& config, std::ostream& out) {
    write_provenance(config, "cost-mse", out);
    out << "scheme,eps2,mse,cost,wall_s,n_reps\n";
    for (const auto& r : table.rows)
        out << r.scheme << ',' << format_number(r.eps2) << ',' << format_number(r.mse) << ','
            << format_number(r.cost) << ',' << format_number(r.wall_s) << ',' << r.n_reps << '\n';
    write_fits(table.fits, out);
    for (const auto& ref : table.references)
        out << "# reference scheme=" << ref.scheme << " eps2=" << format_number(ref.eps2)
            << " estimate=" << format_number(ref.estimate) << '\n';
}

nlohmann::json to_json(const CostMseTable& table) {
    nlohmann::json j;
    j["references"] = nlohmann::json::array();
    for (const auto& r : table.references)
        j["references"].push_back({{"scheme", r.scheme}, {"eps2", r.eps2}, {"estimate", r.estimate}, {"cost", r.cost}});
    j["fits"] = nlohmann::json::array();
    for (const auto& f : table.fits)
        j["fits"].push_back({{"scheme", f.scheme},
                             {"quantity", f.quantity},
                             {"slope", f.slope},
                             {"intercept", f.intercept},
                             {"valid", f.valid}});
    j["estimates"] = table.estimates;
    return j;
}

}  // namespace mlsrk
