#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "mlsrk/discretize.hpp"
#include "mlsrk/model.hpp"
#include "mlsrk/paths.hpp"

namespace mlsrk {

Dataset generate_data(const SdeModel& model, const ObservationModel& obs, const Param& theta_star,
                      std::size_t n_obs, int gen_level, std::uint64_t seed) {
    if (n_obs == 0) throw std::invalid_argument("generate_data: need at least one observation");
    const Scheme scheme = make_scheme("rk4");
    const RngStream root = RngStream(seed).derive(StreamPurpose::data);

    Dataset data;
    data.delta = 1.0 / static_cast<double>(n_obs);
    data.theta_star = theta_star;
    data.seed = seed;
    data.generation_level = gen_level;
    data.model_name = model.name();
    data.times.reserve(n_obs);
    data.observations.reserve(n_obs);

    Vec x = model.initial_state();
    BrownianIncrements incs;
    for (std::size_t k = 0; k < n_obs; ++k) {
        RngStream path_rng = root.derive(StreamPurpose::propagate, k);
        sample_increments_into(incs, gen_level, data.delta, model.dim(), path_rng);
        x = simulate_interval(scheme, model, theta_star, x, incs);
        if (!model.admissible(x)) {
            std::ostringstream msg;
            msg << "generate_data: simulated state left the admissible region at observation " << k + 1
                << " (seed " << seed << ")";
            throw std::runtime_error(msg.str());
        }
        RngStream noise_rng = root.derive(StreamPurpose::observation_noise, k);
        data.times.push_back(static_cast<double>(k + 1) * data.delta);
        data.observations.push_back(obs.sample(x, noise_rng));
    }
    return data;
}

void write_dataset(const Dataset& data, const std::string& csv_path, const std::string& json_path) {
    std::ofstream csv(csv_path);
    if (!csv) throw std::runtime_error("cannot open " + csv_path);
    const std::size_t d = data.observations.empty() ? 0 : data.observations.front().size();
    csv << "t";
    for (std::size_t i = 0; i < d; ++i) csv << ",y" << i + 1;
    csv << '\n' << std::setprecision(17);
    for (std::size_t k = 0; k < data.size(); ++k) {
        csv << data.times[k];
        for (std::size_t i = 0; i < d; ++i) csv << ',' << data.observations[k][i];
        csv << '\n';
    }

    nlohmann::json meta;
    meta["model"] = data.model_name;
    meta["theta_star"] = std::vector<double>(data.theta_star.begin(), data.theta_star.end());
    meta["seed"] = data.seed;
    meta["K"] = data.size();
    meta["delta"] = data.delta;
    meta["level"] = data.generation_level;
    std::ofstream js(json_path);
    if (!js) throw std::runtime_error("cannot open " + json_path);
    js << std::setw(2) << meta << '\n';
}

Dataset read_dataset(const std::string& csv_path, const std::string& json_path) {
    std::ifstream js(json_path);
    if (!js) throw std::runtime_error("cannot open " + json_path);
    const nlohmann::json meta = nlohmann::json::parse(js);

    Dataset data;
    data.model_name = meta.at("model").get<std::string>();
    const auto theta = meta.at("theta_star").get<std::vector<double>>();
    data.theta_star = Param(theta.size());
    for (std::size_t i = 0; i < theta.size(); ++i) data.theta_star[i] = theta[i];
    data.seed = meta.at("seed").get<std::uint64_t>();
    data.delta = meta.at("delta").get<double>();
    data.generation_level = meta.at("level").get<int>();

    std::ifstream csv(csv_path);
    if (!csv) throw std::runtime_error("cannot open " + csv_path);
    std::string line;
    std::getline(csv, line);
    if (line.rfind("t,y1", 0) != 0) throw std::runtime_error("unexpected dataset header: " + line);
    while (std::getline(csv, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string cell;
        std::vector<double> values;
        while (std::getline(row, cell, ',')) values.push_back(std::stod(cell));
        if (values.size() < 2 || values.size() - 1 > kMaxDim) throw std::runtime_error("malformed dataset row");
        data.times.push_back(values[0]);
        Vec y(values.size() - 1);
        for (std::size_t i = 1; i < values.size(); ++i) y[i - 1] = values[i];
        data.observations.push_back(y);
    }
    if (data.size() != meta.at("K").get<std::size_t>()) throw std::runtime_error("dataset row count mismatch");
    for (std::size_t k = 1; k < data.times.size(); ++k)
        if (!(data.times[k] > data.times[k - 1])) throw std::runtime_error("observation times must increase");
    return data;
}

}  // namespace mlsrk
