#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mlsrk/linalg.hpp"
#include "mlsrk/rng.hpp"

namespace mlsrk {

/// Diffusion dX = mu_theta(X) dt + sigma_theta(X) dW with a d-dimensional
/// Brownian motion.
class SdeModel {
public:
    virtual ~SdeModel() = default;

    virtual std::size_t dim() const = 0;
    virtual Vec drift(const Param& theta, const Vec& x) const = 0;
    virtual Mat diffusion(const Param& theta, const Vec& x) const = 0;
    /// Jacobian of the diffusion column `column`: entry (i, k) is
    /// d sigma^{i,column} / d x_k.
    virtual Mat diffusion_jacobian(const Param& theta, const Vec& x, std::size_t column) const = 0;
    virtual Vec initial_state() const = 0;

    /// sigma_bar^i = sum_{p,j} d sigma^{ip}/d x_j * sigma^{jp}. The default
    /// goes through diffusion_jacobian; presets override with closed forms.
    virtual Vec sigma_bar(const Param& theta, const Vec& x) const;

    /// sigma_theta(x) * dw; presets with diagonal noise override this.
    virtual Vec diffusion_times(const Param& theta, const Vec& x, const Vec& dw) const {
        return diffusion(theta, x) * dw;
    }

    /// Region on which the observation density is defined without clamping.
    virtual bool admissible(const Vec&) const { return true; }
    virtual std::string name() const { return "custom"; }
};

/// mu_bar = mu - lambda * sigma_bar. Throws NumericalDomainError naming the
/// first non-finite component.
Vec corrected_drift(const SdeModel& model, const Param& theta, const Vec& x, double lambda);

/// True iff grad(sigma^{.,j}) sigma^{.,i} == grad(sigma^{.,i}) sigma^{.,j} for
/// all column pairs at every sample point, to absolute tolerance 1e-10.
bool check_commutativity(const SdeModel& model, const Param& theta, std::span<const Vec> points);

/// d = 1 only: true iff sigma mu' - mu sigma' - sigma^2 sigma'' / 2 == 0 at
/// every sample point to 1e-8. mu' and sigma'' are central differences of the
/// drift and of the analytic diffusion derivative.
bool check_rk4_condition(const SdeModel& model, const Param& theta, std::span<const Vec> points);

// ---------------------------------------------------------------------------
// Concrete diffusions

/// dX = e^theta X dt + sigma diag(X) dW in d dimensions (d = 1 or 3 in the
/// experiments).
class GbmModel final : public SdeModel {
public:
    GbmModel(std::size_t dim, double sigma, double x0);

    std::size_t dim() const override { return dim_; }
    Vec drift(const Param& theta, const Vec& x) const override {
        const double rate = std::exp(theta[0]);
        Vec out(dim_);
        for (std::size_t i = 0; i < dim_; ++i) out[i] = rate * x[i];
        return out;
    }
    Mat diffusion(const Param&, const Vec& x) const override {
        Mat m(dim_);
        for (std::size_t i = 0; i < dim_; ++i) m(i, i) = sigma_ * x[i];
        return m;
    }
    Mat diffusion_jacobian(const Param&, const Vec&, std::size_t column) const override {
        Mat m(dim_);
        m(column, column) = sigma_;
        return m;
    }
    Vec sigma_bar(const Param&, const Vec& x) const override {
        Vec out(dim_);
        for (std::size_t i = 0; i < dim_; ++i) out[i] = sigma_ * sigma_ * x[i];
        return out;
    }
    Vec diffusion_times(const Param&, const Vec& x, const Vec& dw) const override {
        Vec out(dim_);
        for (std::size_t i = 0; i < dim_; ++i) out[i] = sigma_ * x[i] * dw[i];
        return out;
    }
    Vec initial_state() const override { return Vec(dim_, x0_); }
    bool admissible(const Vec& x) const override;
    std::string name() const override { return dim_ == 1 ? "gbm1d" : "gbm" + std::to_string(dim_) + "d"; }

    double sigma() const { return sigma_; }

private:
    std::size_t dim_;
    double sigma_;
    double x0_;
};

/// Componentwise dX_i = -theta X_i dt + sigma / sqrt(1 + X_i^2) dW_i.
class NonlinearModel final : public SdeModel {
public:
    NonlinearModel(double sigma, Vec x0);

    std::size_t dim() const override { return x0_.size(); }
    Vec drift(const Param& theta, const Vec& x) const override {
        Vec out(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) out[i] = -theta[0] * x[i];
        return out;
    }
    Mat diffusion(const Param&, const Vec& x) const override {
        Mat m(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) m(i, i) = sigma_ / std::sqrt(1.0 + x[i] * x[i]);
        return m;
    }
    Mat diffusion_jacobian(const Param&, const Vec& x, std::size_t column) const override {
        Mat m(x.size());
        const double xi = x[column];
        m(column, column) = -sigma_ * xi * std::pow(1.0 + xi * xi, -1.5);
        return m;
    }
    Vec sigma_bar(const Param&, const Vec& x) const override {
        Vec out(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double q = 1.0 + x[i] * x[i];
            out[i] = -sigma_ * sigma_ * x[i] / (q * q);
        }
        return out;
    }
    Vec diffusion_times(const Param&, const Vec& x, const Vec& dw) const override {
        Vec out(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) out[i] = sigma_ / std::sqrt(1.0 + x[i] * x[i]) * dw[i];
        return out;
    }
    Vec initial_state() const override { return x0_; }
    std::string name() const override { return "nonlinear" + std::to_string(x0_.size()) + "d"; }

private:
    double sigma_;
    Vec x0_;
};

/// Model assembled from callables; used for linear test models and stubs.
class FunctionModel final : public SdeModel {
public:
    using DriftFn = std::function<Vec(const Param&, const Vec&)>;
    using DiffusionFn = std::function<Mat(const Param&, const Vec&)>;
    using JacobianFn = std::function<Mat(const Param&, const Vec&, std::size_t)>;

    FunctionModel(Vec x0, DriftFn drift, DiffusionFn diffusion, JacobianFn jacobian,
                  std::string name = "custom");

    std::size_t dim() const override { return x0_.size(); }
    Vec drift(const Param& theta, const Vec& x) const override { return drift_(theta, x); }
    Mat diffusion(const Param& theta, const Vec& x) const override { return diffusion_(theta, x); }
    Mat diffusion_jacobian(const Param& theta, const Vec& x, std::size_t column) const override {
        return jacobian_(theta, x, column);
    }
    Vec initial_state() const override { return x0_; }
    std::string name() const override { return name_; }

private:
    Vec x0_;
    DriftFn drift_;
    DiffusionFn diffusion_;
    JacobianFn jacobian_;
    std::string name_;
};

/// dX = -a X dt + s dW with constant scalar diffusion s (all dimensions).
std::shared_ptr<const FunctionModel> make_linear_model(std::size_t dim, double a, double s, Vec x0);

// ---------------------------------------------------------------------------
// Observations

class ObservationModel {
public:
    virtual ~ObservationModel() = default;
    virtual std::size_t obs_dim() const = 0;
    /// log g_theta(y | x).
    virtual double log_density(const Param& theta, const Vec& y, const Vec& x) const = 0;
    /// Mean of Y given X = x.
    virtual Vec obs_map(const Vec& x) const = 0;
    /// Draw Y given X = x.
    virtual Vec sample(const Vec& x, RngStream& rng) const = 0;
    /// sup_x g_theta(y | x), the Gaussian normaliser for the built-in model.
    virtual double log_density_upper_bound() const = 0;
};

enum class ObsMap { identity, log };

/// Y | X ~ N(map(X), tau^2 I). The log map clamps each state component at
/// kStateFloor so paths that cross zero get a tiny but finite likelihood.
class GaussianObservation final : public ObservationModel {
public:
    static constexpr double kStateFloor = 1e-12;

    GaussianObservation(std::size_t dim, ObsMap map, double noise_variance);

    std::size_t obs_dim() const override { return dim_; }
    double log_density(const Param& theta, const Vec& y, const Vec& x) const override;
    Vec obs_map(const Vec& x) const override;
    Vec sample(const Vec& x, RngStream& rng) const override;
    double log_density_upper_bound() const override { return log_norm_; }

    double noise_variance() const { return tau2_; }
    ObsMap map() const { return map_; }

private:
    std::size_t dim_;
    ObsMap map_;
    double tau2_;
    double log_norm_;
};

// ---------------------------------------------------------------------------
// Prior

/// Independent Gaussian prior on each coordinate of theta.
class GaussianPrior {
public:
    GaussianPrior(Vec mean, Vec variance);
    GaussianPrior(double mean, double variance) : GaussianPrior(Vec{mean}, Vec{variance}) {}

    double log_pdf(const Param& theta) const;
    Param sample(RngStream& rng) const;
    std::size_t dim() const { return mean_.size(); }
    const Vec& mean() const { return mean_; }
    const Vec& variance() const { return variance_; }

private:
    Vec mean_;
    Vec variance_;
};

// ---------------------------------------------------------------------------
// Data

struct Dataset {
    double delta = 1.0;             // observation spacing
    std::vector<double> times;      // t_k = k * delta, k = 1..K
    std::vector<Vec> observations;  // y_1..y_K
    Param theta_star;
    std::uint64_t seed = 0;
    int generation_level = 0;
    std::string model_name;

    std::size_t size() const { return observations.size(); }
};

/// Simulate the diffusion with the classic SRK scheme at `gen_level`
/// (2^gen_level steps per observation interval, delta = 1/K) and draw one
/// observation at each t_k. Throws std::runtime_error if the path leaves the
/// model's admissible region.
Dataset generate_data(const SdeModel& model, const ObservationModel& obs, const Param& theta_star,
                      std::size_t n_obs, int gen_level, std::uint64_t seed);

/// CSV with header `t,y1,...,yd` plus a JSON sidecar holding the metadata.
void write_dataset(const Dataset& data, const std::string& csv_path, const std::string& json_path);
Dataset read_dataset(const std::string& csv_path, const std::string& json_path);

// ---------------------------------------------------------------------------
// Presets

/// A model together with its observation model, prior and experiment
/// constants.
struct ModelPreset {
    std::string name;
    std::shared_ptr<const SdeModel> sde;
    std::shared_ptr<const ObservationModel> obs;
    GaussianPrior prior;
    Param theta_star;
    std::size_t n_obs;
    double proposal_step;  // Gaussian random-walk scale on theta
};

/// "gbm1d", "gbm3d" or "nonlinear2d". Throws std::invalid_argument otherwise.
ModelPreset make_preset(const std::string& name);
std::vector<std::string> preset_names();

}  // namespace mlsrk
