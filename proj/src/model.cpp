#include "mlsrk/model.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "mlsrk/errors.hpp"

namespace mlsrk {

Vec SdeModel::sigma_bar(const Param& theta, const Vec& x) const {
    const std::size_t d = dim();
    const Mat sigma = diffusion(theta, x);
    Vec out(d);
    for (std::size_t p = 0; p < d; ++p) {
        const Mat jac = diffusion_jacobian(theta, x, p);
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j) out[i] += jac(i, j) * sigma(j, p);
    }
    return out;
}

Vec corrected_drift(const SdeModel& model, const Param& theta, const Vec& x, double lambda) {
    Vec mu = model.drift(theta, x);
    for (std::size_t i = 0; i < mu.size(); ++i)
        if (!std::isfinite(mu[i])) throw NumericalDomainError("non-finite drift component", i);
    if (lambda == 0.0) return mu;
    const Vec bar = model.sigma_bar(theta, x);
    for (std::size_t i = 0; i < bar.size(); ++i)
        if (!std::isfinite(bar[i])) throw NumericalDomainError("non-finite diffusion correction component", i);
    return mu.axpy(-lambda, bar);
}

bool check_commutativity(const SdeModel& model, const Param& theta, std::span<const Vec> points) {
    constexpr double kTol = 1e-10;
    const std::size_t d = model.dim();
    for (const Vec& x : points) {
        const Mat sigma = model.diffusion(theta, x);
        std::vector<Mat> jac;
        jac.reserve(d);
        for (std::size_t j = 0; j < d; ++j) jac.push_back(model.diffusion_jacobian(theta, x, j));
        for (std::size_t i = 0; i < d; ++i) {
            for (std::size_t j = i + 1; j < d; ++j) {
                const Vec lhs = jac[j] * sigma.column(i);
                const Vec rhs = jac[i] * sigma.column(j);
                for (std::size_t k = 0; k < d; ++k)
                    if (!(std::abs(lhs[k] - rhs[k]) <= kTol)) return false;
            }
        }
    }
    return true;
}

bool check_rk4_condition(const SdeModel& model, const Param& theta, std::span<const Vec> points) {
    if (model.dim() != 1) throw UnsupportedDimension("rk4 commutation condition is defined for d = 1 only");
    constexpr double kTol = 1e-8;
    for (const Vec& x : points) {
        const double h = 1e-5 * std::max(1.0, std::abs(x[0]));
        const Vec up{x[0] + h};
        const Vec dn{x[0] - h};
        const double mu = model.drift(theta, x)[0];
        const double sig = model.diffusion(theta, x)(0, 0);
        const double dsig = model.diffusion_jacobian(theta, x, 0)(0, 0);
        const double dmu = (model.drift(theta, up)[0] - model.drift(theta, dn)[0]) / (2 * h);
        const double d2sig =
            (model.diffusion_jacobian(theta, up, 0)(0, 0) - model.diffusion_jacobian(theta, dn, 0)(0, 0)) / (2 * h);
        const double residual = sig * dmu - mu * dsig - 0.5 * sig * sig * d2sig;
        if (!(std::abs(residual) <= kTol)) return false;
    }
    return true;
}

// --- GbmModel ---------------------------------------------------------------

GbmModel::GbmModel(std::size_t dim, double sigma, double x0) : dim_(dim), sigma_(sigma), x0_(x0) {
    if (dim == 0 || dim > kMaxDim) throw std::invalid_argument("GbmModel: unsupported dimension");
}

bool GbmModel::admissible(const Vec& x) const {
    for (double v : x)
        if (!(v > 0.0)) return false;
    return true;
}

// --- NonlinearModel ---------------------------------------------------------

NonlinearModel::NonlinearModel(double sigma, Vec x0) : sigma_(sigma), x0_(x0) {
    if (x0.size() == 0) throw std::invalid_argument("NonlinearModel: empty initial state");
}

// --- FunctionModel ------------------------------------------------------------

FunctionModel::FunctionModel(Vec x0, DriftFn drift, DiffusionFn diffusion, JacobianFn jacobian, std::string name)
    : x0_(x0),
      drift_(std::move(drift)),
      diffusion_(std::move(diffusion)),
      jacobian_(std::move(jacobian)),
      name_(std::move(name)) {}

std::shared_ptr<const FunctionModel> make_linear_model(std::size_t dim, double a, double s, Vec x0) {
    if (x0.size() != dim) throw std::invalid_argument("make_linear_model: x0 dimension mismatch");
    return std::make_shared<FunctionModel>(
        x0,
        [a](const Param&, const Vec& x) {
            Vec out = x;
            return out *= -a;
        },
        [s, dim](const Param&, const Vec&) { return Mat::identity(dim, s); },
        [dim](const Param&, const Vec&, std::size_t) { return Mat(dim); }, "linear");
}

// --- GaussianObservation ------------------------------------------------------

GaussianObservation::GaussianObservation(std::size_t dim, ObsMap map, double noise_variance)
    : dim_(dim),
      map_(map),
      tau2_(noise_variance),
      log_norm_(-0.5 * static_cast<double>(dim) * std::log(2.0 * std::numbers::pi * noise_variance)) {
    if (!(noise_variance > 0.0)) throw std::invalid_argument("observation noise variance must be positive");
}

Vec GaussianObservation::obs_map(const Vec& x) const {
    if (map_ == ObsMap::identity) return x;
    Vec out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = std::log(std::max(x[i], kStateFloor));
    return out;
}

double GaussianObservation::log_density(const Param&, const Vec& y, const Vec& x) const {
    const Vec m = obs_map(x);
    double q = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) {
        const double r = y[i] - m[i];
        q += r * r;
    }
    return log_norm_ - 0.5 * q / tau2_;
}

Vec GaussianObservation::sample(const Vec& x, RngStream& rng) const {
    std::normal_distribution<double> normal(0.0, std::sqrt(tau2_));
    Vec y = obs_map(x);
    for (std::size_t i = 0; i < dim_; ++i) y[i] += normal(rng);
    return y;
}

// --- GaussianPrior ------------------------------------------------------------

GaussianPrior::GaussianPrior(Vec mean, Vec variance) : mean_(mean), variance_(variance) {
    if (mean.size() != variance.size()) throw std::invalid_argument("prior mean/variance dimension mismatch");
    for (double v : variance)
        if (!(v > 0.0)) throw std::invalid_argument("prior variance must be positive");
}

double GaussianPrior::log_pdf(const Param& theta) const {
    double out = 0.0;
    for (std::size_t i = 0; i < mean_.size(); ++i) {
        const double r = theta[i] - mean_[i];
        out += -0.5 * std::log(2.0 * std::numbers::pi * variance_[i]) - 0.5 * r * r / variance_[i];
    }
    return out;
}

Param GaussianPrior::sample(RngStream& rng) const {
    std::normal_distribution<double> normal;
    Param theta(mean_.size());
    for (std::size_t i = 0; i < mean_.size(); ++i) theta[i] = mean_[i] + std::sqrt(variance_[i]) * normal(rng);
    return theta;
}

// --- Presets ----------------------------------------------------------------

ModelPreset make_preset(const std::string& name) {
    if (name == "gbm1d") {
        return {name,
                std::make_shared<GbmModel>(1, 0.66, 0.7),
                std::make_shared<GaussianObservation>(1, ObsMap::log, 0.1),
                GaussianPrior(-1.4, 0.2),
                Param{-1.8971},
                120,
                0.8};
    }
    if (name == "gbm3d") {
        return {name,
                std::make_shared<GbmModel>(3, 0.66, 0.7),
                std::make_shared<GaussianObservation>(3, ObsMap::log, 0.1),
                GaussianPrior(-1.4, 0.04),
                Param{-1.8971},
                120,
                0.4};
    }
    if (name == "nonlinear2d") {
        return {name,
                std::make_shared<NonlinearModel>(1.0, Vec{-1.0, -2.0}),
                std::make_shared<GaussianObservation>(2, ObsMap::identity, 4.0),
                GaussianPrior(-1.2, 0.1),
                Param{1.0},
                120,
                0.1};
    }
    throw std::invalid_argument("unknown model preset: " + name);
}

std::vector<std::string> preset_names() { return {"gbm1d", "gbm3d", "nonlinear2d"}; }

}  // namespace mlsrk
