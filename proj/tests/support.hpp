#pragma once

#include <cmath>
#include <memory>
#include <vector>

#include "mlsrk/model.hpp"

namespace mlsrk::testing {

/// g(y | x) = exp(log_c) for every y, x.
class ConstantObservation final : public ObservationModel {
public:
    ConstantObservation(std::size_t dim, double log_c) : dim_(dim), log_c_(log_c) {}
    std::size_t obs_dim() const override { return dim_; }
    double log_density(const Param&, const Vec&, const Vec&) const override { return log_c_; }
    Vec obs_map(const Vec& x) const override { return x; }
    Vec sample(const Vec& x, RngStream&) const override { return x; }
    double log_density_upper_bound() const override { return log_c_; }

private:
    std::size_t dim_;
    double log_c_;
};

/// Gaussian density around the identity map, but sample() returns the state
/// itself: observations carry no noise.
class NoiselessObservation final : public ObservationModel {
public:
    explicit NoiselessObservation(std::size_t dim) : inner_(dim, ObsMap::identity, 1.0) {}
    std::size_t obs_dim() const override { return inner_.obs_dim(); }
    double log_density(const Param& t, const Vec& y, const Vec& x) const override {
        return inner_.log_density(t, y, x);
    }
    Vec obs_map(const Vec& x) const override { return x; }
    Vec sample(const Vec& x, RngStream&) const override { return x; }
    double log_density_upper_bound() const override { return inner_.log_density_upper_bound(); }

private:
    GaussianObservation inner_;
};

/// dX = -theta X dt with no noise (theta[0] as the rate).
std::shared_ptr<const FunctionModel> zero_diffusion_model(std::size_t dim, Vec x0);

/// dX = 0 with zero diffusion.
std::shared_ptr<const FunctionModel> frozen_model(std::size_t dim, Vec x0);

/// Dataset with the given observation values at t_k = k / K.
Dataset make_dataset(const std::vector<Vec>& ys, const std::string& model_name = "custom");

/// Exact log marginal likelihood of scalar observations y_k = X_{t_k} + N(0, tau2)
/// when X follows the linear recursion X <- a X + N(0, q) between observations,
/// started at the deterministic x0.
double kalman_log_likelihood(double a, double q, double tau2, double x0, const std::vector<double>& ys);

/// Sample mean and standard error.
struct MeanSe {
    double mean;
    double se;
};
MeanSe mean_se(const std::vector<double>& v);

/// Slope of log2(y) against x, by least squares.
double log2_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace mlsrk::testing
