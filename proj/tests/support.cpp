#include "support.hpp"

#include <numbers>

namespace mlsrk::testing {

std::shared_ptr<const FunctionModel> zero_diffusion_model(std::size_t dim, Vec x0) {
    return std::make_shared<FunctionModel>(
        x0,
        [](const Param& theta, const Vec& x) {
            Vec out = x;
            return out *= -theta[0];
        },
        [dim](const Param&, const Vec&) { return Mat(dim); },
        [dim](const Param&, const Vec&, std::size_t) { return Mat(dim); }, "zero-diffusion");
}

std::shared_ptr<const FunctionModel> frozen_model(std::size_t dim, Vec x0) {
    return std::make_shared<FunctionModel>(
        x0, [dim](const Param&, const Vec&) { return Vec(dim); }, [dim](const Param&, const Vec&) { return Mat(dim); },
        [dim](const Param&, const Vec&, std::size_t) { return Mat(dim); }, "frozen");
}

Dataset make_dataset(const std::vector<Vec>& ys, const std::string& model_name) {
    Dataset d;
    d.delta = 1.0 / static_cast<double>(ys.size());
    for (std::size_t k = 0; k < ys.size(); ++k) d.times.push_back(static_cast<double>(k + 1) * d.delta);
    d.observations = ys;
    d.theta_star = Param{0.0};
    d.model_name = model_name;
    return d;
}

double kalman_log_likelihood(double a, double q, double tau2, double x0, const std::vector<double>& ys) {
    double m = x0, p = 0.0, ll = 0.0;
    for (double y : ys) {
        m = a * m;
        p = a * a * p + q;
        const double s = p + tau2;
        const double r = y - m;
        ll += -0.5 * std::log(2.0 * std::numbers::pi * s) - 0.5 * r * r / s;
        const double k = p / s;
        m += k * r;
        p *= 1.0 - k;
    }
    return ll;
}

MeanSe mean_se(const std::vector<double>& v) {
    const double n = static_cast<double>(v.size());
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= n;
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

double log2_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += std::log2(y[i]);
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (std::log2(y[i]) - my);
    }
    return sxy / sxx;
}

}  // namespace mlsrk::testing
