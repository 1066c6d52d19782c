#include "mlsrk/discretize.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

#include "mlsrk/errors.hpp"

namespace mlsrk {

namespace {

constexpr double kWeightTol = 1e-14;

void require_strictly_lower(const std::vector<double>& m, std::size_t s, const char* which) {
    for (std::size_t j = 0; j < s; ++j)
        for (std::size_t p = j; p < s; ++p)
            if (m[j * s + p] != 0.0)
                throw std::invalid_argument(std::string("tableau matrix ") + which +
                                            " must be strictly lower triangular");
}

double sum(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
}

}  // namespace

SrkTableau::SrkTableau(std::size_t stages, std::vector<double> a, std::vector<double> b, std::vector<double> alpha,
                       std::vector<double> gamma)
    : stages_(stages), a_(std::move(a)), b_(std::move(b)), alpha_(std::move(alpha)), gamma_(std::move(gamma)) {
    if (stages_ == 0 || stages_ > kMaxStages) throw std::invalid_argument("unsupported number of stages");
    if (a_.size() != stages_ * stages_ || b_.size() != stages_ * stages_ || alpha_.size() != stages_ ||
        gamma_.size() != stages_)
        throw std::invalid_argument("tableau coefficient sizes do not match the stage count");
    require_strictly_lower(a_, stages_, "A");
    require_strictly_lower(b_, stages_, "B");
    if (std::abs(sum(alpha_) - 1.0) > kWeightTol) throw std::invalid_argument("alpha weights must sum to one");
    if (std::abs(sum(gamma_) - 1.0) > kWeightTol) throw std::invalid_argument("gamma weights must sum to one");
    // gamma^T B 1 with 1 the all-ones stage vector.
    lambda_ = 0.0;
    for (std::size_t j = 0; j < stages_; ++j) {
        double row = 0.0;
        for (std::size_t p = 0; p < stages_; ++p) row += b_[j * stages_ + p];
        lambda_ += gamma_[j] * row;
    }
}

SrkTableau make_tableau(const std::string& name) {
    if (name == "heun") {
        return SrkTableau(2, {0, 0, 1, 0}, {0, 0, 1, 0}, {0.5, 0.5}, {0.5, 0.5});
    }
    if (name == "rk4") {
        // clang-format off
        std::vector<double> a{0,   0,   0, 0,
                              0.5, 0,   0, 0,
                              0,   0.5, 0, 0,
                              0,   0,   1, 0};
        // clang-format on
        std::vector<double> w{1.0 / 6, 2.0 / 6, 2.0 / 6, 1.0 / 6};
        return SrkTableau(4, a, a, w, w);
    }
    if (name == "em") return SrkTableau(1, {0}, {0}, {1}, {1});
    throw std::invalid_argument("unknown tableau: " + name);
}

std::size_t Scheme::stages() const {
    if (const auto* t = std::get_if<SrkTableau>(&method)) return t->stages();
    return 1;
}

Scheme make_scheme(const std::string& name, int beta_override) {
    Scheme scheme{name, EulerMaruyamaMethod{}, 1};
    if (name == "em") {
        scheme.beta = 1;
    } else if (name == "milstein") {
        scheme.method = MilsteinMethod{};
        scheme.beta = 2;
    } else if (name == "heun") {
        scheme.method = make_tableau("heun");
        scheme.beta = 3;
    } else if (name == "rk4") {
        scheme.method = make_tableau("rk4");
        scheme.beta = 4;
    } else {
        throw std::invalid_argument("unknown scheme: " + name);
    }
    if (beta_override > 0) {
        if (beta_override > 4) throw std::invalid_argument("strong rate override must lie in 1..4");
        scheme.beta = beta_override;
    }
    return scheme;
}

std::vector<std::string> scheme_names() { return {"em", "milstein", "heun", "rk4"}; }

void validate_scheme_for_dim(const Scheme& scheme, std::size_t dim) {
    if (std::holds_alternative<MilsteinMethod>(scheme.method) && dim != 1)
        throw UnsupportedDimension("milstein scheme requires a one-dimensional diffusion (got d = " +
                                   std::to_string(dim) + ")");
}

namespace {

// Step kernels are templates over the model type: the preset classes are
// final, so their coefficient calls devirtualize and inline. SdeModel is the
// virtual fallback.

template <class Model>
Vec corrected_drift_t(const Model& model, const Param& theta, const Vec& x, double lambda) {
    Vec mu = model.drift(theta, x);
    for (std::size_t i = 0; i < mu.size(); ++i)
        if (!std::isfinite(mu[i])) throw NumericalDomainError("non-finite drift component", i);
    if (lambda == 0.0) return mu;
    const Vec bar = model.sigma_bar(theta, x);
    for (std::size_t i = 0; i < bar.size(); ++i)
        if (!std::isfinite(bar[i])) throw NumericalDomainError("non-finite diffusion correction component", i);
    return mu.axpy(-lambda, bar);
}

template <class Model>
Vec srk_step_t(const SrkTableau& tableau, const Model& model, const Param& theta, const Vec& x, double h,
               const Vec& dw) {
    const std::size_t s = tableau.stages();
    const std::size_t d = x.size();
    const double lambda = tableau.lambda();
    // Raw stage buffers: h * mu_bar(V_p) and sigma(V_p) dw.
    double drift_terms[SrkTableau::kMaxStages][kMaxDim];
    double noise_terms[SrkTableau::kMaxStages][kMaxDim];

    for (std::size_t j = 0; j < s; ++j) {
        Vec v = x;
        for (std::size_t p = 0; p < j; ++p) {
            const double a = tableau.a(j, p);
            const double b = tableau.b(j, p);
            for (std::size_t i = 0; i < d; ++i) v[i] += a * drift_terms[p][i] + b * noise_terms[p][i];
        }
        if (!v.all_finite()) throw NumericalDomainError("non-finite SRK stage value", j);
        Vec mu;
        try {
            mu = corrected_drift_t(model, theta, v, lambda);
        } catch (const NumericalDomainError&) {
            throw NumericalDomainError("non-finite corrected drift at SRK stage", j);
        }
        const Vec noise = model.diffusion_times(theta, v, dw);
        if (!noise.all_finite()) throw NumericalDomainError("non-finite diffusion at SRK stage", j);
        for (std::size_t i = 0; i < d; ++i) {
            drift_terms[j][i] = h * mu[i];
            noise_terms[j][i] = noise[i];
        }
    }

    Vec out = x;
    for (std::size_t p = 0; p < s; ++p) {
        const double al = tableau.alpha(p);
        const double ga = tableau.gamma(p);
        for (std::size_t i = 0; i < d; ++i) out[i] += al * drift_terms[p][i] + ga * noise_terms[p][i];
    }
    if (!out.all_finite()) throw NumericalDomainError("non-finite SRK update", s);
    return out;
}

template <class Model>
Vec milstein_step_t(const Model& model, const Param& theta, const Vec& x, double h, const Vec& dw) {
    if (model.dim() != 1) throw UnsupportedDimension("milstein step requires d = 1");
    const double mu = model.drift(theta, x)[0];
    const double sig = model.diffusion(theta, x)(0, 0);
    const double dsig = model.diffusion_jacobian(theta, x, 0)(0, 0);
    const double w = dw[0];
    // Grouped so that sigma' = 0 reproduces em_step bit for bit.
    Vec out{x[0] + (h * mu + sig * w) + 0.5 * sig * dsig * (w * w - h)};
    if (!out.all_finite()) throw NumericalDomainError("non-finite milstein update", 0);
    return out;
}

template <class Model>
Vec em_step_t(const Model& model, const Param& theta, const Vec& x, double h, const Vec& dw) {
    const Vec mu = model.drift(theta, x);
    const Vec noise = model.diffusion_times(theta, x, dw);
    // Same grouping as the one-stage SRK update.
    Vec out = x;
    for (std::size_t i = 0; i < x.size(); ++i) out[i] += h * mu[i] + noise[i];
    if (!out.all_finite()) throw NumericalDomainError("non-finite euler-maruyama update", 0);
    return out;
}

template <class Model>
Vec simulate_interval_t(const Scheme& scheme, const Model& model, const Param& theta, const Vec& x_start,
                        const BrownianIncrements& increments) {
    const std::size_t n = increments.steps();
    const double h = increments.step_size();
    return std::visit(
        [&](const auto& method) {
            using M = std::decay_t<decltype(method)>;
            Vec x = x_start;
            for (std::size_t k = 0; k < n; ++k) {
                const Vec dw = increments[k];
                if constexpr (std::is_same_v<M, SrkTableau>) {
                    x = srk_step_t(method, model, theta, x, h, dw);
                } else if constexpr (std::is_same_v<M, MilsteinMethod>) {
                    x = milstein_step_t(model, theta, x, h, dw);
                } else {
                    x = em_step_t(model, theta, x, h, dw);
                }
            }
            return x;
        },
        scheme.method);
}

}  // namespace

Vec srk_step(const SrkTableau& tableau, const SdeModel& model, const Param& theta, const Vec& x, double h,
             const Vec& dw) {
    return srk_step_t<SdeModel>(tableau, model, theta, x, h, dw);
}

Vec milstein_step(const SdeModel& model, const Param& theta, const Vec& x, double h, const Vec& dw) {
    return milstein_step_t<SdeModel>(model, theta, x, h, dw);
}

Vec em_step(const SdeModel& model, const Param& theta, const Vec& x, double h, const Vec& dw) {
    return em_step_t<SdeModel>(model, theta, x, h, dw);
}

template <class Model>
Vec run_kernel(const Scheme& scheme, const SdeModel& model, const Param& theta, const Vec& x_start,
               const BrownianIncrements& increments) {
    return simulate_interval_t(scheme, static_cast<const Model&>(model), theta, x_start, increments);
}

IntervalSimulator::IntervalSimulator(const Scheme& scheme, const SdeModel& model)
    : scheme_(&scheme), model_(&model), run_(&run_kernel<SdeModel>) {
    if (dynamic_cast<const GbmModel*>(&model))
        run_ = &run_kernel<GbmModel>;
    else if (dynamic_cast<const NonlinearModel*>(&model))
        run_ = &run_kernel<NonlinearModel>;
}

std::pair<Vec, Vec> IntervalSimulator::coupled(const Param& theta, const Vec& x_fine, const Vec& x_coarse,
                                               const BrownianIncrements& fine,
                                               BrownianIncrements& coarse_scratch) const {
    coarsen_into(coarse_scratch, fine);
    return {(*this)(theta, x_fine, fine), (*this)(theta, x_coarse, coarse_scratch)};
}

Vec simulate_interval(const Scheme& scheme, const SdeModel& model, const Param& theta, const Vec& x_start,
                      const BrownianIncrements& increments) {
    return IntervalSimulator(scheme, model)(theta, x_start, increments);
}

std::pair<Vec, Vec> coupled_simulate_interval(const Scheme& scheme, const SdeModel& model, const Param& theta,
                                              const Vec& x_fine, const Vec& x_coarse,
                                              const BrownianIncrements& fine_increments,
                                              BrownianIncrements& coarse_scratch) {
    return IntervalSimulator(scheme, model).coupled(theta, x_fine, x_coarse, fine_increments, coarse_scratch);
}

std::pair<Vec, Vec> coupled_simulate_interval(const Scheme& scheme, const SdeModel& model, const Param& theta,
                                              const Vec& x_fine, const Vec& x_coarse,
                                              const BrownianIncrements& fine_increments) {
    BrownianIncrements scratch;
    return coupled_simulate_interval(scheme, model, theta, x_fine, x_coarse, fine_increments, scratch);
}

}  // namespace mlsrk
