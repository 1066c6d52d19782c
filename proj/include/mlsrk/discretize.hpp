#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "mlsrk/linalg.hpp"
#include "mlsrk/model.hpp"
#include "mlsrk/paths.hpp"

namespace mlsrk {

/// Explicit s-stage stochastic Runge-Kutta coefficients (A, B, alpha, gamma).
/// A and B must be strictly lower triangular; the weights alpha and gamma
/// each sum to one. lambda = gamma^T B 1 is derived.
class SrkTableau {
public:
    static constexpr std::size_t kMaxStages = 8;

    /// Row-major s x s matrices. Throws std::invalid_argument if any
    /// invariant fails.
    SrkTableau(std::size_t stages, std::vector<double> a, std::vector<double> b, std::vector<double> alpha,
               std::vector<double> gamma);

    std::size_t stages() const { return stages_; }
    double a(std::size_t j, std::size_t p) const { return a_[j * stages_ + p]; }
    double b(std::size_t j, std::size_t p) const { return b_[j * stages_ + p]; }
    double alpha(std::size_t p) const { return alpha_[p]; }
    double gamma(std::size_t p) const { return gamma_[p]; }
    double lambda() const { return lambda_; }

private:
    std::size_t stages_;
    std::vector<double> a_, b_, alpha_, gamma_;
    double lambda_;
};

/// "heun" (stochastic Heun) or "rk4" (classic Runge-Kutta). Also accepts
/// "em" for the one-stage tableau with lambda = 0.
SrkTableau make_tableau(const std::string& name);

struct MilsteinMethod {};
struct EulerMaruyamaMethod {};

/// A discretization method together with the strong rate used for allocation.
struct Scheme {
    std::string name;
    std::variant<SrkTableau, MilsteinMethod, EulerMaruyamaMethod> method;
    int beta;

    /// Coefficient evaluations per step; used to weight cost comparisons.
    std::size_t stages() const;
};

/// "em" (beta 1), "milstein" (2), "heun" (3), "rk4" (4). beta_override > 0
/// replaces the default rate.
Scheme make_scheme(const std::string& name, int beta_override = 0);
std::vector<std::string> scheme_names();

/// One step of the SRK recursion with increment dw over step size h.
/// Throws NumericalDomainError carrying the stage index if a stage value or
/// the result is non-finite.
Vec srk_step(const SrkTableau& tableau, const SdeModel& model, const Param& theta, const Vec& x, double h,
             const Vec& dw);
/// x + mu h + sigma dw + sigma sigma' (dw^2 - h) / 2, d = 1 only.
Vec milstein_step(const SdeModel& model, const Param& theta, const Vec& x, double h, const Vec& dw);
/// x + mu h + sigma dw.
Vec em_step(const SdeModel& model, const Param& theta, const Vec& x, double h, const Vec& dw);

/// simulate_interval with the model-type dispatch resolved once; used by the
/// filters, which call it for every particle and observation.
class IntervalSimulator {
public:
    IntervalSimulator(const Scheme& scheme, const SdeModel& model);

    Vec operator()(const Param& theta, const Vec& x_start, const BrownianIncrements& increments) const {
        return run_(*scheme_, *model_, theta, x_start, increments);
    }
    /// Fine leg on `fine`, coarse leg on coarsen(fine) written to `coarse_scratch`.
    std::pair<Vec, Vec> coupled(const Param& theta, const Vec& x_fine, const Vec& x_coarse,
                                const BrownianIncrements& fine, BrownianIncrements& coarse_scratch) const;

private:
    using Kernel = Vec (*)(const Scheme&, const SdeModel&, const Param&, const Vec&, const BrownianIncrements&);
    const Scheme* scheme_;
    const SdeModel* model_;
    Kernel run_;
};

/// Apply 2^level steps driven by `increments`; returns the terminal state.
Vec simulate_interval(const Scheme& scheme, const SdeModel& model, const Param& theta, const Vec& x_start,
                      const BrownianIncrements& increments);

/// Fine leg at increments.level(), coarse leg at level - 1 on the pairwise
/// summed increments. Requires level >= 1.
std::pair<Vec, Vec> coupled_simulate_interval(const Scheme& scheme, const SdeModel& model, const Param& theta,
                                              const Vec& x_fine, const Vec& x_coarse,
                                              const BrownianIncrements& fine_increments);

/// As above but reuses `coarse_scratch` for the coarsened increments.
std::pair<Vec, Vec> coupled_simulate_interval(const Scheme& scheme, const SdeModel& model, const Param& theta,
                                              const Vec& x_fine, const Vec& x_coarse,
                                              const BrownianIncrements& fine_increments,
                                              BrownianIncrements& coarse_scratch);

/// Throws UnsupportedDimension if the scheme cannot be used in dimension d.
void validate_scheme_for_dim(const Scheme& scheme, std::size_t dim);

}  // namespace mlsrk
