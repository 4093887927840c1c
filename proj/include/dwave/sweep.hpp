#pragma once

#include "dwave/solver.hpp"
#include "dwave/theory.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dwave {

struct SweepPoint {
    double epsilon = 0.0;
    double T_est = 0.0;     // fine-resolution estimate
    double T_coarse = 0.0;  // estimate at dx
    bool blew_up = false;
    bool converged = false;
    double dx = 0.0;
};

struct LogLogFit {
    double slope = 0.0;      // s in T = A eps^{-s}
    double intercept = 0.0;  // log A
};

/// Least squares of log T = -s log eps + c. Requires two distinct epsilons.
LogLogFit fit_loglog(std::span<const double> eps, std::span<const double> T);

/// Percentile bootstrap (2.5%, 97.5%) of the log-log slope with a fixed seed.
std::pair<double, double> bootstrap_slope_ci(std::span<const double> eps, std::span<const double> T,
                                             int resamples, std::uint64_t seed);

struct SweepResult {
    std::vector<double> epsilons;
    std::vector<SweepPoint> points;
    std::size_t fitted_points = 0;
    double fit_exponent = 0.0;
    double fit_intercept = 0.0;
    std::pair<double, double> fit_ci{0.0, 0.0};
    double predicted_upper = 0.0;  // theorem exponent: 1/kappa, or p-1 in the alpha regimes
    double predicted_lower = 0.0;  // lower-bound exponent 1/kappa (up to delta)
    double delta = 0.0;
    ExponentReport regime;
    bool monotone = true;  // T_eps non-increasing in eps over converged points
};

struct SweepOptions {
    double convergence_tol = 0.05;
    int bootstrap_resamples = 1000;
    std::uint64_t seed = 20240611;
    double tolerance = 0.25;  // reported as delta and used by compare_bounds
    int workers = 1;
    bool fit = true;
    /// Previously computed points (same spec); matching epsilons are not re-run.
    std::vector<SweepPoint> completed;
    /// Called under a lock as each new point finishes (one caller at a time).
    std::function<void(const SweepPoint&)> on_point;
};

/// Thrown when fewer than four converged points are available for the fit.
class InsufficientPointsError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Runs the solver at dx and dx/2 for every epsilon and fits the lifespan exponent.
SweepResult run_sweep(const ProblemSpec& base, std::span<const double> eps_grid,
                      const SweepOptions& options = {});

/// Fit and audit a set of points without running anything.
SweepResult summarize_sweep(const ProblemSpec& base, std::vector<SweepPoint> points,
                            const SweepOptions& options = {});

struct Verdict {
    bool within_upper = false;
    bool within_lower = false;
    bool consistent = false;
    bool sharpness_claimed = false;
    std::vector<double> candidate_exponents;
    std::string note;
};

/// Checks fit_exponent <= upper (1 + tol) and >= lower (1 - tol).
Verdict compare_bounds(const SweepResult& result, double tol);

}  // namespace dwave
