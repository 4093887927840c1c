#include "dwave/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

namespace dwave {

LogLogFit fit_loglog(std::span<const double> eps, std::span<const double> T) {
    const std::size_t m = std::min(eps.size(), T.size());
    if (m < 2) throw InsufficientPointsError("log-log fit needs at least two points");
    double sx = 0.0, sy = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        sx += std::log(eps[k]);
        sy += std::log(T[k]);
    }
    const double mx = sx / m;
    const double my = sy / m;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        const double dx = std::log(eps[k]) - mx;
        sxx += dx * dx;
        sxy += dx * (std::log(T[k]) - my);
    }
    if (!(sxx > 0.0)) throw InsufficientPointsError("log-log fit needs two distinct epsilons");
    const double slope = sxy / sxx;
    return {-slope, my - slope * mx};
}

std::pair<double, double> bootstrap_slope_ci(std::span<const double> eps, std::span<const double> T,
                                             int resamples, std::uint64_t seed) {
    const std::size_t m = std::min(eps.size(), T.size());
    std::mt19937_64 rng(seed);
    std::vector<double> slopes;
    slopes.reserve(resamples);
    std::vector<double> be(m), bt(m);
    for (int b = 0; b < resamples; ++b) {
        for (std::size_t k = 0; k < m; ++k) {
            const auto idx = static_cast<std::size_t>(rng() % m);
            be[k] = eps[idx];
            bt[k] = T[idx];
        }
        // Resamples with a single distinct epsilon carry no slope information.
        if (std::all_of(be.begin(), be.end(), [&](double e) { return e == be.front(); })) continue;
        slopes.push_back(fit_loglog(be, bt).slope);
    }
    if (slopes.empty()) return {std::nan(""), std::nan("")};
    std::sort(slopes.begin(), slopes.end());
    auto quantile = [&](double q) {
        const double pos = q * (slopes.size() - 1);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const auto hi = std::min(lo + 1, slopes.size() - 1);
        return slopes[lo] + (pos - lo) * (slopes[hi] - slopes[lo]);
    };
    return {quantile(0.025), quantile(0.975)};
}

namespace {

SweepPoint run_point(const ProblemSpec& base, double eps, double tol) {
    ProblemSpec spec = base;
    spec.epsilon = eps;
    spec.trace_stride = 0;
    spec.norm_stride = 1 << 20;
    RunOptions opt;
    opt.refine = true;
    opt.convergence_tol = tol;
    const RunOutcome out = run(spec, opt);
    SweepPoint pt;
    pt.epsilon = eps;
    pt.dx = base.dx;
    if (out.blowup) {
        pt.blew_up = true;
        pt.T_coarse = out.blowup->resolution_pair.first;
        pt.T_est = out.blowup->resolution_pair.second;
        pt.converged = out.blowup->converged;
    }
    return pt;
}

}  // namespace

SweepResult summarize_sweep(const ProblemSpec& base, std::vector<SweepPoint> points,
                            const SweepOptions& options) {
    SweepResult res;
    std::sort(points.begin(), points.end(),
              [](const SweepPoint& a, const SweepPoint& b) { return a.epsilon > b.epsilon; });
    res.points = std::move(points);
    for (const auto& pt : res.points) res.epsilons.push_back(pt.epsilon);
    res.delta = options.tolerance;

    std::vector<double> eps, T;
    for (const auto& pt : res.points) {
        if (pt.blew_up && pt.converged && std::isfinite(pt.T_est) && pt.T_est > 0.0) {
            eps.push_back(pt.epsilon);
            T.push_back(pt.T_est);
        }
    }
    res.fitted_points = eps.size();
    // Points are sorted by decreasing epsilon, so T must be non-decreasing along the list.
    for (std::size_t k = 1; k < T.size(); ++k) {
        if (T[k] < T[k - 1]) res.monotone = false;
    }
    if (!options.fit) return res;

    res.regime = classify(base.n, base.p, base.damping);
    if (res.regime.regime == Regime::supercritical) {
        std::ostringstream msg;
        msg << "scaling fit needs a subcritical exponent: p=" << base.p
            << " >= p_crit=" << res.regime.p_crit;
        throw ParameterError(msg.str());
    }
    if (eps.size() < 4) {
        const auto no_blowup = std::count_if(res.points.begin(), res.points.end(),
                                             [](const SweepPoint& pt) { return !pt.blew_up; });
        std::ostringstream msg;
        msg << "scaling fit needs at least 4 converged points, got " << eps.size();
        if (no_blowup > 0) msg << " (" << no_blowup << " reached t_max without blow-up)";
        throw InsufficientPointsError(msg.str());
    }
    const LogLogFit fit = fit_loglog(eps, T);
    res.fit_exponent = fit.slope;
    res.fit_intercept = fit.intercept;
    res.fit_ci = bootstrap_slope_ci(eps, T, options.bootstrap_resamples, options.seed);
    const double inv_kappa = 1.0 / res.regime.kappa;
    res.predicted_lower = inv_kappa;
    res.predicted_upper = res.regime.regime == Regime::subcritical_power ? inv_kappa : base.p - 1.0;
    return res;
}

SweepResult run_sweep(const ProblemSpec& base, std::span<const double> eps_grid,
                      const SweepOptions& options) {
    base.validate();
    if (options.fit) {
        const ExponentReport rep = classify(base.n, base.p, base.damping);
        if (rep.regime == Regime::supercritical) {
            throw ParameterError("scaling fit mode rejects supercritical p");
        }
    }
    for (double e : eps_grid) {
        if (!(e > 0.0 && e <= 1.0)) throw ParameterError("epsilon grid must lie in (0, 1]");
    }

    std::map<double, SweepPoint> done;
    for (const auto& pt : options.completed) done[pt.epsilon] = pt;
    std::vector<double> todo;
    for (double e : eps_grid) {
        if (!done.count(e)) todo.push_back(e);
    }

    std::vector<SweepPoint> fresh(todo.size());
    std::atomic<std::size_t> next{0};
    std::mutex report_mutex;
    auto worker = [&]() {
        for (std::size_t k = next++; k < todo.size(); k = next++) {
            fresh[k] = run_point(base, todo[k], options.convergence_tol);
            if (options.on_point) {
                std::lock_guard lock(report_mutex);
                options.on_point(fresh[k]);
            }
        }
    };
    const int workers = std::clamp(options.workers, 1, std::max<int>(1, static_cast<int>(todo.size())));
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    }

    std::vector<SweepPoint> points;
    for (double e : eps_grid) {
        if (auto it = done.find(e); it != done.end()) {
            points.push_back(it->second);
        } else {
            const auto k = static_cast<std::size_t>(std::find(todo.begin(), todo.end(), e) - todo.begin());
            points.push_back(fresh[k]);
        }
    }
    return summarize_sweep(base, std::move(points), options);
}

Verdict compare_bounds(const SweepResult& result, double tol) {
    Verdict v;
    const double s = result.fit_exponent;
    v.within_upper = s <= result.predicted_upper * (1.0 + tol);
    v.within_lower = s >= result.predicted_lower * (1.0 - tol);
    v.consistent = v.within_upper && v.within_lower;
    std::ostringstream note;
    switch (result.regime.regime) {
        case Regime::subcritical_power:
            v.candidate_exponents = {result.predicted_upper};
            v.sharpness_claimed = true;
            note << "upper eps^(-1/kappa) and lower eps^(-1/kappa+delta) share the exponent "
                 << result.predicted_upper;
            break;
        case Regime::alpha_log_critical:
            v.candidate_exponents = {result.predicted_lower, result.predicted_upper};
            note << "upper bound eps^(-(p-1)) carries a log(1/eps)^(p-1) correction; "
                    "the fit is restricted to the leading power";
            break;
        case Regime::alpha_dominated:
            v.candidate_exponents = {result.predicted_lower, result.predicted_upper};
            note << "alpha-dominated: upper exponent p-1 and lower exponent 1/kappa differ; "
                    "sharpness of either is not claimed";
            break;
        case Regime::supercritical:
            note << "supercritical: no finite-lifespan prediction";
            break;
    }
    if (!v.consistent) {
        note << "; violation: fitted exponent " << s << " outside ["
             << result.predicted_lower * (1.0 - tol) << ", " << result.predicted_upper * (1.0 + tol)
             << "]";
    }
    v.note = note.str();
    return v;
}

}  // namespace dwave
