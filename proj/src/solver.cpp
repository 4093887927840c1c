#include "dwave/solver.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "dwave/testfn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace dwave {

std::string_view to_string(Equation eq) {
    return eq == Equation::heat ? "heat" : "damped-wave";
}

std::string_view to_string(DataFamily family) {
    switch (family) {
        case DataFamily::bump: return "bump";
        case DataFamily::gaussian_truncated: return "gaussian-truncated";
        case DataFamily::custom_tabulated: return "custom-tabulated";
    }
    return "?";
}

std::string_view to_string(BlowupMethod method) {
    return method == BlowupMethod::dt_collapse ? "dt-collapse" : "threshold-extrapolation";
}

// ---------------------------------------------------------------------------
// Initial data

namespace {

double interpolate(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
    if (xs.empty() || x > xs.back() || x < xs.front()) return 0.0;
    const auto it = std::upper_bound(xs.begin(), xs.end(), x);
    if (it == xs.end()) return ys.back();
    const auto k = static_cast<std::size_t>(it - xs.begin());
    if (k == 0) return ys.front();
    const double w = (x - xs[k - 1]) / (xs[k] - xs[k - 1]);
    return (1.0 - w) * ys[k - 1] + w * ys[k];
}

double source_term(double u, double p) {
    const double a = std::abs(u);
    return p == 2.0 ? a * a : std::pow(a, p);
}

}  // namespace

double InitialDataSpec::support_radius() const {
    if (family == DataFamily::custom_tabulated) return table_r.empty() ? 0.0 : table_r.back();
    return radius;
}

double InitialDataSpec::u0(double r) const {
    switch (family) {
        case DataFamily::bump: return testfn::phi(r / radius);
        case DataFamily::gaussian_truncated:
            return r < radius ? amplitude0 * std::exp(-r * r / (width * width)) : 0.0;
        case DataFamily::custom_tabulated: return interpolate(table_r, table_u0, r);
    }
    return 0.0;
}

double InitialDataSpec::u1(double r) const {
    switch (family) {
        case DataFamily::bump: return testfn::phi(r / radius);
        case DataFamily::gaussian_truncated:
            return r < radius ? amplitude1 * std::exp(-r * r / (width * width)) : 0.0;
        case DataFamily::custom_tabulated: return interpolate(table_r, table_u1, r);
    }
    return 0.0;
}

double ProblemSpec::required_domain_radius() const {
    // Heat profiles spread like sqrt(t); a Dirichlet wall at 8 sqrt(t_max) sees ~exp(-16).
    const double reach = equation == Equation::heat ? std::min(t_max, 8.0 * std::sqrt(t_max)) : t_max;
    return data.support_radius() + reach + kDomainMargin;
}

double ProblemSpec::resolved_domain_radius() const {
    return domain_radius > 0.0 ? domain_radius : required_domain_radius();
}

void ProblemSpec::validate() const {
    auto fail = [](const std::string& what) { throw ParameterError(what); };
    if (n < 1) fail("n must be >= 1");
    if (!(p > 1.0)) fail("p must be > 1");
    if (!(epsilon > 0.0)) fail("epsilon must be > 0");
    if (!(dx > 0.0)) fail("dx must be > 0");
    if (!(t_max > 0.0)) fail("t_max must be > 0");
    if (!(blowup_threshold > 0.0)) fail("blowup threshold must be > 0");
    if (trace_stride < 0) fail("trace stride must be >= 0");
    if (norm_stride < 1) fail("norm stride must be >= 1");
    if (damping.mode() == DampingMode::explicit_power && !damping.theorem_mode() && !exploratory) {
        fail("alpha*beta != 0 lies outside the upper-bound theorem; enable exploratory mode");
    }
    switch (data.family) {
        case DataFamily::bump:
        case DataFamily::gaussian_truncated:
            if (!(data.radius > 0.0)) fail("data radius must be > 0");
            if (data.family == DataFamily::gaussian_truncated && !(data.width > 0.0)) {
                fail("gaussian width must be > 0");
            }
            break;
        case DataFamily::custom_tabulated:
            if (data.table_r.size() < 2 || data.table_u0.size() != data.table_r.size() ||
                data.table_u1.size() != data.table_r.size()) {
                fail("tabulated data needs >= 2 rows of equal length");
            }
            if (!std::is_sorted(data.table_r.begin(), data.table_r.end()) ||
                data.table_r.front() < 0.0) {
                fail("tabulated radii must be nonnegative and increasing");
            }
            break;
    }
    if (domain_radius > 0.0 && equation == Equation::damped_wave &&
        domain_radius < required_domain_radius()) {
        std::ostringstream msg;
        msg << "domain radius " << domain_radius << " < support + t_max + margin = "
            << required_domain_radius();
        fail(msg.str());
    }
    if (equation == Equation::damped_wave) {
        if (!(cfl > 0.0 && cfl <= 1.0)) fail("cfl must lie in (0, 1]");
        const RadialGrid probe(n, std::max(8.0 * dx, 1.0), dx);
        const double lam = probe.spectral_bound() * dx * dx;
        if (cfl * cfl * lam > 4.0 * (1.0 + 1e-12)) {
            std::ostringstream msg;
            msg << "cfl " << cfl << " exceeds the leapfrog limit " << 2.0 / std::sqrt(lam)
                << " for n=" << n;
            fail(msg.str());
        }
    } else if (!(cfl > 0.0)) {
        fail("cfl must be > 0");
    }
}

double positivity_integral(const InitialDataSpec& data, int n, const DampingSpec& damping) {
    const double B = compute_B(damping.beta());
    const double area = sphere_area(n);
    auto f = [&](double r) {
        return area * std::pow(r, n - 1) *
               (damping.spatial_factor(r) * B * data.u0(r) + data.u1(r));
    };
    const double R = data.support_radius();
    if (!(R > 0.0)) return 0.0;
    if (data.family == DataFamily::custom_tabulated) {
        // Piecewise-linear data: integrate panel by panel.
        double sum = 0.0;
        for (std::size_t k = 0; k + 1 < data.table_r.size(); ++k) {
            sum += boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
                f, data.table_r[k], data.table_r[k + 1], 10, 1e-12);
        }
        return sum;
    }
    return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, 0.0, R, 20, 1e-13);
}

InitialData make_initial_data(const ProblemSpec& spec, const RadialGrid& grid) {
    InitialData out;
    out.u0.resize(grid.size());
    out.u1.resize(grid.size());
    const bool heat = spec.equation == Equation::heat;
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
        out.u0[i] = spec.data.u0(grid.r(i));
        out.u1[i] = heat ? 0.0 : spec.data.u1(grid.r(i));
    }
    out.u0.back() = 0.0;
    out.u1.back() = 0.0;

    if (heat) {
        // The heat problem carries no velocity datum.
        const double B = compute_B(spec.damping.beta());
        const double area = sphere_area(spec.n);
        auto f = [&](double r) {
            return area * std::pow(r, spec.n - 1) * spec.damping.spatial_factor(r) * B *
                   spec.data.u0(r);
        };
        out.positivity_integral = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
            f, 0.0, spec.data.support_radius(), 20, 1e-13);
    } else {
        out.positivity_integral = positivity_integral(spec.data, spec.n, spec.damping);
    }
    if (!(out.positivity_integral > 1e-14)) {
        std::ostringstream msg;
        msg << "initial data violate the positivity condition: integral = "
            << out.positivity_integral;
        throw ParameterError(msg.str());
    }
    return out;
}

// ---------------------------------------------------------------------------
// Steppers

WaveStepper::WaveStepper(const RadialGrid& grid, int n_dim, double p, DampingSpec damping,
                         bool source)
    : grid_(&grid), p_(p), damping_(std::move(damping)), source_(source) {
    if (n_dim != grid.dim()) throw ParameterError("stepper dimension does not match grid");
    spatial_.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) spatial_[i] = damping_.spatial_factor(grid.r(i));
}

WaveState WaveStepper::start(std::span<const double> u0, std::span<const double> u1,
                             double dt) const {
    const std::size_t m = grid_->size();
    WaveState s;
    s.u_prev.assign(u0.begin(), u0.end());
    s.u.resize(m);
    std::vector<double> lap(m);
    grid_->laplacian(u0, lap);
    const double b0 = damping_.temporal_factor(0.0);
    for (std::size_t i = 0; i + 1 < m; ++i) {
        const double src = source_ ? source_term(u0[i], p_) : 0.0;
        const double acc = lap[i] + src - spatial_[i] * b0 * u1[i];
        s.u[i] = u0[i] + dt * u1[i] + 0.5 * dt * dt * acc;
    }
    s.u[m - 1] = 0.0;
    s.t = dt;
    s.dt_prev = dt;
    return s;
}

void WaveStepper::step_inplace(WaveState& s, double dt, std::size_t active,
                               std::vector<double>& lap) const {
    const std::size_t m = grid_->size();
    active = std::min(active, m - 1);
    lap.resize(m);
    grid_->laplacian(s.u, lap, active);
    const double b = damping_.temporal_factor(s.t);
    const double ratio = dt / s.dt_prev;
    const double span2 = 0.5 * dt * (dt + s.dt_prev);
    for (std::size_t i = 0; i < active; ++i) {
        const double phi_half = 0.5 * spatial_[i] * b * dt;
        const double ui = s.u[i];
        const double um = s.u_prev[i];
        const double force = lap[i] + (source_ ? source_term(ui, p_) : 0.0);
        // u_prev is overwritten with the new level, then the two are swapped.
        s.u_prev[i] = (ui + ratio * (ui - um) + phi_half * um + span2 * force) / (1.0 + phi_half);
    }
    std::swap(s.u, s.u_prev);
    s.t += dt;
    s.dt_prev = dt;
}

WaveState WaveStepper::step(const WaveState& state, double dt, std::size_t active) const {
    WaveState next = state;
    std::vector<double> scratch;
    step_inplace(next, dt, active, scratch);
    return next;
}

double WaveStepper::staggered_energy(const WaveState& s) const {
    const auto vol = grid_->volume();
    double kinetic = 0.0;
    for (std::size_t i = 0; i < s.u.size(); ++i) {
        const double v = (s.u[i] - s.u_prev[i]) / s.dt_prev;
        kinetic += vol[i] * v * v;
    }
    return 0.5 * kinetic + 0.5 * grid_->gradient_form(s.u, s.u_prev);
}

HeatStepper::HeatStepper(const RadialGrid& grid, double p, DampingSpec damping, bool source)
    : grid_(&grid), p_(p), damping_(std::move(damping)), source_(source) {
    spatial_.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) spatial_[i] = damping_.spatial_factor(grid.r(i));
    grid.negative_laplacian_rows(lower_, diag_, upper_);
}

void HeatStepper::step_inplace(HeatState& s, double dt, std::vector<double>& scratch) const {
    const std::size_t m = grid_->size();
    scratch.resize(2 * m);
    double* cp = scratch.data();
    double* dp = scratch.data() + m;
    const double b = damping_.temporal_factor(s.t + dt);
    // Thomas algorithm on (Phi/dt - lap) v+ = Phi v / dt + |v|^p; last row is v+ = 0.
    for (std::size_t i = 0; i < m; ++i) {
        const bool dirichlet = i + 1 == m;
        const double w = dirichlet ? 0.0 : spatial_[i] * b / dt;
        const double rhs = dirichlet ? 0.0 : w * s.v[i] + (source_ ? source_term(s.v[i], p_) : 0.0);
        const double lo = i == 0 ? 0.0 : lower_[i];
        const double denom = diag_[i] + w - (i == 0 ? 0.0 : lo * cp[i - 1]);
        cp[i] = upper_[i] / denom;
        dp[i] = (rhs - (i == 0 ? 0.0 : lo * dp[i - 1])) / denom;
    }
    s.v[m - 1] = dp[m - 1];
    for (std::size_t i = m - 1; i-- > 0;) s.v[i] = dp[i] - cp[i] * s.v[i + 1];
    s.t += dt;
}

HeatState HeatStepper::step(const HeatState& state, double dt) const {
    HeatState next = state;
    std::vector<double> scratch;
    step_inplace(next, dt, scratch);
    return next;
}

// ---------------------------------------------------------------------------
// Driver

std::optional<double> fit_blowup_time(std::span<const double> t, std::span<const double> sup,
                                      double gamma) {
    const std::size_t m = std::min(t.size(), sup.size());
    if (m < 3) return std::nullopt;
    double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        const double y = std::pow(sup[k], -1.0 / gamma);
        st += t[k];
        sy += y;
        stt += t[k] * t[k];
        sty += t[k] * y;
    }
    const double mean_t = st / m;
    const double mean_y = sy / m;
    const double var = stt / m - mean_t * mean_t;
    if (!(var > 0.0)) return std::nullopt;
    const double slope = (sty / m - mean_t * mean_y) / var;
    if (!(slope < 0.0)) return std::nullopt;
    const double root = mean_t - mean_y / slope;
    if (!std::isfinite(root)) return std::nullopt;
    return root;
}

namespace {

double sup_abs(std::span<const double> u) {
    double m = 0.0;
    for (double x : u) {
        if (!std::isfinite(x)) return std::numeric_limits<double>::infinity();
        m = std::max(m, std::abs(x));
    }
    return m;
}

std::size_t last_nonzero(std::span<const double> a, std::span<const double> b) {
    std::size_t k = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] != 0.0 || b[i] != 0.0) k = i + 1;
    }
    return k;
}

struct FitWindow {
    std::vector<double> t;
    std::vector<double> sup;
    double floor;

    void add(double time, double s) {
        if (s < floor) {
            // A dip below the window restarts it: only the final approach counts.
            t.clear();
            sup.clear();
            return;
        }
        t.push_back(time);
        sup.push_back(s);
    }
};

// Halves dt each time sup|u| grows by 2^gamma above the reference level, which
// keeps dt proportional to the remaining time T - t of the ODE blow-up profile.
struct Cascade {
    double dt;
    double reference;
    double factor;

    void update(double s) {
        while (s >= factor * reference) {
            reference *= factor;
            dt *= 0.5;
        }
    }
};

BlowupReport finish_report(const FitWindow& window, double t_last, double dt_last, double gamma,
                           bool collapsed, double dx) {
    BlowupReport rep;
    rep.dx = dx;
    rep.method = collapsed ? BlowupMethod::dt_collapse : BlowupMethod::threshold_extrapolation;
    rep.T_lower = t_last;
    rep.T_est = t_last;
    if (const auto fit = fit_blowup_time(window.t, window.sup, gamma);
        fit && *fit >= t_last * (1.0 - 1e-12) && *fit - t_last < std::max(1.0, t_last)) {
        rep.T_est = std::max(*fit, t_last);
        rep.fit_ok = true;
    }
    rep.T_upper = rep.T_est + (rep.T_est - rep.T_lower) + dt_last;
    rep.resolution_pair = {rep.T_est, rep.T_est};
    return rep;
}

RunOutcome run_wave(const ProblemSpec& spec, const RunOptions& opt) {
    const RadialGrid grid(spec.n, spec.resolved_domain_radius(), spec.dx);
    const InitialData data = make_initial_data(spec, grid);
    const std::size_t m = grid.size();
    std::vector<double> u0(m), u1(m);
    for (std::size_t i = 0; i < m; ++i) {
        u0[i] = spec.epsilon * data.u0[i];
        u1[i] = spec.epsilon * data.u1[i];
    }
    const WaveStepper stepper(grid, spec.n, spec.p, spec.damping, spec.source);
    const double gamma = 2.0 / (spec.p - 1.0);

    RunOutcome out;
    out.trace.n = spec.n;
    if (spec.trace_stride > 0) out.trace.r.assign(grid.r().begin(), grid.r().end());

    Cascade cascade{spec.cfl * spec.dx, std::max(1.0, sup_abs(u0)), std::exp2(gamma)};
    FitWindow window{{}, {}, spec.blowup_threshold * std::ldexp(1.0, -opt.window_doublings)};
    const std::size_t seed_nodes = last_nonzero(u0, u1);

    auto record_norms = [&](const WaveState& s, double sup) {
        const std::size_t len = std::min(m, seed_nodes + out.steps + 2);
        const std::span<const double> u(s.u.data(), len);
        out.trace.norms.push_back({s.t, sup, grid.l2_norm(u), stepper.staggered_energy(s)});
    };

    // Snapshot of level k waiting for level k+1 to form the centred velocity.
    struct Pending {
        double t;
        double span;
        std::vector<double> u;
        std::vector<double> u_prev;
    };
    std::optional<Pending> pending;
    const bool tracing = spec.trace_stride > 0;
    if (tracing) out.trace.snapshots.push_back({0.0, u0, u1});
    {
        double kinetic = 0.0;
        for (std::size_t i = 0; i < m; ++i) kinetic += grid.volume()[i] * u1[i] * u1[i];
        const double energy = 0.5 * kinetic + 0.5 * grid.gradient_form(u0, u0);
        out.trace.norms.push_back({0.0, sup_abs(u0), grid.l2_norm(u0), energy});
    }

    double dt = std::min(cascade.dt, spec.t_max);
    WaveState state = stepper.start(u0, u1, dt);
    out.steps = 1;
    out.trace.dt_history.push_back(dt);
    std::vector<double> scratch;
    bool collapsed = false;
    double sup = sup_abs(state.u);
    double t_last_finite = 0.0;
    bool blew_up = false;

    while (true) {
        if (!std::isfinite(sup)) {
            blew_up = true;
            break;
        }
        t_last_finite = state.t;
        window.add(state.t, sup);
        if (out.steps % spec.norm_stride == 0) record_norms(state, sup);
        if (sup >= spec.blowup_threshold) {
            blew_up = true;
            break;
        }
        if (state.t >= spec.t_max * (1.0 - 1e-14)) break;
        cascade.update(sup);
        if (cascade.dt < opt.min_dt) {
            collapsed = true;
            blew_up = true;
            break;
        }
        dt = std::min(cascade.dt, spec.t_max - state.t);

        if (tracing && out.steps % spec.trace_stride == 0) {
            pending = Pending{state.t, dt + state.dt_prev, state.u, state.u_prev};
        }
        const std::size_t active = seed_nodes + out.steps + 1;
        stepper.step_inplace(state, dt, active, scratch);
        ++out.steps;
        out.trace.dt_history.push_back(dt);
        sup = sup_abs(state.u);
        if (pending) {
            if (std::isfinite(sup)) {
                Snapshot snap{pending->t, std::move(pending->u), std::vector<double>(m)};
                for (std::size_t i = 0; i < m; ++i) {
                    snap.u_t[i] = (state.u[i] - pending->u_prev[i]) / pending->span;
                }
                out.trace.snapshots.push_back(std::move(snap));
            }
            pending.reset();
        }
    }
    out.t_end = t_last_finite;
    if (blew_up) {
        out.blowup = finish_report(window, t_last_finite, out.trace.dt_history.back(), gamma,
                                   collapsed, spec.dx);
    }
    return out;
}

RunOutcome run_heat(const ProblemSpec& spec, const RunOptions& opt) {
    const RadialGrid grid(spec.n, spec.resolved_domain_radius(), spec.dx);
    const InitialData data = make_initial_data(spec, grid);
    const std::size_t m = grid.size();
    HeatState state;
    state.v.resize(m);
    for (std::size_t i = 0; i < m; ++i) state.v[i] = spec.epsilon * data.u0[i];
    const HeatStepper stepper(grid, spec.p, spec.damping, spec.source);
    const double gamma = 1.0 / (spec.p - 1.0);

    RunOutcome out;
    out.trace.n = spec.n;
    if (spec.trace_stride > 0) out.trace.r.assign(grid.r().begin(), grid.r().end());
    const bool tracing = spec.trace_stride > 0;

    Cascade cascade{spec.cfl * spec.dx, std::max(1.0, sup_abs(state.v)), std::exp2(gamma)};
    FitWindow window{{}, {}, spec.blowup_threshold * std::ldexp(1.0, -opt.window_doublings)};
    std::vector<double> scratch;
    bool collapsed = false;
    bool blew_up = false;
    double t_last_finite = 0.0;
    double sup = sup_abs(state.v);
    // v_t = (lap v + |v|^p) / Phi where Phi > 0.
    auto heat_rate = [&](double t) {
        std::vector<double> rate(m, 0.0);
        grid.laplacian(state.v, rate);
        const double b = spec.damping.temporal_factor(t);
        for (std::size_t i = 0; i + 1 < m; ++i) {
            const double coeff = spec.damping.spatial_factor(grid.r(i)) * b;
            const double force = rate[i] + (spec.source ? source_term(state.v[i], spec.p) : 0.0);
            rate[i] = coeff > 0.0 ? force / coeff : 0.0;
        }
        return rate;
    };

    while (true) {
        if (!std::isfinite(sup)) {
            blew_up = true;
            break;
        }
        t_last_finite = state.t;
        window.add(state.t, sup);
        if (out.steps % spec.norm_stride == 0) {
            out.trace.norms.push_back(
                {state.t, sup, grid.l2_norm(state.v), 0.5 * grid.gradient_form(state.v, state.v)});
        }
        if (tracing && out.steps % spec.trace_stride == 0) {
            out.trace.snapshots.push_back({state.t, state.v, heat_rate(state.t)});
        }
        if (sup >= spec.blowup_threshold) {
            blew_up = true;
            break;
        }
        if (state.t >= spec.t_max * (1.0 - 1e-14)) break;
        cascade.update(sup);
        if (cascade.dt < opt.min_dt) {
            collapsed = true;
            blew_up = true;
            break;
        }
        const double dt = std::min(cascade.dt, spec.t_max - state.t);
        stepper.step_inplace(state, dt, scratch);
        ++out.steps;
        out.trace.dt_history.push_back(dt);
        sup = sup_abs(state.v);
    }
    out.t_end = t_last_finite;
    if (blew_up) {
        const double last_dt = out.trace.dt_history.empty() ? 0.0 : out.trace.dt_history.back();
        out.blowup = finish_report(window, t_last_finite, last_dt, gamma, collapsed, spec.dx);
    }
    return out;
}

RunOutcome run_once(const ProblemSpec& spec, const RunOptions& opt) {
    return spec.equation == Equation::heat ? run_heat(spec, opt) : run_wave(spec, opt);
}

}  // namespace

RunOutcome run(const ProblemSpec& spec, const RunOptions& options) {
    spec.validate();
    RunOutcome out = run_once(spec, options);
    if (options.refine && out.blowup) {
        ProblemSpec fine = spec;
        fine.dx = spec.dx / 2.0;
        fine.trace_stride = 0;
        fine.norm_stride = std::max(1, spec.norm_stride) * 64;
        const RunOutcome refined = run_once(fine, options);
        BlowupReport& rep = *out.blowup;
        rep.refined = true;
        if (refined.blowup) {
            const double coarse_T = rep.T_est;
            const double fine_T = refined.blowup->T_est;
            rep.resolution_pair = {coarse_T, fine_T};
            rep.converged = std::abs(coarse_T - fine_T) <= options.convergence_tol * fine_T;
        } else {
            rep.resolution_pair = {rep.T_est, std::numeric_limits<double>::infinity()};
            rep.converged = false;
        }
    }
    return out;
}

}  // namespace dwave
