#pragma once

#include "dwave/grid.hpp"
#include "dwave/theory.hpp"

#include <cstddef>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

namespace dwave {

enum class Equation { damped_wave, heat };
enum class DataFamily { bump, gaussian_truncated, custom_tabulated };

std::string_view to_string(Equation eq);
std::string_view to_string(DataFamily family);

/// Profiles (u0, u1) before the amplitude epsilon is applied.
///
/// bump: u0 = u1 = phi(r / radius).
/// gaussian_truncated: u_k = amplitude_k * exp(-r^2/width^2) on r < radius.
/// custom_tabulated: piecewise-linear in (table_r, table_u0, table_u1), zero past the table.
struct InitialDataSpec {
    DataFamily family = DataFamily::bump;
    double radius = 1.0;
    double width = 0.5;
    double amplitude0 = 1.0;
    double amplitude1 = 1.0;
    std::vector<double> table_r;
    std::vector<double> table_u0;
    std::vector<double> table_u1;

    double support_radius() const;
    double u0(double r) const;
    double u1(double r) const;
};

struct ProblemSpec {
    int n = 1;
    double p = 2.0;
    DampingSpec damping = DampingSpec::power(0.0, 0.0);
    InitialDataSpec data;
    double epsilon = 1.0;
    Equation equation = Equation::damped_wave;
    double domain_radius = 0.0;  // 0 selects support + reach + margin (reach: t_max, heat min(t_max, 8 sqrt(t_max)))
    double dx = 0.01;
    double cfl = 0.5;
    double blowup_threshold = 1e6;
    double t_max = 50.0;
    int trace_stride = 0;  // record a snapshot every k steps; 0 keeps norms only
    int norm_stride = 1;
    bool source = true;    // |u|^p on/off
    bool exploratory = false;

    static constexpr double kDomainMargin = 2.0;

    double required_domain_radius() const;
    double resolved_domain_radius() const;
    /// Throws ParameterError on an invalid or inconsistent spec.
    void validate() const;
};

struct InitialData {
    std::vector<double> u0;
    std::vector<double> u1;
    /// int_{R^n} (a(x) B u0 + u1) dx with a the spatial damping factor.
    double positivity_integral = 0.0;
};

/// int_{R^n} (a(x) B u0 + u1) dx by adaptive quadrature on the profile functions.
double positivity_integral(const InitialDataSpec& data, int n, const DampingSpec& damping);

/// Samples the profiles on the grid; rejects data whose positivity integral is <= 0.
InitialData make_initial_data(const ProblemSpec& spec, const RadialGrid& grid);

struct WaveState {
    std::vector<double> u;       // level t
    std::vector<double> u_prev;  // level t - dt_prev
    double t = 0.0;
    double dt_prev = 0.0;
};

struct HeatState {
    std::vector<double> v;
    double t = 0.0;
};

/// Three-level scheme for u_tt - lap u + Phi u_t = |u|^p with the damping
/// term centred semi-implicitly, so the pointwise update stays explicit.
/// Steps of unequal length use the non-uniform second difference.
class WaveStepper {
public:
    WaveStepper(const RadialGrid& grid, int n_dim, double p, DampingSpec damping, bool source);

    /// Level 1 from second-order Taylor expansion of the data (already scaled by epsilon).
    WaveState start(std::span<const double> u0, std::span<const double> u1, double dt) const;
    /// Advances by dt; `active` bounds the nodes that can be nonzero.
    WaveState step(const WaveState& state, double dt, std::size_t active) const;
    WaveState step(const WaveState& state, double dt) const {
        return step(state, dt, grid_->size() - 1);
    }
    void step_inplace(WaveState& state, double dt, std::size_t active,
                      std::vector<double>& scratch) const;

    /// Leapfrog energy between the two stored levels (exactly conserved when Phi = 0
    /// and the source is off; non-increasing when Phi >= 0).
    double staggered_energy(const WaveState& state) const;

private:
    const RadialGrid* grid_;
    double p_;
    DampingSpec damping_;
    bool source_;
    std::vector<double> spatial_;
};

/// Phi v_t = lap v + |v|^p with implicit diffusion (one tridiagonal solve per step)
/// and explicit source.
class HeatStepper {
public:
    HeatStepper(const RadialGrid& grid, double p, DampingSpec damping, bool source);

    HeatState step(const HeatState& state, double dt) const;
    void step_inplace(HeatState& state, double dt, std::vector<double>& scratch) const;

private:
    const RadialGrid* grid_;
    double p_;
    DampingSpec damping_;
    bool source_;
    std::vector<double> spatial_;
    std::vector<double> lower_, diag_, upper_;
};

struct Snapshot {
    double t = 0.0;
    std::vector<double> u;
    std::vector<double> u_t;
};

struct NormSample {
    double t = 0.0;
    double sup_u = 0.0;
    double l2_u = 0.0;
    double energy = 0.0;
};

struct SolutionTrace {
    int n = 1;
    std::vector<double> r;
    std::vector<Snapshot> snapshots;
    std::vector<double> dt_history;
    std::vector<NormSample> norms;
};

enum class BlowupMethod { threshold_extrapolation, dt_collapse };

std::string_view to_string(BlowupMethod method);

struct BlowupReport {
    double T_est = 0.0;
    double T_lower = 0.0;
    double T_upper = 0.0;
    BlowupMethod method = BlowupMethod::threshold_extrapolation;
    bool fit_ok = false;
    bool converged = false;
    bool refined = false;
    std::pair<double, double> resolution_pair{0.0, 0.0};  // T(dx), T(dx/2)
    double dx = 0.0;
};

struct RunOptions {
    bool refine = false;
    double convergence_tol = 0.05;
    /// Fit window: samples with sup|u| >= threshold / 2^window_doublings.
    int window_doublings = 8;
    double min_dt = 1e-13;
};

struct RunOutcome {
    SolutionTrace trace;
    std::optional<BlowupReport> blowup;
    double t_end = 0.0;
    std::size_t steps = 0;

    bool completed() const noexcept { return !blowup.has_value(); }
};

/// Integrates to t_max or blow-up. Near blow-up dt is halved every time sup|u|
/// grows by 2^gamma (a doubling of sup|u|^{1/gamma}); the lifespan is read off a fit of sup|u| ~ A (T - t)^{-gamma} with
/// gamma = 2/(p-1) for the wave and 1/(p-1) for the heat equation, with the
/// threshold crossing time as fallback.
RunOutcome run(const ProblemSpec& spec, const RunOptions& options = {});

/// Least-squares fit of sup^{-1/gamma} = c (T - t) over samples; nullopt if degenerate.
std::optional<double> fit_blowup_time(std::span<const double> t, std::span<const double> sup,
                                      double gamma);

}  // namespace dwave
