#pragma once

#include "dwave/solver.hpp"
#include "dwave/theory.hpp"

#include <span>
#include <vector>

namespace dwave {

/// Test-function functionals of one trace for a single (tau, R).
///
/// With psi = eta(t/tau) phi(x/R) and the gauge g, an exact solution satisfies
///   I + g(0) J = K1 + K2 + K3,
/// where J carries the normalisation eps * int (<x>^{-alpha} B u0 + u1) phi_R.
/// The g(0) = 1/B factor comes from pairing the weak form with g psi.
struct Certificate {
    double tau = 0.0;
    double R = 0.0;
    double I = 0.0;
    double J = 0.0;
    double K1 = 0.0;
    double K2 = 0.0;
    double K3 = 0.0;
    double D = 0.0;
    double g0 = 1.0;
    double identity_residual = 0.0;
    double C_empirical = 0.0;  // eps / D^q
};

/// J_R from analytic profiles (adaptive quadrature).
double eval_J(const InitialDataSpec& data, int n, double R, double epsilon,
              const DampingSpec& damping);

/// J_R from sampled data (u(0), u_t(0)) = eps (u0, u1) on radial nodes r (trapezoid).
double eval_J(std::span<const double> r, std::span<const double> u_init,
              std::span<const double> ut_init, int n, double R, const DampingSpec& damping);

struct CertifyOptions {
    /// Snapshot spacing above tau / max_stride_divisor is rejected.
    double max_stride_divisor = 64.0;
    bool literal_D = false;
};

/// Space-time trapezoidal quadrature of I, K1, K2, K3 on a damped-wave trace.
/// J is taken from the trace's t = 0 snapshot. Throws ParameterError if tau is
/// outside the traced interval, R exceeds the grid, or snapshots are too sparse.
Certificate eval_I_and_K(const SolutionTrace& trace, double tau, double R, double p,
                         double epsilon, const DampingSpec& damping,
                         const CertifyOptions& options = {});

/// D(tau, R) = tau^{-(1+beta)/p} (tau^{-1+beta} R^{n/q} + tau^{1+beta} R^{-2+n/q} + F(R)).
/// `literal` switches the R-exponents to the printed q/n.
double eval_D(double tau, double R, int n, double p, const DampingSpec& damping,
              bool literal = false);

/// R = tau^{(1+beta)/(2-alpha)} when alpha q < n, otherwise R = tau.
double choose_R(double tau, int n, double p, double alpha, double beta);

/// tau_0 = max(1, R0^{(2-alpha)/(1+beta)}).
double tau_zero(double R0, double alpha, double beta);

struct RScan {
    std::vector<double> R;
    std::vector<double> J;
    double J_limit = 0.0;  // max over the scan
    double R0 = 0.0;       // smallest scanned R with J >= J_limit / 2
    bool found = false;
};

RScan scan_R0(const InitialDataSpec& data, int n, double epsilon, const DampingSpec& damping,
              std::span<const double> radii);

struct ChainReport {
    bool applicable = false;
    double C1 = 0.0;       // J / D^q
    double C_eps = 0.0;    // eps / D^q
    double C_young = 0.0;  // smallest C with J <= C D I^{1/p} - I
};

ChainReport check_chain(const Certificate& cert, double epsilon, double p);

/// max C1 / min C1 over applicable reports (infinity if fewer than two).
double chain_spread(std::span<const ChainReport> reports);

}  // namespace dwave
