#pragma once

#include <span>

namespace dwave::testfn {

// Radial bump phi(x) = exp(-1/(1-|x|^2)) on |x| < 1, zero outside.
double phi(double r);
double phi_r(double r);
double laplacian_phi(double r, int n);

// Point-valued versions on R^n; grad is written into `grad` (same size as x).
double phi(std::span<const double> x);
void grad_phi(std::span<const double> x, std::span<double> grad);
double laplacian_phi(std::span<const double> x);

// Time cutoff: 1 on [0,1/2], 0 on [1,inf), smooth logistic-type transition between.
double eta(double t);
double eta_prime(double t);
double eta_double_prime(double t);

/// psi_{tau,R}(t,x) = eta(t/tau) phi(|x|/R) and the derivative factors used by
/// the weak-form functionals.
struct ScaledTestFunction {
    double tau;
    double R;

    double value(double t, double r) const;
    double dt(double t, double r) const;
    double dtt(double t, double r) const;
    double laplacian(double t, double r, int n) const;
};

struct BumpBounds {
    double C_phi = 0.0;    // sup |lap phi| / phi^{1/p}
    double C_eta1 = 0.0;   // sup |eta'| / eta^{1/p}
    double C_eta2 = 0.0;   // sup |eta''| / eta^{1/p}
    double drift = 0.0;    // max relative change of the three suprema under grid doubling
    bool diverging = false;
};

/// Empirical suprema of the bump ratios on a uniform grid of `points` nodes
/// plus a geometric refinement toward the support boundary. The same scan is
/// repeated with twice the nodes; `diverging` is set when the suprema move by
/// more than 5%.
BumpBounds verify_bump_bounds(double p, int n = 1, int points = 100000);

/// (1-b) b^{b/(1-b)} a^{1/(1-b)} - (a c^b - c); nonnegative for a > 0, 0 < b < 1, c >= 0.
double young_gap(double a, double b, double c);

}  // namespace dwave::testfn
