#include "dwave/testfn.hpp"

#include "dwave/theory.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace dwave::testfn {

namespace {

// exp(-x) underflows to subnormals past ~708; treat as the zero set.
constexpr double kExpCut = 700.0;
constexpr double kZeroSet = 1e-300;

// s = 1 - r^2 with r^2 computed as (1-r)(1+r) near the boundary.
double bump_s(double r) { return (1.0 - r) * (1.0 + r); }

// Delta phi / phi for the radial bump, valid on r < 1.
double laplacian_over_phi(double r, int n) {
    const double s = bump_s(r);
    const double s2 = s * s;
    const double r2 = r * r;
    return -2.0 * n / s2 - 8.0 * r2 / (s2 * s) + 4.0 * r2 / (s2 * s2);
}

// Transition variable z(t) = 1/(t^2 - 1/4) - 1/(1 - t^2) and its derivatives on (1/2, 1).
struct Transition {
    double z, dz, d2z;
};

Transition transition(double t) {
    const double u = t * t - 0.25;
    const double v = 1.0 - t * t;
    const double a = 1.0 / u;
    const double b = 1.0 / v;
    const double da = -2.0 * t * a * a;
    const double db = 2.0 * t * b * b;
    const double d2a = -2.0 * a * a + 8.0 * t * t * a * a * a;
    const double d2b = 2.0 * b * b + 8.0 * t * t * b * b * b;
    return {a - b, da - db, d2a - d2b};
}

// sigma(z) (1 - sigma(z)) without overflow.
double logistic_slope(double z) {
    const double e = std::exp(-std::abs(z));
    return e / ((1.0 + e) * (1.0 + e));
}

double logistic(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

bool in_transition(double t) { return t > 0.5 && t < 1.0; }

// Grid on [lo, hi) that is uniform with `points` nodes and gets an extra
// geometric cluster approaching `hi`.
std::vector<double> scan_grid(double lo, double hi, int points) {
    std::vector<double> g;
    g.reserve(points + 400);
    const double h = (hi - lo) / points;
    for (int i = 0; i < points; ++i) g.push_back(lo + i * h);
    for (int k = 1; k <= 400; ++k) {
        const double gap = (hi - lo) * std::pow(10.0, -0.04 * k);
        g.push_back(hi - gap);
    }
    return g;
}

BumpBounds scan(double p, int n, int points) {
    const double inv_q = 1.0 - 1.0 / p;
    BumpBounds out;
    for (double r : scan_grid(0.0, 1.0, points)) {
        const double s = bump_s(r);
        if (s <= 0.0 || 1.0 / s > kExpCut) continue;
        const double ph = std::exp(-1.0 / s);
        if (ph < kZeroSet) continue;
        // |lap phi| / phi^{1/p} = phi^{1/q} |lap phi / phi|
        const double ratio = std::exp(-inv_q / s) * std::abs(laplacian_over_phi(r, n));
        out.C_phi = std::max(out.C_phi, ratio);
    }
    // eta is a plateau on [0, 1/2]; both ratios vanish there.
    for (double t : scan_grid(0.5, 1.0, points)) {
        if (!in_transition(t)) continue;
        const Transition tr = transition(t);
        const double e = logistic(tr.z);
        if (e < kZeroSet) continue;
        const double slope = logistic_slope(tr.z);
        if (slope == 0.0) continue;
        // eta^{1/q} (1 - eta) = slope / eta^{1/p}
        const double scale = slope / std::pow(e, 1.0 / p);
        const double d1 = scale * std::abs(tr.dz);
        const double d2 = scale * std::abs((1.0 - 2.0 * e) * tr.dz * tr.dz + tr.d2z);
        if (std::isfinite(d1)) out.C_eta1 = std::max(out.C_eta1, d1);
        if (std::isfinite(d2)) out.C_eta2 = std::max(out.C_eta2, d2);
    }
    return out;
}

double rel_change(double a, double b) {
    const double m = std::max(std::abs(a), std::abs(b));
    return m == 0.0 ? 0.0 : std::abs(a - b) / m;
}

}  // namespace

double phi(double r) {
    r = std::abs(r);
    if (r >= 1.0) return 0.0;
    const double s = bump_s(r);
    if (1.0 / s > kExpCut) return 0.0;
    return std::exp(-1.0 / s);
}

double phi_r(double r) {
    const double ar = std::abs(r);
    if (ar >= 1.0) return 0.0;
    const double s = bump_s(ar);
    if (1.0 / s > kExpCut) return 0.0;
    return -2.0 * r / (s * s) * std::exp(-1.0 / s);
}

double laplacian_phi(double r, int n) {
    r = std::abs(r);
    if (r >= 1.0) return 0.0;
    const double s = bump_s(r);
    if (1.0 / s > kExpCut) return 0.0;
    return std::exp(-1.0 / s) * laplacian_over_phi(r, n);
}

namespace {
double norm(std::span<const double> x) {
    return std::sqrt(std::inner_product(x.begin(), x.end(), x.begin(), 0.0));
}
}  // namespace

double phi(std::span<const double> x) { return phi(norm(x)); }

void grad_phi(std::span<const double> x, std::span<double> grad) {
    const double r = norm(x);
    // d/dr phi = -2 r phi / s^2, so grad = -2 phi / s^2 * x (regular at the origin).
    double factor = 0.0;
    if (r < 1.0) {
        const double s = bump_s(r);
        if (1.0 / s <= kExpCut) factor = -2.0 / (s * s) * std::exp(-1.0 / s);
    }
    for (std::size_t i = 0; i < x.size(); ++i) grad[i] = factor * x[i];
}

double laplacian_phi(std::span<const double> x) {
    return laplacian_phi(norm(x), static_cast<int>(x.size()));
}

double eta(double t) {
    if (t <= 0.5) return 1.0;
    if (t >= 1.0) return 0.0;
    return logistic(transition(t).z);
}

double eta_prime(double t) {
    if (!in_transition(t)) return 0.0;
    const Transition tr = transition(t);
    const double slope = logistic_slope(tr.z);
    if (slope == 0.0) return 0.0;
    return slope * tr.dz;
}

double eta_double_prime(double t) {
    if (!in_transition(t)) return 0.0;
    const Transition tr = transition(t);
    const double slope = logistic_slope(tr.z);
    if (slope == 0.0) return 0.0;
    const double e = logistic(tr.z);
    return slope * ((1.0 - 2.0 * e) * tr.dz * tr.dz + tr.d2z);
}

double ScaledTestFunction::value(double t, double r) const {
    return eta(t / tau) * phi(r / R);
}

double ScaledTestFunction::dt(double t, double r) const {
    return eta_prime(t / tau) / tau * phi(r / R);
}

double ScaledTestFunction::dtt(double t, double r) const {
    return eta_double_prime(t / tau) / (tau * tau) * phi(r / R);
}

double ScaledTestFunction::laplacian(double t, double r, int n) const {
    return eta(t / tau) * laplacian_phi(r / R, n) / (R * R);
}

BumpBounds verify_bump_bounds(double p, int n, int points) {
    if (!(p > 1.0)) throw ParameterError("verify_bump_bounds needs p > 1");
    if (n < 1) throw ParameterError("verify_bump_bounds needs n >= 1");
    if (points < 16) throw ParameterError("verify_bump_bounds needs at least 16 points");
    const BumpBounds coarse = scan(p, n, points);
    BumpBounds fine = scan(p, n, 2 * points);
    fine.drift = std::max({rel_change(coarse.C_phi, fine.C_phi),
                           rel_change(coarse.C_eta1, fine.C_eta1),
                           rel_change(coarse.C_eta2, fine.C_eta2)});
    fine.diverging = fine.drift > 0.05 || !std::isfinite(fine.C_phi) ||
                     !std::isfinite(fine.C_eta1) || !std::isfinite(fine.C_eta2);
    return fine;
}

double young_gap(double a, double b, double c) {
    if (!(a > 0.0) || !(b > 0.0 && b < 1.0) || !(c >= 0.0)) {
        throw ParameterError("young_gap needs a > 0, 0 < b < 1, c >= 0");
    }
    const double bound = (1.0 - b) * std::pow(b, b / (1.0 - b)) * std::pow(a, 1.0 / (1.0 - b));
    return bound - (a * std::pow(c, b) - c);
}

}  // namespace dwave::testfn
