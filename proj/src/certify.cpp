#include "dwave/certify.hpp"

#include "dwave/testfn.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace dwave {

namespace {

// Trapezoid for int_{B_R} f dx of a radial integrand that vanishes at r = R.
template <typename F>
double radial_trapezoid(std::span<const double> r, int n, double R, F&& f) {
    const double area = sphere_area(n);
    double sum = 0.0;
    double prev_r = 0.0;
    double prev_v = 0.0;
    bool first = true;
    for (std::size_t i = 0; i < r.size() && r[i] < R; ++i) {
        const double v = f(i) * std::pow(r[i], n - 1);
        if (!first) sum += 0.5 * (r[i] - prev_r) * (v + prev_v);
        prev_r = r[i];
        prev_v = v;
        first = false;
    }
    if (!first) sum += 0.5 * (R - prev_r) * prev_v;
    return area * sum;
}

}  // namespace

double eval_J(const InitialDataSpec& data, int n, double R, double epsilon,
              const DampingSpec& damping) {
    if (!(R > 0.0)) throw ParameterError("eval_J needs R > 0");
    const double B = compute_B(damping.beta());
    const double area = sphere_area(n);
    auto f = [&](double r) {
        return area * std::pow(r, n - 1) *
               (damping.spatial_factor(r) * B * data.u0(r) + data.u1(r)) * testfn::phi(r / R);
    };
    const double upper = std::min(R, data.support_radius());
    if (!(upper > 0.0)) return 0.0;
    double sum = 0.0;
    if (data.family == DataFamily::custom_tabulated) {
        for (std::size_t k = 0; k + 1 < data.table_r.size(); ++k) {
            const double a = data.table_r[k];
            const double b = std::min(data.table_r[k + 1], upper);
            if (b <= a) break;
            sum += boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, a, b, 10, 1e-12);
        }
    } else {
        sum = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, 0.0, upper, 20, 1e-13);
    }
    return epsilon * sum;
}

double eval_J(std::span<const double> r, std::span<const double> u_init,
              std::span<const double> ut_init, int n, double R, const DampingSpec& damping) {
    if (!(R > 0.0)) throw ParameterError("eval_J needs R > 0");
    const double B = compute_B(damping.beta());
    return radial_trapezoid(r, n, R, [&](std::size_t i) {
        return (damping.spatial_factor(r[i]) * B * u_init[i] + ut_init[i]) * testfn::phi(r[i] / R);
    });
}

Certificate eval_I_and_K(const SolutionTrace& trace, double tau, double R, double p,
                         double epsilon, const DampingSpec& damping,
                         const CertifyOptions& options) {
    if (trace.snapshots.empty() || trace.r.empty()) {
        throw ParameterError("certificate needs a trace with snapshots");
    }
    if (!(tau > 0.0) || !(R > 0.0)) throw ParameterError("certificate needs tau > 0 and R > 0");
    const auto& snaps = trace.snapshots;
    if (snaps.front().t != 0.0) throw ParameterError("trace must start at t = 0");
    if (snaps.back().t < tau * (1.0 - 1e-12)) {
        std::ostringstream msg;
        msg << "tau = " << tau << " exceeds the traced interval [0, " << snaps.back().t << "]";
        throw ParameterError(msg.str());
    }
    if (R > trace.r.back()) throw ParameterError("R exceeds the grid radius");
    if (snaps.front().u_t.size() != trace.r.size()) {
        throw ParameterError("certificate needs velocity snapshots (damped-wave trace)");
    }
    const double max_gap = tau / options.max_stride_divisor;
    for (std::size_t k = 1; k < snaps.size() && snaps[k - 1].t < tau; ++k) {
        if (snaps[k].t - snaps[k - 1].t > max_gap * (1.0 + 1e-9)) {
            std::ostringstream msg;
            msg << "snapshot spacing " << snaps[k].t - snaps[k - 1].t << " exceeds tau/"
                << options.max_stride_divisor;
            throw ParameterError(msg.str());
        }
    }

    const int n = trace.n;
    const std::span<const double> r(trace.r);
    const Gauge g(damping.beta());
    std::vector<double> spatial(r.size());
    std::vector<double> phi_R(r.size());
    std::vector<double> lap_phi_R(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) {
        spatial[i] = damping.spatial_factor(r[i]);
        phi_R[i] = testfn::phi(r[i] / R);
        lap_phi_R[i] = testfn::laplacian_phi(r[i] / R, n) / (R * R);
    }

    // Time integrands of I, K1, K2, K3 at each snapshot.
    struct Row {
        double t, i, k1, k2, k3;
    };
    std::vector<Row> rows;
    for (const Snapshot& s : snaps) {
        if (s.t >= tau) break;
        const double e = testfn::eta(s.t / tau);
        const double e1 = testfn::eta_prime(s.t / tau) / tau;
        const double e2 = testfn::eta_double_prime(s.t / tau) / (tau * tau);
        const double gt = g.value(s.t);
        const double dg = g.derivative(s.t);
        const auto& u = s.u;
        const double int_src = radial_trapezoid(r, n, R, [&](std::size_t i) {
            return std::pow(std::abs(u[i]), p) * phi_R[i];
        });
        const double int_u = radial_trapezoid(r, n, R, [&](std::size_t i) { return u[i] * phi_R[i]; });
        const double int_lap = radial_trapezoid(r, n, R, [&](std::size_t i) { return u[i] * lap_phi_R[i]; });
        const double int_damp = radial_trapezoid(r, n, R, [&](std::size_t i) {
            return spatial[i] * u[i] * phi_R[i];
        });
        rows.push_back({s.t, gt * e * int_src, gt * e2 * int_u, -gt * e * int_lap,
                        (dg - 1.0) * e1 * int_damp});
    }
    // psi and all its derivatives vanish at t = tau.
    rows.push_back({tau, 0.0, 0.0, 0.0, 0.0});

    Certificate c;
    c.tau = tau;
    c.R = R;
    for (std::size_t k = 1; k < rows.size(); ++k) {
        const double h = 0.5 * (rows[k].t - rows[k - 1].t);
        c.I += h * (rows[k].i + rows[k - 1].i);
        c.K1 += h * (rows[k].k1 + rows[k - 1].k1);
        c.K2 += h * (rows[k].k2 + rows[k - 1].k2);
        c.K3 += h * (rows[k].k3 + rows[k - 1].k3);
    }
    c.J = eval_J(r, snaps.front().u, snaps.front().u_t, n, R, damping);
    c.g0 = g.value(0.0);
    const double scale = std::max(std::abs(c.I) + std::abs(c.J), 1e-300);
    c.identity_residual = std::abs(c.I + c.g0 * c.J - (c.K1 + c.K2 + c.K3)) / scale;
    c.D = eval_D(tau, R, n, p, damping, options.literal_D);
    const double Dq = std::pow(c.D, conjugate_exponent(p));
    c.C_empirical = Dq > 0.0 ? epsilon / Dq : 0.0;
    return c;
}

double eval_D(double tau, double R, int n, double p, const DampingSpec& damping, bool literal) {
    if (!(tau > 0.0) || !(R > 0.0)) throw ParameterError("eval_D needs tau > 0 and R > 0");
    const double q = conjugate_exponent(p);
    const double beta = damping.beta();
    const double e = literal ? q / n : n / q;
    const double first = std::pow(tau, -1.0 + beta) * std::pow(R, e);
    const double second = std::pow(tau, 1.0 + beta) * std::pow(R, -2.0 + e);
    const double third = F_weight(p, damping.alpha(), n, R);
    return std::pow(tau, -(1.0 + beta) / p) * (first + second + third);
}

double choose_R(double tau, int n, double p, double alpha, double beta) {
    if (!(tau > 0.0)) throw ParameterError("choose_R needs tau > 0");
    if (alpha_q_sign(p, alpha, n) < 0) return std::pow(tau, (1.0 + beta) / (2.0 - alpha));
    return tau;
}

double tau_zero(double R0, double alpha, double beta) {
    return std::max(1.0, std::pow(R0, (2.0 - alpha) / (1.0 + beta)));
}

RScan scan_R0(const InitialDataSpec& data, int n, double epsilon, const DampingSpec& damping,
              std::span<const double> radii) {
    RScan out;
    out.R.assign(radii.begin(), radii.end());
    std::sort(out.R.begin(), out.R.end());
    for (double R : out.R) out.J.push_back(eval_J(data, n, R, epsilon, damping));
    if (out.J.empty()) return out;
    out.J_limit = *std::max_element(out.J.begin(), out.J.end());
    if (!(out.J_limit > 0.0)) return out;
    for (std::size_t k = 0; k < out.R.size(); ++k) {
        if (out.J[k] >= 0.5 * out.J_limit) {
            out.R0 = out.R[k];
            out.found = true;
            break;
        }
    }
    return out;
}

ChainReport check_chain(const Certificate& cert, double epsilon, double p) {
    ChainReport rep;
    if (!(cert.I > 0.0) || !(cert.J > 0.0) || !(cert.D > 0.0)) return rep;
    const double Dq = std::pow(cert.D, conjugate_exponent(p));
    rep.applicable = true;
    rep.C1 = cert.J / Dq;
    rep.C_eps = epsilon / Dq;
    rep.C_young = (cert.I + cert.J) / (cert.D * std::pow(cert.I, 1.0 / p));
    return rep;
}

double chain_spread(std::span<const ChainReport> reports) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    int count = 0;
    for (const auto& rep : reports) {
        if (!rep.applicable) continue;
        lo = std::min(lo, rep.C1);
        hi = std::max(hi, rep.C1);
        ++count;
    }
    if (count < 2) return std::numeric_limits<double>::infinity();
    return hi / lo;
}

}  // namespace dwave
