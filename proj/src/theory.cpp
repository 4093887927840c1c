#include "dwave/theory.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <limits>
#include <sstream>
#include <utility>

namespace dwave {

namespace {

constexpr double kRelTol = 1e-12;
// Above this value of L(t) the gauge uses its asymptotic expansion.
constexpr double kAsymptoticSwitch = 30.0;
// Quadrature windows are cut where the integrand has dropped by e^{-40}.
constexpr double kDecadeCut = 40.0;

void require_beta(double beta) {
    if (!(beta > -1.0 && beta < 1.0)) {
        throw ParameterError("beta must lie in (-1, 1), got " + std::to_string(beta));
    }
}

void require_alpha(double alpha) {
    if (!(alpha >= 0.0 && alpha < 1.0)) {
        throw ParameterError("alpha must lie in [0, 1), got " + std::to_string(alpha));
    }
}

void require_theorem_mode(int n, double p, const DampingSpec& damping) {
    if (n < 1) throw ParameterError("dimension n must be >= 1");
    if (!(p > 1.0)) throw ParameterError("exponent p must be > 1, got " + std::to_string(p));
    if (!damping.theorem_mode()) {
        throw ParameterError("damping must be explicit-power with alpha*beta = 0 "
                             "(alpha=" + std::to_string(damping.alpha()) +
                             ", beta=" + std::to_string(damping.beta()) + ")");
    }
}

// L(t) = int_0^t (1+s)^{-beta} ds
double integrated_rate(double beta, double t) {
    return std::expm1((1.0 - beta) * std::log1p(t)) / (1.0 - beta);
}

// L(t + s) - L(t) without forming the two large terms.
double integrated_rate_increment(double beta, double t, double s) {
    const double base = std::pow(1.0 + t, 1.0 - beta);
    return base * std::expm1((1.0 - beta) * std::log1p(s / (1.0 + t))) / (1.0 - beta);
}

// Asymptotic expansion of g(t) - (1+t)^beta scaled by (1+t)^{-beta}:
// returns {sum_{k>=0} c_k x^k, sum_{k>=1} c_k x^k}, x = (1+t)^{beta-1}.
std::pair<double, double> gauge_series(double beta, double t) {
    const double x = std::pow(1.0 + t, beta - 1.0);
    double term = 1.0;
    double tail = 0.0;
    double prev = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 200; ++k) {
        const double next = term * (static_cast<double>(k + 1) * beta - k) * x;
        if (next == 0.0) break;
        // Optimal truncation: stop once terms start to grow.
        if (std::abs(next) >= prev) break;
        tail += next;
        prev = std::abs(next);
        term = next;
        if (std::abs(next) < 1e-18 * (1.0 + std::abs(tail))) break;
    }
    return {1.0 + tail, tail};
}

// int_t^inf exp(L(t) - L(s)) ds by adaptive Gauss-Kronrod plus asymptotic tail.
double tail_integral(double beta, double t) {
    const double base = std::pow(1.0 + t, 1.0 - beta);
    const double cut = std::pow(base + kDecadeCut * (1.0 - beta), 1.0 / (1.0 - beta)) - (1.0 + t);
    auto integrand = [beta, t](double s) { return std::exp(-integrated_rate_increment(beta, t, s)); };
    double err = 0.0;
    const double body = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
        integrand, 0.0, cut, 20, 1e-14, &err);
    // Beyond the cut the integrand is e^{-40} times the shifted gauge.
    const double t_cut = t + cut;
    const double tail = std::exp(-kDecadeCut) * std::pow(1.0 + t_cut, beta) *
                        gauge_series(beta, t_cut).first;
    return body + tail;
}

}  // namespace

std::string_view to_string(DampingMode mode) {
    switch (mode) {
        case DampingMode::explicit_power: return "explicit-power";
        case DampingMode::general_spatial: return "general-spatial";
        case DampingMode::general_temporal: return "general-temporal";
    }
    return "?";
}

DampingSpec DampingSpec::power(double alpha, double beta) {
    require_alpha(alpha);
    require_beta(beta);
    DampingSpec d;
    d.alpha_ = alpha;
    d.beta_ = beta;
    d.mode_ = DampingMode::explicit_power;
    return d;
}

DampingSpec DampingSpec::spatial(Hook a, double alpha_envelope) {
    require_alpha(alpha_envelope);
    if (!a) throw ParameterError("general-spatial damping needs a coefficient a(r)");
    DampingSpec d;
    d.alpha_ = alpha_envelope;
    d.beta_ = 0.0;
    d.mode_ = DampingMode::general_spatial;
    d.hook_ = std::move(a);
    return d;
}

DampingSpec DampingSpec::temporal(Hook b, double beta_envelope) {
    require_beta(beta_envelope);
    if (!b) throw ParameterError("general-temporal damping needs a coefficient b(t)");
    DampingSpec d;
    d.alpha_ = 0.0;
    d.beta_ = beta_envelope;
    d.mode_ = DampingMode::general_temporal;
    d.hook_ = std::move(b);
    return d;
}

bool DampingSpec::theorem_mode() const noexcept {
    return mode_ == DampingMode::explicit_power && alpha_ * beta_ == 0.0;
}

double DampingSpec::spatial_factor(double r) const {
    if (mode_ == DampingMode::general_spatial) return hook_(r);
    if (alpha_ == 0.0) return 1.0;
    return std::pow(japanese_bracket(r), -alpha_);
}

double DampingSpec::temporal_factor(double t) const {
    if (mode_ == DampingMode::general_temporal) return hook_(t);
    if (beta_ == 0.0) return 1.0;
    return std::pow(1.0 + t, -beta_);
}

double japanese_bracket(double r) { return std::sqrt(1.0 + r * r); }

std::string_view to_string(Regime regime) {
    switch (regime) {
        case Regime::supercritical: return "supercritical";
        case Regime::subcritical_power: return "subcritical-power";
        case Regime::alpha_log_critical: return "alpha-log-critical";
        case Regime::alpha_dominated: return "alpha-dominated";
    }
    return "?";
}

double conjugate_exponent(double p) { return p / (p - 1.0); }

int alpha_q_sign(double p, double alpha, int n) {
    const double aq = alpha * conjugate_exponent(p);
    const double nn = static_cast<double>(n);
    if (std::abs(aq - nn) <= kRelTol * nn) return 0;
    return aq < nn ? -1 : 1;
}

double kappa(int n, double p, const DampingSpec& damping) {
    require_theorem_mode(n, p, damping);
    const double a = damping.alpha();
    const double b = damping.beta();
    return 2.0 * (1.0 + b) / (2.0 - a) * (1.0 / (p - 1.0) - (n - a) / 2.0);
}

ExponentReport classify(int n, double p, const DampingSpec& damping) {
    ExponentReport r;
    r.kappa = kappa(n, p, damping);
    const double a = damping.alpha();
    r.p_crit = 1.0 + 2.0 / (n - a);
    r.p_fujita = 1.0 + 2.0 / n;
    r.p_alpha = 1.0 + a / (n - a);
    r.q = conjugate_exponent(p);
    r.critical = std::abs(p - r.p_crit) <= kRelTol * r.p_crit;
    if (r.critical || p > r.p_crit) {
        r.regime = Regime::supercritical;
    } else if (a == 0.0) {
        r.regime = Regime::subcritical_power;
    } else {
        switch (alpha_q_sign(p, a, n)) {
            case 0: r.regime = Regime::alpha_log_critical; break;
            case 1: r.regime = Regime::alpha_dominated; break;
            default: r.regime = Regime::subcritical_power; break;
        }
    }
    return r;
}

double compute_B(double beta) {
    require_beta(beta);
    if (beta == 0.0) return 1.0;
    return 1.0 / tail_integral(beta, 0.0);
}

Gauge::Gauge(double beta) : beta_(beta), B_(compute_B(beta)) {}

double Gauge::value(double t) const {
    if (beta_ == 0.0) return 1.0;
    if (t == 0.0) return 1.0 / B_;
    if (integrated_rate(beta_, t) > kAsymptoticSwitch) {
        return std::pow(1.0 + t, beta_) * gauge_series(beta_, t).first;
    }
    return tail_integral(beta_, t);
}

double Gauge::derivative(double t) const {
    if (beta_ == 0.0) return 0.0;
    if (integrated_rate(beta_, t) > kAsymptoticSwitch) {
        // g' = (1+t)^{-beta} g - 1 = sum_{k>=1} c_k x^k
        return gauge_series(beta_, t).second;
    }
    return std::pow(1.0 + t, -beta_) * value(t) - 1.0;
}

Gauge gauge(double beta) { return Gauge(beta); }

double F_weight(double p, double alpha, int n, double R) {
    if (!(R > 0.0)) throw ParameterError("F_weight needs R > 0");
    if (!(p > 1.0)) throw ParameterError("F_weight needs p > 1");
    require_alpha(alpha);
    const double q = conjugate_exponent(p);
    switch (alpha_q_sign(p, alpha, n)) {
        case -1: return std::pow(R, -alpha + n / q);
        case 0: return std::pow(std::log1p(R), 1.0 / q);
        default: return 1.0;
    }
}

std::string_view to_string(BoundForm form) {
    switch (form) {
        case BoundForm::inverse_kappa: return "inverse-kappa";
        case BoundForm::log_corrected: return "log-corrected";
        case BoundForm::p_minus_one: return "p-minus-one";
    }
    return "?";
}

std::string bound_formula(BoundForm form) {
    switch (form) {
        case BoundForm::inverse_kappa: return "eps^(-1/kappa)";
        case BoundForm::log_corrected: return "eps^(-(p-1)) * log(1/eps)^(p-1)";
        case BoundForm::p_minus_one: return "eps^(-(p-1))";
    }
    return "?";
}

LifespanBound predict_lifespan_bound(int n, double p, const DampingSpec& damping, double epsilon) {
    const ExponentReport rep = classify(n, p, damping);
    if (rep.regime == Regime::supercritical) {
        std::ostringstream msg;
        msg << "no finite lifespan bound: p=" << p << " >= p_crit=" << rep.p_crit;
        throw ParameterError(msg.str());
    }
    if (!(epsilon > 0.0 && epsilon <= 1.0)) throw ParameterError("epsilon must lie in (0, 1]");
    LifespanBound out;
    switch (rep.regime) {
        case Regime::alpha_log_critical:
            out.form = BoundForm::log_corrected;
            out.exponent = p - 1.0;
            out.value = std::pow(epsilon, -(p - 1.0)) * std::pow(std::log(1.0 / epsilon), p - 1.0);
            break;
        case Regime::alpha_dominated:
            out.form = BoundForm::p_minus_one;
            out.exponent = p - 1.0;
            out.value = std::pow(epsilon, -(p - 1.0));
            break;
        default:
            out.form = BoundForm::inverse_kappa;
            out.exponent = 1.0 / rep.kappa;
            out.value = std::pow(epsilon, -1.0 / rep.kappa);
            break;
    }
    return out;
}

}  // namespace dwave
