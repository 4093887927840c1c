#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace dwave {

/// Raised when a parameter falls outside the admissible range of an operation.
class ParameterError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class DampingMode { explicit_power, general_spatial, general_temporal };

std::string_view to_string(DampingMode mode);

/// Damping coefficient Phi(t, r).
///
/// explicit_power is <r>^{-alpha} (1+t)^{-beta} with alpha in [0,1) and
/// beta in (-1,1). The two general modes replace one factor by a user hook,
/// a(r) with 0 <= a <~ <r>^{-alpha}, or b(t) ~ (1+t)^{-beta}; alpha/beta then
/// record the envelope exponents used by the predictor.
class DampingSpec {
public:
    using Hook = std::function<double(double)>;

    DampingSpec() = default;

    static DampingSpec power(double alpha, double beta);
    static DampingSpec spatial(Hook a, double alpha_envelope);
    static DampingSpec temporal(Hook b, double beta_envelope);

    double alpha() const noexcept { return alpha_; }
    double beta() const noexcept { return beta_; }
    DampingMode mode() const noexcept { return mode_; }

    /// explicit_power with alpha * beta == 0: the hypotheses of the upper-bound theorem.
    bool theorem_mode() const noexcept;

    double spatial_factor(double r) const;
    double temporal_factor(double t) const;
    double operator()(double t, double r) const { return spatial_factor(r) * temporal_factor(t); }

private:
    double alpha_ = 0.0;
    double beta_ = 0.0;
    DampingMode mode_ = DampingMode::explicit_power;
    Hook hook_;
};

/// <r> = sqrt(1 + r^2)
double japanese_bracket(double r);

enum class Regime { supercritical, subcritical_power, alpha_log_critical, alpha_dominated };

std::string_view to_string(Regime regime);

struct ExponentReport {
    double kappa = 0.0;
    double p_crit = 0.0;     // 1 + 2/(n - alpha)
    double p_fujita = 0.0;   // 1 + 2/n
    double p_alpha = 0.0;    // 1 + alpha/(n - alpha)
    double q = 0.0;          // p/(p - 1)
    Regime regime = Regime::supercritical;
    bool critical = false;   // p == p_crit
};

/// Sign of alpha*q - n with a relative tolerance of 1e-12 (0 means equality).
int alpha_q_sign(double p, double alpha, int n);

double conjugate_exponent(double p);

double kappa(int n, double p, const DampingSpec& damping);
ExponentReport classify(int n, double p, const DampingSpec& damping);

/// B = ( int_0^inf exp(-int_0^t (1+s)^{-beta} ds) dt )^{-1}
double compute_B(double beta);

/// Solution of -g' + (1+t)^{-beta} g = 1, g(0) = 1/B.
///
/// g is evaluated in the equivalent form g(t) = int_t^inf exp(L(t) - L(s)) ds,
/// L(t) = ((1+t)^{1-beta} - 1)/(1-beta), which has no cancellation. Once
/// L(t) > 30 the integral is replaced by its asymptotic expansion
/// (1+t)^beta * sum_k c_k (1+t)^{k(beta-1)}, c_{k+1} = c_k((k+1)beta - k).
class Gauge {
public:
    explicit Gauge(double beta);

    double beta() const noexcept { return beta_; }
    double B() const noexcept { return B_; }

    double value(double t) const;
    double derivative(double t) const;
    double operator()(double t) const { return value(t); }

private:
    double beta_;
    double B_;
};

Gauge gauge(double beta);

/// F_{p,alpha}(R): R^{n/q - alpha} if alpha q < n, log(1+R)^{1/q} if alpha q = n, else 1.
double F_weight(double p, double alpha, int n, double R);

enum class BoundForm { inverse_kappa, log_corrected, p_minus_one };

std::string_view to_string(BoundForm form);

struct LifespanBound {
    BoundForm form = BoundForm::inverse_kappa;
    double value = 0.0;     // with the unknown constant C set to 1
    double exponent = 0.0;  // leading power s in eps^{-s}
};

LifespanBound predict_lifespan_bound(int n, double p, const DampingSpec& damping, double epsilon);

/// Human-readable bound shape, e.g. "eps^(-1/kappa)".
std::string bound_formula(BoundForm form);

}  // namespace dwave
