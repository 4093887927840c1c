#include "dwave/grid.hpp"

#include "dwave/theory.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace dwave {

double sphere_area(int n) {
    return 2.0 * std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n);
}

RadialGrid::RadialGrid(int n, double radius, double dx) : n_(n), dx_(dx) {
    if (n < 1) throw ParameterError("grid dimension must be >= 1");
    if (!(dx > 0.0) || !(radius > 2.0 * dx)) {
        throw ParameterError("grid needs dx > 0 and radius > 2 dx");
    }
    const auto cells = static_cast<std::size_t>(std::ceil(radius / dx - 1e-9));
    r_.resize(cells + 1);
    for (std::size_t i = 0; i <= cells; ++i) r_[i] = static_cast<double>(i) * dx;

    const double area = sphere_area(n);
    volume_.resize(r_.size());
    inv_cell_.resize(r_.size());
    face_.resize(cells);
    auto pow_n = [n](double x) { return std::pow(x, n); };
    for (std::size_t i = 0; i <= cells; ++i) {
        const double lo = i == 0 ? 0.0 : r_[i] - 0.5 * dx;
        const double hi = i == cells ? r_[i] : r_[i] + 0.5 * dx;
        volume_[i] = area * (pow_n(hi) - pow_n(lo)) / n;
        // The Dirichlet node keeps a full cell for the operator scaling.
        const double w = (pow_n(r_[i] + 0.5 * dx) - pow_n(lo)) / (n * dx);
        inv_cell_[i] = 1.0 / (dx * dx * w);
    }
    for (std::size_t i = 0; i < cells; ++i) {
        face_[i] = std::pow(r_[i] + 0.5 * dx, n - 1);
    }
}

void RadialGrid::laplacian(std::span<const double> u, std::span<double> out,
                           std::size_t active) const {
    const std::size_t last = size() - 1;
    if (active > last) active = last;
    double left_flux = 0.0;
    for (std::size_t i = 0; i < active; ++i) {
        const double right_flux = face_[i] * (u[i + 1] - u[i]);
        out[i] = (right_flux - left_flux) * inv_cell_[i];
        left_flux = right_flux;
    }
    out[last] = 0.0;
}

void RadialGrid::negative_laplacian_rows(std::vector<double>& lower, std::vector<double>& diag,
                                         std::vector<double>& upper) const {
    const std::size_t m = size();
    lower.assign(m, 0.0);
    diag.assign(m, 0.0);
    upper.assign(m, 0.0);
    for (std::size_t i = 0; i + 1 < m; ++i) {
        const double left = i == 0 ? 0.0 : face_[i - 1];
        const double right = face_[i];
        lower[i] = -left * inv_cell_[i];
        upper[i] = -right * inv_cell_[i];
        diag[i] = (left + right) * inv_cell_[i];
    }
    // Dirichlet row: u_N = rhs.
    diag[m - 1] = 1.0;
}

double RadialGrid::gradient_form(std::span<const double> a, std::span<const double> b) const {
    const double area = sphere_area(n_);
    const std::size_t m = std::min({size(), a.size(), b.size()});
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < m; ++i) {
        sum += face_[i] * (a[i + 1] - a[i]) * (b[i + 1] - b[i]);
    }
    return area * sum / dx_;
}

double RadialGrid::l2_norm(std::span<const double> u) const {
    const std::size_t m = std::min(size(), u.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < m; ++i) sum += volume_[i] * u[i] * u[i];
    return std::sqrt(sum);
}

double RadialGrid::integrate(std::span<const double> f) const {
    const std::size_t m = std::min(size(), f.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < m; ++i) sum += volume_[i] * f[i];
    return sum;
}

double RadialGrid::spectral_bound() const {
    // Gershgorin on the symmetrised operator W^{1/2} (-lap) W^{-1/2}.
    double bound = 0.0;
    const std::size_t last = size() - 1;
    for (std::size_t i = 0; i < last; ++i) {
        const double left = i == 0 ? 0.0 : face_[i - 1];
        const double right = face_[i];
        double row = (left + right) * inv_cell_[i];
        if (i > 0) row += left * std::sqrt(inv_cell_[i] * inv_cell_[i - 1]);
        if (i + 1 < last) row += right * std::sqrt(inv_cell_[i] * inv_cell_[i + 1]);
        bound = std::max(bound, row);
    }
    return bound;
}

}  // namespace dwave
