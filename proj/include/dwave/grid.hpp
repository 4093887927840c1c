#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace dwave {

/// Surface area of the unit sphere in R^n (2 for n = 1).
double sphere_area(int n);

/// Uniform radial grid r_i = i*dx, i = 0..N, for radially symmetric functions on R^n.
///
/// The Laplacian is the flux (finite-volume) form of u_rr + (n-1)/r u_r:
///   (lap u)_i = [a_{i+1/2}(u_{i+1}-u_i) - a_{i-1/2}(u_i-u_{i-1})] / (dx^2 w_i)
/// with a_{i+1/2} = r_{i+1/2}^{n-1} and w_i the cell measure of [r_{i-1/2}, r_{i+1/2}]
/// divided by dx. At r = 0 this reduces to the symmetry limit 2n(u_1-u_0)/dx^2.
/// Node N carries a homogeneous Dirichlet condition. The operator is symmetric in
/// the inner product weighted by `volume()`, so the leapfrog energy is exact.
class RadialGrid {
public:
    RadialGrid(int n, double radius, double dx);

    int dim() const noexcept { return n_; }
    double dx() const noexcept { return dx_; }
    double radius() const noexcept { return r_.back(); }
    std::size_t size() const noexcept { return r_.size(); }

    std::span<const double> r() const noexcept { return r_; }
    double r(std::size_t i) const { return r_[i]; }

    /// Measure of the shell around node i in R^n (sums to the ball volume).
    std::span<const double> volume() const noexcept { return volume_; }

    /// Laplacian on nodes [0, active), reading u on [0, active]; out[N] is 0.
    void laplacian(std::span<const double> u, std::span<double> out,
                   std::size_t active) const;
    void laplacian(std::span<const double> u, std::span<double> out) const {
        laplacian(u, out, size() - 1);
    }

    /// Tridiagonal coefficients of -lap: row i is lower[i] u_{i-1} + diag[i] u_i + upper[i] u_{i+1}.
    void negative_laplacian_rows(std::vector<double>& lower, std::vector<double>& diag,
                                 std::vector<double>& upper) const;

    /// G(a, b) = sum over edges of area * (da/dx)(db/dx) * dx, over the common prefix of a and b.
    double gradient_form(std::span<const double> a, std::span<const double> b) const;

    /// Upper bound on the largest eigenvalue of -lap (leapfrog needs dt^2 * bound <= 4).
    double spectral_bound() const;

    double l2_norm(std::span<const double> u) const;
    double integrate(std::span<const double> f) const;

private:
    int n_;
    double dx_;
    std::vector<double> r_;
    std::vector<double> volume_;
    std::vector<double> face_;    // a_{i+1/2} * area, edge i -> i+1
    std::vector<double> inv_cell_;  // 1 / (dx^2 w_i)
};

}  // namespace dwave
