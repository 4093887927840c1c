#pragma once

#include "dwave/certify.hpp"
#include "dwave/solver.hpp"

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace dwave::io {

/// Shortest round-trip decimal, independent of the global locale.
std::string format_double(double x);
double parse_double(const std::string& text);

/// t,r,u,u_t rows, one block per snapshot.
void write_trace_csv(std::ostream& os, const SolutionTrace& trace);
/// Inverse of write_trace_csv; `n` is the spatial dimension of the run.
SolutionTrace read_trace_csv(std::istream& is, int n);

/// t,sup_u,l2_u,energy
void write_norms_csv(std::ostream& os, const SolutionTrace& trace);

/// tau,R,I,J,K1,K2,K3,residual,D,C_empirical
void write_certificates_csv(std::ostream& os, std::span<const Certificate> certs);

/// Splits a CSV line on commas (no quoting).
std::vector<std::string> split_csv(const std::string& line);

}  // namespace dwave::io
