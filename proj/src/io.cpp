#include "dwave/io.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <system_error>

namespace dwave::io {

std::string format_double(double x) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& text) {
    double value = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    while (first < last && *first == ' ') ++first;
    if (first < last && *first == '+') ++first;
    const auto res = std::from_chars(first, last, value);
    if (res.ec != std::errc{} || res.ptr != last) {
        throw std::invalid_argument("not a number: '" + text + "'");
    }
    return value;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cell);
            cell.clear();
        } else if (c != '\r') {
            cell.push_back(c);
        }
    }
    out.push_back(cell);
    return out;
}

void write_trace_csv(std::ostream& os, const SolutionTrace& trace) {
    os << "t,r,u,u_t\n";
    for (const Snapshot& s : trace.snapshots) {
        const std::string t = format_double(s.t);
        for (std::size_t i = 0; i < trace.r.size(); ++i) {
            const double ut = i < s.u_t.size() ? s.u_t[i] : 0.0;
            os << t << ',' << format_double(trace.r[i]) << ',' << format_double(s.u[i]) << ','
               << format_double(ut) << '\n';
        }
    }
}

SolutionTrace read_trace_csv(std::istream& is, int n) {
    SolutionTrace trace;
    trace.n = n;
    std::string line;
    if (!std::getline(is, line) || line.rfind("t,r,u,u_t", 0) != 0) {
        throw std::runtime_error("trace CSV: missing header t,r,u,u_t");
    }
    std::size_t lineno = 1;
    bool first_block = true;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto cells = split_csv(line);
        if (cells.size() != 4) {
            throw std::runtime_error("trace CSV line " + std::to_string(lineno) + ": expected 4 columns");
        }
        const double t = parse_double(cells[0]);
        const double r = parse_double(cells[1]);
        if (trace.snapshots.empty() || trace.snapshots.back().t != t) {
            if (!trace.snapshots.empty()) {
                if (t <= trace.snapshots.back().t) {
                    throw std::runtime_error("trace CSV: snapshot times not increasing at line " +
                                             std::to_string(lineno));
                }
                first_block = false;
            }
            trace.snapshots.push_back({t, {}, {}});
        }
        Snapshot& s = trace.snapshots.back();
        if (first_block) {
            trace.r.push_back(r);
        } else if (s.u.size() >= trace.r.size() || trace.r[s.u.size()] != r) {
            throw std::runtime_error("trace CSV: grid mismatch at line " + std::to_string(lineno));
        }
        s.u.push_back(parse_double(cells[2]));
        s.u_t.push_back(parse_double(cells[3]));
    }
    for (const Snapshot& s : trace.snapshots) {
        if (s.u.size() != trace.r.size()) throw std::runtime_error("trace CSV: truncated snapshot block");
    }
    return trace;
}

void write_norms_csv(std::ostream& os, const SolutionTrace& trace) {
    os << "t,sup_u,l2_u,energy\n";
    for (const NormSample& s : trace.norms) {
        os << format_double(s.t) << ',' << format_double(s.sup_u) << ',' << format_double(s.l2_u)
           << ',' << format_double(s.energy) << '\n';
    }
}

void write_certificates_csv(std::ostream& os, std::span<const Certificate> certs) {
    os << "tau,R,I,J,K1,K2,K3,residual,D,C_empirical\n";
    for (const Certificate& c : certs) {
        os << format_double(c.tau) << ',' << format_double(c.R) << ',' << format_double(c.I) << ','
           << format_double(c.J) << ',' << format_double(c.K1) << ',' << format_double(c.K2) << ','
           << format_double(c.K3) << ',' << format_double(c.identity_residual) << ','
           << format_double(c.D) << ',' << format_double(c.C_empirical) << '\n';
    }
}

}  // namespace dwave::io
