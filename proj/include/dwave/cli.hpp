#pragma once

#include "dwave/solver.hpp"

#include <filesystem>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace dwave::cli {

inline constexpr const char* kVersion = "dwave 0.1.0";

/// Raised by parse_command_line for --help/--version; what() is the text to print.
class HelpRequested : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Fully resolved settings of one invocation.
struct RunConfig {
    std::string command;
    ProblemSpec problem;
    std::string data_table;  // CSV path (r,u0,u1) for custom-tabulated data
    std::filesystem::path output_dir = "out";
    bool json = false;
    bool literal_D = false;
    bool refine = true;
    bool fit = true;  // sweep: fit and audit the exponent
    int workers = 1;
    double tolerance = 0.25;
    std::vector<double> eps_grid{1.0, 0.7, 0.5, 0.35, 0.25};
    std::vector<double> taus;
    std::vector<double> radii;
    std::string trace_path;
    bool p_given = false;

    /// Every setting as key -> exact text; feeding this back reproduces the run.
    std::map<std::string, std::string> resolved() const;
};

/// Applies one key=value setting; throws ParameterError for unknown keys or bad values.
void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value);

/// Flat key=value lines ('#' comments) or a JSON object (detected by a leading '{').
std::map<std::string, std::string> parse_config_text(const std::string& text);

/// Parses argv (subcommand first) with config-file values overridden by flags.
/// Worker count falls back to the DWAVE_WORKERS environment variable.
RunConfig parse_command_line(int argc, const char* const* argv);

/// Checks theorem-mode constraints and the per-command requirements.
void validate(const RunConfig& cfg);

void cmd_predict(const RunConfig& cfg, std::ostream& out);
void cmd_simulate(const RunConfig& cfg, std::ostream& out);
void cmd_sweep(const RunConfig& cfg, std::ostream& out);
void cmd_certify(const RunConfig& cfg, std::ostream& out);

/// Dispatches on cfg.command; returns a process exit code and reports errors on `err`.
int dispatch(const RunConfig& cfg, std::ostream& out, std::ostream& err);

/// Entry point used by the executable.
int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace dwave::cli
