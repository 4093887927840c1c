#include "dwave/cli.hpp"

#include "dwave/certify.hpp"
#include "dwave/io.hpp"
#include "dwave/sweep.hpp"
#include "dwave/theory.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <set>
#include <sstream>

namespace dwave::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

const std::set<std::string> kCommands{"predict", "simulate", "sweep", "certify"};

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

double to_double(const std::string& key, const std::string& value) {
    try {
        return io::parse_double(trim(value));
    } catch (const std::invalid_argument&) {
        throw ParameterError(key + ": expected a number, got '" + value + "'");
    }
}

int to_int(const std::string& key, const std::string& value) {
    const double x = to_double(key, value);
    if (x != std::floor(x) || std::abs(x) > 1e9) {
        throw ParameterError(key + ": expected an integer, got '" + value + "'");
    }
    return static_cast<int>(x);
}

bool to_bool(const std::string& key, const std::string& value) {
    const std::string v = trim(value);
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ParameterError(key + ": expected true/false, got '" + value + "'");
}

std::vector<double> to_list(const std::string& key, const std::string& value) {
    std::vector<double> out;
    if (trim(value).empty()) return out;
    for (const auto& cell : io::split_csv(value)) out.push_back(to_double(key, cell));
    return out;
}

std::string join(const std::vector<double>& xs) {
    std::string out;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        if (k) out += ',';
        out += io::format_double(xs[k]);
    }
    return out;
}

std::string bool_text(bool b) { return b ? "true" : "false"; }

std::string data_name(DataFamily f) {
    switch (f) {
        case DataFamily::bump: return "bump";
        case DataFamily::gaussian_truncated: return "gaussian";
        case DataFamily::custom_tabulated: return "table";
    }
    return "bump";
}

void load_table(InitialDataSpec& data, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(path + ": cannot open data table: " + std::strerror(errno));
    data.table_r.clear();
    data.table_u0.clear();
    data.table_u1.clear();
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty() || line[0] == '#' || line[0] == 'r') continue;
        const auto cells = io::split_csv(line);
        if (cells.size() != 3) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected r,u0,u1");
        }
        try {
            data.table_r.push_back(io::parse_double(trim(cells[0])));
            data.table_u0.push_back(io::parse_double(trim(cells[1])));
            data.table_u1.push_back(io::parse_double(trim(cells[2])));
        } catch (const std::invalid_argument& e) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    if (data.table_r.size() < 2) throw std::runtime_error(path + ": data table needs at least two rows");
}

/// Files created by one command; removed again unless commit() is reached.
class Artifacts {
public:
    explicit Artifacts(fs::path dir) : dir_(std::move(dir)) {
        std::error_code ec;
        if (!fs::exists(dir_, ec)) {
            if (!fs::create_directories(dir_, ec) || ec) {
                throw std::runtime_error(dir_.string() + ": cannot create output directory: " +
                                         ec.message());
            }
            created_dir_ = true;
        }
    }
    Artifacts(const Artifacts&) = delete;
    Artifacts& operator=(const Artifacts&) = delete;

    ~Artifacts() {
        if (committed_) return;
        std::error_code ec;
        for (const auto& p : created_) fs::remove(p, ec);
        if (created_dir_ && fs::is_empty(dir_, ec)) fs::remove(dir_, ec);
    }

    fs::path path(const std::string& name) const { return dir_ / name; }

    void write(const std::string& name, const std::function<void(std::ostream&)>& body) {
        const fs::path p = path(name);
        track(p);
        std::ofstream os(p, std::ios::binary | std::ios::trunc);
        if (!os) throw std::runtime_error(p.string() + ": cannot open for writing: " + std::strerror(errno));
        os.imbue(std::locale::classic());
        body(os);
        os.flush();
        if (!os) throw std::runtime_error(p.string() + ": write failed");
    }

    std::ofstream append(const std::string& name) {
        const fs::path p = path(name);
        track(p);
        std::ofstream os(p, std::ios::binary | std::ios::app);
        if (!os) throw std::runtime_error(p.string() + ": cannot open for appending: " + std::strerror(errno));
        return os;
    }

    void commit() { committed_ = true; }

private:
    void track(const fs::path& p) {
        std::error_code ec;
        if (!fs::exists(p, ec) && std::find(created_.begin(), created_.end(), p) == created_.end()) {
            created_.push_back(p);
        }
    }

    fs::path dir_;
    std::vector<fs::path> created_;
    bool created_dir_ = false;
    bool committed_ = false;
};

ordered_json manifest_json(const RunConfig& cfg) {
    ordered_json m;
    m["version"] = kVersion;
    m["command"] = cfg.command;
    ordered_json c = ordered_json::object();
    for (const auto& [k, v] : cfg.resolved()) c[k] = v;
    m["config"] = c;
    return m;
}

void write_manifest(Artifacts& art, const RunConfig& cfg) {
    art.write("manifest.json", [&](std::ostream& os) { os << manifest_json(cfg).dump(2) << '\n'; });
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw std::runtime_error(p.string() + ": cannot open: " + std::strerror(errno));
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

ordered_json number_or_null(double x) {
    return std::isfinite(x) ? ordered_json(x) : ordered_json(nullptr);
}

std::string fmt(double x) { return io::format_double(x); }

}  // namespace

std::map<std::string, std::string> RunConfig::resolved() const {
    const ProblemSpec& s = problem;
    std::map<std::string, std::string> m;
    m["n"] = std::to_string(s.n);
    m["p"] = fmt(s.p);
    m["alpha"] = fmt(s.damping.alpha());
    m["beta"] = fmt(s.damping.beta());
    m["eps"] = fmt(s.epsilon);
    m["equation"] = s.equation == Equation::heat ? "heat" : "wave";
    m["data"] = data_name(s.data.family);
    m["data_radius"] = fmt(s.data.radius);
    m["data_width"] = fmt(s.data.width);
    m["data_amp0"] = fmt(s.data.amplitude0);
    m["data_amp1"] = fmt(s.data.amplitude1);
    m["data_table"] = data_table;
    m["dx"] = fmt(s.dx);
    m["cfl"] = fmt(s.cfl);
    m["tmax"] = fmt(s.t_max);
    m["domain"] = fmt(s.domain_radius);
    m["threshold"] = fmt(s.blowup_threshold);
    m["trace_stride"] = std::to_string(s.trace_stride);
    m["norm_stride"] = std::to_string(s.norm_stride);
    m["source"] = bool_text(s.source);
    m["exploratory"] = bool_text(s.exploratory);
    m["literal_D"] = bool_text(literal_D);
    m["refine"] = bool_text(refine);
    m["fit"] = bool_text(fit);
    m["tolerance"] = fmt(tolerance);
    m["eps_grid"] = join(eps_grid);
    m["tau"] = join(taus);
    m["R"] = join(radii);
    m["trace"] = trace_path;
    return m;
}

void apply_setting(RunConfig& cfg, const std::string& raw_key, const std::string& value) {
    std::string key = trim(raw_key);
    std::replace(key.begin(), key.end(), '-', '_');
    ProblemSpec& s = cfg.problem;
    if (key == "version" || key == "command") return;
    if (key == "n") {
        s.n = to_int(key, value);
    } else if (key == "p") {
        s.p = to_double(key, value);
        cfg.p_given = true;
    } else if (key == "alpha") {
        s.damping = DampingSpec::power(to_double(key, value), s.damping.beta());
    } else if (key == "beta") {
        s.damping = DampingSpec::power(s.damping.alpha(), to_double(key, value));
    } else if (key == "eps" || key == "epsilon") {
        s.epsilon = to_double(key, value);
    } else if (key == "equation") {
        const std::string v = trim(value);
        if (v == "wave" || v == "damped_wave") s.equation = Equation::damped_wave;
        else if (v == "heat") s.equation = Equation::heat;
        else throw ParameterError("equation: expected wave or heat, got '" + value + "'");
    } else if (key == "data") {
        const std::string v = trim(value);
        if (v == "bump") s.data.family = DataFamily::bump;
        else if (v == "gaussian") s.data.family = DataFamily::gaussian_truncated;
        else if (v == "table") s.data.family = DataFamily::custom_tabulated;
        else throw ParameterError("data: expected bump, gaussian or table, got '" + value + "'");
    } else if (key == "data_radius") {
        s.data.radius = to_double(key, value);
    } else if (key == "data_width") {
        s.data.width = to_double(key, value);
    } else if (key == "data_amp0" || key == "amp0") {
        s.data.amplitude0 = to_double(key, value);
    } else if (key == "data_amp1" || key == "amp1") {
        s.data.amplitude1 = to_double(key, value);
    } else if (key == "data_table") {
        cfg.data_table = trim(value);
        if (!cfg.data_table.empty()) load_table(s.data, cfg.data_table);
    } else if (key == "dx") {
        s.dx = to_double(key, value);
    } else if (key == "cfl") {
        s.cfl = to_double(key, value);
    } else if (key == "tmax" || key == "t_max") {
        s.t_max = to_double(key, value);
    } else if (key == "domain") {
        s.domain_radius = to_double(key, value);
    } else if (key == "threshold") {
        s.blowup_threshold = to_double(key, value);
    } else if (key == "trace_stride") {
        s.trace_stride = to_int(key, value);
    } else if (key == "norm_stride") {
        s.norm_stride = to_int(key, value);
    } else if (key == "source") {
        s.source = to_bool(key, value);
    } else if (key == "exploratory") {
        s.exploratory = to_bool(key, value);
    } else if (key == "literal_D") {
        cfg.literal_D = to_bool(key, value);
    } else if (key == "refine") {
        cfg.refine = to_bool(key, value);
    } else if (key == "fit") {
        cfg.fit = to_bool(key, value);
    } else if (key == "tolerance") {
        cfg.tolerance = to_double(key, value);
    } else if (key == "eps_grid") {
        cfg.eps_grid = to_list(key, value);
    } else if (key == "tau") {
        cfg.taus = to_list(key, value);
    } else if (key == "R") {
        cfg.radii = to_list(key, value);
    } else if (key == "trace") {
        cfg.trace_path = trim(value);
    } else if (key == "workers") {
        cfg.workers = to_int(key, value);
    } else if (key == "json") {
        cfg.json = to_bool(key, value);
    } else if (key == "out") {
        cfg.output_dir = trim(value);
    } else {
        throw ParameterError("unknown setting '" + raw_key + "'");
    }
}

std::map<std::string, std::string> parse_config_text(const std::string& text) {
    std::map<std::string, std::string> out;
    const std::string body = trim(text);
    if (!body.empty() && body.front() == '{') {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(body);
        } catch (const nlohmann::json::exception& e) {
            throw ParameterError(std::string("config JSON: ") + e.what());
        }
        std::function<void(const nlohmann::json&)> flatten = [&](const nlohmann::json& obj) {
            for (const auto& [k, v] : obj.items()) {
                if (v.is_object()) {
                    flatten(v);
                } else if (v.is_string()) {
                    out[k] = v.get<std::string>();
                } else if (v.is_boolean()) {
                    out[k] = bool_text(v.get<bool>());
                } else if (v.is_number_integer()) {
                    out[k] = std::to_string(v.get<long long>());
                } else if (v.is_number()) {
                    out[k] = fmt(v.get<double>());
                } else if (v.is_array()) {
                    std::vector<double> xs;
                    for (const auto& x : v) {
                        if (!x.is_number()) throw ParameterError("config JSON: '" + k + "' must be a list of numbers");
                        xs.push_back(x.get<double>());
                    }
                    out[k] = join(xs);
                }
            }
        };
        if (!j.is_object()) throw ParameterError("config JSON: top level must be an object");
        flatten(j);
        return out;
    }
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ParameterError("config line " + std::to_string(lineno) + ": expected key=value");
        }
        out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return out;
}

RunConfig parse_command_line(int argc, const char* const* argv) {
    CLI::App app{"Damped semilinear wave lifespan toolkit", "dwave"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);
    app.fallthrough();
    for (const auto& name : kCommands) {
        std::string help;
        if (name == "predict") help = "print critical exponents, kappa and the lifespan bound table";
        if (name == "simulate") help = "run the radial solver and write norms/trace/result files";
        if (name == "sweep") help = "estimate lifespans over an epsilon grid and fit the exponent";
        if (name == "certify") help = "evaluate the test-function identity on a simulate trace";
        app.add_subcommand(name, help);
    }

    std::string config_path;
    app.add_option("--config", config_path, "key=value or JSON config file (flags override it)");

    struct FlagSpec {
        std::string name;
        std::string key;
        std::string help;
    };
    const std::vector<FlagSpec> valued{
        {"--n", "n", "spatial dimension (default 1)"},
        {"--p", "p", "nonlinearity exponent p > 1 (default 2)"},
        {"--alpha", "alpha", "spatial damping decay, 0 <= alpha < 1"},
        {"--beta", "beta", "temporal damping decay, -1 < beta < 1"},
        {"--eps", "eps", "initial-data amplitude"},
        {"--dx", "dx", "radial grid spacing (default 0.01)"},
        {"--cfl", "cfl", "time step / dx (default 0.5)"},
        {"--tmax", "tmax", "final time (default 50)"},
        {"--domain", "domain", "outer radius; 0 picks support + reach + margin"},
        {"--out", "out", "output directory (default out)"},
        {"--equation", "equation", "wave | heat"},
        {"--data", "data", "bump | gaussian | table"},
        {"--data-radius", "data_radius", "support radius of the data"},
        {"--data-width", "data_width", "gaussian width"},
        {"--amp0", "data_amp0", "gaussian amplitude of u0"},
        {"--amp1", "data_amp1", "gaussian amplitude of u1"},
        {"--data-table", "data_table", "CSV with columns r,u0,u1"},
        {"--threshold", "threshold", "sup|u| level treated as blow-up (default 1e6)"},
        {"--trace-stride", "trace_stride", "snapshot every k steps; 0 writes norms only"},
        {"--norm-stride", "norm_stride", "norm sample every k steps"},
        {"--eps-grid", "eps_grid", "comma-separated epsilons for sweep"},
        {"--tau", "tau", "comma-separated certify times (default T/4, T/2, 3T/4)"},
        {"--R", "R", "certify radius, one value or one per tau"},
        {"--trace", "trace", "simulate directory or trace.csv for certify"},
        {"--workers", "workers", "sweep worker threads (env DWAVE_WORKERS)"},
        {"--tolerance", "tolerance", "relative window for the exponent verdict (default 0.25)"},
    };
    std::vector<std::string> values(valued.size());
    std::vector<CLI::Option*> opts;
    for (std::size_t k = 0; k < valued.size(); ++k) {
        opts.push_back(app.add_option(valued[k].name, values[k], valued[k].help));
    }
    const std::vector<FlagSpec> switches{
        {"--json", "json", "machine-readable predict output"},
        {"--exploratory", "exploratory", "allow alpha*beta != 0"},
        {"--literal-D", "literal_D", "use the q/n exponent variant of D in certify"},
        {"--no-refine", "refine", "skip the dx/2 convergence re-run"},
        {"--no-source", "source", "drop the |u|^p term"},
        {"--no-fit", "fit", "sweep without the exponent fit"},
    };
    std::vector<CLI::Option*> flags;
    for (const auto& f : switches) flags.push_back(app.add_flag(f.name, f.help));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        throw HelpRequested(app.help());
    } catch (const CLI::CallForAllHelp&) {
        throw HelpRequested(app.help("", CLI::AppFormatMode::All));
    } catch (const CLI::CallForVersion&) {
        throw HelpRequested(std::string(kVersion) + "\n");
    } catch (const CLI::ParseError& e) {
        throw ParameterError(e.what());
    }

    RunConfig cfg;
    cfg.command = app.get_subcommands().front()->get_name();
    if (!config_path.empty()) {
        for (const auto& [k, v] : parse_config_text(read_file(config_path))) apply_setting(cfg, k, v);
    }
    if (const char* env = std::getenv("DWAVE_WORKERS"); env && *env) {
        apply_setting(cfg, "workers", env);
    }
    for (std::size_t k = 0; k < valued.size(); ++k) {
        if (opts[k]->count() > 0) apply_setting(cfg, valued[k].key, values[k]);
    }
    for (std::size_t k = 0; k < switches.size(); ++k) {
        if (flags[k]->count() == 0) continue;
        const bool negated = switches[k].name.rfind("--no-", 0) == 0;
        apply_setting(cfg, switches[k].key, negated ? "false" : "true");
    }
    return cfg;
}

void validate(const RunConfig& cfg) {
    if (!kCommands.count(cfg.command)) throw ParameterError("unknown command '" + cfg.command + "'");
    const ProblemSpec& s = cfg.problem;
    if (s.damping.alpha() * s.damping.beta() != 0.0 && !s.exploratory) {
        throw ParameterError("alpha*beta != 0 is outside the theorem hypotheses (alpha*beta = 0); "
                             "pass --exploratory to run anyway");
    }
    if (cfg.workers < 1) throw ParameterError("workers must be >= 1");
    if (cfg.command == "predict") {
        if (s.n < 1) throw ParameterError("n must be >= 1");
        if (cfg.p_given && !(s.p > 1.0)) throw ParameterError("p must be > 1");
        return;
    }
    if (cfg.command == "simulate") {
        s.validate();
        return;
    }
    if (cfg.command == "sweep") {
        s.validate();
        if (cfg.eps_grid.empty()) throw ParameterError("eps_grid is empty");
        for (double e : cfg.eps_grid) {
            if (!(e > 0.0 && e <= 1.0)) throw ParameterError("eps_grid values must lie in (0, 1]");
        }
        if (!(cfg.tolerance >= 0.0)) throw ParameterError("tolerance must be >= 0");
        return;
    }
    if (cfg.trace_path.empty()) throw ParameterError("certify needs --trace (a simulate output directory)");
    for (double t : cfg.taus) {
        if (!(t > 0.0)) throw ParameterError("tau values must be positive");
    }
    for (double r : cfg.radii) {
        if (!(r > 0.0)) throw ParameterError("R values must be positive");
    }
    if (!cfg.radii.empty() && cfg.radii.size() != 1 && cfg.radii.size() != cfg.taus.size()) {
        throw ParameterError("R needs one value or one per tau");
    }
}

// ---------------------------------------------------------------- predict

void cmd_predict(const RunConfig& cfg, std::ostream& out) {
    validate(cfg);
    const ProblemSpec& s = cfg.problem;
    const int n = s.n;
    const double a = s.damping.alpha();
    const double b = s.damping.beta();
    if (!(a < n)) throw ParameterError("alpha must be < n");
    const bool theorem = s.damping.theorem_mode();
    const double p_crit = 1.0 + 2.0 / (n - a);
    const double p_alpha = 1.0 + a / (n - a);

    ordered_json j;
    j["n"] = n;
    j["alpha"] = a;
    j["beta"] = b;
    j["theorem_mode"] = theorem;
    j["p_fujita"] = 1.0 + 2.0 / n;
    j["p_crit"] = p_crit;
    j["p_alpha"] = p_alpha;
    ordered_json cases = ordered_json::array();
    std::string column;
    if (!theorem) {
        column = "none";
    } else if (a == 0.0) {
        column = "alpha=0";
        j["p_crit_formula"] = "1 + 2/n";
        j["kappa_formula"] = "(1+beta) * (1/(p-1) - n/2)";
        cases.push_back({{"condition", "1 < p < p_crit"}, {"p_range", {1.0, p_crit}},
                         {"upper", bound_formula(BoundForm::inverse_kappa)}});
    } else {
        column = "beta=0";
        j["p_crit_formula"] = "1 + 2/(n-alpha)";
        j["kappa_formula"] = "2/(2-alpha) * (1/(p-1) - (n-alpha)/2)";
        cases.push_back({{"condition", "p_alpha < p < p_crit"}, {"p_range", {p_alpha, p_crit}},
                         {"upper", bound_formula(BoundForm::inverse_kappa)}});
        cases.push_back({{"condition", "p = p_alpha"}, {"p_range", {p_alpha, p_alpha}},
                         {"upper", bound_formula(BoundForm::log_corrected)}});
        cases.push_back({{"condition", "1 < p < p_alpha"}, {"p_range", {1.0, p_alpha}},
                         {"upper", bound_formula(BoundForm::p_minus_one)}});
    }
    j["column"] = column;
    j["cases"] = cases;
    if (theorem) j["lower"] = "eps^(-1/kappa+delta)";

    ExponentReport rep;
    if (cfg.p_given) {
        j["p"] = s.p;
        if (theorem) {
            rep = classify(n, s.p, s.damping);
            j["kappa"] = rep.kappa;
            j["q"] = rep.q;
            j["regime"] = std::string(to_string(rep.regime));
            j["critical"] = rep.critical;
            if (rep.regime != Regime::supercritical) {
                const LifespanBound lb = predict_lifespan_bound(n, s.p, s.damping, s.epsilon);
                j["bound"] = {{"form", std::string(to_string(lb.form))},
                              {"formula", bound_formula(lb.form)},
                              {"exponent", lb.exponent},
                              {"eps", s.epsilon},
                              {"value", lb.value},
                              {"sharpness_claimed", rep.regime == Regime::subcritical_power}};
            }
        }
    }

    if (cfg.json) {
        out << j.dump(2) << '\n';
        return;
    }
    out << "n = " << n << ", alpha = " << fmt(a) << ", beta = " << fmt(b) << '\n';
    if (!theorem) {
        out << "exploratory: alpha*beta != 0, no lifespan bound is available\n"
            << "p_c      = 1 + 2/(n-alpha) = " << fmt(p_crit) << '\n';
        if (cfg.p_given) out << "p        = " << fmt(s.p) << '\n';
        return;
    }
    out << "column: " << column << '\n';
    if (column == "alpha=0") {
        out << "p_c      = 1 + 2/n = " << fmt(p_crit) << '\n'
            << "kappa    = (1+beta) * (1/(p-1) - n/2)\n"
            << "T_eps <~ eps^(-1/kappa)                          for 1 < p < p_c\n";
    } else {
        out << "p_c      = 1 + 2/(n-alpha) = " << fmt(p_crit) << '\n'
            << "p_alpha  = 1 + alpha/(n-alpha) = " << fmt(p_alpha) << '\n'
            << "kappa    = 2/(2-alpha) * (1/(p-1) - (n-alpha)/2)\n"
            << "T_eps <~ eps^(-1/kappa)                          for p_alpha < p < p_c  ("
            << fmt(p_alpha) << ", " << fmt(p_crit) << ")\n"
            << "T_eps <~ eps^(-(p-1)) * log(1/eps)^(p-1)         for p = p_alpha  (" << fmt(p_alpha)
            << ")\n"
            << "T_eps <~ eps^(-(p-1))                            for 1 < p < p_alpha  (1, "
            << fmt(p_alpha) << ")\n";
    }
    out << "T_eps >~ eps^(-1/kappa+delta)                    for 1 < p < p_c\n";
    if (cfg.p_given) {
        out << "p        = " << fmt(s.p) << '\n'
            << "q        = " << fmt(rep.q) << '\n'
            << "kappa    = " << fmt(rep.kappa) << '\n'
            << "regime   = " << to_string(rep.regime) << (rep.critical ? " (critical p = p_c)" : "")
            << '\n';
        if (rep.regime != Regime::supercritical) {
            const LifespanBound lb = predict_lifespan_bound(n, s.p, s.damping, s.epsilon);
            out << "bound    = " << bound_formula(lb.form) << ", exponent " << fmt(lb.exponent)
                << ", value at eps=" << fmt(s.epsilon) << ": " << fmt(lb.value) << " (C = 1)\n";
            if (rep.regime != Regime::subcritical_power) {
                out << "note     = sharpness is not claimed in this regime\n";
            }
        } else {
            out << "bound    = none (small-data solutions are not predicted to blow up)\n";
        }
    }
}

// ---------------------------------------------------------------- simulate

void cmd_simulate(const RunConfig& cfg, std::ostream& out) {
    validate(cfg);
    Artifacts art(cfg.output_dir);
    write_manifest(art, cfg);
    RunOptions opt;
    opt.refine = cfg.refine;
    const RunOutcome res = run(cfg.problem, opt);

    art.write("norms.csv", [&](std::ostream& os) { io::write_norms_csv(os, res.trace); });
    if (cfg.problem.trace_stride > 0) {
        art.write("trace.csv", [&](std::ostream& os) { io::write_trace_csv(os, res.trace); });
    }
    ordered_json r;
    r["status"] = res.blowup ? "blowup" : "completed";
    r["t_end"] = res.t_end;
    r["steps"] = res.steps;
    if (res.blowup) {
        const BlowupReport& b = *res.blowup;
        r["T_est"] = number_or_null(b.T_est);
        r["T_lower"] = number_or_null(b.T_lower);
        r["T_upper"] = number_or_null(b.T_upper);
        r["method"] = std::string(to_string(b.method));
        r["fit_ok"] = b.fit_ok;
        r["refined"] = b.refined;
        r["converged"] = b.converged;
        r["T_dx"] = number_or_null(b.resolution_pair.first);
        r["T_dx_half"] = number_or_null(b.resolution_pair.second);
        r["dx"] = b.dx;
    }
    art.write("result.json", [&](std::ostream& os) { os << r.dump(2) << '\n'; });
    art.commit();

    if (res.blowup) {
        const BlowupReport& b = *res.blowup;
        out << "blow-up: T_est = " << fmt(b.T_est) << "  [" << fmt(b.T_lower) << ", " << fmt(b.T_upper)
            << "]  method = " << to_string(b.method);
        if (b.refined) {
            out << "  T(dx) = " << fmt(b.resolution_pair.first) << "  T(dx/2) = "
                << fmt(b.resolution_pair.second) << "  converged = " << bool_text(b.converged);
        }
        out << '\n';
    } else {
        out << "completed: t = " << fmt(res.t_end) << " after " << res.steps << " steps\n";
    }
    out << "output: " << cfg.output_dir.string() << '\n';
}

// ---------------------------------------------------------------- sweep

namespace {

const char* kSweepHeader = "epsilon,T_est,converged,dx,T_coarse,blew_up";

std::string sweep_row(const SweepPoint& pt) {
    return fmt(pt.epsilon) + ',' + fmt(pt.T_est) + ',' + bool_text(pt.converged) + ',' + fmt(pt.dx) +
           ',' + fmt(pt.T_coarse) + ',' + bool_text(pt.blew_up);
}

std::vector<SweepPoint> read_sweep_csv(const fs::path& path) {
    std::vector<SweepPoint> pts;
    std::ifstream in(path);
    if (!in) return pts;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line.rfind("epsilon", 0) == 0) continue;
        const auto c = io::split_csv(line);
        if (c.size() != 6) {
            throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": malformed sweep row");
        }
        SweepPoint pt;
        try {
            pt.epsilon = io::parse_double(c[0]);
            pt.T_est = io::parse_double(c[1]);
            pt.converged = c[2] == "true";
            pt.dx = io::parse_double(c[3]);
            pt.T_coarse = io::parse_double(c[4]);
            pt.blew_up = c[5] == "true";
        } catch (const std::invalid_argument& e) {
            throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
        pts.push_back(pt);
    }
    return pts;
}

/// Settings that change per-point results; a resumed sweep must match on all of them.
std::map<std::string, std::string> point_settings(const std::map<std::string, std::string>& m) {
    std::map<std::string, std::string> out = m;
    for (const char* k : {"eps_grid", "tolerance", "fit", "tau", "R", "trace", "literal_D", "eps"}) out.erase(k);
    return out;
}

}  // namespace

void cmd_sweep(const RunConfig& cfg, std::ostream& out) {
    validate(cfg);
    std::vector<SweepPoint> completed;
    const fs::path manifest_path = cfg.output_dir / "manifest.json";
    const fs::path csv_path = cfg.output_dir / "sweep.csv";
    if (fs::exists(manifest_path) && fs::exists(csv_path)) {
        const auto previous = parse_config_text(read_file(manifest_path));
        RunConfig prev_cfg;
        for (const auto& [k, v] : previous) apply_setting(prev_cfg, k, v);
        if (point_settings(prev_cfg.resolved()) != point_settings(cfg.resolved())) {
            throw ParameterError(cfg.output_dir.string() +
                                 ": existing sweep was produced with different settings; "
                                 "choose another --out");
        }
        for (const SweepPoint& pt : read_sweep_csv(csv_path)) {
            if (std::find(cfg.eps_grid.begin(), cfg.eps_grid.end(), pt.epsilon) != cfg.eps_grid.end()) {
                completed.push_back(pt);
            }
        }
    }

    Artifacts art(cfg.output_dir);
    write_manifest(art, cfg);
    std::ofstream checkpoint;
    if (completed.empty()) {
        art.write("sweep.csv", [&](std::ostream& os) { os << kSweepHeader << '\n'; });
    }
    checkpoint = art.append("sweep.csv");

    SweepOptions opt;
    opt.tolerance = cfg.tolerance;
    opt.workers = cfg.workers;
    opt.fit = cfg.fit;
    opt.completed = completed;
    opt.on_point = [&](const SweepPoint& pt) {
        checkpoint << sweep_row(pt) << '\n';
        checkpoint.flush();
    };
    const SweepResult res = run_sweep(cfg.problem, cfg.eps_grid, opt);
    checkpoint.close();

    art.write("sweep.csv", [&](std::ostream& os) {
        os << kSweepHeader << '\n';
        for (const auto& pt : res.points) os << sweep_row(pt) << '\n';
    });
    art.write("sweep_loglog.dat", [&](std::ostream& os) {
        os << "# log_eps log_T epsilon T_est T_fit converged\n";
        for (const auto& pt : res.points) {
            if (!pt.blew_up) continue;
            const double fit_T = cfg.fit ? std::exp(res.fit_intercept - res.fit_exponent * std::log(pt.epsilon))
                                         : std::nan("");
            os << fmt(std::log(pt.epsilon)) << ' ' << fmt(std::log(pt.T_est)) << ' ' << fmt(pt.epsilon)
               << ' ' << fmt(pt.T_est) << ' ' << fmt(fit_T) << ' ' << (pt.converged ? 1 : 0) << '\n';
        }
    });

    ordered_json s;
    s["points"] = res.points.size();
    s["fitted_points"] = res.fitted_points;
    s["monotone"] = res.monotone;
    if (cfg.fit) {
        const Verdict v = compare_bounds(res, cfg.tolerance);
        s["regime"] = std::string(to_string(res.regime.regime));
        s["kappa"] = res.regime.kappa;
        s["fit_exponent"] = res.fit_exponent;
        s["fit_intercept"] = res.fit_intercept;
        s["fit_ci"] = {number_or_null(res.fit_ci.first), number_or_null(res.fit_ci.second)};
        s["predicted_upper"] = res.predicted_upper;
        s["predicted_lower"] = res.predicted_lower;
        s["delta"] = res.delta;
        s["verdict"] = {{"within_upper", v.within_upper},
                        {"within_lower", v.within_lower},
                        {"consistent", v.consistent},
                        {"sharpness_claimed", v.sharpness_claimed},
                        {"candidate_exponents", v.candidate_exponents},
                        {"note", v.note}};
        out << "fit exponent s = " << fmt(res.fit_exponent) << "  CI [" << fmt(res.fit_ci.first) << ", "
            << fmt(res.fit_ci.second) << "]  predicted " << fmt(res.predicted_upper)
            << "  consistent = " << bool_text(v.consistent) << '\n'
            << v.note << '\n';
    }
    art.write("summary.json", [&](std::ostream& os) { os << s.dump(2) << '\n'; });
    art.commit();
    for (const auto& pt : res.points) {
        out << "eps = " << fmt(pt.epsilon) << "  T = " << fmt(pt.T_est)
            << "  converged = " << bool_text(pt.converged) << '\n';
    }
    out << "monotone = " << bool_text(res.monotone) << "\noutput: " << cfg.output_dir.string() << '\n';
}

// ---------------------------------------------------------------- certify

void cmd_certify(const RunConfig& cfg, std::ostream& out) {
    validate(cfg);
    fs::path trace_dir = cfg.trace_path;
    fs::path trace_file = trace_dir / "trace.csv";
    if (fs::is_regular_file(trace_dir)) {
        trace_file = trace_dir;
        trace_dir = trace_dir.parent_path();
    }
    const fs::path manifest_path = trace_dir / "manifest.json";
    if (!fs::exists(manifest_path)) {
        throw std::runtime_error(manifest_path.string() + ": trace has no manifest (run simulate first)");
    }
    RunConfig src;
    for (const auto& [k, v] : parse_config_text(read_file(manifest_path))) apply_setting(src, k, v);
    const ProblemSpec& spec = src.problem;
    if (spec.equation != Equation::damped_wave) {
        throw ParameterError("certify needs a damped-wave trace; the identity is not defined for the heat equation");
    }
    std::ifstream in(trace_file);
    if (!in) throw std::runtime_error(trace_file.string() + ": cannot open trace: " + std::strerror(errno));
    SolutionTrace trace;
    try {
        trace = io::read_trace_csv(in, spec.n);
    } catch (const std::exception& e) {
        throw std::runtime_error(trace_file.string() + ": " + e.what());
    }
    if (trace.snapshots.size() < 2) throw ParameterError(trace_file.string() + ": trace needs two snapshots");

    const double T = trace.snapshots.back().t;
    std::vector<double> taus = cfg.taus;
    if (taus.empty()) taus = {T / 4.0, T / 2.0, 3.0 * T / 4.0};
    CertifyOptions copt;
    copt.literal_D = cfg.literal_D;

    std::vector<Certificate> certs;
    std::vector<ChainReport> chains;
    for (std::size_t k = 0; k < taus.size(); ++k) {
        double R;
        if (cfg.radii.empty()) {
            R = std::min(choose_R(taus[k], spec.n, spec.p, spec.damping.alpha(), spec.damping.beta()),
                         trace.r.back());
        } else {
            R = cfg.radii.size() == 1 ? cfg.radii.front() : cfg.radii[k];
        }
        certs.push_back(eval_I_and_K(trace, taus[k], R, spec.p, spec.epsilon, spec.damping, copt));
        chains.push_back(check_chain(certs.back(), spec.epsilon, spec.p));
    }

    Artifacts art(cfg.output_dir);
    write_manifest(art, cfg);
    art.write("certificates.csv", [&](std::ostream& os) { io::write_certificates_csv(os, certs); });
    art.commit();

    out << "tau R I J K1+K2+K3 residual C1\n";
    for (std::size_t k = 0; k < certs.size(); ++k) {
        const Certificate& c = certs[k];
        out << fmt(c.tau) << ' ' << fmt(c.R) << ' ' << fmt(c.I) << ' ' << fmt(c.J) << ' '
            << fmt(c.K1 + c.K2 + c.K3) << ' ' << fmt(c.identity_residual) << ' '
            << (chains[k].applicable ? fmt(chains[k].C1) : std::string("n/a")) << '\n';
    }
    out << "C1 spread = " << fmt(chain_spread(chains)) << "\noutput: " << cfg.output_dir.string() << '\n';
}

int dispatch(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    try {
        if (cfg.command == "predict") cmd_predict(cfg, out);
        else if (cfg.command == "simulate") cmd_simulate(cfg, out);
        else if (cfg.command == "sweep") cmd_sweep(cfg, out);
        else if (cfg.command == "certify") cmd_certify(cfg, out);
        else throw ParameterError("unknown command '" + cfg.command + "'");
    } catch (const ParameterError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const InsufficientPointsError& e) {
        err << "error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    RunConfig cfg;
    try {
        cfg = parse_command_line(argc, argv);
    } catch (const HelpRequested& e) {
        out << e.what();
        return 0;
    } catch (const ParameterError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return dispatch(cfg, out, err);
}

}  // namespace dwave::cli
