// Command-line front end: charging traces, certification sweeps, classical
// comparison runs, the Josephson coefficient table, and the invariant suites.
//
// Exit codes: 0 success, 1 verification failure, 2 configuration error,
// 3 physics-invariant violation (the violated invariant is named on stderr).

#include <algorithm>
#include <cmath>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "output.hpp"
#include "qbattery/qbattery.hpp"
#include "qbattery/version.hpp"

namespace {

using namespace qbattery;
using qbcli::fmt17;
using qbcli::Json;

constexpr int kExitOk = 0;
constexpr int kExitVerifyFailed = 1;
constexpr int kExitConfigError = 2;
constexpr int kExitPhysicsViolation = 3;

struct CliOptions {
    ScenarioConfig scenario;
    std::vector<int> N_list = {2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12};
    double dt = 0.0;  // classical step, in time_unit units; 0 = rule-based default
    std::string frame = "rotating";
    double E_J = 1.0;
    double lambda1 = 0.05;
    double lambda2 = 0.05;
    double omega1 = 0.0;  // 0 = n * omega2
    double omega2 = 1.0;
    int max_order = 0;  // 0 = n + 3
    bool renormalize_frequencies = false;
    std::vector<std::string> suites;
    double corrupt_gn_factor = 1.0;
    int random_states = 25;
};

// Binds option variables to both command-line flags and flat key = value
// config files, with command-line values taking precedence. (CLI11's own
// config support expects sectioned files once subcommands are involved.)
class ConfigBinder {
public:
    explicit ConfigBinder(CLI::App* cmd) : cmd_(cmd) {
        cmd_->add_option("--config", config_path_,
                         "flat key = value configuration file ('#' comments)");
    }

    template <typename T>
    void bind(const std::string& name, T& var, const std::string& help) {
        cmd_->add_option("--" + name, var, help);
        setters_[name] = [&var, name](const std::string& text) { parse_into(name, text, var); };
    }

    void bind_flag(const std::string& name, bool& var, const std::string& help) {
        cmd_->add_flag("--" + name, var, help);
        setters_[name] = [&var, name](const std::string& text) { parse_into(name, text, var); };
    }

    // Applies the config file (when given), skipping keys the command line set.
    void apply() const {
        if (cmd_->count("--config") == 0) return;
        std::ifstream in(config_path_);
        if (!in) throw InvalidArgument("cannot open config file '" + config_path_ + "'");
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            auto trim = [](std::string s) {
                size_t a = s.find_first_not_of(" \t\r");
                size_t b = s.find_last_not_of(" \t\r");
                return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
            };
            if (trim(line).empty()) continue;
            auto eq = line.find('=');
            if (eq == std::string::npos)
                throw InvalidArgument("config line " + std::to_string(lineno) +
                                      ": expected key = value");
            std::string key = trim(line.substr(0, eq));
            std::string value = trim(line.substr(eq + 1));
            auto it = setters_.find(key);
            if (it == setters_.end())
                throw InvalidArgument("config line " + std::to_string(lineno) +
                                      ": unknown key '" + key + "' for this subcommand");
            if (cmd_->count("--" + key) > 0) continue;  // flags override the file
            it->second(value);
        }
    }

private:
    template <typename T>
    static void parse_into(const std::string& name, const std::string& text, T& var) {
        std::istringstream ss(text);
        T value;
        if (!(ss >> value) || !(ss >> std::ws).eof())
            throw InvalidArgument("config key '" + name + "': cannot parse '" + text + "'");
        var = value;
    }

    static void parse_into(const std::string& name, const std::string& text, std::string& var) {
        var = text;
        if (var.size() >= 2 && var.front() == '"' && var.back() == '"')
            var = var.substr(1, var.size() - 2);
        if (var.empty()) throw InvalidArgument("config key '" + name + "': empty value");
    }

    static void parse_into(const std::string& name, const std::string& text, bool& var) {
        if (text == "true" || text == "1")
            var = true;
        else if (text == "false" || text == "0")
            var = false;
        else
            throw InvalidArgument("config key '" + name + "': expected true/false");
    }

    static void parse_into(const std::string& name, const std::string& text,
                           std::vector<int>& var) {
        var.clear();
        std::string item;
        std::istringstream ss(text);
        while (std::getline(ss, item, ',')) {
            std::istringstream is(item);
            int value;
            if (is >> value)
                var.push_back(value);
            else if (!item.empty() && item.find_first_not_of(" \t") != std::string::npos)
                throw InvalidArgument("config key '" + name + "': cannot parse '" + item + "'");
        }
    }

    static void parse_into(const std::string&, const std::string& text,
                           std::vector<std::string>& var) {
        var.clear();
        std::string item;
        std::istringstream ss(text);
        while (std::getline(ss, item, ','))
            if (!item.empty()) var.push_back(item);
    }

    CLI::App* cmd_;
    std::string config_path_;
    std::map<std::string, std::function<void(const std::string&)>> setters_;
};

void add_model_options(ConfigBinder& bind, CliOptions& opt) {
    ScenarioConfig& s = opt.scenario;
    bind.bind("kind", s.kind, "model kind: linear | nonlinear | josephson");
    bind.bind("n", s.n, "order of the non-linear coupling");
    bind.bind("N", s.N, "charger excitation number (target charge)");
    bind.bind("omega0", s.omega0, "oscillator frequency scale");
    bind.bind("coupling", s.coupling, "coupling constant (see --coupling_mode)");
    bind.bind("coupling_mode", s.coupling_mode,
              "g1: coupling is the reference linear g_1, mapped to g_n; gn: direct g_n");
    bind.bind("initial", s.initial, "fock | coherent | squeezed | custom");
    bind.bind("fock_level", s.fock_level,
              "charger Fock level (default: N for linear, 1 otherwise)");
    bind.bind("amplitudes_file", s.amplitudes_file,
              "charger amplitudes for initial=custom, 're im' per line");
    bind.bind("t_max", s.t_max, "trace end time, in time_unit units");
    bind.bind("num_points", s.num_points, "number of grid points");
    bind.bind("dim_a", s.dim_a, "charger cutoff override (0 = automatic)");
    bind.bind("dim_b", s.dim_b, "battery cutoff override (0 = automatic)");
    bind.bind("max_dim", s.max_dim, "maximum total Hilbert-space dimension");
    bind.bind("time_unit", s.time_unit,
              "unit of emitted times: g1 (1/g_1) | gn (1/(g_n sqrt(n!))) | omega0");
    bind.bind("output", s.output, "output path prefix");
    bind.bind("seed", s.seed, "seed echoed into artifacts and used by random suites");
}

Json config_json(const ScenarioConfig& s) {
    return Json{{"kind", s.kind},
                {"n", s.n},
                {"N", s.N},
                {"omega0", s.omega0},
                {"coupling", s.coupling},
                {"coupling_mode", s.coupling_mode},
                {"initial", s.initial},
                {"fock_level", s.fock_level},
                {"amplitudes_file", s.amplitudes_file},
                {"t_max", s.t_max},
                {"num_points", s.num_points},
                {"dim_a", s.dim_a},
                {"dim_b", s.dim_b},
                {"max_dim", s.max_dim},
                {"time_unit", s.time_unit},
                {"output", s.output},
                {"seed", s.seed}};
}

Json resolved_json(const Scenario& sc) {
    return Json{{"g_n", sc.spec.g_n()},
                {"dim_a", sc.spec.cutoff.dim_a},
                {"dim_b", sc.spec.cutoff.dim_b},
                {"time_unit", sc.time_unit_name},
                {"time_unit_value", sc.time_unit_value},
                {"charger_levels", sc.charger_levels}};
}

int cmd_charge(const CliOptions& opt) {
    const ScenarioConfig& cfg = opt.scenario;
    Scenario sc = build_scenario(cfg);
    std::vector<double> grid = scenario_grid(sc, cfg.t_max, cfg.num_points);
    ChargingTrace trace = charging_trace(sc.spec, sc.initial, grid);

    const double unit = sc.time_unit_value;
    const double w0 = sc.spec.omega0;
    qbcli::CsvWriter csv(cfg.output + ".csv",
                         {"t", "E_B", "P_B", "abs_overlap0", "varH_B", "norm", "energy_total",
                          "Q"});
    for (size_t i = 0; i < trace.times.size(); ++i) {
        std::optional<double> p;
        if (trace.power_B[i]) p = *trace.power_B[i] * unit / w0;
        csv.row({trace.times[i] / unit, trace.energy_B[i] / w0, p, std::abs(trace.overlap0[i]),
                 trace.var_H_B[i] / (w0 * w0), trace.norm[i], trace.energy_total[i] / w0,
                 trace.charge[i]});
    }

    Json results;
    try {
        auto best = optimal_charging_time(sc.spec, sc.initial, grid.back());
        results["tau_bar"] = best.tau_bar / unit;
        results["E_max"] = best.energy_max / w0;
    } catch (const FlatTrace&) {
        results["tau_bar"] = nullptr;
        results["E_max"] = 0.0;
    }
    Json sidecar{{"config", config_json(cfg)},
                 {"resolved", resolved_json(sc)},
                 {"results", results},
                 {"version", kVersion}};
    qbcli::write_json(cfg.output + ".json", sidecar);
    std::cout << "charge: wrote " << cfg.output << ".csv and " << cfg.output << ".json\n";
    return kExitOk;
}

int cmd_sweep(const CliOptions& opt) {
    const ScenarioConfig& cfg = opt.scenario;
    if (opt.N_list.empty()) throw InvalidArgument("sweep: N_list must not be empty");
    if (cfg.resolved_coupling_mode() != CouplingMode::ReferenceG1)
        throw InvalidArgument("sweep: certification requires coupling_mode=g1");
    const double g1 = cfg.coupling, w0 = cfg.omega0;

    GqaReport report = build_gqa_report(opt.N_list, g1, w0);

    qbcli::CsvWriter csv(cfg.output + "_summary.csv",
                         {"N", "g_N", "tau_bar", "tau_qsl", "saturation_ratio", "E_max", "P",
                          "P_bound", "bound_ratio", "E_B_max_classical"});
    for (size_t i = 0; i < report.records.size(); ++i) {
        const GqaRecord& r = report.records[i];
        csv.row({double(r.N), r.g_N / g1, r.tau_bar * g1, r.tau_qsl * g1, r.saturation_ratio,
                 r.E_max / w0, r.P_at_tau_bar / (w0 * g1), r.P_bound_at_tau_bar / (w0 * g1),
                 r.bound_ratio, report.classical_E_max[i].second / w0});
    }

    auto fit_json = [](const ScalingFit& f) {
        return Json{{"exponent", f.exponent},
                    {"prefactor", f.prefactor},
                    {"max_residual", f.max_residual}};
    };
    Json records = Json::array();
    for (const auto& r : report.records)
        records.push_back(Json{{"N", r.N},
                               {"g_N", r.g_N / g1},
                               {"tau_bar", r.tau_bar * g1},
                               {"tau_qsl", r.tau_qsl * g1},
                               {"saturation_ratio", r.saturation_ratio},
                               {"E_max", r.E_max / w0},
                               {"P", r.P_at_tau_bar / (w0 * g1)},
                               {"P_bound", r.P_bound_at_tau_bar / (w0 * g1)},
                               {"bound_ratio", r.bound_ratio}});
    Json linear = Json::array();
    for (const auto& r : report.linear_control)
        linear.push_back(Json{{"N", r.N},
                              {"tau_bar", r.tau_bar * g1},
                              {"tau_qsl", r.tau_qsl * g1},
                              {"qsl_ratio", r.qsl_ratio},
                              {"E_max", r.E_max / w0},
                              {"P", r.P_at_tau_bar / (w0 * g1)}});
    Json classical = Json::array();
    for (const auto& [N, e] : report.classical_E_max)
        classical.push_back(Json{{"N", N}, {"E_B_max", e / w0}});

    Json doc{{"config", config_json(cfg)},
             {"N_list", opt.N_list},
             {"units", Json{{"time", "1/g1"}, {"energy", "omega0"}, {"power", "omega0*g1"}}},
             {"records", records},
             {"linear_control", linear},
             {"classical", classical},
             {"fits",
              Json{{"power_vs_N", fit_json(report.power_fit)},
                   {"tau_bar_vs_N", fit_json(report.tau_fit)},
                   {"power_bound_vs_N", fit_json(report.bound_fit)},
                   {"linear_power_vs_N", fit_json(report.linear_power_fit)}}},
             {"verdict",
              Json{{"gqa_certified", report.gqa_certified}, {"detail", report.verdict_detail}}},
             {"version", kVersion}};
    qbcli::write_json(cfg.output + "_report.json", doc);
    std::cout << "sweep: " << (report.gqa_certified ? "GQA certified" : "NOT certified") << " ("
              << report.verdict_detail << ")\n";
    std::cout << "sweep: wrote " << cfg.output << "_summary.csv and " << cfg.output
              << "_report.json\n";
    return kExitOk;
}

int cmd_classical(const CliOptions& opt) {
    const ScenarioConfig& cfg = opt.scenario;
    if (cfg.model_kind() == ModelKind::Josephson)
        throw InvalidArgument("classical: use kind=linear or kind=nonlinear");
    ModelSpec spec(cfg.omega0, cfg.n, cfg.N, cfg.coupling, cfg.resolved_coupling_mode(),
                   ModeCutoff(2, std::max(2, cfg.N + 1)), cfg.model_kind());
    ClassicalParams params{cfg.n, cfg.omega0, spec.g_n()};

    double unit;
    if (cfg.time_unit == "g1") {
        if (spec.coupling_mode != CouplingMode::ReferenceG1)
            throw InvalidArgument("time_unit=g1 requires coupling_mode=g1");
        unit = 1.0 / cfg.coupling;
    } else if (cfg.time_unit == "gn") {
        unit = 1.0 / (spec.g_n() * std::exp(0.5 * log_factorial(spec.n)));
    } else if (cfg.time_unit == "omega0") {
        unit = 1.0 / cfg.omega0;
    } else {
        throw InvalidArgument("unknown time_unit '" + cfg.time_unit + "'");
    }

    ClassicalState init;
    init.X_A = std::sqrt(2.0 * cfg.N / cfg.n);
    init.X_B = {0.0, 0.0};
    init.frame = [&] {
        if (opt.frame == "rotating") return Frame::Rotating;
        if (opt.frame == "lab") return Frame::Lab;
        throw InvalidArgument("unknown frame '" + opt.frame + "' (use rotating or lab)");
    }();

    if (cfg.t_max <= 0.0) throw InvalidArgument("t_max must be > 0");
    double t_end = cfg.t_max * unit;
    double dt = opt.dt > 0.0 ? opt.dt * unit : default_classical_step(params, init);

    ClassicalTrajectory traj = integrate_classical(init, params, t_end, dt);
    const double w0 = cfg.omega0;
    qbcli::CsvWriter csv(cfg.output + ".csv", {"t", "E_A_cl", "E_B_cl", "E_total_cl"});
    for (size_t i = 0; i < traj.times.size(); ++i)
        csv.row({traj.times[i] / unit, traj.energy_A[i] / w0, traj.energy_B[i] / w0,
                 traj.energy_total[i] / w0});

    ClassicalChargingSummary summary = classical_charging_summary(params, cfg.N, t_end, dt);
    Json results{{"E_B_max", summary.energy_B_max / w0}};
    if (summary.tau_at_max)
        results["tau_at_max"] = *summary.tau_at_max / unit;
    else
        results["tau_at_max"] = nullptr;
    Json sidecar{{"config", config_json(cfg)},
                 {"frame", opt.frame},
                 {"dt", dt / unit},
                 {"results", results},
                 {"version", kVersion}};
    qbcli::write_json(cfg.output + ".json", sidecar);
    std::cout << "classical: wrote " << cfg.output << ".csv and " << cfg.output << ".json\n";
    return kExitOk;
}

int cmd_josephson(const CliOptions& opt) {
    const ScenarioConfig& cfg = opt.scenario;
    double omega2 = opt.omega2;
    double omega1 = opt.omega1 > 0.0 ? opt.omega1 : cfg.n * omega2;
    JosephsonSpec jspec(opt.E_J, opt.lambda1, opt.lambda2, omega1, omega2, cfg.n);
    jspec.require_resonance("josephson");
    int max_order = opt.max_order > 0 ? opt.max_order : cfg.n + 3;

    auto terms = taylor_resonant_terms(jspec, max_order);
    std::ofstream terms_out(cfg.output + "_terms.csv", std::ios::trunc);
    if (!terms_out) throw InvalidArgument("cannot open output file '" + cfg.output + "_terms.csv'");
    terms_out << "order,monomial,coefficient\n";
    for (const auto& t : terms)
        terms_out << t.order << "," << t.monomial() << "," << fmt17(t.coefficient) << "\n";

    double g_eff = josephson_effective_coupling(jspec);
    double lowest_order_coeff = 0.0;
    for (const auto& t : terms)
        if (t.order == jspec.n + 1 && t.a_raise == 1 && t.a_lower == 0 && t.b_raise == 0 &&
            t.b_lower == jspec.n)
            lowest_order_coeff = t.coefficient;

    int dim_a = cfg.dim_a > 0 ? cfg.dim_a : 8;
    int dim_b = cfg.dim_b > 0 ? cfg.dim_b : std::max(12, cfg.n + 6);
    ModeCutoff cutoff(dim_a, dim_b, cfg.max_dim);
    OperatorMatrix h_full = build_josephson_full(jspec, cutoff);
    Complex element =
        h_full.entries()(cutoff.index_of(0, jspec.n), cutoff.index_of(1, 0));
    double target = g_eff * std::exp(0.5 * log_factorial(jspec.n));  // g_n sqrt(n!)
    double rel_dev = std::abs(element.real() - target) / std::abs(target);

    Json renorm{{"enabled", opt.renormalize_frequencies}};
    if (opt.renormalize_frequencies) {
        // quadratic cosine terms shift the mode frequencies at order E_J lambda^2
        double omega1_eff = omega1 + jspec.E_J * jspec.lambda1 * jspec.lambda1;
        double omega2_eff = omega2 + jspec.E_J * jspec.lambda2 * jspec.lambda2;
        renorm["omega1_effective"] = omega1_eff;
        renorm["omega2_effective"] = omega2_eff;
        renorm["residual_detuning"] = omega1_eff - jspec.n * omega2_eff;
    }

    Json doc{{"config", config_json(cfg)},
             {"josephson",
              Json{{"E_J", jspec.E_J},
                   {"lambda1", jspec.lambda1},
                   {"lambda2", jspec.lambda2},
                   {"omega1", omega1},
                   {"omega2", omega2},
                   {"n", jspec.n},
                   {"max_order", max_order},
                   {"dim_a", dim_a},
                   {"dim_b", dim_b}}},
             {"results",
              Json{{"effective_coupling", g_eff},
                   {"resonant_order_coefficient", lowest_order_coeff},
                   {"full_matrix_element", element.real()},
                   {"effective_matrix_element", target},
                   {"relative_deviation", rel_dev}}},
             {"frequency_renormalization", renorm},
             {"version", kVersion}};
    qbcli::write_json(cfg.output + "_report.json", doc);
    std::cout << "josephson: g_eff = " << fmt17(g_eff) << ", full/effective deviation = "
              << fmt17(rel_dev) << "\n";
    std::cout << "josephson: wrote " << cfg.output << "_terms.csv and " << cfg.output
              << "_report.json\n";
    return kExitOk;
}

int cmd_verify(const CliOptions& opt) {
    VerifyOptions vopt;
    vopt.corrupt_gn_factor = opt.corrupt_gn_factor;
    vopt.seed = opt.scenario.seed;
    vopt.random_states = opt.random_states;
    std::vector<std::string> names = opt.suites.empty() ? verify_suite_names() : opt.suites;
    auto results = run_verify_suites(names, vopt);
    int failures = 0;
    for (const auto& r : results) {
        if (r.passed) {
            std::cout << "PASS " << r.name << "\n";
        } else {
            ++failures;
            std::cout << "FAIL " << r.name << ": " << r.detail << "\n";
        }
    }
    std::cout << (failures == 0 ? "verify: all suites passed\n"
                                : "verify: " + std::to_string(failures) + " suite(s) failed\n");
    return failures == 0 ? kExitOk : kExitVerifyFailed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"non-linear bosonic quantum-battery toolkit"};
    app.require_subcommand(1);

    CliOptions opt;

    CLI::App* charge = app.add_subcommand("charge", "evolve one scenario and write its trace");
    ConfigBinder charge_bind(charge);
    add_model_options(charge_bind, opt);

    CLI::App* sweep = app.add_subcommand("sweep", "per-N certification sweep and GQA report");
    ConfigBinder sweep_bind(sweep);
    add_model_options(sweep_bind, opt);
    sweep_bind.bind("N_list", opt.N_list, "charges to sweep (comma separated in configs)");

    CLI::App* classical = app.add_subcommand("classical", "integrate the classical analog");
    ConfigBinder classical_bind(classical);
    add_model_options(classical_bind, opt);
    classical_bind.bind("dt", opt.dt, "RK4 step in time_unit units (0 = rule-based)");
    classical_bind.bind("frame", opt.frame, "rotating | lab");

    CLI::App* josephson =
        app.add_subcommand("josephson", "resonant-term table and full-model comparison");
    ConfigBinder josephson_bind(josephson);
    add_model_options(josephson_bind, opt);
    josephson_bind.bind("E_J", opt.E_J, "Josephson energy");
    josephson_bind.bind("lambda1", opt.lambda1, "zero-point phase amplitude, resonator 1");
    josephson_bind.bind("lambda2", opt.lambda2, "zero-point phase amplitude, resonator 2");
    josephson_bind.bind("omega1", opt.omega1, "resonator-1 frequency (0 = n*omega2)");
    josephson_bind.bind("omega2", opt.omega2, "resonator-2 frequency");
    josephson_bind.bind("max_order", opt.max_order, "cosine expansion order (0 = n+3)");
    josephson_bind.bind_flag("renormalize_frequencies", opt.renormalize_frequencies,
                             "report frequencies shifted by the quadratic cosine terms");

    CLI::App* verify = app.add_subcommand("verify", "run the invariant suites");
    ConfigBinder verify_bind(verify);
    verify_bind.bind("suite", opt.suites, "suites to run (default: all)");
    verify_bind.bind("corrupt_gn_factor", opt.corrupt_gn_factor,
                     "fault injector: scale the mapped g_N (self-test of the suites)");
    verify_bind.bind("random_states", opt.random_states,
                     "number of random states in the local-energy suite");
    verify_bind.bind("seed", opt.scenario.seed, "seed for randomized suites");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfigError;
    }

    try {
        if (charge->parsed()) {
            charge_bind.apply();
            return cmd_charge(opt);
        }
        if (sweep->parsed()) {
            sweep_bind.apply();
            return cmd_sweep(opt);
        }
        if (classical->parsed()) {
            classical_bind.apply();
            return cmd_classical(opt);
        }
        if (josephson->parsed()) {
            josephson_bind.apply();
            return cmd_josephson(opt);
        }
        if (verify->parsed()) {
            verify_bind.apply();
            return cmd_verify(opt);
        }
        std::cerr << "error: no subcommand\n";
        return kExitConfigError;
    } catch (const PhysicsViolation& e) {
        std::cerr << "physics invariant violated [" << e.invariant() << "]: " << e.what() << "\n";
        return kExitPhysicsViolation;
    } catch (const FlatTrace& e) {
        std::cerr << "physics condition: " << e.what() << "\n";
        return kExitPhysicsViolation;
    } catch (const NeverOrthogonal& e) {
        std::cerr << "physics condition: " << e.what() << "\n";
        return kExitPhysicsViolation;
    } catch (const NotHermitian& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitPhysicsViolation;
    } catch (const Error& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfigError;
    }
}
