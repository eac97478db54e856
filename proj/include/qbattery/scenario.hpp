#pragma once

// Scenario configuration shared by the command-line front end and the test
// harnesses: initial-state descriptors, automatic cutoff selection and the
// time-unit bookkeeping used by all emitted artifacts.

#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "qbattery/dynamics.hpp"
#include "qbattery/errors.hpp"
#include "qbattery/fock.hpp"
#include "qbattery/models.hpp"

namespace qbattery {

enum class InitialStateKind { Fock, Coherent, Squeezed, Custom };

inline const char* to_string(InitialStateKind k) {
    switch (k) {
        case InitialStateKind::Fock: return "fock";
        case InitialStateKind::Coherent: return "coherent";
        case InitialStateKind::Squeezed: return "squeezed";
        case InitialStateKind::Custom: return "custom";
    }
    return "?";
}

// All user-facing knobs of a run. Fields mirror the flat key=value config
// format; build_scenario resolves the physics.
struct ScenarioConfig {
    std::string kind = "nonlinear";         // linear | nonlinear | josephson
    int n = 2;
    int N = 2;
    double omega0 = 1.0;
    double coupling = 1.0;
    std::string coupling_mode = "g1";       // g1 | gn
    std::string initial = "fock";           // fock | coherent | squeezed | custom
    int fock_level = -1;                    // -1: protocol default (N for linear, 1 otherwise)
    std::string amplitudes_file;            // custom charger amplitudes, "re im" per line
    double t_max = 0.0;                     // in time_unit units
    int num_points = 601;
    int dim_a = 0;                          // 0 = automatic
    int dim_b = 0;
    int max_dim = kDefaultMaxTotalDim;
    std::string time_unit = "g1";           // g1 | gn | omega0
    std::string output = "qbattery_out";
    unsigned seed = 12345;

    ModelKind model_kind() const {
        if (kind == "linear") return ModelKind::Linear;
        if (kind == "nonlinear") return ModelKind::Nonlinear;
        if (kind == "josephson") return ModelKind::Josephson;
        throw InvalidArgument("unknown model kind '" + kind + "'");
    }
    CouplingMode resolved_coupling_mode() const {
        if (coupling_mode == "g1") return CouplingMode::ReferenceG1;
        if (coupling_mode == "gn") return CouplingMode::DirectGn;
        throw InvalidArgument("unknown coupling_mode '" + coupling_mode + "' (use g1 or gn)");
    }
    InitialStateKind initial_kind() const {
        if (initial == "fock") return InitialStateKind::Fock;
        if (initial == "coherent") return InitialStateKind::Coherent;
        if (initial == "squeezed") return InitialStateKind::Squeezed;
        if (initial == "custom") return InitialStateKind::Custom;
        throw InvalidArgument("unknown initial state '" + initial + "'");
    }
};

struct Scenario {
    ModelSpec spec;
    QuantumState initial;
    double time_unit_value = 1.0;  // one CSV time unit, in 1/energy units
    std::string time_unit_name;
    int charger_levels = 0;  // kept charger levels actually populated
};

namespace detail {

inline int minimal_tail_dim(InitialStateKind kind, double parameter, int hard_max) {
    for (int d = 2; d <= hard_max; ++d) {
        try {
            ModeCutoff probe(d, 2, kDefaultMaxTotalDim * 16);
            if (kind == InitialStateKind::Coherent)
                coherent_state(parameter, probe, Mode::A);
            else
                squeezed_vacuum_state(parameter, probe, Mode::A);
            return d;
        } catch (const CutoffTooSmall&) {
        }
    }
    throw CutoffTooSmall("no charger cutoff below " + std::to_string(hard_max) +
                         " satisfies the tail condition");
}

inline std::vector<Complex> read_amplitudes_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open amplitudes file '" + path + "'");
    std::vector<Complex> amps;
    std::string line;
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ss(line);
        double re, im;
        if (ss >> re) {
            if (!(ss >> im)) im = 0.0;
            amps.emplace_back(re, im);
        }
    }
    if (amps.size() < 2) throw InvalidArgument("amplitudes file needs at least 2 levels");
    return amps;
}

}  // namespace detail

// Resolves the config into a concrete model and initial state. Coherent and
// squeezed inputs are energy matched to the Fock protocol: <a^dag a> = N/n so
// that E_A(0) = N omega0. Automatic cutoffs give the charger the levels the
// tail condition needs (plus two for headroom) and the battery every level
// the conserved charge can reach, capped by max_dim.
inline Scenario build_scenario(const ScenarioConfig& cfg) {
    ModelKind kind = cfg.model_kind();
    if (kind == ModelKind::Josephson)
        throw InvalidArgument("build_scenario: the josephson subcommand handles junction runs");
    if (cfg.n < 1 || cfg.N < 1) throw InvalidArgument("n and N must be >= 1");
    if (kind == ModelKind::Linear && cfg.n != 1)
        throw InvalidArgument("linear model requires n = 1");

    InitialStateKind init_kind = cfg.initial_kind();

    int charger_levels;  // populated charger levels (determines reachable sectors)
    double state_parameter = 0.0;
    std::vector<Complex> custom;
    switch (init_kind) {
        case InitialStateKind::Fock: {
            int level = cfg.fock_level >= 0 ? cfg.fock_level
                                            : (kind == ModelKind::Linear ? cfg.N : 1);
            charger_levels = level + 1;
            state_parameter = level;
            break;
        }
        case InitialStateKind::Coherent: {
            state_parameter = std::sqrt(double(cfg.N) / cfg.n);  // alpha
            charger_levels =
                detail::minimal_tail_dim(init_kind, state_parameter, cfg.max_dim) + 2;
            break;
        }
        case InitialStateKind::Squeezed: {
            state_parameter = std::asinh(std::sqrt(double(cfg.N) / cfg.n));  // r
            charger_levels =
                detail::minimal_tail_dim(init_kind, state_parameter, cfg.max_dim) + 2;
            break;
        }
        case InitialStateKind::Custom: {
            custom = detail::read_amplitudes_file(cfg.amplitudes_file);
            charger_levels = static_cast<int>(custom.size());
            break;
        }
    }

    int dim_a = cfg.dim_a > 0 ? cfg.dim_a : std::max(2, charger_levels);
    int dim_b = cfg.dim_b;
    if (dim_b <= 0) {
        int reachable = cfg.n * (dim_a - 1) + 1;  // highest battery level any sector reaches
        dim_b = std::min(reachable, std::max(cfg.max_dim / dim_a, cfg.N + 1));
        dim_b = std::max(dim_b, cfg.N + 1);
    }
    ModeCutoff cutoff(dim_a, dim_b, cfg.max_dim);

    ModelSpec spec(cfg.omega0, cfg.n, cfg.N, cfg.coupling, cfg.resolved_coupling_mode(), cutoff,
                   kind);

    QuantumState initial = [&]() {
        switch (init_kind) {
            case InitialStateKind::Fock:
                return fock_state(static_cast<int>(state_parameter), 0, cutoff);
            case InitialStateKind::Coherent:
                return coherent_state(state_parameter, cutoff, Mode::A);
            case InitialStateKind::Squeezed:
                return squeezed_vacuum_state(state_parameter, cutoff, Mode::A);
            case InitialStateKind::Custom: {
                Vector v = Vector::Zero(cutoff.total());
                double norm2 = 0.0;
                for (auto a : custom) norm2 += std::norm(a);
                if (norm2 <= 0.0) throw InvalidArgument("custom amplitudes are all zero");
                for (size_t m = 0; m < custom.size(); ++m)
                    v(cutoff.index_of(static_cast<int>(m), 0)) = custom[m] / std::sqrt(norm2);
                return QuantumState::pure(cutoff, std::move(v));
            }
        }
        throw InvalidArgument("unreachable");
    }();

    Scenario scenario{spec, initial, 1.0, cfg.time_unit, charger_levels};
    if (cfg.time_unit == "g1") {
        if (spec.coupling_mode != CouplingMode::ReferenceG1)
            throw InvalidArgument("time_unit=g1 requires coupling_mode=g1; "
                                  "use time_unit=gn or omega0 with a direct coupling");
        scenario.time_unit_value = 1.0 / cfg.coupling;
    } else if (cfg.time_unit == "gn") {
        scenario.time_unit_value =
            1.0 / (spec.g_n() * std::exp(0.5 * log_factorial(spec.n)));
    } else if (cfg.time_unit == "omega0") {
        scenario.time_unit_value = 1.0 / cfg.omega0;
    } else {
        throw InvalidArgument("unknown time_unit '" + cfg.time_unit + "'");
    }
    return scenario;
}

// Uniform grid in physical time over [0, t_max_units * unit].
inline std::vector<double> scenario_grid(const Scenario& scenario, double t_max_units,
                                         int num_points) {
    if (t_max_units <= 0.0) throw InvalidArgument("t_max must be > 0");
    if (num_points < 2) throw InvalidArgument("num_points must be >= 2");
    double t_max = t_max_units * scenario.time_unit_value;
    std::vector<double> grid(num_points);
    for (int i = 0; i < num_points; ++i)
        grid[i] = t_max * double(i) / double(num_points - 1);
    grid[0] = 0.0;
    return grid;
}

}  // namespace qbattery
