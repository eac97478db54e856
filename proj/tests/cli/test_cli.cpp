#include "catch_amalgamated.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sys/wait.h>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

// Spawns the installed CLI binary (path in QBATTERY_CLI) and checks the
// documented contract: exit codes, file outputs, determinism.

namespace {

std::string cli_path() {
    const char* p = std::getenv("QBATTERY_CLI");
    REQUIRE(p != nullptr);
    return p;
}

struct RunResult {
    int exit_code = -1;
    std::string output;
};

RunResult run_cli(const std::string& args) {
    std::string out_file = "cli_test_stdout.tmp";
    std::string cmd = cli_path() + " " + args + " > " + out_file + " 2>&1";
    int rc = std::system(cmd.c_str());
    RunResult r;
    r.exit_code = WEXITSTATUS(rc);
    std::ifstream in(out_file);
    std::stringstream ss;
    ss << in.rdbuf();
    r.output = ss.str();
    std::remove(out_file.c_str());
    return r;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::vector<std::string>> read_csv(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (line.size() && line.back() == ',') cells.push_back("");
        rows.push_back(cells);
    }
    return rows;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    out << content;
}

}  // namespace

TEST_CASE("charge writes the documented trace", "[cli]") {
    // full transfer at n = N = 2 with a grid point landing on the peak
    write_file("cli_charge.conf",
               "# full-transfer scenario\n"
               "kind = nonlinear\n"
               "n = 2\n"
               "N = 2\n"
               "coupling = 1.0\n"
               "coupling_mode = gn\n"
               "initial = fock\n"
               "time_unit = gn\n"
               "t_max = 6.283185307179586\n"
               "num_points = 601\n"
               "output = cli_charge_out\n");
    RunResult r = run_cli("charge --config cli_charge.conf");
    INFO(r.output);
    REQUIRE(r.exit_code == 0);

    auto rows = read_csv("cli_charge_out.csv");
    REQUIRE(rows.size() == 602);
    CHECK(rows[0] == std::vector<std::string>{"t", "E_B", "P_B", "abs_overlap0", "varH_B", "norm",
                                              "energy_total", "Q"});
    CHECK(rows[1][2].empty());  // P_B absent at t = 0
    double max_eb = 0.0;
    for (size_t i = 1; i < rows.size(); ++i) max_eb = std::max(max_eb, std::stod(rows[i][1]));
    CHECK(std::abs(max_eb - 2.0) < 1e-9);

    auto sidecar = nlohmann::json::parse(slurp("cli_charge_out.json"));
    CHECK(sidecar["config"]["n"] == 2);
    CHECK(std::abs(sidecar["results"]["E_max"].get<double>() - 2.0) < 1e-9);
    CHECK(std::abs(sidecar["results"]["tau_bar"].get<double>() - M_PI / 2.0) < 1e-6);
}

TEST_CASE("identical config and seed give byte-identical outputs", "[cli]") {
    write_file("cli_det.conf",
               "kind = nonlinear\nn = 3\nN = 3\ncoupling = 0.8\ninitial = fock\n"
               "t_max = 4.0\nnum_points = 201\nseed = 99\noutput = cli_det_a\n");
    REQUIRE(run_cli("charge --config cli_det.conf").exit_code == 0);
    REQUIRE(run_cli("charge --config cli_det.conf --output cli_det_b").exit_code == 0);
    CHECK(slurp("cli_det_a.csv") == slurp("cli_det_b.csv"));
    auto a = slurp("cli_det_a.json"), b = slurp("cli_det_b.json");
    // sidecars differ only in the echoed output path
    size_t pa = a.find("cli_det_a"), pb = b.find("cli_det_b");
    REQUIRE(pa != std::string::npos);
    a.erase(pa, 9);
    b.erase(pb, 9);
    CHECK(a == b);
}

TEST_CASE("config errors exit with code 2", "[cli]") {
    CHECK(run_cli("charge --t_max 1.0 --num_points 0").exit_code == 2);
    CHECK(run_cli("charge --kind nope --t_max 1.0").exit_code == 2);
    CHECK(run_cli("charge --badoption 3").exit_code == 2);
    CHECK(run_cli("sweep --N_list 5").exit_code == 2);          // too few points for fits
    CHECK(run_cli("josephson --n 2").exit_code == 2);           // even order
    CHECK(run_cli("verify --suite no-such-suite").exit_code == 2);
    CHECK(run_cli("charge --kind josephson --t_max 1.0").exit_code == 2);
}

TEST_CASE("classical traces", "[cli]") {
    SECTION("n = 2: the battery column is exactly zero") {
        RunResult r = run_cli(
            "classical --kind nonlinear --n 2 --N 2 --coupling 1.0 --coupling_mode gn "
            "--time_unit gn --t_max 6.0 --output cli_cl2");
        REQUIRE(r.exit_code == 0);
        auto rows = read_csv("cli_cl2.csv");
        REQUIRE(rows.size() > 10);
        CHECK(rows[0] == std::vector<std::string>{"t", "E_A_cl", "E_B_cl", "E_total_cl"});
        for (size_t i = 1; i < rows.size(); ++i) CHECK(rows[i][2] == "0");
    }
    SECTION("n = 1 matches the closed form within 1e-6 N omega0") {
        int N = 2;
        RunResult r = run_cli(
            "classical --kind linear --n 1 --N 2 --coupling 1.0 --t_max 6.4 --output cli_cl1");
        REQUIRE(r.exit_code == 0);
        auto rows = read_csv("cli_cl1.csv");
        for (size_t i = 1; i < rows.size(); ++i) {
            double t = std::stod(rows[i][0]);  // in 1/g1 units
            double eb = std::stod(rows[i][2]);
            CHECK(std::abs(eb - N * std::pow(std::sin(t), 2)) < 1e-6 * N);
        }
    }
    SECTION("an oversized step exits with code 3") {
        RunResult r = run_cli(
            "classical --kind linear --n 1 --N 6 --coupling 1.0 --t_max 60.0 --dt 1.2 "
            "--output cli_clbad");
        CHECK(r.exit_code == 3);
        CHECK(r.output.find("classical-energy-drift") != std::string::npos);
    }
}

TEST_CASE("josephson report", "[cli]") {
    RunResult r = run_cli(
        "josephson --n 3 --E_J 1.0 --lambda1 0.05 --lambda2 0.05 --omega2 1.0 "
        "--output cli_jos");
    INFO(r.output);
    REQUIRE(r.exit_code == 0);
    auto report = nlohmann::json::parse(slurp("cli_jos_report.json"));
    CHECK(report["results"]["relative_deviation"].get<double>() < 0.01);
    double g_eff = report["results"]["effective_coupling"].get<double>();
    CHECK(std::abs(g_eff - (-1.0 * 0.05 * std::pow(0.05, 3) / 6.0)) < 1e-18);
    double table_coeff = report["results"]["resonant_order_coefficient"].get<double>();
    CHECK(std::abs(table_coeff - g_eff) < 1e-12 * std::abs(g_eff));

    // the n = 1 table leads with the E_J lambda1 lambda2 conversion term
    RunResult r1 = run_cli(
        "josephson --n 1 --E_J 2.0 --lambda1 0.1 --lambda2 0.2 --omega2 1.0 --output cli_jos1");
    REQUIRE(r1.exit_code == 0);
    auto rows = read_csv("cli_jos1_terms.csv");
    bool found = false;
    for (const auto& row : rows)
        if (row.size() == 3 && row[0] == "2" && row[1] == "adag b")
            found = std::abs(std::stod(row[2]) - 2.0 * 0.1 * 0.2) < 1e-15;
    CHECK(found);
}

TEST_CASE("sweep produces a certified report", "[cli]") {
    RunResult r = run_cli("sweep --N_list 2 3 4 5 6 --output cli_sweep");
    INFO(r.output);
    REQUIRE(r.exit_code == 0);
    CHECK(r.output.find("GQA certified") != std::string::npos);
    auto report = nlohmann::json::parse(slurp("cli_sweep_report.json"));
    CHECK(report["verdict"]["gqa_certified"].get<bool>());
    CHECK(std::abs(report["fits"]["power_vs_N"]["exponent"].get<double>() - 1.5) < 0.01);
    CHECK(std::abs(report["fits"]["tau_bar_vs_N"]["exponent"].get<double>() + 0.5) < 0.01);
    auto rows = read_csv("cli_sweep_summary.csv");
    REQUIRE(rows.size() == 6);  // header + five N
    for (size_t i = 1; i < rows.size(); ++i) {
        CHECK(std::abs(std::stod(rows[i][4]) - 1.0) < 1e-6);                  // saturation
        CHECK(std::abs(std::stod(rows[i][8]) - 0.9003163161571062) < 1e-6);   // bound ratio
        CHECK(rows[i][9] == "0");                                             // classical
    }
}

TEST_CASE("verify subcommand", "[cli]") {
    SECTION("clean build passes every suite") {
        RunResult r = run_cli("verify --random_states 8");
        INFO(r.output);
        CHECK(r.exit_code == 0);
        CHECK(r.output.find("FAIL") == std::string::npos);
    }
    SECTION("a corrupted coupling map fails the qsl-saturation suite by name") {
        RunResult r = run_cli("verify --suite qsl-saturation --corrupt_gn_factor 2.0");
        CHECK(r.exit_code == 1);
        CHECK(r.output.find("FAIL qsl-saturation") != std::string::npos);
    }
}
