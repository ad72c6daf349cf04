#include "doctest.h"
#include "support.hpp"

#include "iontrap/commands.hpp"
#include "iontrap/config.hpp"
#include "iontrap/dataset_io.hpp"
#include "iontrap/errors.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace iontrap;
using namespace iontrap::test;
using namespace iontrap::cli;
namespace fs = std::filesystem;

namespace {

const fs::path kSource = IONTRAP_SOURCE_DIR;

fs::path scratch() {
    static const fs::path dir = [] {
        auto d = fs::temp_directory_path() / ("iontrap_unit_" + std::to_string(::getpid()));
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

int run_cli(const std::string& args, const std::string& tag = "cli") {
    const auto out = scratch() / (tag + ".stdout");
    const auto err = scratch() / (tag + ".stderr");
    const std::string cmd = std::string(IONTRAP_CLI) + " " + args + " > " + out.string() + " 2> " + err.string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string report_value(const std::string& report, const std::string& key) {
    std::istringstream in(report);
    std::string line;
    while (std::getline(in, line)) {
        if (line.rfind(key + " = ", 0) == 0) {
            return line.substr(key.size() + 3);
        }
    }
    return {};
}

}  // namespace

TEST_CASE("bundled configs load and carry their parameter sets") {
    const auto fig1 = load_config(kSource / "configs/fig1.cfg");
    CHECK(fig1.scenario.beam.power == 0.275);
    CHECK(fig1.scenario.beam.detuning == doctest::Approx(-two_pi * 300e9));
    CHECK(fig1.scenario.trap.omega_z == doctest::Approx(two_pi * 45e3));

    const auto fig2 = load_config(kSource / "configs/fig2.cfg");
    CHECK(fig2.scenario.beam.power == 0.19);
    CHECK(fig2.scenario.beam.waist == 7e-6);
    CHECK(fig2.scenario.beam.detuning == doctest::Approx(-two_pi * 275e9));
    CHECK(fig2.scenario.trap.omega_z == doctest::Approx(two_pi * 47e3));

    const auto fig3 = load_config(kSource / "configs/fig3.cfg");
    CHECK(fig3.scenario.beam.waist == 6.4e-6);
    CHECK(fig3.scenario.timeline.hold == 500e-6);
    CHECK(fig3.scenario.trap.omega_z == doctest::Approx(two_pi * 41e3));

    CHECK(fig1.scenario.beam.direction.x == doctest::Approx(std::sqrt(0.5)));
}

TEST_CASE("config round trip") {
    for (const char* name : {"fig1.cfg", "fig2.cfg", "fig3.cfg"}) {
        const auto cfg = load_config(kSource / "configs" / name);
        const auto text = write_config(cfg);
        const auto again = parse_config(text);
        CHECK(write_config(again) == text);
        CHECK(again.scenario.beam.power == cfg.scenario.beam.power);
        CHECK(again.scenario.trap.stray_force.y == cfg.scenario.trap.stray_force.y);
        CHECK(again.scenario.sim.seed == cfg.scenario.sim.seed);
        CHECK(again.scenario.dc_barrier_distance == cfg.scenario.dc_barrier_distance);
    }
    const auto defaults = ExperimentConfig::defaults();
    CHECK(write_config(parse_config(write_config(defaults))) == write_config(defaults));
}

TEST_CASE("config errors name the key") {
    auto message = [](const std::string& text) {
        try {
            parse_config(text);
        } catch (const InputError& e) {
            return std::string(e.what());
        }
        return std::string("no error");
    };
    CHECK(message("[beam]\npower_w = 0.1\nbogus = 1\n").find("beam.bogus") != std::string::npos);
    CHECK(message("[beam]\nwaist_m = seven\n").find("beam.waist_m") != std::string::npos);
    CHECK(message("[nowhere]\nx = 1\n").find("nowhere") != std::string::npos);
    CHECK(message("[beam]\nwaist_m = -1\n").find("waist") != std::string::npos);
    CHECK(message("[beam]\npower_w = 0.1\npower_w = 0.2\n").find("beam.power_w") != std::string::npos);
    CHECK(message("[sim]\nmode = sideways\n").find("sim.mode") != std::string::npos);
    CHECK_THROWS_AS(load_config(scratch() / "missing.cfg"), IoError);
}

TEST_CASE("dataset files") {
    SurvivalDataset ds{"x", {{1e-4, 0.19, 39, 40}, {3e-3, 0.19, 2, 40}}};
    const auto text = format_dataset(ds);
    CHECK(text.rfind(std::string(kDatasetHeader), 0) == 0);
    const auto back = parse_dataset(text, "x");
    REQUIRE(back.rows.size() == 2);
    CHECK(back.rows[1].t_dipole == 3e-3);
    CHECK(back.rows[0].n_success == 39);

    try {
        parse_dataset(std::string(kDatasetHeader) + "\n1e-3,0.19,3,4\n2e-3,0.19,x,4\n", "bad");
        FAIL("no error");
    } catch (const InputError& e) {
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_dataset("", "empty"), InputError);
    CHECK_THROWS_AS(parse_dataset(std::string(kDatasetHeader) + "\n1e-3,0.19,5,4\n", "bad"), InputError);
    CHECK_THROWS_AS(read_dataset(scratch() / "missing.csv"), IoError);
    CHECK_THROWS_AS(write_text_file("/nonexistent/dir/out.csv", "x"), IoError);
}

TEST_CASE("derive report") {
    const auto fig1 = derive_report(load_config(kSource / "configs/fig1.cfg"));
    CHECK(within(std::stod(report_value(fig1, "depth_kb_mk")), 51.0, 0.10));
    const auto fig2 = derive_report(load_config(kSource / "configs/fig2.cfg"));
    CHECK(within(std::stod(report_value(fig2, "scattering_rate_per_ms")), 860.0, 0.20));

    auto dark = ExperimentConfig::defaults();
    dark.scenario.beam.power = 0.0;
    const auto report = derive_report(dark);
    CHECK(std::stod(report_value(report, "depth_j")) == 0.0);
    CHECK(report_value(report, "recoil_lifetime_ms") == "undefined");
}

TEST_CASE("ramp records include both endpoints") {
    const auto records = ramp_records(setup_trap(), 11);
    REQUIRE(records.size() == 33u);
    CHECK(records.front().fraction == 1.0);
    CHECK(records.back().fraction == 0.0);
    const auto text = format_ramp_records(records);
    CHECK(text.rfind("fraction,axis,a,q,stable,margin\n", 0) == 0);
}

TEST_CASE("CLI exit codes") {
    CHECK(run_cli("derive --config " + (kSource / "configs/fig1.cfg").string()) == 0);
    CHECK(run_cli("derive --config " + (scratch() / "missing.cfg").string()) == 3);

    const auto bad = scratch() / "bad.cfg";
    write_text_file(bad, "[beam]\nbogus = 1\n");
    CHECK(run_cli("derive --config " + bad.string(), "bad") == 2);
    CHECK(slurp(scratch() / "bad.stderr").find("beam.bogus") != std::string::npos);

    CHECK(run_cli("frobnicate") == 2);
    CHECK(run_cli("simulate --trajectories 2 --values 1e-4 --out /nonexistent/dir/x.csv") == 3);

    const auto empty = scratch() / "empty.csv";
    write_text_file(empty, "");
    CHECK(run_cli("fit " + empty.string()) == 2);

    const auto malformed = scratch() / "malformed.csv";
    write_text_file(malformed, std::string(kDatasetHeader) + "\n1e-3,0.19,3,4\n1e-3,oops,3,4\n");
    CHECK(run_cli("fit " + malformed.string(), "malformed") == 2);
    CHECK(slurp(scratch() / "malformed.stderr").find("line 3") != std::string::npos);
}

TEST_CASE("CLI stability summary and raster") {
    REQUIRE(run_cli("stability --fractions 5", "ramp") == 0);
    const auto out = slurp(scratch() / "ramp.stdout");
    const auto f_pp = report_value(out, "pseudopotential_fraction");
    REQUIRE_FALSE(f_pp.empty());
    CHECK(std::stod(f_pp) == doctest::Approx(0.035).epsilon(0.005 / 0.035));
    CHECK(out.find("\n1,x,") != std::string::npos);
    CHECK(out.find("\n0,z,") != std::string::npos);

    const auto raster = scratch() / "raster.csv";
    REQUIRE(run_cli("stability --mode raster --a-n 1 --q-min 0.90 --q-max 0.92 --q-n 3 --out " + raster.string()) == 0);
    const auto text = slurp(raster);
    CHECK(text.find("0,0.9,1,") != std::string::npos);
    CHECK(text.find("0,0.92,0,") != std::string::npos);
}

TEST_CASE("CLI runs are reproducible") {
    const auto a = scratch() / "synth_a.csv";
    const auto b = scratch() / "synth_b.csv";
    const auto c = scratch() / "synth_c.csv";
    REQUIRE(run_cli("synth --seed 5 --out " + a.string()) == 0);
    REQUIRE(run_cli("synth --seed 5 --out " + b.string()) == 0);
    REQUIRE(run_cli("synth --seed 6 --out " + c.string()) == 0);
    CHECK(slurp(a) == slurp(b));
    CHECK(slurp(a) != slurp(c));

    const auto s1 = scratch() / "sim_1.csv";
    const auto s2 = scratch() / "sim_2.csv";
    const std::string sim = "simulate --seed 3 --trajectories 20 --values 2e-3,3e-3 --out ";
    REQUIRE(run_cli(sim + s1.string()) == 0);
    REQUIRE(run_cli(sim + s2.string()) == 0);
    CHECK(slurp(s1) == slurp(s2));

    // the effective config written out and read back gives the same run
    auto cfg = ExperimentConfig::defaults();
    cfg.scenario.sim.seed = 3;
    const auto effective = scratch() / "effective.cfg";
    write_text_file(effective, write_config(cfg));
    const auto s3 = scratch() / "sim_3.csv";
    REQUIRE(run_cli("simulate --config " + effective.string() + " --trajectories 20 --values 2e-3,3e-3 --out " + s3.string()) == 0);
    CHECK(slurp(s3) == slurp(s1));

    const auto f1 = scratch() / "fit_1";
    const auto f2 = scratch() / "fit_2";
    REQUIRE(run_cli("fit --out " + f1.string() + " " + a.string()) == 0);
    REQUIRE(run_cli("fit --out " + f2.string() + " " + a.string()) == 0);
    for (const char* ext : {".summary.json", ".curve.csv", ".report.txt"}) {
        CHECK(slurp(f1.string() + ext) == slurp(f2.string() + ext));
    }
}

TEST_CASE("flat dataset through the CLI") {
    const auto flat = scratch() / "flat.csv";
    std::string text = std::string(kDatasetHeader) + "\n";
    for (const char* t : {"1e-4", "5e-4", "1e-3", "2e-3", "3e-3"}) {
        text += std::string(t) + ",0.19,36,40\n";
    }
    write_text_file(flat, text);
    REQUIRE(run_cli("fit " + flat.string(), "flat") == 0);
    const auto report = slurp(scratch() / "flat.stdout");
    CHECK(report_value(report, "degenerate_flat") == "true");
    CHECK(report_value(report, "lifetime_ms") == "undefined");
    CHECK(std::stod(report_value(report, "omega_per_sqrtP").substr(0, report_value(report, "omega_per_sqrtP").find(' '))) == 0.0);
}
