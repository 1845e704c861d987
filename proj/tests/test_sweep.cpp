#include <catch2/catch.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "dsa/analytic.hpp"
#include "dsa/figures.hpp"
#include "dsa/sweep.hpp"

using dsa::Error;
using dsa::ErrorKind;
using dsa::MeterConfig;
using dsa::PpsConfig;
using dsa::SweepSpec;

namespace {

constexpr double kPi = 3.1415926535897932;

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path);
    REQUIRE(in);
    std::ostringstream text;
    text << in.rdbuf();
    return text.str();
}

} // namespace

TEST_CASE("grid helpers") {
    const auto lin = dsa::linspace(0.0, 1.0, 5);
    REQUIRE(lin.size() == 5);
    CHECK(lin.front() == 0.0);
    CHECK(lin.back() == 1.0);
    CHECK(lin[2] == Approx(0.5));
    const auto log = dsa::logspace(1e-4, 1.0, 5);
    CHECK(log.front() == 1e-4);
    CHECK(log.back() == 1.0);
    CHECK(log[2] == Approx(1e-2).epsilon(1e-12));
}

TEST_CASE("single-point sweep equals the direct call") {
    SweepSpec spec;
    spec.axes = {{"B", {0.3}}};
    spec.fixed = {{"theta", 0.7}, {"d", 0.2}, {"sigma", 1.0}, {"N", 1000.0}};
    spec.quantities = {"dsa_signal", "dsa_variance", "dsa_snr_reduced"};
    const dsa::SweepTable table = dsa::run_sweep(spec);
    REQUIRE(table.row_count == 1);
    const PpsConfig pps = PpsConfig::from_weight_diff(0.3, 0.7);
    const MeterConfig meter = MeterConfig::from_shift(0.2, 1.0);
    CHECK(table.cell(0, 0).value == dsa::dsa_signal(pps, meter));
    CHECK(table.cell(0, 1).value == dsa::dsa_variance(pps, meter, 1000));
    CHECK(table.cell(0, 2).value == dsa::dsa_snr(pps, meter, 1000).reduced);
}

TEST_CASE("structural singularities become sentinel cells") {
    SweepSpec spec;
    spec.axes = {{"theta", {0.5, kPi / 2.0, 2.0}}};
    spec.fixed = {{"B", 0.4}, {"d", 0.1}, {"sigma", 1.0}};
    spec.quantities = {"beta1", "beta2", "dsa_signal", "p_f"};
    const dsa::SweepTable table = dsa::run_sweep(spec);
    REQUIRE(table.row_count == 3);
    CHECK(table.cell(0, 0).ok);
    CHECK_FALSE(table.cell(1, 0).ok); // beta1 at theta = pi/2
    CHECK_FALSE(table.cell(1, 1).ok);
    CHECK_FALSE(table.cell(1, 2).ok);
    CHECK(table.cell(1, 2).text() == "DEGENERATE:balance");
    CHECK(table.cell(1, 3).ok); // p_f is fine everywhere
    CHECK(table.cell(2, 0).ok);
}

TEST_CASE("sweep validation errors") {
    SweepSpec spec;
    spec.fixed = {{"B", 0.4}, {"d", 0.1}};
    spec.quantities = {"dsa_signal"};
    SECTION("no axes") { CHECK_THROWS_AS(dsa::run_sweep(spec), Error); }
    SECTION("empty axis") {
        spec.axes = {{"theta", {}}};
        CHECK_THROWS_AS(dsa::run_sweep(spec), Error);
    }
    SECTION("unknown quantity") {
        spec.axes = {{"theta", {0.5}}};
        spec.quantities = {"no_such_thing"};
        try {
            (void)dsa::run_sweep(spec);
            FAIL("expected unknown_quantity");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::unknown_quantity);
        }
    }
    SECTION("axis and fixed overlap") {
        spec.axes = {{"B", {0.1, 0.2}}};
        CHECK_THROWS_AS(dsa::run_sweep(spec), Error);
    }
    SECTION("unknown axis name") {
        spec.axes = {{"gamma", {0.1}}};
        CHECK_THROWS_AS(dsa::run_sweep(spec), Error);
    }
}

TEST_CASE("grid sweep matches direct evaluation cell by cell") {
    SweepSpec spec;
    spec.axes = {{"B", dsa::linspace(0.0, 1.0, 21)}, {"theta", dsa::linspace(0.0, kPi, 21)}};
    spec.fixed = {{"g", 0.1}, {"sigma", 1.0}};
    spec.quantities = {"dsa_snr_reduced"};
    const dsa::SweepTable table = dsa::run_sweep(spec);
    REQUIRE(table.row_count == 21 * 21);
    const MeterConfig meter = MeterConfig::from_strength(0.1, 1.0);
    for (std::size_t row = 0; row < table.row_count; ++row) {
        const PpsConfig pps =
            PpsConfig::from_weight_diff(table.coordinate(row, 0), table.coordinate(row, 1));
        const auto& cell = table.cell(row, 0);
        try {
            const double direct = dsa::dsa_snr(pps, meter, 1).reduced;
            REQUIRE(cell.ok);
            CHECK(cell.value == direct);
        } catch (const Error&) {
            CHECK_FALSE(cell.ok);
        }
    }
}

TEST_CASE("monte carlo overlay quantities") {
    SweepSpec spec;
    spec.axes = {{"theta", {0.3, 0.8}}};
    spec.fixed = {{"B", 0.2}, {"d", 0.1}, {"sigma", 1.0}};
    spec.quantities = {"mc_xbar", "mc_d_hat"};
    SECTION("missing overlay is a config error") {
        CHECK_THROWS_AS(dsa::run_sweep(spec), Error);
    }
    SECTION("overlay points land near the analytic signal") {
        spec.mc = dsa::McOverlay{200000, 7};
        const dsa::SweepTable table = dsa::run_sweep(spec);
        for (std::size_t row = 0; row < table.row_count; ++row) {
            REQUIRE(table.cell(row, 0).ok);
            CHECK(table.cell(row, 0).value == Approx(0.5).margin(0.05));
            CHECK(table.cell(row, 1).value == Approx(0.1).margin(0.01));
        }
        // deterministic given the overlay seed
        const dsa::SweepTable again = dsa::run_sweep(spec);
        CHECK(again.cell(0, 0).value == table.cell(0, 0).value);
        CHECK(again.cell(1, 0).value == table.cell(1, 0).value);
    }
}

TEST_CASE("sweep csv shape and sentinel discipline") {
    SweepSpec spec;
    spec.axes = {{"theta", {0.5, kPi / 2.0}}};
    spec.fixed = {{"B", 0.4}, {"d", 0.1}, {"sigma", 1.0}};
    spec.quantities = {"beta1"};
    const dsa::SweepTable table = dsa::run_sweep(spec);
    std::ostringstream out;
    table.write_csv(out, {{"content", "test"}});
    const std::string text = out.str();
    CHECK(text.find("theta,beta1") != std::string::npos);
    CHECK(text.find("DEGENERATE:balance") != std::string::npos);
    CHECK(text.find("nan") == std::string::npos);
    CHECK(text.find("inf") == std::string::npos);
}

TEST_CASE("figure emission", "[figures]") {
    const std::filesystem::path dir =
        std::filesystem::temp_directory_path() / "dsa_fig_test";
    std::filesystem::remove_all(dir);

    SECTION("figure 1 files and the ratio-factor anchors") {
        const auto written = dsa::write_figure(1, dir);
        REQUIRE(written.size() == 2);
        const std::string factors = slurp(dir / written[0]);
        CHECK(factors.find("B,theta,beta1,beta2") != std::string::npos);
        CHECK(factors.find("DEGENERATE:balance") != std::string::npos);
        const std::string means = slurp(dir / written[1]);
        CHECK(means.find("B,theta,x_f,x_fbar") != std::string::npos);
    }
    SECTION("figure 2 variance anchor at theta = 0 is exactly 2.5") {
        const auto written = dsa::write_figure(2, dir);
        REQUIRE(written.size() == 1);
        std::ifstream in(dir / written[0]);
        std::string line;
        bool found = false;
        while (std::getline(in, line)) {
            if (line.rfind("0.25,0,", 0) == 0) { // B = 0.25 row, theta = 0
                CHECK(line == "0.25,0,2.5,2.5");
                found = true;
            }
        }
        CHECK(found);
    }
    SECTION("figure 3 strength scan pins theta = 0 rows at exactly one") {
        const auto written = dsa::write_figure(3, dir);
        REQUIRE(written.size() == 2);
        std::ifstream in(dir / written[1]);
        std::string line;
        int anchors = 0;
        while (std::getline(in, line)) {
            if (line.rfind("0,", 0) == 0) { // theta = 0 rows
                CHECK(line.substr(line.rfind(',') + 1) == "1");
                ++anchors;
            }
        }
        CHECK(anchors == 201);
    }

    SECTION("figure 4 ridge and clip flag") {
        const auto written = dsa::write_figure(4, dir);
        const std::string text = slurp(dir / written[0]);
        CHECK(text.find("B,theta,abs_bdsa_signal,clipped") != std::string::npos);
        // the only degenerate cells are the two empty-channel corners
        // (B = 1 with theta = 0 or pi)
        std::size_t sentinels = 0;
        for (std::size_t pos = text.find("DEGENERATE"); pos != std::string::npos;
             pos = text.find("DEGENERATE", pos + 1))
            ++sentinels;
        CHECK(sentinels == 2);
        CHECK(text.find("DEGENERATE:postselection") != std::string::npos);
        // at least one clipped cell near the eta = 2 ridge
        CHECK(text.find(",1\n") != std::string::npos);
    }
    SECTION("figures are byte-identical on re-run") {
        for (int id = 1; id <= 5; ++id) {
            const auto first = dsa::write_figure(id, dir / "a");
            const auto second = dsa::write_figure(id, dir / "b");
            REQUIRE(first == second);
            for (const auto& name : first) CHECK(slurp(dir / "a" / name) ==
                                                 slurp(dir / "b" / name));
        }
    }
    std::filesystem::remove_all(dir);
}
