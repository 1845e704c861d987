#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "dsa/csv.hpp"
#include "dsa/error.hpp"
#include "dsa/sweep.hpp"

namespace dsa {

namespace figures_detail {

inline constexpr double kPi = 3.1415926535897932;
inline constexpr double kClipLimit = 1e3;

inline std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) raise(ErrorKind::io, "cannot open " + path.string() + " for writing");
    return out;
}

inline void write_plain(const SweepTable& table, const std::filesystem::path& path,
                        std::vector<std::pair<std::string, std::string>> metadata) {
    std::ofstream out = open_out(path);
    table.write_csv(out, metadata);
}

/// Surface export with magnitudes clipped at kClipLimit and a trailing
/// flag column marking rows where clipping fired; singular ridges would
/// otherwise dominate any downstream plot scale.
inline void write_clipped(const SweepTable& table, const std::filesystem::path& path,
                          std::vector<std::pair<std::string, std::string>> metadata,
                          bool magnitudes) {
    metadata.emplace_back("clip_limit", format_double(kClipLimit));
    std::ofstream stream = open_out(path);
    CsvWriter writer(stream);
    writer.comment("artifact", std::string(kArtifactName) + " " + kArtifactVersion);
    for (const auto& [key, value] : metadata) writer.comment(key, value);
    std::vector<std::string> columns = table.axis_names;
    for (const auto& name : table.quantity_names)
        columns.push_back(magnitudes ? "abs_" + name : name);
    columns.push_back("clipped");
    writer.header(columns);
    std::vector<std::string> row(columns.size());
    for (std::size_t r = 0; r < table.row_count; ++r) {
        for (std::size_t a = 0; a < table.axis_names.size(); ++a)
            row[a] = format_double(table.coordinate(r, a));
        bool clipped = false;
        for (std::size_t q = 0; q < table.quantity_names.size(); ++q) {
            const SweepCell& cell = table.cell(r, q);
            if (!cell.ok) {
                row[table.axis_names.size() + q] = cell.text();
                continue;
            }
            double value = magnitudes ? std::fabs(cell.value) : cell.value;
            if (std::fabs(value) > kClipLimit) {
                value = std::copysign(kClipLimit, value);
                clipped = true;
            }
            row[table.axis_names.size() + q] = format_double(value);
        }
        row.back() = clipped ? "1" : "0";
        writer.row_of_strings(row);
    }
}

} // namespace figures_detail

/// Emits the CSV data behind one of the five summary figures into
/// out_dir and returns the file names written. Grids are fixed by this
/// artifact version, so re-running a figure reproduces identical bytes.
inline std::vector<std::string> write_figure(int id, const std::filesystem::path& out_dir) {
    using figures_detail::kPi;
    namespace fd = figures_detail;
    std::filesystem::create_directories(out_dir);
    std::vector<std::string> written;

    switch (id) {
        case 1: {
            // Ratio factors and sub-ensemble means vs theta for a few B.
            SweepSpec factors;
            factors.axes = {{"B", {0.2, 0.5, 0.8}}, {"theta", linspace(0.0, kPi, 201)}};
            factors.quantities = {"beta1", "beta2"};
            fd::write_plain(run_sweep(factors), out_dir / "fig1_ratio_factors.csv",
                            {{"figure", "1a"},
                             {"B_values", "0.2,0.5,0.8"},
                             {"theta_axis", "0..pi, 201 points"}});
            written.push_back("fig1_ratio_factors.csv");

            SweepSpec means = factors;
            means.fixed = {{"d", 1.0}, {"sigma", 1.0}};
            means.quantities = {"x_f", "x_fbar"};
            fd::write_plain(run_sweep(means), out_dir / "fig1_subensemble_means.csv",
                            {{"figure", "1b"},
                             {"B_values", "0.2,0.5,0.8"},
                             {"theta_axis", "0..pi, 201 points"},
                             {"d", "1"},
                             {"note", "means are in units of the shift d"}});
            written.push_back("fig1_subensemble_means.csv");
            break;
        }
        case 2: {
            // Sub-ensemble variances over (B, theta) at sigma^2/d^2 = 2.5,
            // i.e. g = 0.1; the ratio route keeps the theta = 0 value exact.
            SweepSpec spec;
            spec.axes = {{"B", linspace(0.0, 1.0, 101)}, {"theta", linspace(0.0, kPi, 101)}};
            spec.fixed = {{"g", 0.1}};
            spec.quantities = {"var1_over_d2", "var2_over_d2"};
            fd::write_plain(run_sweep(spec), out_dir / "fig2_subensemble_variances.csv",
                            {{"figure", "2"},
                             {"sigma2_over_d2", "2.5"},
                             {"note", "variances are in units of d^2"}});
            written.push_back("fig2_subensemble_variances.csv");
            break;
        }
        case 3: {
            // Reduced SNR over (B, theta) at g = 0.1 ...
            SweepSpec surface;
            surface.axes = {{"B", linspace(0.0, 1.0, 101)},
                            {"theta", linspace(0.0, kPi, 101)}};
            surface.fixed = {{"g", 0.1}, {"sigma", 1.0}};
            surface.quantities = {"dsa_snr_reduced"};
            fd::write_plain(run_sweep(surface), out_dir / "fig3_snr_vs_B_theta.csv",
                            {{"figure", "3a"}, {"g", "0.1"}});
            written.push_back("fig3_snr_vs_B_theta.csv");

            // ... and its weak dependence on g at B = 0.2.
            SweepSpec strength;
            strength.axes = {{"theta", {0.0, kPi / 6.0, kPi / 4.0, kPi / 3.0}},
                             {"g", logspace(1e-4, 1.0, 201)}};
            strength.fixed = {{"B", 0.2}, {"sigma", 1.0}};
            strength.quantities = {"dsa_snr_reduced"};
            fd::write_plain(run_sweep(strength), out_dir / "fig3_snr_vs_g.csv",
                            {{"figure", "3b"},
                             {"B", "0.2"},
                             {"theta_values", "0,pi/6,pi/4,pi/3"},
                             {"g_axis", "1e-4..1, 201 points, log-spaced"}});
            written.push_back("fig3_snr_vs_g.csv");
            break;
        }
        case 4: {
            // Singular amplification of the biased signal at beta = 2.
            SweepSpec spec;
            spec.axes = {{"B", linspace(0.0, 1.0, 101)}, {"theta", linspace(0.0, kPi, 101)}};
            spec.fixed = {{"beta_bias", 2.0}, {"d", 1.0}, {"sigma", 1.0}};
            spec.quantities = {"bdsa_signal"};
            fd::write_clipped(run_sweep(spec), out_dir / "fig4_bdsa_signal.csv",
                              {{"figure", "4"},
                               {"beta_bias", "2"},
                               {"note", "signal magnitude in units of d"}},
                              /*magnitudes=*/true);
            written.push_back("fig4_bdsa_signal.csv");
            break;
        }
        case 5: {
            // Reduced BDSA SNR surfaces at beta = 0.4 and beta = 2, g = 0.1.
            const std::vector<std::pair<double, std::string>> variants = {
                {0.4, "fig5_bdsa_snr_beta04.csv"}, {2.0, "fig5_bdsa_snr_beta2.csv"}};
            for (const auto& [bias, name] : variants) {
                SweepSpec spec;
                spec.axes = {{"B", linspace(0.0, 1.0, 101)},
                             {"theta", linspace(0.0, kPi, 101)}};
                spec.fixed = {{"beta_bias", bias}, {"g", 0.1}, {"sigma", 1.0}};
                spec.quantities = {"bdsa_snr_reduced", "bdsa_snr_reduced_approx"};
                fd::write_clipped(run_sweep(spec), out_dir / name,
                                  {{"figure", "5"},
                                   {"beta_bias", format_double(bias)},
                                   {"g", "0.1"}},
                                  /*magnitudes=*/false);
                written.push_back(name);
            }
            break;
        }
        default:
            raise(ErrorKind::domain, "figure id must be in 1..5");
    }
    return written;
}

} // namespace dsa
