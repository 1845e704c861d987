// dsa: difference-signal amplification toolkit.
//
// Subcommands: analytic, simulate, estimate, replicate, sweep, figure.
// Exit codes: 0 success, 2 configuration error, 3 structural degeneracy,
// 4 I/O failure.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dsa/analytic.hpp"
#include "dsa/batch_io.hpp"
#include "dsa/config.hpp"
#include "dsa/csv.hpp"
#include "dsa/error.hpp"
#include "dsa/estimators.hpp"
#include "dsa/figures.hpp"
#include "dsa/manifest.hpp"
#include "dsa/sampler.hpp"
#include "dsa/sweep.hpp"
#include "dsa/version.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitDegenerate = 3;
constexpr int kExitIo = 4;

struct CommonArgs {
    std::string config_path;
    std::string out_flag;
    std::optional<std::uint64_t> seed_override;
    std::string format = "csv";
};

dsa::RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) dsa::raise(dsa::ErrorKind::io, "cannot open config file " + path);
    std::ostringstream text;
    text << in.rdbuf();
    return dsa::parse_config(text.str());
}

fs::path resolve_out_dir(const CommonArgs& args, const dsa::RunConfig* config) {
    if (!args.out_flag.empty()) return args.out_flag;
    if (config && config->out_dir) return *config->out_dir;
    if (const char* env = std::getenv("DSA_OUT_DIR"); env && *env) return env;
    return ".";
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) dsa::raise(dsa::ErrorKind::io, "cannot create directory " + dir.string());
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path);
    if (!out) dsa::raise(dsa::ErrorKind::io, "cannot open " + path.string() + " for writing");
    return out;
}

std::vector<std::string> g_argv; // full argument list, recorded in manifests

void finish_manifest(const fs::path& dir, const std::string& subcommand,
                     const dsa::RunConfig* config, std::uint64_t seed,
                     const std::vector<std::string>& outputs) {
    dsa::RunManifest manifest;
    manifest.subcommand = subcommand;
    manifest.args = g_argv;
    manifest.config_text = config ? dsa::render_config(*config) : "";
    manifest.seed = seed;
    for (const auto& name : outputs) manifest.outputs.push_back(dsa::record_output(dir, name));
    dsa::write_manifest(dir, manifest);
}

// Two-column quantity/value table; degenerate entries carry sentinels.
class QuantityReport {
public:
    void add(const std::string& name, double value) {
        rows_.emplace_back(name, dsa::format_double(value));
    }
    template <class Fn>
    void add_checked(const std::string& name, Fn&& fn) {
        try {
            rows_.emplace_back(name, dsa::format_double(fn()));
        } catch (const dsa::Error& e) {
            if (!e.is_degeneracy()) throw;
            rows_.emplace_back(name, dsa::degenerate_token(e.kind()));
        }
    }
    void add_text(const std::string& name, const std::string& value) {
        rows_.emplace_back(name, value);
    }

    void write_csv(std::ostream& out, const std::string& content) const {
        dsa::CsvWriter writer(out);
        writer.comment("artifact", std::string(dsa::kArtifactName) + " " +
                                       dsa::kArtifactVersion);
        writer.comment("content", content);
        writer.header({"quantity", "value"});
        for (const auto& [name, value] : rows_) writer.row_of_strings({name, value});
    }
    void print(std::ostream& out) const {
        for (const auto& [name, value] : rows_) out << name << " = " << value << "\n";
    }

private:
    std::vector<std::pair<std::string, std::string>> rows_;
};

int run_analytic(const CommonArgs& args) {
    const dsa::RunConfig config = load_config(args.config_path);
    const dsa::PpsConfig pps = config.pps();
    const dsa::MeterConfig meter = config.meter();
    const fs::path dir = resolve_out_dir(args, &config);
    ensure_dir(dir);

    QuantityReport report;
    report.add("p_f", dsa::postselection_probs(pps).accept);
    report.add("p_fbar", dsa::postselection_probs(pps).reject);
    report.add_checked("x_f", [&] { return dsa::subensemble_means(pps, meter).accepted; });
    report.add_checked("x_fbar", [&] { return dsa::subensemble_means(pps, meter).rejected; });
    report.add_checked("beta1", [&] { return dsa::ratio_factors(pps).accepted; });
    report.add_checked("beta2", [&] { return dsa::ratio_factors(pps).rejected; });
    report.add_checked("dsa_signal", [&] { return dsa::dsa_signal(pps, meter); });
    report.add_checked("var1", [&] { return dsa::subensemble_variances(pps, meter).accepted; });
    report.add_checked("var2", [&] { return dsa::subensemble_variances(pps, meter).rejected; });
    report.add_checked("dsa_variance",
                       [&] { return dsa::dsa_variance(pps, meter, config.particles); });
    report.add_checked("dsa_snr",
                       [&] { return dsa::dsa_snr(pps, meter, config.particles).snr; });
    report.add_checked("dsa_snr_reduced",
                       [&] { return dsa::dsa_snr(pps, meter, config.particles).reduced; });
    if (config.bias) {
        const double bias = *config.bias;
        report.add("beta_bias", bias);
        report.add_checked("bdsa_signal",
                           [&] { return dsa::bdsa_signal(pps, meter, bias).exact; });
        report.add_checked("bdsa_signal_approx",
                           [&] { return dsa::bdsa_signal(pps, meter, bias).approx; });
        const auto precision = [&] {
            return dsa::bdsa_precision(pps, meter, bias, config.particles);
        };
        report.add_checked("bdsa_variance", [&] { return precision().variance; });
        report.add_checked("bdsa_variance_approx",
                           [&] { return precision().variance_approx; });
        report.add_checked("bdsa_snr", [&] { return precision().snr; });
        report.add_checked("bdsa_snr_approx", [&] { return precision().snr_approx; });
        report.add_checked("bdsa_snr_reduced", [&] { return precision().snr_reduced; });
        report.add_checked("bdsa_snr_reduced_approx",
                           [&] { return precision().snr_reduced_approx; });
    }

    report.print(std::cout);
    {
        auto out = open_out(dir / "analytic.csv");
        report.write_csv(out, "closed-form quantities");
    }
    finish_manifest(dir, "analytic", &config, config.seed, {"analytic.csv"});
    return kExitOk;
}

void write_estimate_csv(const fs::path& path, const dsa::DsaEstimate& estimate,
                        const std::string& content,
                        const std::optional<dsa::DifferenceMeanEstimate>& diff_route = {}) {
    QuantityReport report;
    report.add("xbar", estimate.xbar);
    report.add("variance", estimate.variance);
    report.add("snr", estimate.snr);
    if (std::isfinite(estimate.d_hat)) {
        report.add("d_hat", estimate.d_hat);
    } else {
        report.add_text("d_hat", dsa::degenerate_token(dsa::ErrorKind::degenerate_balance));
    }
    report.add_text("n1", dsa::format_u64(estimate.n1));
    report.add_text("n2", dsa::format_u64(estimate.n2));
    report.add_text("mode", estimate.biased
                                ? "biased(" + dsa::format_double(estimate.bias) + ")"
                                : "unbiased");
    std::string flags;
    for (const auto& flag : estimate.flags) flags += (flags.empty() ? "" : ";") + flag;
    report.add_text("flags", flags.empty() ? "none" : flags);
    if (diff_route) {
        report.add("xbar_hist_diff", diff_route->xbar);
        report.add("d_hat_hist_diff", diff_route->d_hat);
    }
    auto out = open_out(path);
    report.write_csv(out, content);
}

int run_simulate(const CommonArgs& args) {
    dsa::RunConfig config = load_config(args.config_path);
    if (args.seed_override) config.seed = *args.seed_override;
    const dsa::PpsConfig pps = config.pps();
    const dsa::MeterConfig meter = config.meter();
    // Fail fast if the requested estimator is structurally degenerate.
    if (config.bias) {
        dsa::bdsa_signal(pps, meter, *config.bias);
    } else {
        dsa::dsa_signal(pps, meter);
    }
    const fs::path dir = resolve_out_dir(args, &config);
    ensure_dir(dir);

    const dsa::SampleBatch batch = dsa::sample_batch(
        pps, meter, config.particles, config.seed, config.imperfection(), config.histograms);
    const dsa::DsaEstimate estimate =
        config.bias ? dsa::estimate_bdsa(batch, *config.bias) : dsa::estimate_dsa(batch);

    std::vector<std::string> outputs;
    dsa::save_batch(dir / "batch.txt", batch);
    outputs.push_back("batch.txt");
    // with histograms on, cross-report the difference-histogram route,
    // where channel-identical background cancels exactly
    std::optional<dsa::DifferenceMeanEstimate> diff_route;
    if (batch.hist1 && !config.bias) {
        try {
            diff_route = dsa::estimate_from_difference(*batch.hist1, *batch.hist2, pps);
        } catch (const dsa::Error& e) {
            if (!e.is_degeneracy()) throw; // in-range counts can balance by chance
        }
    }
    write_estimate_csv(dir / "estimate.csv", estimate, "estimate from simulated batch",
                       diff_route);
    outputs.push_back("estimate.csv");
    if (batch.hist1) {
        {
            auto out = open_out(dir / "hist_accepted.csv");
            dsa::write_histogram_csv(out, *batch.hist1, "accepted-channel histogram");
        }
        {
            auto out = open_out(dir / "hist_rejected.csv");
            dsa::write_histogram_csv(out, *batch.hist2, "rejected-channel histogram");
        }
        outputs.push_back("hist_accepted.csv");
        outputs.push_back("hist_rejected.csv");
    }
    std::cout << "n1 = " << batch.n1 << ", n2 = " << batch.n2
              << ", xbar = " << dsa::format_double(estimate.xbar)
              << ", d_hat = " << dsa::format_double(estimate.d_hat) << "\n";
    finish_manifest(dir, "simulate", &config, config.seed, outputs);
    return kExitOk;
}

int run_estimate(const CommonArgs& args, const std::string& batch_path,
                 const std::string& histogram_path) {
    if (batch_path.empty() == histogram_path.empty())
        dsa::raise(dsa::ErrorKind::domain, "give exactly one of --batch or --histogram");

    std::optional<dsa::RunConfig> config;
    if (!args.config_path.empty()) config = load_config(args.config_path);
    const fs::path dir = resolve_out_dir(args, config ? &*config : nullptr);
    ensure_dir(dir);

    dsa::DsaEstimate estimate;
    std::uint64_t seed = 0;
    if (!batch_path.empty()) {
        const dsa::SampleBatch batch = dsa::load_batch(batch_path);
        seed = batch.seeds.empty() ? 0 : batch.seeds.front();
        const std::optional<double> bias = config ? config->bias : std::nullopt;
        estimate = bias ? dsa::estimate_bdsa(batch, *bias) : dsa::estimate_dsa(batch);
        write_estimate_csv(dir / "estimate.csv", estimate, "estimate from saved batch");
    } else {
        if (!config)
            dsa::raise(dsa::ErrorKind::domain,
                       "--histogram needs --config for the pre/post-selection model");
        const dsa::CountHistogram total = dsa::read_histogram_csv(histogram_path);
        const dsa::SplitHistograms split =
            dsa::postprocess_split(total, config->pps(), config->meter());
        estimate = dsa::estimate_dsa_from_histograms(split.accepted, split.rejected,
                                                     config->pps());
        if (!split.flagged_bins.empty())
            estimate.flags.push_back("split-underflow-bins:" +
                                     std::to_string(split.flagged_bins.size()));
        write_estimate_csv(dir / "estimate.csv", estimate,
                           "estimate from post-processed total histogram");
    }
    std::cout << "xbar = " << dsa::format_double(estimate.xbar)
              << ", d_hat = " << dsa::format_double(estimate.d_hat) << "\n";
    finish_manifest(dir, "estimate", config ? &*config : nullptr, seed, {"estimate.csv"});
    return kExitOk;
}

int run_replicate(const CommonArgs& args) {
    dsa::RunConfig config = load_config(args.config_path);
    if (args.seed_override) config.seed = *args.seed_override;
    const dsa::ReplicateSummary summary =
        dsa::replicate_study(config.pps(), config.meter(), config.particles,
                             config.replicates, config.seed, config.bias);
    const fs::path dir = resolve_out_dir(args, &config);
    ensure_dir(dir);

    QuantityReport report;
    report.add_text("replicates", dsa::format_u64(summary.replicates));
    report.add_text("excluded", dsa::format_u64(summary.excluded));
    report.add("empirical_mean", summary.empirical_mean);
    report.add("empirical_variance", summary.empirical_variance);
    report.add("analytic_variance", summary.analytic_variance);
    report.add("ratio", summary.ratio);
    report.add_text("mode", summary.biased
                                ? "biased(" + dsa::format_double(summary.bias) + ")"
                                : "unbiased");
    {
        auto out = open_out(dir / "replicate.csv");
        report.write_csv(out, "replicate study");
    }
    report.print(std::cout);
    finish_manifest(dir, "replicate", &config, config.seed, {"replicate.csv"});
    return kExitOk;
}

// Axis syntax: name=lo:hi:count, name=lo:hi:count:log, or name=v1,v2,...
dsa::SweepAxis parse_axis(const std::string& text) {
    const auto eq = text.find('=');
    if (eq == std::string::npos)
        dsa::raise(dsa::ErrorKind::domain, "axis syntax: name=lo:hi:count[:log] or name=v1,v2,...");
    dsa::SweepAxis axis;
    axis.name = text.substr(0, eq);
    const std::string rest = text.substr(eq + 1);
    if (rest.find(':') != std::string::npos) {
        std::vector<std::string> parts;
        std::size_t pos = 0;
        while (true) {
            const auto colon = rest.find(':', pos);
            parts.push_back(rest.substr(pos, colon == std::string::npos ? std::string::npos
                                                                        : colon - pos));
            if (colon == std::string::npos) break;
            pos = colon + 1;
        }
        if (parts.size() != 3 && !(parts.size() == 4 && parts[3] == "log"))
            dsa::raise(dsa::ErrorKind::domain, "axis range syntax: lo:hi:count[:log]");
        const double lo = dsa::parse_double(parts[0], "axis lo");
        const double hi = dsa::parse_double(parts[1], "axis hi");
        const auto count = dsa::parse_u64(parts[2], "axis count");
        axis.values = parts.size() == 4 ? dsa::logspace(lo, hi, count)
                                        : dsa::linspace(lo, hi, count);
    } else {
        std::size_t pos = 0;
        while (true) {
            const auto comma = rest.find(',', pos);
            const std::string item = rest.substr(
                pos, comma == std::string::npos ? std::string::npos : comma - pos);
            axis.values.push_back(dsa::parse_double(item, "axis value"));
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
    }
    return axis;
}

int run_sweep_cmd(const CommonArgs& args, const std::vector<std::string>& axis_specs,
                  const std::vector<std::string>& quantities) {
    dsa::RunConfig config = load_config(args.config_path);
    if (args.seed_override) config.seed = *args.seed_override;

    dsa::SweepSpec spec;
    for (const auto& text : axis_specs) spec.axes.push_back(parse_axis(text));
    spec.quantities = quantities;

    const auto on_axis = [&](const std::string& name) {
        for (const auto& axis : spec.axes)
            if (axis.name == name) return true;
        return false;
    };
    if (!on_axis("B")) spec.fixed["B"] = config.weight_diff;
    if (!on_axis("theta")) spec.fixed["theta"] = config.theta;
    if (!on_axis("g")) spec.fixed["d"] = config.shift;
    spec.fixed["sigma"] = config.width;
    if (!on_axis("N")) spec.fixed["N"] = static_cast<double>(config.particles);
    if (config.bias && !on_axis("beta_bias")) spec.fixed["beta_bias"] = *config.bias;
    for (const auto& quantity : quantities)
        if (quantity.rfind("mc_", 0) == 0) {
            spec.mc = dsa::McOverlay{config.particles, config.seed};
            break;
        }

    const dsa::SweepTable table = dsa::run_sweep(spec);
    const fs::path dir = resolve_out_dir(args, &config);
    ensure_dir(dir);
    {
        auto out = open_out(dir / "sweep.csv");
        std::vector<std::pair<std::string, std::string>> metadata = {
            {"content", "parameter sweep"}};
        for (const auto& text : axis_specs) metadata.emplace_back("axis", text);
        for (const auto& [key, value] : spec.fixed)
            metadata.emplace_back("fixed " + key, dsa::format_double(value));
        if (spec.mc) {
            metadata.emplace_back("mc_particles", dsa::format_u64(spec.mc->particles));
            metadata.emplace_back("mc_base_seed", dsa::format_u64(spec.mc->base_seed));
        }
        table.write_csv(out, metadata);
    }
    std::cout << "sweep.csv: " << table.row_count << " rows\n";
    finish_manifest(dir, "sweep", &config, config.seed, {"sweep.csv"});
    return kExitOk;
}

int run_figure(const CommonArgs& args, int id) {
    std::optional<dsa::RunConfig> config;
    if (!args.config_path.empty()) config = load_config(args.config_path);
    const fs::path dir = resolve_out_dir(args, config ? &*config : nullptr);
    ensure_dir(dir);
    const std::vector<std::string> outputs = dsa::write_figure(id, dir);
    for (const auto& name : outputs) std::cout << name << "\n";
    finish_manifest(dir, "figure " + std::to_string(id), config ? &*config : nullptr, 0,
                    outputs);
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    for (int i = 1; i < argc; ++i) g_argv.emplace_back(argv[i]);
    CLI::App app{"difference-signal amplification toolkit"};
    app.require_subcommand(1);

    CommonArgs common;
    std::string batch_path;
    std::string histogram_path;
    std::vector<std::string> axis_specs;
    std::vector<std::string> quantities;
    int figure_id = 0;

    const auto add_common = [&](CLI::App* cmd, bool config_required) {
        auto* opt = cmd->add_option("--config", common.config_path, "configuration file");
        if (config_required) opt->required();
        cmd->add_option("--out", common.out_flag, "output directory");
        cmd->add_option("--seed", common.seed_override, "override the config seed");
        cmd->add_option("--format", common.format, "output format (csv)")
            ->check(CLI::IsMember({"csv"}));
    };

    auto* analytic = app.add_subcommand("analytic", "closed-form quantities for one config");
    add_common(analytic, true);
    auto* simulate = app.add_subcommand("simulate", "Monte Carlo batch plus estimate");
    add_common(simulate, true);
    auto* estimate =
        app.add_subcommand("estimate", "estimate from a saved batch or a total histogram");
    add_common(estimate, false);
    estimate->add_option("--batch", batch_path, "saved batch file");
    estimate->add_option("--histogram", histogram_path,
                         "total-histogram CSV split by post-processing");
    auto* replicate = app.add_subcommand("replicate", "replicated-run variance study");
    add_common(replicate, true);
    auto* sweep = app.add_subcommand("sweep", "grid evaluation to CSV");
    add_common(sweep, true);
    sweep->add_option("--axis", axis_specs, "axis: name=lo:hi:count[:log] or name=v1,v2,...")
        ->required();
    sweep->add_option("--quantity", quantities, "quantity column to evaluate")->required();
    auto* figure = app.add_subcommand("figure", "emit the CSV grid behind one figure");
    add_common(figure, false);
    figure->add_option("id", figure_id, "figure id (1..5)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (app.got_subcommand(analytic)) return run_analytic(common);
        if (app.got_subcommand(simulate)) return run_simulate(common);
        if (app.got_subcommand(estimate))
            return run_estimate(common, batch_path, histogram_path);
        if (app.got_subcommand(replicate)) return run_replicate(common);
        if (app.got_subcommand(sweep)) return run_sweep_cmd(common, axis_specs, quantities);
        if (app.got_subcommand(figure)) return run_figure(common, figure_id);
    } catch (const dsa::Error& e) {
        std::cerr << "error (" << dsa::error_kind_name(e.kind()) << "): " << e.what() << "\n";
        if (e.kind() == dsa::ErrorKind::unknown_quantity) {
            std::cerr << "available quantities:";
            for (const auto& name : dsa::sweep_quantity_names()) std::cerr << " " << name;
            std::cerr << "\n";
        }
        if (e.kind() == dsa::ErrorKind::io) return kExitIo;
        return e.is_degeneracy() ? kExitDegenerate : kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kExitOk;
}
