#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "dsa/analytic.hpp"
#include "dsa/csv.hpp"
#include "dsa/error.hpp"
#include "dsa/estimators.hpp"
#include "dsa/pps.hpp"
#include "dsa/sampler.hpp"
#include "dsa/version.hpp"

namespace dsa {

/// One grid dimension. Axis names use the user-facing symbols:
/// B, theta, g, beta_bias, N.
struct SweepAxis {
    std::string name;
    std::vector<double> values;
};

/// Monte Carlo overlay: per-row batches of n particles with seed
/// base_seed + row index.
struct McOverlay {
    std::uint64_t particles;
    std::uint64_t base_seed;
};

/// Grid request: axes (outer to inner), fixed parameters for everything
/// not on an axis (keys: B, theta, g, d, sigma, beta_bias, N), and the
/// quantity columns to evaluate.
struct SweepSpec {
    std::vector<SweepAxis> axes;
    std::map<std::string, double> fixed;
    std::vector<std::string> quantities;
    std::optional<McOverlay> mc;
};

namespace sweep_detail {

struct Point {
    std::optional<double> weight_diff;
    std::optional<double> theta;
    std::optional<double> strength;
    std::optional<double> shift;
    std::optional<double> width;
    std::optional<double> bias;
    std::optional<double> particles;

    void set(const std::string& name, double value) {
        if (name == "B") weight_diff = value;
        else if (name == "theta") theta = value;
        else if (name == "g") strength = value;
        else if (name == "d") shift = value;
        else if (name == "sigma") width = value;
        else if (name == "beta_bias") bias = value;
        else if (name == "N") particles = value;
        else raise(ErrorKind::domain, "unknown sweep parameter '" + name + "'");
    }

    PpsConfig pps() const {
        if (!weight_diff || !theta)
            raise(ErrorKind::domain, "sweep point is missing B or theta");
        return PpsConfig::from_weight_diff(*weight_diff, *theta);
    }

    MeterConfig meter() const {
        const double w = width.value_or(1.0);
        if (shift && strength)
            raise(ErrorKind::domain, "give either d or g, not both");
        if (shift) return MeterConfig::from_shift(*shift, w);
        if (strength) return MeterConfig::from_strength(*strength, w);
        raise(ErrorKind::domain, "sweep point is missing d or g");
    }

    double bias_value() const {
        if (!bias) raise(ErrorKind::domain, "sweep point is missing beta_bias");
        return *bias;
    }

    /// sigma^2/d^2; computed as 1/(4g) when the strength is given directly.
    double width_sq_ratio() const {
        if (strength) {
            if (!(*strength > 0.0))
                raise(ErrorKind::domain, "sigma^2/d^2 needs strength g > 0");
            return 1.0 / (4.0 * *strength);
        }
        const MeterConfig m = meter();
        if (m.shift == 0.0) raise(ErrorKind::domain, "sigma^2/d^2 needs a nonzero shift");
        const double ratio = m.width / m.shift;
        return ratio * ratio;
    }

    std::uint64_t n() const {
        if (!particles || !(*particles >= 1.0))
            raise(ErrorKind::domain, "sweep point is missing N (>= 1)");
        return static_cast<std::uint64_t>(*particles);
    }
};

struct RowContext {
    const Point& point;
    const std::optional<McOverlay>& mc;
    std::uint64_t row;
    // one batch/estimate per row, shared by the mc_* quantities
    mutable std::optional<DsaEstimate> mc_estimate;

    const DsaEstimate& estimate() const {
        if (!mc_estimate) {
            if (!mc) raise(ErrorKind::domain, "mc_* quantities need an mc overlay");
            const SampleBatch batch = sample_batch(point.pps(), point.meter(),
                                                   mc->particles, mc->base_seed + row);
            mc_estimate = point.bias ? estimate_bdsa(batch, *point.bias)
                                     : estimate_dsa(batch);
        }
        return *mc_estimate;
    }
};

using Evaluator = std::function<double(const RowContext&)>;

inline const std::map<std::string, Evaluator>& quantity_registry() {
    static const std::map<std::string, Evaluator> registry = {
        {"p_f", [](const RowContext& c) { return postselection_probs(c.point.pps()).accept; }},
        {"p_fbar",
         [](const RowContext& c) { return postselection_probs(c.point.pps()).reject; }},
        {"x_f",
         [](const RowContext& c) {
             return subensemble_means(c.point.pps(), c.point.meter()).accepted;
         }},
        {"x_fbar",
         [](const RowContext& c) {
             return subensemble_means(c.point.pps(), c.point.meter()).rejected;
         }},
        {"beta1", [](const RowContext& c) { return ratio_factors(c.point.pps()).accepted; }},
        {"beta2", [](const RowContext& c) { return ratio_factors(c.point.pps()).rejected; }},
        {"dsa_signal",
         [](const RowContext& c) { return dsa_signal(c.point.pps(), c.point.meter()); }},
        {"var1",
         [](const RowContext& c) {
             return subensemble_variances(c.point.pps(), c.point.meter()).accepted;
         }},
        {"var2",
         [](const RowContext& c) {
             return subensemble_variances(c.point.pps(), c.point.meter()).rejected;
         }},
        {"var1_over_d2",
         [](const RowContext& c) {
             return subensemble_variances_over_shift_sq(c.point.pps(),
                                                        c.point.width_sq_ratio())
                 .accepted;
         }},
        {"var2_over_d2",
         [](const RowContext& c) {
             return subensemble_variances_over_shift_sq(c.point.pps(),
                                                        c.point.width_sq_ratio())
                 .rejected;
         }},
        {"dsa_variance",
         [](const RowContext& c) {
             return dsa_variance(c.point.pps(), c.point.meter(), c.point.n());
         }},
        {"dsa_snr",
         [](const RowContext& c) {
             return dsa_snr(c.point.pps(), c.point.meter(), c.point.n()).snr;
         }},
        {"dsa_snr_reduced",
         [](const RowContext& c) {
             return dsa_snr(c.point.pps(), c.point.meter(), 1).reduced;
         }},
        {"weak_value_classical",
         [](const RowContext& c) {
             const PpsConfig pps = c.point.pps();
             return weak_value_classical(pps.spin_up_weight, pps.accept_up);
         }},
        {"bdsa_signal",
         [](const RowContext& c) {
             return bdsa_signal(c.point.pps(), c.point.meter(), c.point.bias_value()).exact;
         }},
        {"bdsa_signal_approx",
         [](const RowContext& c) {
             return bdsa_signal(c.point.pps(), c.point.meter(), c.point.bias_value()).approx;
         }},
        {"bdsa_variance",
         [](const RowContext& c) {
             return bdsa_precision(c.point.pps(), c.point.meter(), c.point.bias_value(),
                                   c.point.n())
                 .variance;
         }},
        {"bdsa_variance_approx",
         [](const RowContext& c) {
             return bdsa_precision(c.point.pps(), c.point.meter(), c.point.bias_value(),
                                   c.point.n())
                 .variance_approx;
         }},
        {"bdsa_snr",
         [](const RowContext& c) {
             return bdsa_precision(c.point.pps(), c.point.meter(), c.point.bias_value(),
                                   c.point.n())
                 .snr;
         }},
        {"bdsa_snr_approx",
         [](const RowContext& c) {
             return bdsa_precision(c.point.pps(), c.point.meter(), c.point.bias_value(),
                                   c.point.n())
                 .snr_approx;
         }},
        {"bdsa_snr_reduced",
         [](const RowContext& c) {
             return bdsa_precision(c.point.pps(), c.point.meter(), c.point.bias_value(), 1)
                 .snr_reduced;
         }},
        {"bdsa_snr_reduced_approx",
         [](const RowContext& c) {
             return bdsa_precision(c.point.pps(), c.point.meter(), c.point.bias_value(), 1)
                 .snr_reduced_approx;
         }},
        {"mc_xbar", [](const RowContext& c) { return c.estimate().xbar; }},
        {"mc_d_hat", [](const RowContext& c) { return c.estimate().d_hat; }},
        {"mc_snr", [](const RowContext& c) { return c.estimate().snr; }},
    };
    return registry;
}

} // namespace sweep_detail

inline std::vector<std::string> sweep_quantity_names() {
    std::vector<std::string> names;
    for (const auto& [name, fn] : sweep_detail::quantity_registry()) names.push_back(name);
    return names;
}

/// One evaluated cell: a number, or the degeneracy that prevented it.
struct SweepCell {
    bool ok = false;
    double value = 0.0;
    ErrorKind kind = ErrorKind::domain;

    std::string text() const { return ok ? format_double(value) : degenerate_token(kind); }
};

/// Row-major grid of axis coordinates plus one evaluated column per
/// requested quantity; the last axis varies fastest.
struct SweepTable {
    std::vector<std::string> axis_names;
    std::vector<std::string> quantity_names;
    std::size_t row_count = 0;
    std::vector<double> coordinates; // row_count * axis_names.size()
    std::vector<SweepCell> cells;    // row_count * quantity_names.size()

    double coordinate(std::size_t row, std::size_t axis) const {
        return coordinates[row * axis_names.size() + axis];
    }
    const SweepCell& cell(std::size_t row, std::size_t quantity) const {
        return cells[row * quantity_names.size() + quantity];
    }

    void write_csv(std::ostream& out,
                   const std::vector<std::pair<std::string, std::string>>& metadata) const {
        CsvWriter writer(out);
        writer.comment("artifact", std::string(kArtifactName) + " " + kArtifactVersion);
        for (const auto& [key, value] : metadata) writer.comment(key, value);
        std::vector<std::string> columns = axis_names;
        columns.insert(columns.end(), quantity_names.begin(), quantity_names.end());
        writer.header(columns);
        std::vector<std::string> row(columns.size());
        for (std::size_t r = 0; r < row_count; ++r) {
            for (std::size_t a = 0; a < axis_names.size(); ++a)
                row[a] = format_double(coordinate(r, a));
            for (std::size_t q = 0; q < quantity_names.size(); ++q)
                row[axis_names.size() + q] = cell(r, q).text();
            writer.row_of_strings(row);
        }
    }
};

/// Evaluates every requested quantity on the full grid. Structural
/// degeneracies become sentinel cells; anything else (missing parameters,
/// unknown names, empty axes) throws before evaluation starts.
inline SweepTable run_sweep(const SweepSpec& spec) {
    if (spec.axes.empty()) raise(ErrorKind::domain, "sweep needs at least one axis");
    for (const auto& axis : spec.axes) {
        if (axis.values.empty())
            raise(ErrorKind::domain, "axis '" + axis.name + "' has no values");
        static const std::vector<std::string> allowed = {"B", "theta", "g", "beta_bias", "N"};
        bool known = false;
        for (const auto& name : allowed) known = known || name == axis.name;
        if (!known) raise(ErrorKind::domain, "unknown axis parameter '" + axis.name + "'");
        if (spec.fixed.count(axis.name))
            raise(ErrorKind::domain, "parameter '" + axis.name + "' is both axis and fixed");
    }
    for (std::size_t i = 0; i < spec.axes.size(); ++i)
        for (std::size_t j = i + 1; j < spec.axes.size(); ++j)
            if (spec.axes[i].name == spec.axes[j].name)
                raise(ErrorKind::domain, "duplicate axis '" + spec.axes[i].name + "'");
    if (spec.quantities.empty()) raise(ErrorKind::domain, "sweep requests no quantities");
    const auto& registry = sweep_detail::quantity_registry();
    for (const auto& quantity : spec.quantities)
        if (!registry.count(quantity))
            raise(ErrorKind::unknown_quantity, "unknown quantity '" + quantity + "'");

    sweep_detail::Point base;
    for (const auto& [key, value] : spec.fixed) base.set(key, value);

    SweepTable table;
    for (const auto& axis : spec.axes) table.axis_names.push_back(axis.name);
    table.quantity_names = spec.quantities;
    table.row_count = 1;
    for (const auto& axis : spec.axes) table.row_count *= axis.values.size();
    table.coordinates.reserve(table.row_count * spec.axes.size());
    table.cells.reserve(table.row_count * spec.quantities.size());

    std::vector<std::size_t> index(spec.axes.size(), 0);
    for (std::size_t row = 0; row < table.row_count; ++row) {
        sweep_detail::Point point = base;
        for (std::size_t a = 0; a < spec.axes.size(); ++a) {
            const double value = spec.axes[a].values[index[a]];
            point.set(spec.axes[a].name, value);
            table.coordinates.push_back(value);
        }
        sweep_detail::RowContext context{point, spec.mc, row, {}};
        for (const auto& quantity : spec.quantities) {
            SweepCell cell;
            try {
                cell.value = registry.at(quantity)(context);
                cell.ok = true;
            } catch (const Error& e) {
                if (!e.is_degeneracy()) throw;
                cell.kind = e.kind();
            }
            table.cells.push_back(cell);
        }
        for (std::size_t a = spec.axes.size(); a-- > 0;) {
            if (++index[a] < spec.axes[a].values.size()) break;
            index[a] = 0;
        }
    }
    return table;
}

/// Inclusive linear grid with exact endpoints.
inline std::vector<double> linspace(double lo, double hi, std::size_t count) {
    if (count == 0) raise(ErrorKind::domain, "linspace needs count >= 1");
    if (count == 1) return {lo};
    std::vector<double> values(count);
    for (std::size_t i = 0; i < count; ++i)
        values[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
    values.front() = lo;
    values.back() = hi;
    return values;
}

/// Inclusive log-spaced grid, lo and hi > 0.
inline std::vector<double> logspace(double lo, double hi, std::size_t count) {
    if (!(lo > 0.0) || !(hi > 0.0))
        raise(ErrorKind::domain, "logspace needs positive endpoints");
    std::vector<double> values = linspace(std::log(lo), std::log(hi), count);
    for (double& v : values) v = std::exp(v);
    values.front() = lo;
    values.back() = hi;
    return values;
}

} // namespace dsa
