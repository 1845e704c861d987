#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "dsa/analytic.hpp"
#include "dsa/error.hpp"
#include "dsa/histogram.hpp"
#include "dsa/pps.hpp"
#include "dsa/sampler.hpp"

namespace dsa {

/// Difference-signal estimate from one batch. Weights use realized
/// counts; d_hat inverts the analytic signal relation. Any non-finite
/// intermediate is surfaced through flags, never returned silently.
struct DsaEstimate {
    double xbar = 0.0;
    double variance = 0.0;
    double snr = 0.0;
    double d_hat = 0.0;
    std::uint64_t n1 = 0;
    std::uint64_t n2 = 0;
    bool biased = false;
    double bias = 1.0;
    std::vector<std::string> flags;
};

namespace detail {

struct ChannelStats {
    double n1, mean1, var1;
    double n2, mean2, var2;
};

/// Core difference-combined estimate from per-channel statistics.
/// weight1 = n1 / (n1 - bias n2), weight2 = bias n2 / (n1 - bias n2);
/// bias = 1 recovers the unbiased scheme.
inline DsaEstimate combine(const ChannelStats& s, const PpsConfig& pps, double bias,
                           bool biased) {
    DsaEstimate est;
    est.biased = biased;
    est.bias = bias;
    const double denom = s.n1 - bias * s.n2;
    if (std::fabs(denom) < 1.0) {
        if (biased)
            raise(ErrorKind::singular_bias,
                  "n1 - bias*n2 vanishes at realized counts: amplification singular");
        raise(ErrorKind::balanced_counts,
              "n1 == n2: difference weights undefined at realized counts");
    }
    const double weight1 = s.n1 / denom;
    // (n1 - bias n2)/denom == 1, so weight1 - weight2 = 1 exactly
    const double weight2 = weight1 - 1.0;
    est.xbar = weight1 * s.mean1 - weight2 * s.mean2;
    est.variance = weight1 * weight1 * s.var1 / s.n1 + weight2 * weight2 * s.var2 / s.n2;
    est.snr = est.variance > 0.0 ? std::fabs(est.xbar) / std::sqrt(est.variance) : 0.0;
    if (est.variance == 0.0) est.flags.push_back("zero-variance");

    if (!biased) {
        est.d_hat = pps.weight_diff * est.xbar;
    } else {
        // Invert xbar_beta(d) = d * K, K from the exact biased relation
        // with theoretical selection probabilities.
        const SelectionProbs p = postselection_probs(pps);
        const double b = pps.weight_diff;
        const double y = pps.cos_theta;
        const double slope1 = (b + y) / (1.0 + b * y);
        const double slope2 = (b - y) / (1.0 - b * y);
        const double p_beta = p.accept - bias * p.reject;
        const double sensitivity =
            (p.accept * slope1 - bias * p.reject * slope2) / p_beta;
        if (sensitivity == 0.0 || !std::isfinite(sensitivity)) {
            est.d_hat = std::numeric_limits<double>::quiet_NaN();
            est.flags.push_back("zero-sensitivity");
        } else {
            est.d_hat = est.xbar / sensitivity;
        }
    }
    if (!std::isfinite(est.xbar) || !std::isfinite(est.variance))
        est.flags.push_back("non-finite");
    return est;
}

inline ChannelStats stats_from_batch(const SampleBatch& batch) {
    if (batch.n1 < 2 || batch.n2 < 2)
        raise(ErrorKind::insufficient_data, "need at least 2 records per channel");
    return {static_cast<double>(batch.n1), batch.mean_accepted(),
            batch.sample_var_accepted(),  static_cast<double>(batch.n2),
            batch.mean_rejected(),        batch.sample_var_rejected()};
}

} // namespace detail

/// Unbiased DSA estimate; d_hat = B * xbar.
inline DsaEstimate estimate_dsa(const SampleBatch& batch) {
    DsaEstimate est = detail::combine(detail::stats_from_batch(batch), batch.pps, 1.0, false);
    est.n1 = batch.n1;
    est.n2 = batch.n2;
    return est;
}

/// Biased DSA estimate with bias weight on the rejected channel.
/// bias = 1 agrees with estimate_dsa field by field; bias = 0 reduces to
/// the accepted-channel mean.
inline DsaEstimate estimate_bdsa(const SampleBatch& batch, double bias) {
    if (!std::isfinite(bias)) raise(ErrorKind::domain, "bias must be finite");
    DsaEstimate est = detail::combine(detail::stats_from_batch(batch), batch.pps, bias, true);
    est.n1 = batch.n1;
    est.n2 = batch.n2;
    return est;
}

namespace detail {

template <class Count>
inline ChannelStats stats_from_histograms(const BasicHistogram<Count>& accepted,
                                          const BasicHistogram<Count>& rejected,
                                          std::vector<std::string>* flags) {
    if (!accepted.same_binning(rejected))
        raise(ErrorKind::config_mismatch, "histogram bin edges differ");
    ChannelStats s{};
    double sum1 = 0.0, sumsq1 = 0.0, sum2 = 0.0, sumsq2 = 0.0;
    for (std::size_t i = 0; i < accepted.bins(); ++i) {
        const double x = accepted.bin_center(i);
        const auto c1 = static_cast<double>(accepted.count(i));
        const auto c2 = static_cast<double>(rejected.count(i));
        s.n1 += c1;
        sum1 += c1 * x;
        sumsq1 += c1 * x * x;
        s.n2 += c2;
        sum2 += c2 * x;
        sumsq2 += c2 * x * x;
    }
    if (s.n1 < 2.0 || s.n2 < 2.0)
        raise(ErrorKind::insufficient_data, "need at least 2 records per channel");
    if (flags && (accepted.underflow() + accepted.overflow() != Count{0} ||
                  rejected.underflow() + rejected.overflow() != Count{0}))
        flags->push_back("out-of-range-excluded");
    s.mean1 = sum1 / s.n1;
    s.var1 = std::max(0.0, (sumsq1 - sum1 * sum1 / s.n1) / (s.n1 - 1.0));
    s.mean2 = sum2 / s.n2;
    s.var2 = std::max(0.0, (sumsq2 - sum2 * sum2 / s.n2) / (s.n2 - 1.0));
    return s;
}

} // namespace detail

/// Unbiased DSA estimate from binned channels (bin-center evaluation);
/// this is the input shape produced by postprocess_split.
template <class Count>
inline DsaEstimate estimate_dsa_from_histograms(const BasicHistogram<Count>& accepted,
                                                const BasicHistogram<Count>& rejected,
                                                const PpsConfig& pps) {
    std::vector<std::string> flags;
    const detail::ChannelStats s = detail::stats_from_histograms(accepted, rejected, &flags);
    DsaEstimate est = detail::combine(s, pps, 1.0, false);
    est.n1 = static_cast<std::uint64_t>(s.n1);
    est.n2 = static_cast<std::uint64_t>(s.n2);
    est.flags.insert(est.flags.end(), flags.begin(), flags.end());
    return est;
}

/// Mean of the difference histogram n1(x) - n2(x). The subtraction is
/// integer-exact, so channel-identical background cancels before any
/// floating arithmetic; this is the route where that cancellation is
/// literal.
struct DifferenceMeanEstimate {
    double xbar;
    double d_hat;
    std::int64_t net_count;
};

inline DifferenceMeanEstimate estimate_from_difference(const CountHistogram& accepted,
                                                       const CountHistogram& rejected,
                                                       const PpsConfig& pps) {
    const DifferenceHistogram diff = difference_histogram(accepted, rejected);
    std::int64_t net = 0;
    double weighted = 0.0;
    for (std::size_t i = 0; i < diff.counts.size(); ++i) {
        net += diff.counts[i];
        weighted += static_cast<double>(diff.counts[i]) * accepted.bin_center(i);
    }
    if (net == 0)
        raise(ErrorKind::balanced_counts, "difference histogram has zero net count");
    const double xbar = weighted / static_cast<double>(net);
    return {xbar, pps.weight_diff * xbar, net};
}

/// Conventional benchmark: the plain mean over all records (the full
/// beam), as one would read the meter with no post-selection machinery.
/// Under a common offset its d_hat moves by the full offset.
struct ConventionalEstimate {
    double mean;
    double variance;
    double d_hat;
    std::uint64_t records;
};

inline ConventionalEstimate estimate_conventional(const SampleBatch& batch) {
    const std::uint64_t n = batch.n1 + batch.n2;
    if (n < 2) raise(ErrorKind::insufficient_data, "need at least 2 records");
    const double dn = static_cast<double>(n);
    const double sum = batch.sum1 + batch.sum2;
    const double sumsq = batch.sumsq1 + batch.sumsq2;
    const double mean = sum / dn;
    const double var = std::max(0.0, (sumsq - sum * sum / dn) / (dn - 1.0));
    return {mean, var / dn, mean, n};
}

/// Replicated-run validation of the estimator variance formula.
struct ReplicateSummary {
    std::uint64_t replicates = 0; ///< replicates contributing
    std::uint64_t excluded = 0;   ///< replicates excluded by degeneracy
    double empirical_mean = 0.0;
    double empirical_variance = 0.0;
    double analytic_variance = 0.0;
    double ratio = 0.0;
    bool biased = false;
    double bias = 1.0;
};

/// Runs one batch per seed and compares the spread of xbar across
/// replicates with the analytic variance at expected counts.
///
/// The variance formula being validated is conditional on the partition
/// sizes (the difference-combined variable treats N1, N2 as given), so
/// replicates pin the sub-ensemble sizes at round(N p_f) and the rest;
/// free-running counts would fold partition fluctuations into the spread
/// and measure a different quantity. Replicates hitting a degeneracy are
/// excluded and counted. Duplicate seeds are a seed-reuse error (they
/// would fake a zero spread).
inline ReplicateSummary replicate_study_with_seeds(const PpsConfig& pps,
                                                   const MeterConfig& meter,
                                                   std::uint64_t particles,
                                                   std::span<const std::uint64_t> seeds,
                                                   std::optional<double> bias = {}) {
    if (seeds.size() < 30)
        raise(ErrorKind::domain, "replicate study needs at least 30 replicates");
    {
        std::unordered_set<std::uint64_t> unique(seeds.begin(), seeds.end());
        if (unique.size() != seeds.size())
            raise(ErrorKind::seed_reuse, "replicate seeds must be distinct");
    }
    const SelectionProbs p = postselection_probs(pps);
    const auto n_accepted = static_cast<std::uint64_t>(
        std::llround(static_cast<double>(particles) * p.accept));
    if (n_accepted < 1 || n_accepted >= particles)
        raise(ErrorKind::degenerate_postselection,
              "expected sub-ensemble sizes leave one channel empty");
    const std::uint64_t n_rejected = particles - n_accepted;

    ReplicateSummary summary;
    summary.biased = bias.has_value();
    summary.bias = bias.value_or(1.0);
    std::vector<double> xbars;
    xbars.reserve(seeds.size());
    for (const std::uint64_t seed : seeds) {
        try {
            const SampleBatch batch =
                sample_batch_conditional(pps, meter, n_accepted, n_rejected, seed);
            const DsaEstimate est =
                bias ? estimate_bdsa(batch, *bias) : estimate_dsa(batch);
            xbars.push_back(est.xbar);
        } catch (const Error& e) {
            if (!e.is_degeneracy()) throw;
            summary.excluded += 1;
        }
    }
    if (xbars.size() < 2)
        raise(ErrorKind::insufficient_data, "all replicates degenerate");
    summary.replicates = xbars.size();
    double sum = 0.0;
    for (const double v : xbars) sum += v;
    summary.empirical_mean = sum / static_cast<double>(xbars.size());
    double ss = 0.0;
    for (const double v : xbars) {
        const double r = v - summary.empirical_mean;
        ss += r * r;
    }
    summary.empirical_variance = ss / static_cast<double>(xbars.size() - 1);
    summary.analytic_variance =
        bias ? bdsa_precision(pps, meter, *bias, particles).variance
             : dsa_variance(pps, meter, particles);
    summary.ratio = summary.empirical_variance / summary.analytic_variance;
    return summary;
}

/// Convenience form with seeds derived as base_seed + replicate index.
inline ReplicateSummary replicate_study(const PpsConfig& pps, const MeterConfig& meter,
                                        std::uint64_t particles, std::uint64_t replicates,
                                        std::uint64_t base_seed,
                                        std::optional<double> bias = {}) {
    std::vector<std::uint64_t> seeds(replicates);
    for (std::uint64_t i = 0; i < replicates; ++i) seeds[i] = base_seed + i;
    return replicate_study_with_seeds(pps, meter, particles, seeds, bias);
}

} // namespace dsa
