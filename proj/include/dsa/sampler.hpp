#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dsa/analytic.hpp"
#include "dsa/error.hpp"
#include "dsa/histogram.hpp"
#include "dsa/mixture.hpp"
#include "dsa/pps.hpp"
#include "dsa/rng.hpp"

namespace dsa {

/// Injectable measurement imperfections.
///   offset: common displacement of every record in both channels.
///   background_per_channel: counts drawn uniformly over the background
///   window and added identically to both channels, after the particles.
struct Imperfection {
    double offset = 0.0;
    std::uint64_t background_per_channel = 0;
    std::optional<std::pair<double, double>> background_window;

    bool operator==(const Imperfection&) const = default;
};

/// Default export binning: width sigma/20 over +-(|d| + 6 sigma).
/// Estimators never read histograms, so binning cannot bias estimates.
struct BinningSettings {
    double lo;
    double hi;
    std::size_t bins;

    static BinningSettings for_meter(const MeterConfig& meter) {
        const double reach = std::fabs(meter.shift) + 6.0 * meter.width;
        const auto bins = static_cast<std::size_t>(
            std::ceil(2.0 * reach / (meter.width / 20.0)));
        return {-reach, reach, bins};
    }

    bool operator==(const BinningSettings&) const = default;
};

/// Sufficient statistics of one Monte Carlo run (or a merge of runs).
/// Counts n1/n2 include injected background; background_per_channel
/// records how much. Without injection n1 + n2 == n_total.
struct SampleBatch {
    PpsConfig pps;
    MeterConfig meter;
    Imperfection imperfection;
    bool with_histograms = false;

    std::vector<std::uint64_t> seeds;
    std::uint64_t n_total = 0;
    std::uint64_t n1 = 0;
    std::uint64_t n2 = 0;
    std::uint64_t background_per_channel = 0;
    double sum1 = 0.0;
    double sumsq1 = 0.0;
    double sum2 = 0.0;
    double sumsq2 = 0.0;
    std::optional<CountHistogram> hist1;
    std::optional<CountHistogram> hist2;

    double mean_accepted() const { return sum1 / static_cast<double>(n1); }
    double mean_rejected() const { return sum2 / static_cast<double>(n2); }

    /// Unbiased sample variance; clamped at zero against cancellation dust.
    double sample_var_accepted() const {
        const double n = static_cast<double>(n1);
        return std::max(0.0, (sumsq1 - sum1 * sum1 / n) / (n - 1.0));
    }
    double sample_var_rejected() const {
        const double n = static_cast<double>(n2);
        return std::max(0.0, (sumsq2 - sum2 * sum2 / n) / (n - 1.0));
    }

    bool same_config(const SampleBatch& other) const {
        return pps.weight_diff == other.pps.weight_diff && pps.theta == other.pps.theta &&
               meter.shift == other.meter.shift && meter.width == other.meter.width &&
               imperfection == other.imperfection &&
               with_histograms == other.with_histograms;
    }

    bool operator==(const SampleBatch& other) const {
        return same_config(other) && seeds == other.seeds && n_total == other.n_total &&
               n1 == other.n1 && n2 == other.n2 &&
               background_per_channel == other.background_per_channel &&
               sum1 == other.sum1 && sumsq1 == other.sumsq1 && sum2 == other.sum2 &&
               sumsq2 == other.sumsq2 && hist1 == other.hist1 && hist2 == other.hist2;
    }
};

/// Batch with zero records, usable as the merge identity.
inline SampleBatch empty_batch(const PpsConfig& pps, const MeterConfig& meter,
                               const Imperfection& imperfection = {},
                               bool histograms = false) {
    SampleBatch batch{};
    batch.pps = pps;
    batch.meter = meter;
    batch.imperfection = imperfection;
    batch.with_histograms = histograms;
    if (histograms) {
        const BinningSettings bin = BinningSettings::for_meter(meter);
        batch.hist1.emplace(bin.lo, bin.hi, bin.bins);
        batch.hist2.emplace(bin.lo, bin.hi, bin.bins);
    }
    return batch;
}

/// One Monte Carlo run of the classical Stern-Gerlach measurement.
///
/// Per particle, in fixed stream order: spin up with probability alpha^2
/// (one draw); record x = (+-d) + sigma * z + offset with z standard
/// normal (two draws); accepted with probability a^2 (up) or b^2 (down)
/// (one draw). Background records, if any, are drawn afterwards from the
/// same stream and written identically into both channels. Identical
/// (seed, config) inputs therefore reproduce the batch bit for bit.
inline SampleBatch sample_batch(const PpsConfig& pps, const MeterConfig& meter,
                                std::uint64_t particles, std::uint64_t seed,
                                const Imperfection& imperfection = {},
                                bool histograms = false) {
    if (particles < 1)
        raise(ErrorKind::domain, "particle count must be >= 1");
    SampleBatch batch = empty_batch(pps, meter, imperfection, histograms);
    batch.seeds.push_back(seed);
    batch.n_total = particles;

    Rng rng(seed);
    for (std::uint64_t i = 0; i < particles; ++i) {
        const bool up = rng.bernoulli(pps.spin_up_weight);
        const double center = up ? meter.shift : -meter.shift;
        const double x = center + meter.width * rng.gaussian() + imperfection.offset;
        const bool accepted = rng.bernoulli(up ? pps.accept_up : pps.accept_down);
        if (accepted) {
            batch.n1 += 1;
            batch.sum1 += x;
            batch.sumsq1 += x * x;
            if (batch.hist1) batch.hist1->add(x);
        } else {
            batch.n2 += 1;
            batch.sum2 += x;
            batch.sumsq2 += x * x;
            if (batch.hist2) batch.hist2->add(x);
        }
    }

    if (imperfection.background_per_channel > 0) {
        const BinningSettings bin = BinningSettings::for_meter(meter);
        const auto window =
            imperfection.background_window.value_or(std::make_pair(bin.lo, bin.hi));
        for (std::uint64_t k = 0; k < imperfection.background_per_channel; ++k) {
            const double x = rng.uniform(window.first, window.second);
            batch.n1 += 1;
            batch.sum1 += x;
            batch.sumsq1 += x * x;
            if (batch.hist1) batch.hist1->add(x);
            batch.n2 += 1;
            batch.sum2 += x;
            batch.sumsq2 += x * x;
            if (batch.hist2) batch.hist2->add(x);
        }
        batch.background_per_channel = imperfection.background_per_channel;
    }
    return batch;
}

/// Batch with the sub-ensemble sizes pinned: exactly n_accepted records
/// drawn from the normalized accepted density and n_rejected from the
/// rejected one. This is the stochastic model behind the
/// difference-combined variable, where the partition is given and only
/// the meter readouts fluctuate; replicate studies of the variance
/// formula use it. Per record: channel (one draw), then the meter value
/// (two draws).
inline SampleBatch sample_batch_conditional(const PpsConfig& pps, const MeterConfig& meter,
                                            std::uint64_t n_accepted,
                                            std::uint64_t n_rejected, std::uint64_t seed,
                                            const Imperfection& imperfection = {},
                                            bool histograms = false) {
    if (n_accepted < 1 || n_rejected < 1)
        raise(ErrorKind::domain, "need at least one record per sub-ensemble");
    if (imperfection.background_per_channel > 0)
        raise(ErrorKind::domain, "background injection needs the unconditional sampler");
    const SelectionProbs p = postselection_probs(pps);
    if (p.accept <= 0.0 || p.reject <= 0.0)
        raise(ErrorKind::degenerate_postselection,
              "sub-ensemble probability vanishes (|B*cos(theta)| = 1)");
    SampleBatch batch = empty_batch(pps, meter, imperfection, histograms);
    batch.seeds.push_back(seed);
    batch.n_total = n_accepted + n_rejected;

    Rng rng(seed);
    const double up_given_accept = pps.spin_up_weight * pps.accept_up / p.accept;
    const double up_given_reject = pps.spin_up_weight * pps.accept_down / p.reject;
    for (std::uint64_t i = 0; i < n_accepted; ++i) {
        const bool up = rng.bernoulli(up_given_accept);
        const double x = (up ? meter.shift : -meter.shift) + meter.width * rng.gaussian() +
                         imperfection.offset;
        batch.n1 += 1;
        batch.sum1 += x;
        batch.sumsq1 += x * x;
        if (batch.hist1) batch.hist1->add(x);
    }
    for (std::uint64_t i = 0; i < n_rejected; ++i) {
        const bool up = rng.bernoulli(up_given_reject);
        const double x = (up ? meter.shift : -meter.shift) + meter.width * rng.gaussian() +
                         imperfection.offset;
        batch.n2 += 1;
        batch.sum2 += x;
        batch.sumsq2 += x * x;
        if (batch.hist2) batch.hist2->add(x);
    }
    return batch;
}

/// Component-wise sum of sufficient statistics. Requires identical
/// configurations and disjoint seed sets; commutative bit for bit.
inline SampleBatch merge_batches(const SampleBatch& a, const SampleBatch& b) {
    if (!a.same_config(b))
        raise(ErrorKind::config_mismatch, "batches were generated under different configs");
    for (const auto sa : a.seeds)
        for (const auto sb : b.seeds)
            if (sa == sb)
                raise(ErrorKind::seed_reuse,
                      "merging batches that share seed " + std::to_string(sa));
    SampleBatch merged = a;
    merged.seeds.insert(merged.seeds.end(), b.seeds.begin(), b.seeds.end());
    merged.n_total += b.n_total;
    merged.n1 += b.n1;
    merged.n2 += b.n2;
    merged.background_per_channel += b.background_per_channel;
    merged.sum1 += b.sum1;
    merged.sumsq1 += b.sumsq1;
    merged.sum2 += b.sum2;
    merged.sumsq2 += b.sumsq2;
    if (merged.hist1) merged.hist1->merge(*b.hist1);
    if (merged.hist2) merged.hist2->merge(*b.hist2);
    return merged;
}

/// Partitioned run: part i draws from seed base_seed + i, particle counts
/// split evenly (first parts take the remainder), results merged left to
/// right. This fold defines what "one run over the union" means, so
/// partitioned generation is deterministic and exactly additive.
inline SampleBatch sample_batch_partitioned(const PpsConfig& pps, const MeterConfig& meter,
                                            std::uint64_t particles, std::uint64_t base_seed,
                                            std::uint64_t partitions,
                                            const Imperfection& imperfection = {},
                                            bool histograms = false) {
    if (partitions < 1) raise(ErrorKind::domain, "partitions must be >= 1");
    if (particles < partitions)
        raise(ErrorKind::domain, "need at least one particle per partition");
    SampleBatch merged = empty_batch(pps, meter, imperfection, histograms);
    std::uint64_t remaining = particles;
    for (std::uint64_t i = 0; i < partitions; ++i) {
        const std::uint64_t share =
            remaining / (partitions - i) + (remaining % (partitions - i) != 0 ? 1 : 0);
        merged = merge_batches(
            merged, sample_batch(pps, meter, share, base_seed + i, imperfection, histograms));
        remaining -= share;
    }
    return merged;
}

/// Result of splitting a total record histogram into accepted/rejected
/// parts guided by the model densities. Bins where both densities
/// underflow to zero are split 50/50 and flagged.
struct SplitHistograms {
    WeightHistogram accepted;
    WeightHistogram rejected;
    std::vector<std::size_t> flagged_bins;
};

/// Post-selection as data post-processing: with the total histogram n(x)
/// recorded, assign n1(x) = n(x) P~1(x) / (P~1(x) + P~2(x)) and
/// n2(x) = n(x) - n1(x), densities evaluated at bin centers. Per bin,
/// accepted + rejected equals the input count exactly.
inline SplitHistograms postprocess_split(const CountHistogram& total, const PpsConfig& pps,
                                         const MeterConfig& meter) {
    const GaussianMixture p1 = accepted_density(pps, meter);
    const GaussianMixture p2 = rejected_density(pps, meter);
    SplitHistograms out{WeightHistogram(total.lo(), total.hi(), total.bins()),
                        WeightHistogram(total.lo(), total.hi(), total.bins()),
                        {}};
    for (std::size_t i = 0; i < total.bins(); ++i) {
        const auto n = static_cast<double>(total.count(i));
        if (n == 0.0) continue;
        const double x = total.bin_center(i);
        const double d1 = p1.pdf(x);
        const double d2 = p2.pdf(x);
        double share = 0.5;
        if (d1 + d2 > 0.0) {
            share = d1 / (d1 + d2);
        } else {
            out.flagged_bins.push_back(i);
        }
        const double n1 = n * share;
        out.accepted.count(i) = n1;
        out.rejected.count(i) = n - n1;
    }
    return out;
}

} // namespace dsa
