#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "dsa/error.hpp"

namespace dsa {

/// Fixed uniform binning over [lo, hi) with explicit underflow/overflow
/// counters; out-of-range values are never dropped silently.
template <class Count>
class BasicHistogram {
public:
    BasicHistogram() = default;

    BasicHistogram(double lo, double hi, std::size_t bins)
        : lo_(lo), hi_(hi), counts_(bins, Count{0}) {
        if (!(hi > lo) || bins == 0)
            raise(ErrorKind::domain, "histogram needs hi > lo and bins >= 1");
        width_ = (hi - lo) / static_cast<double>(bins);
    }

    void add(double x, Count weight = Count{1}) {
        if (x < lo_) {
            underflow_ += weight;
        } else if (x >= hi_) {
            overflow_ += weight;
        } else {
            auto idx = static_cast<std::size_t>((x - lo_) / width_);
            if (idx >= counts_.size()) idx = counts_.size() - 1; // fp edge guard
            counts_[idx] += weight;
        }
    }

    std::size_t bins() const { return counts_.size(); }
    double lo() const { return lo_; }
    double hi() const { return hi_; }
    double bin_width() const { return width_; }
    double bin_lo(std::size_t i) const { return lo_ + width_ * static_cast<double>(i); }
    double bin_hi(std::size_t i) const { return lo_ + width_ * static_cast<double>(i + 1); }
    double bin_center(std::size_t i) const {
        return lo_ + width_ * (static_cast<double>(i) + 0.5);
    }

    Count count(std::size_t i) const { return counts_[i]; }
    Count& count(std::size_t i) { return counts_[i]; }
    Count underflow() const { return underflow_; }
    Count& underflow() { return underflow_; }
    Count overflow() const { return overflow_; }
    Count& overflow() { return overflow_; }

    Count in_range_total() const {
        Count t{0};
        for (const Count c : counts_) t += c;
        return t;
    }
    Count total() const { return in_range_total() + underflow_ + overflow_; }

    bool same_binning(const BasicHistogram& other) const {
        return lo_ == other.lo_ && hi_ == other.hi_ && counts_.size() == other.counts_.size();
    }

    void merge(const BasicHistogram& other) {
        if (!same_binning(other))
            raise(ErrorKind::config_mismatch, "histogram bin edges differ");
        for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
        underflow_ += other.underflow_;
        overflow_ += other.overflow_;
    }

    bool operator==(const BasicHistogram& other) const = default;

private:
    double lo_ = 0.0;
    double hi_ = 1.0;
    double width_ = 1.0;
    std::vector<Count> counts_;
    Count underflow_{0};
    Count overflow_{0};
};

using CountHistogram = BasicHistogram<std::uint64_t>;
using WeightHistogram = BasicHistogram<double>;

/// Per-bin signed difference n1(x) - n2(x); exact at integer level, so a
/// count injected identically into both histograms cancels bit-for-bit.
struct DifferenceHistogram {
    std::vector<std::int64_t> counts;
    std::int64_t underflow = 0;
    std::int64_t overflow = 0;
};

inline DifferenceHistogram difference_histogram(const CountHistogram& accepted,
                                                const CountHistogram& rejected) {
    if (!accepted.same_binning(rejected))
        raise(ErrorKind::config_mismatch, "histogram bin edges differ");
    DifferenceHistogram diff;
    diff.counts.resize(accepted.bins());
    for (std::size_t i = 0; i < accepted.bins(); ++i)
        diff.counts[i] = static_cast<std::int64_t>(accepted.count(i)) -
                         static_cast<std::int64_t>(rejected.count(i));
    diff.underflow = static_cast<std::int64_t>(accepted.underflow()) -
                     static_cast<std::int64_t>(rejected.underflow());
    diff.overflow = static_cast<std::int64_t>(accepted.overflow()) -
                    static_cast<std::int64_t>(rejected.overflow());
    return diff;
}

} // namespace dsa
