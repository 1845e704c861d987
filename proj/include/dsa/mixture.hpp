#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "dsa/error.hpp"
#include "dsa/pps.hpp"

namespace dsa {

struct GaussianComponent {
    double weight; // >= 0
    double mean;
    double width;  // > 0
};

/// Weighted sum of Gaussian densities. Total mass is the weight sum; a
/// mixture flagged as normalized must carry unit mass to 1e-12.
class GaussianMixture {
public:
    GaussianMixture(std::vector<GaussianComponent> components, bool normalized)
        : components_(std::move(components)), normalized_(normalized) {
        double mass = 0.0;
        for (const auto& c : components_) {
            if (!(c.weight >= 0.0))
                raise(ErrorKind::domain, "mixture weight must be >= 0");
            if (!(c.width > 0.0))
                raise(ErrorKind::domain, "mixture width must be > 0");
            mass += c.weight;
        }
        if (normalized_ && std::fabs(mass - 1.0) > 1e-12)
            raise(ErrorKind::domain, "normalized mixture must have unit mass");
    }

    const std::vector<GaussianComponent>& components() const { return components_; }
    bool normalized() const { return normalized_; }

    double mass() const {
        double m = 0.0;
        for (const auto& c : components_) m += c.weight;
        return m;
    }

    double pdf(double x) const {
        double v = 0.0;
        for (const auto& c : components_) {
            const double z = (x - c.mean) / c.width;
            v += c.weight * std::exp(-0.5 * z * z) /
                 (c.width * 2.5066282746310005024158); // sqrt(2 pi)
        }
        return v;
    }

    /// First moment of the mass-normalized density.
    double mean() const {
        const double m = mass();
        if (m <= 0.0) raise(ErrorKind::degenerate_postselection, "mixture has zero mass");
        double v = 0.0;
        for (const auto& c : components_) v += c.weight * c.mean;
        return v / m;
    }

    /// Central second moment of the mass-normalized density.
    double variance() const {
        const double mu = mean();
        double v = 0.0;
        for (const auto& c : components_)
            v += c.weight * (c.width * c.width + c.mean * c.mean);
        return v / mass() - mu * mu;
    }

    GaussianMixture normalize() const {
        const double m = mass();
        if (m <= 0.0) raise(ErrorKind::degenerate_postselection, "mixture has zero mass");
        std::vector<GaussianComponent> scaled = components_;
        for (auto& c : scaled) c.weight /= m;
        return GaussianMixture(std::move(scaled), true);
    }

    /// Integration window covering all components out to +-pad widths.
    std::pair<double, double> support(double pad = 10.0) const {
        double lo = components_.front().mean - pad * components_.front().width;
        double hi = components_.front().mean + pad * components_.front().width;
        for (const auto& c : components_) {
            lo = std::min(lo, c.mean - pad * c.width);
            hi = std::max(hi, c.mean + pad * c.width);
        }
        return {lo, hi};
    }

private:
    std::vector<GaussianComponent> components_;
    bool normalized_;
};

/// Unnormalized record density of the accepted sub-ensemble,
/// P~1(x) = alpha^2 a^2 N(x; +d, sigma) + beta^2 b^2 N(x; -d, sigma);
/// its mass is p_f.
inline GaussianMixture accepted_density(const PpsConfig& pps, const MeterConfig& meter) {
    return GaussianMixture({{pps.spin_up_weight * pps.accept_up, meter.shift, meter.width},
                            {pps.spin_down_weight * pps.accept_down, -meter.shift,
                             meter.width}},
                           false);
}

/// Unnormalized record density of the rejected sub-ensemble,
/// P~2(x) = alpha^2 (1-a^2) N(x; +d, sigma) + beta^2 (1-b^2) N(x; -d, sigma);
/// its mass is p_fbar.
inline GaussianMixture rejected_density(const PpsConfig& pps, const MeterConfig& meter) {
    return GaussianMixture(
        {{pps.spin_up_weight * pps.accept_down, meter.shift, meter.width},
         {pps.spin_down_weight * pps.accept_up, -meter.shift, meter.width}},
        false);
}

} // namespace dsa
