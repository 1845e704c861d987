#pragma once

#include <cmath>
#include <string>

#include "dsa/error.hpp"

namespace dsa {

namespace detail {

/// cos(theta) evaluated so the structural angles land exactly on
/// {1, 0, -1}: -sin(theta - pi/2) agrees with cos(theta) to 1 ulp
/// everywhere and is exact at theta in {0, pi/2, pi} (as doubles).
inline double cos_exact_at_poles(double theta) {
    double y = -std::sin(theta - 1.5707963267948966); // pi/2 nearest double
    if (y == 0.0) y = 0.0;                            // normalize -0
    return y;
}

} // namespace detail

/// Classically mixed pre- and post-selection of the spin channel.
///
/// Pre-selection: statistical mixture of up/down with weights
/// (spin_up_weight, spin_down_weight); weight_diff is their difference.
/// Post-selection: mixed acceptance with per-channel probabilities
/// accept_up = cos^2(theta/2) and accept_down = sin^2(theta/2);
/// cos_theta = accept_up - accept_down.
///
/// Exactness contract: spin_up_weight + spin_down_weight == 1 and
/// accept_up + accept_down == 1 hold exactly in floating point;
/// weight_diff and cos_theta are the stored primaries, the weights are
/// derived from them.
struct PpsConfig {
    double spin_up_weight;   // alpha^2
    double spin_down_weight; // beta^2 = 1 - alpha^2
    double weight_diff;      // B = alpha^2 - beta^2, in [-1, 1]
    double theta;            // post-selection angle, in [0, pi]
    double accept_up;        // a^2 = cos^2(theta/2)
    double accept_down;      // b^2 = sin^2(theta/2)
    double cos_theta;        // y = cos(theta), in [-1, 1]

    /// Pre-selection given as the signed weight difference B.
    static PpsConfig from_weight_diff(double weight_diff, double theta) {
        if (!(weight_diff >= -1.0 && weight_diff <= 1.0))
            raise(ErrorKind::domain,
                  "weight_diff must lie in [-1, 1], got " + std::to_string(weight_diff));
        return make(weight_diff, theta);
    }

    /// Pre-selection given as the spin-up weight alpha^2.
    static PpsConfig from_up_weight(double spin_up_weight, double theta) {
        if (!(spin_up_weight >= 0.0 && spin_up_weight <= 1.0))
            raise(ErrorKind::domain,
                  "spin_up_weight must lie in [0, 1], got " + std::to_string(spin_up_weight));
        // 2a - 1 is exact for a in [0.5, 1]; for a < 0.5 it rounds once.
        PpsConfig pps = make(2.0 * spin_up_weight - 1.0, theta);
        pps.spin_up_weight = spin_up_weight;
        pps.spin_down_weight = 1.0 - spin_up_weight;
        return pps;
    }

    /// Ratio of acceptance to rejection probability, eta = p_f / p_fbar.
    double selection_ratio() const {
        const double p_reject = (1.0 - weight_diff * cos_theta) / 2.0;
        if (p_reject <= 0.0)
            raise(ErrorKind::degenerate_postselection,
                  "rejected sub-ensemble has zero probability");
        return (1.0 + weight_diff * cos_theta) / (2.0 * p_reject);
    }

private:
    static PpsConfig make(double weight_diff, double theta) {
        if (!(theta >= 0.0 && theta <= 3.1415926535897932))
            raise(ErrorKind::domain,
                  "theta must lie in [0, pi], got " + std::to_string(theta));
        PpsConfig pps{};
        pps.weight_diff = weight_diff;
        pps.theta = theta;
        pps.cos_theta = detail::cos_exact_at_poles(theta);
        pps.spin_up_weight = (1.0 + weight_diff) / 2.0;
        pps.spin_down_weight = 1.0 - pps.spin_up_weight;
        pps.accept_up = (1.0 + pps.cos_theta) / 2.0;
        pps.accept_down = 1.0 - pps.accept_up;
        return pps;
    }
};

/// Gaussian meter: per-channel readout x ~ N(+shift | -shift, width^2).
/// strength = (shift / (2*width))^2 is derived and kept consistent with
/// the stored shift and width.
struct MeterConfig {
    double shift;    // d, the parameter under estimation (any real)
    double width;    // sigma > 0
    double strength; // g = (d / (2 sigma))^2

    static MeterConfig from_shift(double shift, double width = 1.0) {
        if (!(width > 0.0))
            raise(ErrorKind::domain, "width must be > 0, got " + std::to_string(width));
        if (!std::isfinite(shift))
            raise(ErrorKind::domain, "shift must be finite");
        const double half_ratio = shift / (2.0 * width);
        return MeterConfig{shift, width, half_ratio * half_ratio};
    }

    /// shift recovered as +2*width*sqrt(strength).
    static MeterConfig from_strength(double strength, double width = 1.0) {
        if (!(strength >= 0.0))
            raise(ErrorKind::domain, "strength must be >= 0, got " + std::to_string(strength));
        if (!(width > 0.0))
            raise(ErrorKind::domain, "width must be > 0, got " + std::to_string(width));
        return from_shift(2.0 * width * std::sqrt(strength), width);
    }
};

} // namespace dsa
