#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "dsa/error.hpp"
#include "dsa/pps.hpp"

namespace dsa {

/// Probabilities of a record landing in the accepted (PSA) or rejected
/// (PSR) sub-ensemble:
///   p_f = (1 + B y) / 2,   p_fbar = (1 - B y) / 2.
struct SelectionProbs {
    double accept;
    double reject;
};

inline SelectionProbs postselection_probs(const PpsConfig& pps) {
    const double by = pps.weight_diff * pps.cos_theta;
    return {(1.0 + by) / 2.0, (1.0 - by) / 2.0};
}

namespace detail {

inline void require_both_subensembles(const PpsConfig& pps) {
    const SelectionProbs p = postselection_probs(pps);
    if (p.accept <= 0.0 || p.reject <= 0.0)
        raise(ErrorKind::degenerate_postselection,
              "sub-ensemble probability vanishes (|B*cos(theta)| = 1)");
}

inline void require_unbalanced(const PpsConfig& pps) {
    if (pps.weight_diff == 0.0)
        raise(ErrorKind::degenerate_preselection,
              "weight_diff B = 0: channels balance for every post-selection");
    if (pps.cos_theta == 0.0)
        raise(ErrorKind::degenerate_balance,
              "B*cos(theta) = 0: accepted and rejected counts balance in expectation");
}

/// F(y) = (B + y) d / (1 + B y), the conditional mean of the accepted
/// sub-ensemble; the rejected one is F(-y).
inline double conditional_mean(double weight_diff, double y, double shift) {
    return (weight_diff + y) * shift / (1.0 + weight_diff * y);
}

} // namespace detail

/// Conditional means <x>_f = F(y) and <x>_fbar = F(-y).
struct SubensembleMeans {
    double accepted;
    double rejected;
};

inline SubensembleMeans subensemble_means(const PpsConfig& pps, const MeterConfig& meter) {
    detail::require_both_subensembles(pps);
    return {detail::conditional_mean(pps.weight_diff, pps.cos_theta, meter.shift),
            detail::conditional_mean(pps.weight_diff, -pps.cos_theta, meter.shift)};
}

/// Weights of the difference-combined variable,
///   beta1 = (1 + B y) / (2 B y),   beta2 = (1 - B y) / (2 B y),
/// i.e. p_f / (p_f - p_fbar) and p_fbar / (p_f - p_fbar).
/// beta1 - beta2 = 1 for every valid configuration.
struct RatioFactors {
    double accepted;
    double rejected;
};

inline RatioFactors ratio_factors(const PpsConfig& pps) {
    detail::require_unbalanced(pps);
    const double by = pps.weight_diff * pps.cos_theta;
    const double accepted = (1.0 + by) / (2.0 * by);
    // derived so the defining identity beta1 - beta2 = 1 is exact in fp
    return {accepted, accepted - 1.0};
}

/// The amplified difference signal. The post-selection angle cancels:
///   xbar = beta1 F(y) - beta2 F(-y) = d / B.
inline double dsa_signal(const PpsConfig& pps, const MeterConfig& meter) {
    detail::require_unbalanced(pps);
    return meter.shift / pps.weight_diff;
}

/// Variances of a single record within each sub-ensemble:
///   sigma_{1,2}^2 = sigma^2 + d^2 (1 - B^2) sin^2(theta) / (1 +- B cos(theta))^2.
struct SubensembleVariances {
    double accepted;
    double rejected;
};

inline SubensembleVariances subensemble_variances(const PpsConfig& pps,
                                                  const MeterConfig& meter) {
    detail::require_both_subensembles(pps);
    const double b = pps.weight_diff;
    const double y = pps.cos_theta;
    const double spread = meter.shift * meter.shift * (1.0 - b * b) * (1.0 - y * y);
    const double dplus = 1.0 + b * y;
    const double dminus = 1.0 - b * y;
    return {meter.width * meter.width + spread / (dplus * dplus),
            meter.width * meter.width + spread / (dminus * dminus)};
}

/// Sub-ensemble variances in units of the squared shift, parameterized
/// by the ratio sigma^2/d^2 (= 1/(4g)); used where a figure grid pins
/// that ratio exactly.
inline SubensembleVariances subensemble_variances_over_shift_sq(const PpsConfig& pps,
                                                                double width_sq_ratio) {
    if (!(width_sq_ratio > 0.0))
        raise(ErrorKind::domain, "sigma^2/d^2 must be > 0");
    detail::require_both_subensembles(pps);
    const double b = pps.weight_diff;
    const double y = pps.cos_theta;
    const double spread = (1.0 - b * b) * (1.0 - y * y);
    const double dplus = 1.0 + b * y;
    const double dminus = 1.0 - b * y;
    return {width_sq_ratio + spread / (dplus * dplus),
            width_sq_ratio + spread / (dminus * dminus)};
}

/// Variance of the difference-signal estimator at expected sub-ensemble
/// sizes N1 = N p_f, N2 = N p_fbar:
///   D[x^] = beta1^2 sigma1^2 / N1 + beta2^2 sigma2^2 / N2.
inline double dsa_variance(const PpsConfig& pps, const MeterConfig& meter,
                           std::uint64_t particles) {
    if (particles < 1)
        raise(ErrorKind::domain, "particle count must be >= 1");
    const RatioFactors rf = ratio_factors(pps);
    const SubensembleVariances sv = subensemble_variances(pps, meter);
    const SelectionProbs p = postselection_probs(pps);
    const double n = static_cast<double>(particles);
    return rf.accepted * rf.accepted * sv.accepted / (n * p.accept) +
           rf.rejected * rf.rejected * sv.rejected / (n * p.reject);
}

/// Signal-to-noise ratio of the DSA estimator and its value scaled by
/// the conventional benchmark sqrt(N) |d| / sigma:
///   R = 2 sqrt(N) |y| sqrt[ g (1 - B^2 y^2) /
///                           (4 g (1 - B^2)(1 - y^2) + (1 - B^2 y^2)) ].
/// At theta = pi/2 the ratio is zero, not an error (signal and noise
/// diverge together).
struct SnrResult {
    double snr;
    double reduced;
};

inline SnrResult dsa_snr(const PpsConfig& pps, const MeterConfig& meter,
                         std::uint64_t particles) {
    if (particles < 1)
        raise(ErrorKind::domain, "particle count must be >= 1");
    if (meter.shift == 0.0)
        raise(ErrorKind::domain, "shift d = 0: nothing to resolve");
    detail::require_both_subensembles(pps);
    const double b2 = pps.weight_diff * pps.weight_diff;
    const double y = pps.cos_theta;
    const double y2 = y * y;
    const double one_m_b2y2 = 1.0 - b2 * y2;
    const double g = meter.strength;
    const double reduced =
        std::fabs(y) * std::sqrt(one_m_b2y2 /
                                 (one_m_b2y2 + 4.0 * g * (1.0 - b2) * (1.0 - y2)));
    const double conventional =
        std::sqrt(static_cast<double>(particles)) * std::fabs(meter.shift) / meter.width;
    return {reduced * conventional, reduced};
}

/// Weak value A_w = M1 / M2 with M1 = alpha^2 a^2 - beta^2 b^2.
/// Classical M2 = alpha^2 a^2 + beta^2 b^2 (the acceptance probability);
/// the result is a convex combination of +-1 and never leaves [-1, 1].
inline double weak_value_classical(double spin_up_weight, double accept_up) {
    if (!(spin_up_weight >= 0.0 && spin_up_weight <= 1.0))
        raise(ErrorKind::domain, "spin_up_weight must lie in [0, 1]");
    if (!(accept_up >= 0.0 && accept_up <= 1.0))
        raise(ErrorKind::domain, "accept_up must lie in [0, 1]");
    const double up = spin_up_weight * accept_up;
    const double down = (1.0 - spin_up_weight) * (1.0 - accept_up);
    const double m2 = up + down;
    if (m2 == 0.0)
        raise(ErrorKind::degenerate_postselection,
              "acceptance probability vanishes: no accepted records");
    return (up - down) / m2;
}

/// Quantum M2 = (alpha a + beta b)^2 vanishes under destructive
/// interference of the pre- and post-selected states; that case is a
/// singularity, signalled as an error. Amplitudes must be real and
/// normalized.
inline double weak_value_quantum(double alpha, double beta, double a, double b) {
    const double norm_i = alpha * alpha + beta * beta;
    const double norm_f = a * a + b * b;
    if (std::fabs(norm_i - 1.0) > 1e-9 || std::fabs(norm_f - 1.0) > 1e-9)
        raise(ErrorKind::domain, "amplitudes must be normalized");
    const double overlap = alpha * a + beta * b;
    const double m2 = overlap * overlap;
    if (m2 == 0.0)
        raise(ErrorKind::singular_weak_value,
              "<f|i> = 0: destructive interference, weak value singular");
    const double m1 = alpha * alpha * a * a - beta * beta * b * b;
    return m1 / m2;
}

/// Gap between the conditional means,
///   F(y) - F(-y) = 2 y (1 - B^2) d / (1 - B^2 y^2).
inline double mean_gap(const PpsConfig& pps, const MeterConfig& meter) {
    detail::require_both_subensembles(pps);
    const double b2 = pps.weight_diff * pps.weight_diff;
    const double y = pps.cos_theta;
    return 2.0 * y * (1.0 - b2) * meter.shift / (1.0 - b2 * y * y);
}

/// Biased difference signal. Exact form
///   xbar_beta = (eta <x>_f - beta <x>_fbar) / (eta - beta),
/// equivalently (p_f <x>_f - beta p_fbar <x>_fbar) / p_beta with
/// p_beta = p_f - beta p_fbar. The approximation assumes beta ~ eta:
///   xbar_beta ~ [eta / (eta - beta)] (F(y) - F(-y)).
/// Both diverge as beta -> eta; beta == eta exactly is an error.
struct BdsaSignal {
    double exact;
    double approx;
};

inline BdsaSignal bdsa_signal(const PpsConfig& pps, const MeterConfig& meter,
                              double bias) {
    if (!std::isfinite(bias))
        raise(ErrorKind::domain, "bias must be finite");
    detail::require_both_subensembles(pps);
    const SelectionProbs p = postselection_probs(pps);
    const SubensembleMeans means = subensemble_means(pps, meter);
    const double p_beta = p.accept - bias * p.reject;
    if (p_beta == 0.0)
        raise(ErrorKind::singular_bias,
              "bias equals p_f/p_fbar: amplification denominator vanishes");
    const double exact =
        (p.accept * means.accepted - bias * p.reject * means.rejected) / p_beta;
    const double approx = p.accept * mean_gap(pps, meter) / p_beta;
    return {exact, approx};
}

/// Variance and SNR of the biased estimator. The exact variance uses the
/// biased weights at expected counts,
///   D[x^_beta] = (p_f sigma1^2 + beta^2 p_fbar sigma2^2) / (N p_beta^2);
/// variance_approx substitutes beta ~ eta, giving
///   (p_f / (N p_beta^2)) (sigma1^2 + eta sigma2^2).
/// snr is the exact ratio |xbar_beta| / sqrt(variance) (the amplification
/// factor cancels); snr_approx is the closed form
///   sqrt(N p_f) |F(y) - F(-y)| / sqrt(sigma1^2 + eta sigma2^2).
/// The reduced fields divide by the conventional sqrt(N) |d| / sigma.
struct BdsaPrecision {
    double variance;
    double variance_approx;
    double snr;
    double snr_approx;
    double snr_reduced;
    double snr_reduced_approx;
};

inline BdsaPrecision bdsa_precision(const PpsConfig& pps, const MeterConfig& meter,
                                    double bias, std::uint64_t particles) {
    if (particles < 1)
        raise(ErrorKind::domain, "particle count must be >= 1");
    if (meter.shift == 0.0)
        raise(ErrorKind::domain, "shift d = 0: nothing to resolve");
    if (!std::isfinite(bias))
        raise(ErrorKind::domain, "bias must be finite");
    detail::require_both_subensembles(pps);
    const SelectionProbs p = postselection_probs(pps);
    const SubensembleMeans means = subensemble_means(pps, meter);
    const SubensembleVariances sv = subensemble_variances(pps, meter);
    const double p_beta = p.accept - bias * p.reject;
    if (p_beta == 0.0)
        raise(ErrorKind::singular_bias,
              "bias equals p_f/p_fbar: amplification denominator vanishes");
    const double n = static_cast<double>(particles);
    const double eta = p.accept / p.reject;

    const double noise_sq = p.accept * sv.accepted + bias * bias * p.reject * sv.rejected;
    const double variance = noise_sq / (n * p_beta * p_beta);
    const double noise_sq_approx = p.accept * (sv.accepted + eta * sv.rejected);
    const double variance_approx = noise_sq_approx / (n * p_beta * p_beta);

    // |xbar_beta| / sqrt(variance) with the 1/p_beta factors cancelled.
    const double numer =
        std::fabs(p.accept * means.accepted - bias * p.reject * means.rejected);
    const double conventional = std::sqrt(n) * std::fabs(meter.shift) / meter.width;
    const double snr = std::sqrt(n) * numer / std::sqrt(noise_sq);
    const double snr_approx = std::sqrt(n * p.accept) * std::fabs(mean_gap(pps, meter)) /
                              std::sqrt(sv.accepted + eta * sv.rejected);
    return {variance,      variance_approx,
            snr,           snr_approx,
            snr / conventional, snr_approx / conventional};
}

} // namespace dsa
