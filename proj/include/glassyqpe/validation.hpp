#pragma once

// Self-checks shared by the `verify` command and the acceptance suite.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "glassyqpe/disorder.hpp"
#include "glassyqpe/oracle.hpp"
#include "glassyqpe/qpe.hpp"
#include "glassyqpe/rng.hpp"

namespace glassyqpe {

/// CDF of the polar angle from the mean direction under vMF(kappa), by
/// quadrature of the density kappa e^{kappa cos t} sin t / (2 sinh kappa).
inline double vmf_polar_cdf(double kappa, double theta) {
    if (theta <= 0.0) return 0.0;
    if (kappa == 0.0) return 0.5 * (1.0 - std::cos(theta));
    const double norm = kappa / -std::expm1(-2.0 * kappa);
    auto density = [&](double t) { return norm * std::exp(kappa * (std::cos(t) - 1.0)) * std::sin(t); };
    const double hi = std::min(theta, std::numbers::pi);
    return std::min(1.0, boost::math::quadrature::gauss_kronrod<double, 15>::integrate(density, 0.0, hi, 10, 1e-11));
}

/// One-sample Kolmogorov-Smirnov statistic of the vMF sampler's polar angle.
inline double vmf_ks_statistic(double kappa, std::size_t n, std::uint64_t seed) {
    const DisorderSampler sampler(VonMisesFisherDisorder{kappa});
    Xoshiro256 gen(seed);
    std::vector<double> angles(n);
    for (auto &a : angles) a = angle_from_plus_x(sampler(gen));
    std::sort(angles.begin(), angles.end());
    double d = 0.0;
    const double nd = static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double f = vmf_polar_cdf(kappa, angles[i]);
        d = std::max({d, (static_cast<double>(i) + 1.0) / nd - f, f - static_cast<double>(i) / nd});
    }
    return d;
}

/// Number of samples (out of n) falling outside the spec's geometric support.
inline std::size_t count_outside_support(const DisorderSpec &spec, std::size_t n, std::uint64_t seed) {
    const DisorderSampler sampler(spec);
    Xoshiro256 gen(seed);
    std::size_t outside = 0;
    for (std::size_t k = 0; k < n; ++k) {
        const SphericalPoint p = sampler(gen);
        bool inside = std::abs(p.norm() - 1.0) <= 1e-12;
        if (const auto *cap = std::get_if<CapDisorder>(&spec)) {
            inside = inside && angle_from_plus_x(p) <= cap->angle + 1e-12;
        } else if (const auto *sq = std::get_if<SqueezedDisorder>(&spec)) {
            const double a = sq->semi_axis_y(), b = sq->semi_axis_z();
            inside = inside && p.x > 0.0 && (p.y / a) * (p.y / a) + (p.z / b) * (p.z / b) <= 1.0 + 1e-12;
        }
        if (!inside) ++outside;
    }
    return outside;
}

struct OracleComparison {
    double max_abs_diff = 0.0;
    double max_norm_error = 0.0;
    int instances = 0;
};

/// Statevector outcome distribution versus the closed-form p'_j for random
/// instances with m in 1..max_m, p uniform in [0, 1) and arbitrary directions.
inline OracleComparison compare_oracle(int instances, int max_m, std::uint64_t seed) {
    OracleComparison out;
    Xoshiro256 gen(seed);
    for (int n = 0; n < instances; ++n) {
        const int m = 1 + static_cast<int>(uniform01(gen) * max_m);
        const double p = uniform01(gen);
        NoisyRealization angles(static_cast<std::size_t>(m));
        for (auto &a : angles) {
            a.theta = std::acos(1.0 - 2.0 * uniform01(gen));
            a.phi = 2.0 * std::numbers::pi * uniform01(gen);
        }
        const auto probs = oracle::outcome_distribution(m, p, angles);
        double total = 0.0;
        for (std::size_t j = 0; j < probs.size(); ++j) {
            const double delta = p - std::ldexp(static_cast<double>(j), -m);
            out.max_abs_diff = std::max(out.max_abs_diff, std::abs(probs[j] - noisy_prob({m, delta}, angles)));
            total += probs[j];
        }
        out.max_norm_error = std::max(out.max_norm_error, std::abs(total - 1.0));
        ++out.instances;
    }
    return out;
}

}  // namespace glassyqpe
