#pragma once

// Large-m (log-normal) prediction of the disorder-averaged probability and the
// check that it depends on the disorder only through its strength.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "glassyqpe/disorder.hpp"
#include "glassyqpe/montecarlo.hpp"
#include "glassyqpe/parallel.hpp"

namespace glassyqpe {

/// Statistics of x_i = ln[1 + sin(theta) cos(2^i pi delta + phi)].
struct LogFactorStats {
    double mu_star = 0.0;        // pooled over i
    double sigma_star_sq = 0.0;  // pooled over i
    std::vector<double> mean_by_index;
    std::vector<double> variance_by_index;
    std::uint64_t samples = 0;
    std::uint64_t clipped = 0;  // factors <= kFactorFloor, recorded as ln(kFactorFloor)
};

inline LogFactorStats estimate_log_stats(const DisorderSpec &spec, int m, double delta, std::uint64_t n,
                                         std::uint64_t seed = 7) {
    if (m < 1) throw std::invalid_argument("estimate_log_stats: m must be >= 1");
    if (n < 100'000) throw std::invalid_argument("estimate_log_stats: n must be >= 1e5");
    const DisorderSampler sampler(spec);
    const PhaseTable phases(m, delta);
    const double floor_log = std::log(kFactorFloor);

    LogFactorStats out;
    RunningStats pooled;
    for (int i = 0; i < m; ++i) {
        auto gen = trial_stream(seed, static_cast<std::uint64_t>(i));
        const double c = phases.cos_phase[static_cast<std::size_t>(i)];
        const double s = phases.sin_phase[static_cast<std::size_t>(i)];
        RunningStats per_index;
        for (std::uint64_t k = 0; k < n; ++k) {
            const SphericalPoint p = sampler(gen);
            const double factor = 1.0 + p.x * c - p.y * s;
            if (factor <= kFactorFloor) {
                ++out.clipped;
                per_index.add(floor_log);
            } else {
                per_index.add(std::log(factor));
            }
        }
        out.mean_by_index.push_back(per_index.mean);
        out.variance_by_index.push_back(per_index.variance());
        pooled.merge(per_index);
    }
    out.mu_star = pooled.mean;
    out.sigma_star_sq = pooled.variance();
    out.samples = pooled.count;
    return out;
}

/// exp(m (mu* + sigma*^2 / 2 - ln 2)), clamped to [0, 1].
inline double clt_predict(const LogFactorStats &stats, int m) {
    const double exponent = m * (stats.mu_star + 0.5 * stats.sigma_star_sq - std::numbers::ln2);
    return std::clamp(std::exp(exponent), 0.0, 1.0);
}

struct CorollaryResult {
    double max_abs_diff = 0.0;
    double combined_std_error = 0.0;  // of the pair attaining max_abs_diff
    std::vector<AverageResult> results;
};

/// Runs average_q for each spec (all at the same sigma) and reports the largest
/// pairwise gap. `base` supplies trials, seed and convergence settings.
inline CorollaryResult corollary_check(std::span<const DisorderSpec> specs, double sigma_target, int m,
                                       double delta, ExperimentConfig base = {}) {
    if (specs.size() < 2) throw std::invalid_argument("corollary_check: need at least two specs");
    for (const auto &spec : specs) {
        if (std::abs(sigma(spec).value - sigma_target) > 1e-3) {
            throw std::invalid_argument("corollary_check: spec sigma differs from target by more than 1e-3");
        }
    }
    CorollaryResult out;
    base.m = m;
    base.delta = delta;
    for (const auto &spec : specs) {
        base.spec = spec;
        out.results.push_back(average_q(base));
    }
    for (std::size_t a = 0; a < out.results.size(); ++a) {
        for (std::size_t b = a + 1; b < out.results.size(); ++b) {
            const double diff = std::abs(out.results[a].q - out.results[b].q);
            if (diff >= out.max_abs_diff) {
                out.max_abs_diff = diff;
                out.combined_std_error = std::hypot(out.results[a].std_error, out.results[b].std_error);
            }
        }
    }
    return out;
}

/// Smallest of a few standard squeezed areas whose r >= 1 branch reaches `target`.
inline std::optional<double> squeezed_area_for(double target) {
    for (double area : {0.5, 1.0, 1.5, 2.0, 2.5, 2.9, 3.0}) {
        const auto [lo, hi] = attainable_sigma(DisorderKind::Squeezed, {area, false});
        if (target >= lo && target <= hi) return area;
    }
    return std::nullopt;
}

/// One spec per family at the given sigma; squeezed is skipped when no
/// standard area reaches it.
inline std::vector<DisorderSpec> matched_specs(double target) {
    std::vector<DisorderSpec> specs = {param_for_sigma(DisorderKind::Cap, target),
                                       param_for_sigma(DisorderKind::VonMisesFisher, target)};
    if (const auto area = squeezed_area_for(target)) {
        specs.push_back(param_for_sigma(DisorderKind::Squeezed, target, {*area, false}));
    }
    return specs;
}

}  // namespace glassyqpe
