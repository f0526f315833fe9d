#pragma once

// Disorder-averaged success probabilities q_j / q_min by plain Monte Carlo
// averaging over quenched realizations, plus the two analytic cap cases.

#include <cmath>
#include <cstdint>
#include <algorithm>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "glassyqpe/disorder.hpp"
#include "glassyqpe/parallel.hpp"
#include "glassyqpe/qpe.hpp"
#include "glassyqpe/rng.hpp"

namespace glassyqpe {

/// Offset used for the q_j curves: log2(delta) = -(m + 5), which reproduces the
/// reference table (m = 5, 15, 25, 35, 45, 125 -> -10, -20, -30, -40, -50, -130).
inline double table_delta(int m) { return std::ldexp(1.0, -(m + 5)); }

struct DeltaRule {
    enum class Kind { Table, Edge, Fixed };

    Kind kind = Kind::Table;
    double value = 0.0;

    static DeltaRule table() { return {Kind::Table, 0.0}; }
    static DeltaRule edge() { return {Kind::Edge, 0.0}; }
    static DeltaRule fixed(double delta) { return {Kind::Fixed, delta}; }

    double resolve(int m) const {
        switch (kind) {
            case Kind::Table: return table_delta(m);
            case Kind::Edge: return edge_offset(m);
            case Kind::Fixed: return value;
        }
        return value;
    }

    std::string describe() const {
        switch (kind) {
            case Kind::Table: return "table:log2(delta)=-(m+5)";
            case Kind::Edge: return "edge:delta=2^-(m+1)";
            case Kind::Fixed: return "fixed";
        }
        return "fixed";
    }
};

struct ExperimentConfig {
    int m = 5;
    double delta = 0.0;
    DisorderSpec spec = CapDisorder{0.0};
    std::uint64_t trials = 100'000;        // initial count; doubled while not converged
    std::uint64_t seed = 1;
    int target_sigfigs = 3;
    bool adaptive = true;                  // false: run exactly `trials`
    std::uint64_t max_trials = 100'000'000;
    unsigned workers = 1;                  // 0 = hardware concurrency
};

struct AverageResult {
    double q = 0.0;
    double std_error = 0.0;
    std::uint64_t trials_used = 0;
    bool converged = false;
};

/// Trials are evaluated in blocks of this size; block statistics are merged in
/// block order so results do not depend on the worker count.
inline constexpr std::uint64_t kTrialBlock = 4096;

/// cos / sin of 2^i pi delta for i = 1..m.
struct PhaseTable {
    std::vector<double> cos_phase;
    std::vector<double> sin_phase;

    PhaseTable(int m, double delta) {
        cos_phase.reserve(static_cast<std::size_t>(m));
        sin_phase.reserve(static_cast<std::size_t>(m));
        for (int i = 1; i <= m; ++i) {
            const double a = phase_angle(i, delta);
            cos_phase.push_back(std::cos(a));
            sin_phase.push_back(std::sin(a));
        }
    }
};

/// True when a and b agree in their leading `sigfigs` significant figures,
/// i.e. differ by less than half a unit in the last retained figure.
inline bool agree_to_sigfigs(double a, double b, int sigfigs) {
    if (a == b) return true;
    const double scale = std::max(std::abs(a), std::abs(b));
    const double unit = std::pow(10.0, std::floor(std::log10(scale)) - sigfigs + 1);
    return std::abs(a - b) < 0.5 * unit;
}

namespace detail {

inline void check_config(const ExperimentConfig &c) {
    if (c.m < 1) throw std::invalid_argument("ExperimentConfig: m must be >= 1");
    if (c.trials < 1000) throw std::invalid_argument("ExperimentConfig: trials must be >= 1000");
    if (c.target_sigfigs < 2 || c.target_sigfigs > 4) {
        throw std::invalid_argument("ExperimentConfig: target_sigfigs must be 2, 3 or 4");
    }
    validate(c.spec);
}

/// p'_j for trial `index`: m fresh directions from the trial's own stream.
inline double trial_probability(const DisorderSampler &sampler, const PhaseTable &phases,
                                std::uint64_t seed, std::uint64_t index) {
    const int m = static_cast<int>(phases.cos_phase.size());
    auto gen = trial_stream(seed, index);
    FactorProduct product(use_log_space(m));
    for (int i = 0; i < m; ++i) {
        const SphericalPoint p = sampler(gen);
        product.multiply(1.0 + p.x * phases.cos_phase[static_cast<std::size_t>(i)] -
                         p.y * phases.sin_phase[static_cast<std::size_t>(i)]);
    }
    return product.normalized(m);
}

/// Caches full-block statistics so that doubling the trial count only pays for
/// the new trials.
class TrialAccumulator {
public:
    TrialAccumulator(const ExperimentConfig &config)
        : config_(config), sampler_(config.spec), phases_(config.m, config.delta) {}

    RunningStats stats_for(std::uint64_t trials) {
        const std::uint64_t full = trials / kTrialBlock;
        if (blocks_.size() < full) {
            const std::size_t first = blocks_.size();
            auto fresh = run_indexed<RunningStats>(full - first, config_.workers, [&](std::size_t k) {
                return block(first + k, kTrialBlock);
            });
            blocks_.insert(blocks_.end(), fresh.begin(), fresh.end());
        }
        RunningStats total;
        for (std::uint64_t b = 0; b < full; ++b) total.merge(blocks_[b]);
        if (const std::uint64_t tail = trials % kTrialBlock; tail != 0) total.merge(block(full, tail));
        return total;
    }

private:
    RunningStats block(std::uint64_t index, std::uint64_t size) const {
        RunningStats s;
        const std::uint64_t start = index * kTrialBlock;
        for (std::uint64_t t = start; t < start + size; ++t) {
            s.add(trial_probability(sampler_, phases_, config_.seed, t));
        }
        return s;
    }

    const ExperimentConfig &config_;
    DisorderSampler sampler_;
    PhaseTable phases_;
    std::vector<RunningStats> blocks_;
};

inline AverageResult to_result(const RunningStats &s, bool converged) {
    return {std::clamp(s.mean, 0.0, 1.0), s.std_error(), s.count, converged};
}

}  // namespace detail

/// Disorder-averaged probability of the outcome at offset config.delta.
/// Adaptive mode doubles the trial count until two successive estimates agree
/// to target_sigfigs (or max_trials is hit, leaving converged = false). Fixed
/// mode runs exactly `trials` and reports whether the half-sample and
/// full-sample estimates agree.
inline AverageResult average_q(const ExperimentConfig &config) {
    detail::check_config(config);
    detail::TrialAccumulator acc(config);
    std::uint64_t n = config.trials;
    if (!config.adaptive) {
        const RunningStats full = acc.stats_for(n);
        const RunningStats half = acc.stats_for(n / 2);
        return detail::to_result(full, agree_to_sigfigs(half.mean, full.mean, config.target_sigfigs));
    }
    RunningStats previous = acc.stats_for(n);
    while (2 * n <= config.max_trials) {
        n *= 2;
        const RunningStats current = acc.stats_for(n);
        if (agree_to_sigfigs(previous.mean, current.mean, config.target_sigfigs)) {
            return detail::to_result(current, true);
        }
        previous = current;
    }
    return detail::to_result(previous, false);
}

/// Uniform disorder over the whole sphere: every outcome has probability 2^-m.
inline double full_sphere_analytic(int m) {
    if (m < 1) throw std::invalid_argument("full_sphere_analytic: m must be >= 1");
    return std::ldexp(1.0, -m);
}

/// Uniform disorder over the half sphere around |+>: 2^-2m prod_i [2 + cos(2^i pi delta)].
inline double half_sphere_analytic(int m, double delta) {
    if (m < 1) throw std::invalid_argument("half_sphere_analytic: m must be >= 1");
    double log_q = 0.0;
    for (int i = 1; i <= m; ++i) log_q += std::log((2.0 + std::cos(phase_angle(i, delta))) / 4.0);
    return std::exp(log_q);
}

struct SweepOptions {
    std::uint64_t trials = 100'000;
    int target_sigfigs = 3;
    bool adaptive = true;
    std::uint64_t max_trials = 100'000'000;
    unsigned workers = 1;
    SigmaSearch search{};  // squeezed: area and branch
};

struct SweepRecord {
    double sigma = 0.0;
    double param = 0.0;  // d, r or kappa
    double delta = 0.0;
    double q = 0.0;
    double std_error = 0.0;
    std::uint64_t trials = 0;
    bool converged = false;
};

/// q(sigma) along a sigma grid. Every grid point uses the same master seed, so
/// trial t sees the same uniforms at every sigma and the curve is smooth in sigma.
inline std::vector<SweepRecord> sweep(DisorderKind kind, int m, const DeltaRule &rule,
                                      std::span<const double> sigma_grid, std::uint64_t seed,
                                      const SweepOptions &options = {}) {
    std::vector<SweepRecord> out;
    out.reserve(sigma_grid.size());
    const double delta = rule.resolve(m);
    for (double s : sigma_grid) {
        const DisorderSpec spec = param_for_sigma(kind, s, options.search);
        ExperimentConfig config;
        config.m = m;
        config.delta = delta;
        config.spec = spec;
        config.trials = options.trials;
        config.seed = seed;
        config.target_sigfigs = options.target_sigfigs;
        config.adaptive = options.adaptive;
        config.max_trials = options.max_trials;
        config.workers = options.workers;
        const AverageResult r = average_q(config);
        out.push_back({s, sweep_parameter(spec), delta, r.q, r.std_error, r.trials_used, r.converged});
    }
    return out;
}

}  // namespace glassyqpe
