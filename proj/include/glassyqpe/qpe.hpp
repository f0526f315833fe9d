#pragma once

// Closed-form outcome probabilities of quantum phase estimation with clean and
// noisy Hadamard layers on the m auxiliary qubits.

#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

namespace glassyqpe {

struct PhaseProblem {
    int m = 1;           // auxiliary qubits
    double delta = 0.0;  // p - j / 2^m
};

/// Output direction of one noisy Hadamard acting on |0>. (pi/2, 0) is |+>.
struct AngleSample {
    double theta = std::numbers::pi / 2;
    double phi = 0.0;
};

using NoisyRealization = std::vector<AngleSample>;

/// Above this many factors the product is accumulated as a sum of logarithms.
inline constexpr int kLogSpaceThreshold = 50;
/// Factors at or below this value make the whole probability exactly zero.
inline constexpr double kFactorFloor = 1e-300;

/// Largest |delta| for the best outcome, 2^-(m+1).
inline double edge_offset(int m) { return std::ldexp(1.0, -(m + 1)); }

/// Phase 2^i * pi * delta reduced to [0, 2pi). The power-of-two scaling is exact,
/// so the reduction keeps full precision even for i ~ 125.
inline double phase_angle(int i, double delta) {
    const double turns = std::ldexp(delta, i - 1);
    return 2.0 * std::numbers::pi * (turns - std::floor(turns));
}

/// Running product of per-qubit factors (each in [0, 2]) with an optional
/// log-space accumulator.
class FactorProduct {
public:
    explicit FactorProduct(bool log_space) : log_space_(log_space) {}

    void multiply(double factor) {
        if (factor <= kFactorFloor) {
            zero_ = true;
        } else if (log_space_) {
            log_sum_ += std::log(factor);
        } else {
            product_ *= factor;
        }
    }

    bool is_zero() const { return zero_; }

    /// Product divided by 2^m.
    double normalized(int m) const {
        if (zero_) return 0.0;
        if (log_space_) return std::exp(log_sum_ - m * std::numbers::ln2);
        return std::ldexp(product_, -m);
    }

private:
    bool log_space_;
    bool zero_ = false;
    double product_ = 1.0;
    double log_sum_ = 0.0;
};

inline bool use_log_space(int m) { return m > kLogSpaceThreshold; }

/// Clean success probability 2^-2m sin^2(pi 2^m delta) / sin^2(pi delta); 1 at delta = 0.
inline double clean_prob(const PhaseProblem &problem) {
    if (problem.m < 1) throw std::invalid_argument("clean_prob: m must be >= 1");
    const double d = problem.delta - std::floor(problem.delta);
    if (d == 0.0) return 1.0;
    const double denom = std::sin(std::numbers::pi * d);
    if (denom == 0.0) return 1.0;
    const double scaled = std::ldexp(d, problem.m);
    const double numer = std::sin(std::numbers::pi * (scaled - std::floor(scaled)));
    const double ratio = std::ldexp(numer / denom, -problem.m);
    return ratio * ratio;
}

/// Probability of the outcome with offset delta for one disorder realization:
/// 2^-m prod_i [1 + sin(theta_i) cos(2^i pi delta + phi_i)].
inline double noisy_prob(const PhaseProblem &problem, std::span<const AngleSample> angles,
                         bool log_space) {
    if (problem.m < 1) throw std::invalid_argument("noisy_prob: m must be >= 1");
    if (angles.size() != static_cast<std::size_t>(problem.m)) {
        throw std::invalid_argument("noisy_prob: realization length must equal m");
    }
    FactorProduct product(log_space);
    for (int i = 1; i <= problem.m && !product.is_zero(); ++i) {
        const AngleSample &a = angles[static_cast<std::size_t>(i - 1)];
        product.multiply(1.0 + std::sin(a.theta) * std::cos(phase_angle(i, problem.delta) + a.phi));
    }
    return product.normalized(problem.m);
}

inline double noisy_prob(const PhaseProblem &problem, std::span<const AngleSample> angles) {
    return noisy_prob(problem, angles, use_log_space(problem.m));
}

/// noisy_prob at the worst-case offset delta = 2^-(m+1).
inline double noisy_min_prob(int m, std::span<const AngleSample> angles) {
    return noisy_prob(PhaseProblem{m, edge_offset(m)}, angles);
}

/// Clean probability at the worst-case offset; tends to 4/pi^2 from above.
inline double clean_min_prob(int m) { return clean_prob(PhaseProblem{m, edge_offset(m)}); }

/// Checks numerically that clean_prob decreases strictly on (0, 2^-(m+1)].
inline bool verify_min_at_edge(int m, int grid_size) {
    if (m < 1) throw std::invalid_argument("verify_min_at_edge: m must be >= 1");
    if (grid_size < 10) throw std::invalid_argument("verify_min_at_edge: grid_size must be >= 10");
    const double edge = edge_offset(m);
    double previous = clean_prob(PhaseProblem{m, edge / grid_size});
    for (int k = 2; k <= grid_size; ++k) {
        const double current = clean_prob(PhaseProblem{m, edge * k / grid_size});
        if (!(current - previous < 1e-12)) return false;
        previous = current;
    }
    return true;
}

}  // namespace glassyqpe
