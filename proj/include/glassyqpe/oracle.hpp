#pragma once

// Brute-force statevector simulation of the noisy phase-estimation circuit on
// the auxiliary register: noisy Hadamards on |0...0>, phase kickback
// e^{2 pi i k p}, dense inverse QFT, computational-basis measurement.
// Independent of the closed forms in qpe.hpp; only used at small m.

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "glassyqpe/error.hpp"
#include "glassyqpe/qpe.hpp"

namespace glassyqpe::oracle {

using Amplitude = std::complex<double>;

inline constexpr int kMaxQubits = 14;

/// Amplitudes over the auxiliary register; bit i-1 of the index is qubit i.
struct Statevector {
    int m = 0;
    std::vector<Amplitude> amplitudes;

    double norm_squared() const {
        double s = 0.0;
        for (const auto &a : amplitudes) s += std::norm(a);
        return s;
    }
};

/// Columns are H(theta, phi)|0> = cos(theta/2)|0> + e^{i phi} sin(theta/2)|1>
/// and H(theta, phi)|1> = sin(theta/2)|0> - e^{i phi} cos(theta/2)|1>.
using Gate = std::array<std::array<Amplitude, 2>, 2>;  // [row][column]

inline Gate noisy_hadamard(const AngleSample &a) {
    const double c = std::cos(0.5 * a.theta);
    const double s = std::sin(0.5 * a.theta);
    const Amplitude e = std::polar(1.0, a.phi);
    return {{{c, s}, {e * s, -e * c}}};
}

inline void check_capacity(int m) {
    if (m < 1) throw std::invalid_argument("oracle: m must be >= 1");
    if (m > kMaxQubits) throw CapacityError("oracle: at most 14 auxiliary qubits");
}

/// Product state after the noisy Hadamard layer and the controlled-U kickback.
inline Statevector build_noisy_state(int m, double p, std::span<const AngleSample> realization) {
    check_capacity(m);
    if (realization.size() != static_cast<std::size_t>(m)) {
        throw std::invalid_argument("oracle: realization length must equal m");
    }
    Statevector psi{m, {Amplitude{1.0, 0.0}}};
    for (int i = 1; i <= m; ++i) {
        const Gate h = noisy_hadamard(realization[static_cast<std::size_t>(i - 1)]);
        const std::size_t half = psi.amplitudes.size();
        std::vector<Amplitude> next(2 * half);
        for (std::size_t k = 0; k < half; ++k) {
            next[k] = psi.amplitudes[k] * h[0][0];
            next[k + half] = psi.amplitudes[k] * h[1][0];
        }
        psi.amplitudes = std::move(next);
    }
    for (std::size_t k = 0; k < psi.amplitudes.size(); ++k) {
        const double turns = static_cast<double>(k) * p;
        psi.amplitudes[k] *= std::polar(1.0, 2.0 * std::numbers::pi * (turns - std::floor(turns)));
    }
    return psi;
}

namespace detail {

inline Statevector dense_fourier(const Statevector &in, double sign) {
    check_capacity(in.m);
    const std::size_t n = in.amplitudes.size();
    if (n != (std::size_t{1} << in.m)) throw std::invalid_argument("oracle: amplitude count must be 2^m");
    std::vector<Amplitude> roots(n);
    for (std::size_t r = 0; r < n; ++r) {
        roots[r] = std::polar(1.0, sign * 2.0 * std::numbers::pi * static_cast<double>(r) / static_cast<double>(n));
    }
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    Statevector out{in.m, std::vector<Amplitude>(n)};
    for (std::size_t j = 0; j < n; ++j) {
        Amplitude acc{0.0, 0.0};
        for (std::size_t k = 0; k < n; ++k) acc += in.amplitudes[k] * roots[(j * k) & (n - 1)];
        out.amplitudes[j] = acc * scale;
    }
    return out;
}

}  // namespace detail

/// QFT|j> = 2^{-m/2} sum_k e^{2 pi i jk / 2^m} |k>, as a dense matrix product.
inline Statevector qft(const Statevector &state) { return detail::dense_fourier(state, +1.0); }

inline Statevector inverse_qft(const Statevector &state) { return detail::dense_fourier(state, -1.0); }

inline std::vector<double> measure_probs(const Statevector &state) {
    std::vector<double> probs;
    probs.reserve(state.amplitudes.size());
    for (const auto &a : state.amplitudes) probs.push_back(std::norm(a));
    return probs;
}

/// Full outcome distribution of the noisy circuit for eigenphase p.
inline std::vector<double> outcome_distribution(int m, double p, std::span<const AngleSample> realization) {
    return measure_probs(inverse_qft(build_noisy_state(m, p, realization)));
}

}  // namespace glassyqpe::oracle
