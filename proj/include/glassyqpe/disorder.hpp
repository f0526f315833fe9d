#pragma once

// Bloch-sphere disorder distributions centred on |+>: spherical cap, squeezed
// (elliptic-cylinder cut) cap, and von Mises-Fisher. Samplers, disorder
// strength sigma (RMS great-circle angle from |+>), and sigma -> parameter
// inversion.

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include "glassyqpe/error.hpp"
#include "glassyqpe/qpe.hpp"
#include "glassyqpe/rng.hpp"
#include "glassyqpe/sphere.hpp"

namespace glassyqpe {

enum class DisorderKind { Cap, Squeezed, VonMisesFisher };

/// Haar-uniform within great-circle angle `angle` of |+>.
struct CapDisorder {
    double angle = 0.0;
};

/// Haar-uniform on the x > 0 part of the sphere inside the elliptic cylinder
/// (y/a)^2 + (z/b)^2 <= 1 with pi*a*b = area and a/b = ratio.
struct SqueezedDisorder {
    double area = 0.5;
    double ratio = 1.0;

    double semi_axis_y() const { return std::sqrt(area * ratio / std::numbers::pi); }
    double semi_axis_z() const { return std::sqrt(area / (std::numbers::pi * ratio)); }
};

/// Density proportional to exp(kappa * <mu, x>) with mu = |+>. kappa = +inf is a point mass.
struct VonMisesFisherDisorder {
    double kappa = 0.0;
};

using DisorderSpec = std::variant<CapDisorder, SqueezedDisorder, VonMisesFisherDisorder>;

inline DisorderKind kind_of(const DisorderSpec &spec) {
    return static_cast<DisorderKind>(spec.index());
}

inline std::string_view kind_name(DisorderKind kind) {
    switch (kind) {
        case DisorderKind::Cap: return "cap";
        case DisorderKind::Squeezed: return "squeezed";
        case DisorderKind::VonMisesFisher: return "vmf";
    }
    return "unknown";
}

inline std::optional<DisorderKind> parse_kind(std::string_view text) {
    if (text == "cap") return DisorderKind::Cap;
    if (text == "squeezed") return DisorderKind::Squeezed;
    if (text == "vmf") return DisorderKind::VonMisesFisher;
    return std::nullopt;
}

/// The parameter that a sweep varies: d, r, or kappa.
inline double sweep_parameter(const DisorderSpec &spec) {
    switch (kind_of(spec)) {
        case DisorderKind::Cap: return std::get<CapDisorder>(spec).angle;
        case DisorderKind::Squeezed: return std::get<SqueezedDisorder>(spec).ratio;
        case DisorderKind::VonMisesFisher: return std::get<VonMisesFisherDisorder>(spec).kappa;
    }
    return 0.0;
}

inline void validate(const DisorderSpec &spec) {
    if (const auto *cap = std::get_if<CapDisorder>(&spec)) {
        if (!(cap->angle >= 0.0 && cap->angle <= std::numbers::pi)) {
            throw std::invalid_argument("cap angle d must lie in [0, pi]");
        }
    } else if (const auto *sq = std::get_if<SqueezedDisorder>(&spec)) {
        if (!(sq->area > 0.0 && sq->area <= std::numbers::pi)) {
            throw std::invalid_argument("squeezed area D must lie in (0, pi]");
        }
        const double lo = sq->area / std::numbers::pi;
        const double hi = std::numbers::pi / sq->area;
        // Small slack so that r = pi/D computed in floating point is accepted.
        if (!(sq->ratio >= lo * (1 - 1e-12) && sq->ratio <= hi * (1 + 1e-12))) {
            throw RangeError("squeezed ratio r out of range", lo, hi);
        }
    } else {
        const double k = std::get<VonMisesFisherDisorder>(spec).kappa;
        if (!(k >= 0.0)) throw std::invalid_argument("vMF concentration kappa must be >= 0");
    }
}

/// Precomputed sampler for one disorder spec. Each call consumes a variable
/// number of uniforms from `gen` (exactly two for cap and vMF).
class DisorderSampler {
public:
    static constexpr std::uint64_t kMaxConsecutiveRejections = 10'000'000;

    explicit DisorderSampler(const DisorderSpec &spec) : kind_(kind_of(spec)) {
        validate(spec);
        switch (kind_) {
            case DisorderKind::Cap: {
                const double half = std::sin(0.5 * std::get<CapDisorder>(spec).angle);
                spread_ = 2.0 * half * half;  // 1 - cos d
                break;
            }
            case DisorderKind::Squeezed: {
                const auto &sq = std::get<SqueezedDisorder>(spec);
                inv_a2_ = 1.0 / (sq.semi_axis_y() * sq.semi_axis_y());
                inv_b2_ = 1.0 / (sq.semi_axis_z() * sq.semi_axis_z());
                const double rho = std::min(1.0, std::max(sq.semi_axis_y(), sq.semi_axis_z()));
                // Proposal cap x >= x_min contains the cylinder support.
                spread_ = 1.0 - std::sqrt((1.0 - rho) * (1.0 + rho));
                break;
            }
            case DisorderKind::VonMisesFisher: {
                kappa_ = std::get<VonMisesFisherDisorder>(spec).kappa;
                spread_ = -std::expm1(-2.0 * kappa_);  // 1 - e^{-2 kappa}
                break;
            }
        }
    }

    DisorderKind kind() const { return kind_; }

    template <class Gen>
    SphericalPoint operator()(Gen &gen) const {
        constexpr double two_pi = 2.0 * std::numbers::pi;
        switch (kind_) {
            case DisorderKind::Cap: {
                const double c = 1.0 - uniform01(gen) * spread_;
                const double psi = two_pi * uniform01(gen);
                return pole_to_plus_x(point_around_pole(c, psi));
            }
            case DisorderKind::Squeezed: {
                for (std::uint64_t attempt = 0; attempt < kMaxConsecutiveRejections; ++attempt) {
                    const double x = 1.0 - uniform01(gen) * spread_;
                    const double psi = two_pi * uniform01(gen);
                    const double s = std::sqrt((1.0 - x) * (1.0 + x));
                    const double y = s * std::cos(psi);
                    const double z = s * std::sin(psi);
                    if (x > 0.0 && y * y * inv_a2_ + z * z * inv_b2_ <= 1.0) return {x, y, z};
                }
                throw SamplerError("squeezed sampler: 10^7 consecutive rejections, degenerate spec");
            }
            case DisorderKind::VonMisesFisher: {
                const double u = uniform01(gen);
                const double psi = two_pi * uniform01(gen);
                double c;
                if (kappa_ == 0.0) {
                    c = 1.0 - 2.0 * u;
                } else if (std::isinf(kappa_)) {
                    c = 1.0;
                } else {
                    // ln(e^k - 2A sinh k) / k, rewritten to stay finite for large k.
                    c = 1.0 + std::log1p(-u * spread_) / kappa_;
                }
                return pole_to_plus_x(point_around_pole(c, psi));
            }
        }
        return {};
    }

private:
    DisorderKind kind_;
    double spread_ = 0.0;
    double inv_a2_ = 1.0;
    double inv_b2_ = 1.0;
    double kappa_ = 0.0;
};

template <class Gen>
SphericalPoint sample_point(const DisorderSpec &spec, Gen &gen) {
    return DisorderSampler(spec)(gen);
}

template <class Gen>
AngleSample sample(const DisorderSpec &spec, Gen &gen) {
    return sample_point(spec, gen).angles();
}

/// Value with a Monte Carlo standard error (zero for exact quantities).
struct Estimate {
    double value = 0.0;
    double std_error = 0.0;
};

/// RMS great-circle angle from |+> over n samples, with a delete-one jackknife
/// standard error.
inline Estimate empirical_sigma(const DisorderSpec &spec, std::size_t n, std::uint64_t seed) {
    if (n < 2) throw std::invalid_argument("empirical_sigma: need at least two samples");
    const DisorderSampler sampler(spec);
    Xoshiro256 gen(seed);
    std::vector<double> sq(n);
    double total = 0.0;
    for (auto &t : sq) {
        const double angle = angle_from_plus_x(sampler(gen));
        t = angle * angle;
        total += t;
    }
    const double nd = static_cast<double>(n);
    double mean_loo = 0.0;
    for (double t : sq) mean_loo += std::sqrt(std::max(0.0, total - t) / (nd - 1.0));
    mean_loo /= nd;
    double acc = 0.0;
    for (double t : sq) {
        const double dev = std::sqrt(std::max(0.0, total - t) / (nd - 1.0)) - mean_loo;
        acc += dev * dev;
    }
    return {std::sqrt(total / nd), std::sqrt((nd - 1.0) / nd * acc)};
}

namespace detail {

/// Closed-form cap variance; Taylor series near d = 0 where the closed form cancels.
inline double cap_variance(double d) {
    if (d < 0.1) {
        const double d2 = d * d;
        return d2 * (0.5 - d2 * (1.0 / 72 + d2 * (1.0 / 2160 + d2 * (1.0 / 67200 + d2 / 2177280))));
    }
    const double c = std::cos(d);
    return (2.0 * d * std::sin(d) + 2.0 * c - d * d * c - 2.0) / (1.0 - c);
}

inline double vmf_variance(double kappa) {
    using boost::math::quadrature::gauss_kronrod;
    constexpr double pi = std::numbers::pi;
    if (std::isinf(kappa)) return 0.0;
    if (kappa == 0.0) {
        auto uniform = [](double t) { return 0.5 * t * t * std::sin(t); };
        return gauss_kronrod<double, 15>::integrate(uniform, 0.0, pi, 10, 1e-11);
    }
    // kappa / (2 sinh kappa) * e^{kappa cos t} = kappa / (1 - e^{-2 kappa}) * e^{kappa (cos t - 1)}
    const double norm = kappa / -std::expm1(-2.0 * kappa);
    auto integrand = [=](double t) {
        return t * t * norm * std::exp(kappa * (std::cos(t) - 1.0)) * std::sin(t);
    };
    // Beyond 40/sqrt(kappa) the weight is below e^-700.
    const double upper = std::min(pi, 40.0 / std::sqrt(kappa));
    return gauss_kronrod<double, 15>::integrate(integrand, 0.0, upper, 12, 1e-11);
}

}  // namespace detail

/// Monte Carlo sample count and seed behind sigma() for squeezed specs.
inline constexpr std::size_t kSqueezedSigmaSamples = 1'000'000;
inline constexpr std::uint64_t kSqueezedSigmaSeed = 0x5EED5161ULL;

/// Disorder strength. Exact for cap (closed form) and vMF (adaptive quadrature);
/// Monte Carlo with a fixed seed for squeezed.
inline Estimate sigma(const DisorderSpec &spec) {
    validate(spec);
    switch (kind_of(spec)) {
        case DisorderKind::Cap:
            return {std::sqrt(std::max(0.0, detail::cap_variance(std::get<CapDisorder>(spec).angle))), 0.0};
        case DisorderKind::VonMisesFisher:
            return {std::sqrt(detail::vmf_variance(std::get<VonMisesFisherDisorder>(spec).kappa)), 0.0};
        case DisorderKind::Squeezed:
            return empirical_sigma(spec, kSqueezedSigmaSamples, kSqueezedSigmaSeed);
    }
    return {};
}

/// sigma of the uniform distribution on the whole sphere, sqrt((pi^2 - 4) / 2).
inline double full_sphere_sigma() { return std::sqrt(detail::cap_variance(std::numbers::pi)); }

struct SigmaSearch {
    double area = 0.5;          // squeezed only
    bool narrow_branch = false;  // squeezed: search r <= 1 instead of r >= 1
};

namespace detail {

inline std::pair<double, double> squeezed_ratio_bounds(const SigmaSearch &opt) {
    if (!(opt.area > 0.0 && opt.area <= std::numbers::pi)) {
        throw std::invalid_argument("squeezed area D must lie in (0, pi]");
    }
    if (opt.narrow_branch) return {1.0, opt.area / std::numbers::pi};
    return {1.0, std::numbers::pi / opt.area};
}

/// Same estimate as sigma() for a squeezed spec, without the error bar.
inline double squeezed_sigma_at(double area, double ratio) {
    const DisorderSampler sampler(SqueezedDisorder{area, ratio});
    Xoshiro256 gen(kSqueezedSigmaSeed);
    double total = 0.0;
    for (std::size_t k = 0; k < kSqueezedSigmaSamples; ++k) {
        const double angle = angle_from_plus_x(sampler(gen));
        total += angle * angle;
    }
    return std::sqrt(total / static_cast<double>(kSqueezedSigmaSamples));
}

}  // namespace detail

/// Closed interval of sigma values that param_for_sigma can reach.
inline std::pair<double, double> attainable_sigma(DisorderKind kind, const SigmaSearch &opt = {}) {
    switch (kind) {
        case DisorderKind::Cap:
        case DisorderKind::VonMisesFisher: return {0.0, full_sphere_sigma()};
        case DisorderKind::Squeezed: {
            const auto [r_one, r_edge] = detail::squeezed_ratio_bounds(opt);
            return {detail::squeezed_sigma_at(opt.area, r_one), detail::squeezed_sigma_at(opt.area, r_edge)};
        }
    }
    return {0.0, 0.0};
}

/// Spec of the given family whose sigma equals `target`. Cap and vMF are solved
/// by bisection on the monotone sigma(d) / sigma(kappa) maps; squeezed bisects
/// r on one branch at fixed area.
inline DisorderSpec param_for_sigma(DisorderKind kind, double target, const SigmaSearch &opt = {}) {
    constexpr double pi = std::numbers::pi;
    const auto range = attainable_sigma(kind, opt);
    const double slack = kind == DisorderKind::Squeezed ? 0.0 : 1e-12;
    if (!(target >= range.first - slack && target <= range.second + slack)) {
        throw RangeError("sigma " + std::to_string(target) + " not attainable for " +
                             std::string(kind_name(kind)),
                         range.first, range.second);
    }
    switch (kind) {
        case DisorderKind::Cap: {
            if (target <= 0.0) return CapDisorder{0.0};
            if (target >= range.second) return CapDisorder{pi};
            double lo = 0.0, hi = pi;
            for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
                const double mid = 0.5 * (lo + hi);
                (std::sqrt(detail::cap_variance(mid)) < target ? lo : hi) = mid;
            }
            return CapDisorder{0.5 * (lo + hi)};
        }
        case DisorderKind::VonMisesFisher: {
            if (target <= 0.0) return VonMisesFisherDisorder{std::numeric_limits<double>::infinity()};
            if (target >= range.second) return VonMisesFisherDisorder{0.0};
            // sigma decreases in kappa; bisect on log kappa.
            double lo = std::log(1e-12), hi = std::log(1e12);
            for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
                const double mid = 0.5 * (lo + hi);
                (std::sqrt(detail::vmf_variance(std::exp(mid))) > target ? lo : hi) = mid;
            }
            return VonMisesFisherDisorder{std::exp(0.5 * (lo + hi))};
        }
        case DisorderKind::Squeezed: {
            const auto [r_one, r_edge] = detail::squeezed_ratio_bounds(opt);
            if (target <= range.first) return SqueezedDisorder{opt.area, r_one};
            if (target >= range.second) return SqueezedDisorder{opt.area, r_edge};
            // sigma grows as |log r| grows on either branch; the fixed seed makes it
            // a deterministic function of r, so a bracketing solver applies.
            auto residual = [&](double log_r) {
                const double diff = detail::squeezed_sigma_at(opt.area, std::exp(log_r)) - target;
                return std::abs(diff) < 2e-5 ? 0.0 : diff;
            };
            std::uintmax_t iterations = 60;
            const auto tol = [](double a, double b) { return std::abs(a - b) < 1e-9; };
            double lo = 0.0, hi = std::log(r_edge);
            if (hi < lo) std::swap(lo, hi);
            const auto [a, b] = boost::math::tools::toms748_solve(residual, lo, hi, residual(lo), residual(hi), tol,
                                                                  iterations);
            const double best = std::exp(std::abs(residual(a)) <= std::abs(residual(b)) ? a : b);
            return SqueezedDisorder{opt.area, best};
        }
    }
    return CapDisorder{0.0};
}

}  // namespace glassyqpe
