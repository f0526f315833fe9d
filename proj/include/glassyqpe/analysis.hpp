#pragma once

// Curve post-processing: numerical derivative, inflection point sigma_c,
// half-probability point sigma_1/2, and the shifted power-law fit
// sigma(m) = alpha + beta * m^gamma.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/tools/minima.hpp>

#include "glassyqpe/error.hpp"
#include "glassyqpe/qpe.hpp"

namespace glassyqpe {

struct CurvePoint {
    double sigma = 0.0;
    double value = 0.0;
    double std_error = 0.0;
};

struct Curve {
    std::vector<CurvePoint> points;
    int m = 0;
    std::string kind;
    std::string delta_rule;
};

/// Location estimate on the sigma axis.
struct SigmaPoint {
    double value = 0.0;
    double uncertainty = 0.0;
    bool at_boundary = false;
};

namespace detail {

inline double uniform_step(const Curve &curve) {
    const auto &p = curve.points;
    if (p.size() < 5) throw GridError("curve needs at least 5 points");
    const double h = (p.back().sigma - p.front().sigma) / static_cast<double>(p.size() - 1);
    if (!(h > 0.0)) throw GridError("sigma must be strictly increasing");
    for (std::size_t k = 1; k < p.size(); ++k) {
        if (std::abs((p[k].sigma - p[k - 1].sigma) - h) > 1e-6 * h) {
            throw GridError("sigma grid is not uniform");
        }
    }
    return h;
}

}  // namespace detail

/// dq/dsigma: central differences inside, one-sided at the ends. Standard
/// errors are propagated assuming independent points.
inline Curve derivative(const Curve &curve) {
    const double h = detail::uniform_step(curve);
    const auto &p = curve.points;
    const std::size_t n = p.size();
    Curve out{{}, curve.m, curve.kind, curve.delta_rule};
    out.points.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t lo = k == 0 ? 0 : k - 1;
        const std::size_t hi = k + 1 == n ? n - 1 : k + 1;
        const double span = static_cast<double>(hi - lo) * h;
        out.points[k] = {p[k].sigma, (p[hi].value - p[lo].value) / span,
                         std::hypot(p[hi].std_error, p[lo].std_error) / span};
    }
    return out;
}

/// Inflection point of q(sigma): the minimum of dq/dsigma, refined by the
/// vertex of the parabola through the three points around the discrete minimum.
inline SigmaPoint find_sigma_c(const Curve &curve) {
    const Curve d = derivative(curve);
    const auto &p = d.points;
    const double h = p[1].sigma - p[0].sigma;
    std::size_t k = 0;
    for (std::size_t i = 1; i < p.size(); ++i) {
        if (p[i].value < p[k].value) k = i;
    }
    if (k == 0 || k + 1 == p.size()) return {p[k].sigma, h, true};
    const double y0 = p[k - 1].value, y1 = p[k].value, y2 = p[k + 1].value;
    const double curvature = y0 - 2.0 * y1 + y2;
    const double offset = curvature > 0.0 ? std::clamp(0.5 * (y0 - y2) / curvature, -0.5, 0.5) : 0.0;
    return {p[k].sigma + offset * h, h, false};
}

/// Disorder strength at which q_min falls to half of the clean minimum
/// probability: first bracketing grid pair, then linear interpolation.
inline SigmaPoint find_sigma_half(const Curve &qmin_curve, int m) {
    const auto &p = qmin_curve.points;
    if (p.size() < 2) throw GridError("curve needs at least 2 points");
    const double target = 0.5 * clean_min_prob(m);
    for (std::size_t k = 0; k + 1 < p.size(); ++k) {
        const double a = p[k].value, b = p[k + 1].value;
        if (a >= target && b < target) {
            const double t = (a - target) / (a - b);
            const double slope = (b - a) / (p[k + 1].sigma - p[k].sigma);
            const double se = (1.0 - t) * p[k].std_error + t * p[k + 1].std_error;
            return {p[k].sigma + t * (p[k + 1].sigma - p[k].sigma), std::abs(se / slope), false};
        }
    }
    throw BracketError("q_min never crosses p_min/2 = " + std::to_string(target) + " on the grid");
}

struct PowerLawPoint {
    double m = 0.0;
    double sigma = 0.0;
};

struct FitResult {
    double alpha = 0.0;
    double beta = 0.0;
    double gamma = 0.0;
    double mse = 0.0;  // mean squared residual of ln(sigma - alpha)
    double ci_alpha = 0.0;
    double ci_beta = 0.0;
    double ci_gamma = 0.0;
};

namespace detail {

struct LinearFit {
    double intercept = 0.0;
    double slope = 0.0;
    double mse = std::numeric_limits<double>::infinity();
    double var_intercept = 0.0;
    double var_slope = 0.0;
};

/// Least squares of ln(sigma - alpha) on ln m at fixed alpha.
inline LinearFit fit_at_alpha(std::span<const PowerLawPoint> pts, double alpha) {
    const double n = static_cast<double>(pts.size());
    double sx = 0, sy = 0;
    for (const auto &p : pts) {
        if (!(p.sigma - alpha > 0.0)) return {};
        sx += std::log(p.m);
        sy += std::log(p.sigma - alpha);
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0;
    for (const auto &p : pts) {
        const double dx = std::log(p.m) - mx;
        sxx += dx * dx;
        sxy += dx * (std::log(p.sigma - alpha) - my);
    }
    LinearFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double ssr = 0;
    for (const auto &p : pts) {
        const double r = std::log(p.sigma - alpha) - f.intercept - f.slope * std::log(p.m);
        ssr += r * r;
    }
    f.mse = ssr / n;
    const double s2 = n > 2 ? ssr / (n - 2) : 0.0;
    f.var_slope = s2 / sxx;
    f.var_intercept = s2 * (1.0 / n + mx * mx / sxx);
    return f;
}

}  // namespace detail

/// Fits sigma(m) = alpha + beta m^gamma by minimising the mean squared residual
/// of ln(sigma - alpha) = ln beta + gamma ln m. The outer search over alpha is
/// a grid scan of [min sigma - 2, min sigma - 1e-4] (the objective is not
/// unimodal there) refined by Brent minimisation; (ln beta, gamma) are solved in
/// closed form at each alpha.
inline FitResult fit_powerlaw(std::span<const PowerLawPoint> points) {
    if (points.size() < 4) throw FitError("power-law fit needs at least 4 points");
    for (std::size_t a = 0; a < points.size(); ++a) {
        if (!(points[a].m > 0.0)) throw FitError("power-law fit needs m > 0");
        for (std::size_t b = a + 1; b < points.size(); ++b) {
            if (points[a].m == points[b].m) throw FitError("power-law fit needs distinct m values");
        }
    }
    double min_sigma = points[0].sigma;
    for (const auto &p : points) min_sigma = std::min(min_sigma, p.sigma);
    const double lower = min_sigma - 2.0;
    const double upper = min_sigma - 1e-4;

    auto objective = [&](double alpha) { return detail::fit_at_alpha(points, alpha).mse; };

    constexpr int kScan = 2001;
    const double cell = (upper - lower) / (kScan - 1);
    int best = 0;
    double best_value = objective(lower);
    for (int k = 1; k < kScan; ++k) {
        const double v = objective(lower + k * cell);
        if (v < best_value) {
            best_value = v;
            best = k;
        }
    }
    const double lo = lower + std::max(0, best - 1) * cell;
    const double hi = lower + std::min(kScan - 1, best + 1) * cell;
    const double alpha =
        boost::math::tools::brent_find_minima(objective, lo, hi, std::numeric_limits<double>::digits / 2).first;

    const detail::LinearFit fit = detail::fit_at_alpha(points, alpha);
    FitResult out;
    out.alpha = alpha;
    out.beta = std::exp(fit.intercept);
    out.gamma = fit.slope;
    out.mse = fit.mse;

    const double n = static_cast<double>(points.size());
    const boost::math::students_t t_dist(n - 2.0);
    const double t = boost::math::quantile(boost::math::complement(t_dist, 0.025));
    out.ci_gamma = t * std::sqrt(fit.var_slope);
    out.ci_beta = out.beta * t * std::sqrt(fit.var_intercept);

    // Profile interval for alpha: N ln(D(alpha) / D_min) <= chi2_{1, 0.95}.
    constexpr double kChi2 = 3.841458820694124;
    if (fit.mse > 0.0) {
        auto excess = [&](double a) { return n * std::log(objective(a) / fit.mse) - kChi2; };
        auto edge = [&](double direction, double limit) {
            const double step = cell * direction;
            double inside = alpha;
            for (double a = alpha + step; direction * (limit - a) >= 0.0; a += step) {
                if (excess(a) > 0.0) {
                    double in = inside, out_pt = a;
                    for (int it = 0; it < 100; ++it) {
                        const double mid = 0.5 * (in + out_pt);
                        (excess(mid) > 0.0 ? out_pt : in) = mid;
                    }
                    return std::abs(0.5 * (in + out_pt) - alpha);
                }
                inside = a;
            }
            return std::abs(limit - alpha);
        };
        out.ci_alpha = std::max(edge(-1.0, lower), edge(1.0, upper));
    }
    return out;
}

}  // namespace glassyqpe
