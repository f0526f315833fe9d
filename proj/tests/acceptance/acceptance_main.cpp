// Acceptance gate: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "cli.hpp"
#include "glassyqpe.hpp"

namespace {

using namespace glassyqpe;
namespace fs = std::filesystem;

constexpr std::uint64_t kSeed = 20240601;

struct Report {
    bool pass = true;
    std::vector<std::string> details;

    void check(bool ok, const std::string &what) {
        pass = pass && ok;
        details.push_back(std::string(ok ? "ok   " : "FAIL ") + what);
    }
    void note(const std::string &what) { details.push_back("     " + what); }
};

std::string num(double v, int precision = 6) {
    std::ostringstream os;
    os.precision(precision);
    os << v;
    return os.str();
}

std::vector<double> grid(double start, double stop, double step) {
    std::vector<double> g;
    const int n = static_cast<int>(std::floor((stop - start) / step + 1e-9));
    for (int k = 0; k <= n; ++k) g.push_back(std::round((start + k * step) * 1e9) / 1e9);
    return g;
}

Curve cap_curve(int m, const DeltaRule &rule, const std::vector<double> &sigmas, std::uint64_t trials) {
    SweepOptions opt;
    opt.trials = trials;
    opt.adaptive = false;
    Curve c;
    c.m = m;
    c.kind = "cap";
    for (const auto &r : sweep(DisorderKind::Cap, m, rule, sigmas, kSeed, opt)) {
        c.points.push_back({r.sigma, r.q, r.std_error});
    }
    return c;
}

Report clean_anchors() {
    Report r;
    const double floor_value = 4.0 / (std::numbers::pi * std::numbers::pi);
    bool exact = true, bounded = true, limit = true;
    for (int m = 1; m <= 30; ++m) {
        exact = exact && clean_prob({m, 0.0}) == 1.0;
        const double pmin = clean_min_prob(m);
        bounded = bounded && pmin >= floor_value;
        if (m >= 20) limit = limit && std::abs(pmin - floor_value) < 1e-3;
    }
    r.check(exact, "clean_prob(m, 0) == 1 for m = 1..30");
    r.check(bounded, "clean_prob(m, 2^-(m+1)) >= 4/pi^2 for m = 1..30");
    r.check(limit, "|p_min - 4/pi^2| < 1e-3 for m >= 20 (m=20: " + num(clean_min_prob(20) - floor_value, 3) + ")");
    return r;
}

Report monotonicity() {
    Report r;
    bool ok = true;
    for (int m = 1; m <= 20; ++m) ok = ok && verify_min_at_edge(m, 1000);
    r.check(ok, "verify_min_at_edge(m, 1000) for m = 1..20");
    return r;
}

Report oracle_equivalence() {
    Report r;
    const auto cmp = compare_oracle(200, 8, kSeed);
    r.check(cmp.instances == 200 && cmp.max_abs_diff <= 1e-10,
            std::to_string(cmp.instances) + " instances, m <= 8: max |statevector - closed form| = " +
                num(cmp.max_abs_diff, 3));
    return r;
}

Report special_cases() {
    Report r;
    ExperimentConfig cfg;
    cfg.trials = 1'000'000;
    cfg.adaptive = false;
    cfg.seed = kSeed;
    for (int m : {1, 5}) {
        cfg.m = m;
        cfg.delta = table_delta(m);
        cfg.spec = CapDisorder{std::numbers::pi};
        const auto res = average_q(cfg);
        const double expect = std::ldexp(1.0, -m);
        r.check(std::abs(res.q - expect) <= 3.0 * res.std_error,
                "Cap(pi), m=" + std::to_string(m) + ": q = " + num(res.q) + " +- " + num(res.std_error, 3) +
                    " vs 2^-m = " + num(expect));
    }
    cfg.m = 5;
    cfg.delta = std::ldexp(1.0, -10);
    cfg.spec = CapDisorder{std::numbers::pi / 2};
    const auto res = average_q(cfg);
    r.check(std::abs(res.q - 0.237) <= 0.002,
            "Cap(pi/2), m=5, delta=2^-10: q = " + num(res.q) + " (target 0.237 +- 0.002)");
    return r;
}

Report distribution_anchors() {
    Report r;
    const double half = sigma(CapDisorder{std::numbers::pi / 2}).value;
    const double full = sigma(CapDisorder{std::numbers::pi}).value;
    r.check(std::abs(half - 1.07) <= 0.005, "sigma(Cap(pi/2)) = " + num(half));
    r.check(std::abs(full - 1.71) <= 0.005, "sigma(Cap(pi)) = " + num(full));
    const double vmf0 = sigma(VonMisesFisherDisorder{1e-9}).value;
    r.check(std::abs(vmf0 - 1.713) <= 0.001, "vMF quadrature sigma(kappa=1e-9) = " + num(vmf0));

    constexpr double area = 0.524;
    const Estimate at_one = sigma(SqueezedDisorder{area, 1.0});
    bool symmetric = true, minimum = true;
    for (double ratio : {1.25, 1.5, 2.0, 3.0, 4.0, 5.5}) {
        const Estimate wide = sigma(SqueezedDisorder{area, ratio});
        const Estimate narrow = sigma(SqueezedDisorder{area, 1.0 / ratio});
        const double tol = 3.0 * std::hypot(wide.std_error, narrow.std_error);
        symmetric = symmetric && std::abs(wide.value - narrow.value) <= tol;
        minimum = minimum && wide.value > at_one.value && narrow.value > at_one.value;
        r.note("r=" + num(ratio, 3) + ": sigma = " + num(wide.value) + ", r=1/" + num(ratio, 3) + ": " +
               num(narrow.value) + " (tolerance " + num(tol, 3) + ")");
    }
    r.check(symmetric, "squeezed D=0.524: sigma(r) = sigma(1/r) within 3 combined standard errors");
    r.check(minimum, "squeezed D=0.524: minimum at r = 1 (sigma = " + num(at_one.value) + ")");
    return r;
}

Report sampler_statistics() {
    Report r;
    constexpr std::size_t n = 100'000;
    const double bound = 2.0 / std::sqrt(static_cast<double>(n));
    std::uint64_t stream = 0;
    for (double kappa : {0.5, 5.0, 70.0}) {
        const double ks = vmf_ks_statistic(kappa, n, kSeed + ++stream);
        r.check(ks < bound, "vMF kappa=" + num(kappa) + ": KS = " + num(ks, 4) + " < " + num(bound, 4));
    }
    const std::vector<DisorderSpec> specs = {CapDisorder{0.3},
                                             CapDisorder{std::numbers::pi / 2},
                                             CapDisorder{std::numbers::pi},
                                             SqueezedDisorder{0.524, 2.0},
                                             SqueezedDisorder{0.524, 0.5},
                                             SqueezedDisorder{0.5, std::numbers::pi / 0.5}};
    for (const auto &spec : specs) {
        const std::size_t outside = count_outside_support(spec, n, kSeed);
        r.check(outside == 0, std::string(kind_name(kind_of(spec))) + " param " + num(sweep_parameter(spec)) +
                                  ": " + std::to_string(outside) + " of " + std::to_string(n) + " outside support");
    }
    return r;
}

/// Non-increasing, one derivative minimum, and the strong-disorder floor.
Report sweep_shape() {
    Report r;
    const auto sigmas = grid(0.0, 1.7, 0.05);
    for (int m : {5, 15, 25}) {
        const Curve q = cap_curve(m, DeltaRule::table(), sigmas, 100'000);
        const auto &p = q.points;
        bool non_increasing = true;
        for (std::size_t k = 0; k + 1 < p.size(); ++k) {
            non_increasing = non_increasing &&
                             p[k + 1].value <= p[k].value + 3.0 * std::hypot(p[k].std_error, p[k + 1].std_error);
        }
        r.check(non_increasing, "m=" + std::to_string(m) + ": q(sigma) non-increasing");

        const auto d = derivative(q).points;
        std::size_t kmin = 0;
        for (std::size_t k = 1; k < d.size(); ++k) {
            if (d[k].value < d[kmin].value) kmin = k;
        }
        bool single = kmin > 0 && kmin + 1 < d.size();
        for (std::size_t k = 0; k + 1 < d.size(); ++k) {
            const double tol = 3.0 * std::hypot(d[k].std_error, d[k + 1].std_error);
            if (k < kmin) single = single && d[k + 1].value <= d[k].value + tol;
            else single = single && d[k + 1].value >= d[k].value - tol;
        }
        r.check(single, "m=" + std::to_string(m) + ": concave then convex, single dq/dsigma minimum at sigma = " +
                            num(d[kmin].sigma, 3));

        if (m >= 15) {
            double worst = 0.0, worst_sigma = 0.0;
            for (const auto &pt : p) {
                if (pt.sigma > 1.07 && pt.value > worst) {
                    worst = pt.value;
                    worst_sigma = pt.sigma;
                }
            }
            r.check(worst < 0.005, "m=" + std::to_string(m) + ": q < 0.005 for sigma > 1.07 (max " + num(worst, 4) +
                                       " at sigma = " + num(worst_sigma, 3) + ")");
        }
    }
    const std::vector<double> spot = {0.1, 0.3, 0.5, 0.7, 0.9};
    const Curve big = cap_curve(125, DeltaRule::table(), spot, 100'000);
    bool monotone = true;
    std::string values;
    for (std::size_t k = 0; k < big.points.size(); ++k) {
        values += " " + num(big.points[k].value, 3);
        if (k > 0) {
            const auto &a = big.points[k - 1], &b = big.points[k];
            monotone = monotone && b.value <= a.value + 3.0 * std::hypot(a.std_error, b.std_error);
        }
    }
    r.check(monotone, "m=125 spot check at sigma = 0.1..0.9: non-increasing (q =" + values + ")");
    return r;
}

void check_fit(Report &r, const std::string &label, const FitResult &f, double alpha, double half_alpha, double beta,
               double half_beta, double gamma, double half_gamma) {
    r.note(label + " fit: alpha = " + num(f.alpha, 4) + " +- " + num(f.ci_alpha, 3) + ", beta = " + num(f.beta, 4) +
           " +- " + num(f.ci_beta, 3) + ", gamma = " + num(f.gamma, 4) + " +- " + num(f.ci_gamma, 3) +
           ", mse = " + num(f.mse, 3));
    r.check(std::abs(f.alpha - alpha) <= half_alpha,
            label + " alpha in " + num(alpha, 4) + " +- " + num(half_alpha, 4));
    r.check(std::abs(f.beta - beta) <= half_beta, label + " beta in " + num(beta, 4) + " +- " + num(half_beta, 4));
    r.check(std::abs(f.gamma - gamma) <= half_gamma,
            label + " gamma in " + num(gamma, 4) + " +- " + num(half_gamma, 4));
}

Report power_law_fits() {
    Report r;
    const auto sigmas = grid(0.0, 1.7, 0.02);
    std::vector<PowerLawPoint> critical, half;
    for (int m = 5; m <= 45; m += 10) {
        const SigmaPoint c = find_sigma_c(cap_curve(m, DeltaRule::table(), sigmas, 100'000));
        const SigmaPoint h = find_sigma_half(cap_curve(m, DeltaRule::edge(), sigmas, 100'000), m);
        critical.push_back({static_cast<double>(m), c.value});
        half.push_back({static_cast<double>(m), h.value});
        r.note("m=" + std::to_string(m) + ": sigma_c = " + num(c.value, 4) + ", sigma_1/2 = " + num(h.value, 4));
    }
    check_fit(r, "sigma_1/2", fit_powerlaw(half), 0.0537, 3 * 0.00905, 2.22, 3 * 0.0450, -0.637, 0.05);
    check_fit(r, "sigma_c", fit_powerlaw(critical), -0.174, 3 * 0.314, 1.18, 3 * 0.0790, -0.293, 3 * 0.209);
    return r;
}

Report corollary_agreement() {
    Report r;
    constexpr int m = 25;
    ExperimentConfig base;
    base.trials = 1'000'000;
    base.adaptive = false;
    base.seed = kSeed;
    for (double s : {0.3, 0.6, 0.9}) {
        const auto specs = matched_specs(s);
        const auto res = corollary_check(specs, s, m, table_delta(m), base);
        const double tol = std::max(0.01, 3.0 * res.combined_std_error);
        std::string qs;
        for (const auto &x : res.results) qs += " " + num(x.q, 5);
        r.check(specs.size() == 3 && res.max_abs_diff <= tol,
                "sigma=" + num(s) + ": q(cap, vmf, squeezed) =" + qs + ", max gap " + num(res.max_abs_diff, 3) +
                    " <= " + num(tol, 3));
    }
    return r;
}

std::string slurp(const fs::path &p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

Report determinism() {
    Report r;
    const fs::path root = fs::temp_directory_path() / ("glassyqpe_acceptance_" + std::to_string(::getpid()));
    struct Run {
        std::vector<std::string> args;
        std::string file;
    };
    const std::vector<Run> runs = {
        {{"sweep", "--kind", "cap", "--m", "5", "--sigma", "0:1.7:0.1", "--trials", "20000"}, "sweep_cap_m5.csv"},
        {{"sweep", "--kind", "vmf", "--m", "15", "--sigma", "0:1.7:0.1", "--trials", "50000", "--fixed-trials"},
         "sweep_vmf_m15.csv"},
        {{"sweep", "--kind", "squeezed", "--m", "5", "--sigma", "0.3:0.6:0.1", "--trials", "20000", "--fixed-trials"},
         "sweep_squeezed_m5.csv"},
    };
    for (const auto &run : runs) {
        std::vector<std::string> bodies;
        for (const char *workers : {"1", "1", "3"}) {
            const fs::path dir = root / (run.file + "_" + std::to_string(bodies.size()));
            auto args = run.args;
            args.insert(args.end(), {"--seed", "7", "--workers", workers, "--out", dir.string()});
            std::ostringstream out, err;
            if (cli::run(args, out, err) != 0) {
                r.check(false, run.file + ": sweep failed: " + err.str());
                break;
            }
            bodies.push_back(slurp(dir / run.file));
        }
        r.check(bodies.size() == 3 && !bodies[0].empty() && bodies[0] == bodies[1] && bodies[0] == bodies[2],
                run.file + ": identical bytes for repeated runs and workers = 1, 3");
    }
    fs::remove_all(root);
    return r;
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Report()>>> criteria = {
        {"clean-QPE anchors", clean_anchors},
        {"edge monotonicity", monotonicity},
        {"oracle equivalence", oracle_equivalence},
        {"analytic special cases", special_cases},
        {"distribution anchors", distribution_anchors},
        {"sampler statistics", sampler_statistics},
        {"sweep-shape properties", sweep_shape},
        {"power-law fits", power_law_fits},
        {"corollary agreement", corollary_agreement},
        {"determinism", determinism},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto start = std::chrono::steady_clock::now();
        Report report;
        try {
            report = criteria[i].second();
        } catch (const std::exception &e) {
            report.check(false, std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        char timing[32];
        std::snprintf(timing, sizeof timing, "%.1f s", secs);
        std::cout << (report.pass ? "PASS" : "FAIL") << " criterion " << i + 1 << ": " << criteria[i].first << " ("
                  << timing << ")\n";
        for (const auto &line : report.details) std::cout << "    " << line << '\n';
        std::cout.flush();
        if (!report.pass) ++failures;
    }
    std::cout << (failures == 0 ? "ALL CRITERIA PASS" : std::to_string(failures) + " CRITERIA FAILED") << '\n';
    return failures == 0 ? 0 : 1;
}
