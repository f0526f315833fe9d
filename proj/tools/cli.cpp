#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>
#include <json.hpp>

#include "glassyqpe.hpp"

namespace glassyqpe::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

/// Bad flags or values; reported with exit code 2.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::uint64_t default_seed() {
    if (const char *env = std::getenv(kSeedEnv); env != nullptr && *env != '\0') {
        try {
            return std::stoull(env);
        } catch (const std::exception &) {
            throw UsageError(std::string(kSeedEnv) + " is not an unsigned integer");
        }
    }
    return kFallbackSeed;
}

std::vector<std::string> split(const std::string &text, char sep) {
    std::vector<std::string> parts;
    std::string part;
    std::istringstream is(text);
    while (std::getline(is, part, sep)) parts.push_back(part);
    return parts;
}

double to_double(const std::string &text, const char *what) {
    try {
        return csv::parse_double(text);
    } catch (const std::exception &) {
        throw UsageError(std::string("invalid ") + what + ": '" + text + "'");
    }
}

/// "5,15,25" or "start:stop:step".
std::vector<int> parse_m_list(const std::string &text) {
    std::vector<int> out;
    auto to_int = [](const std::string &s) {
        try {
            std::size_t used = 0;
            const int v = std::stoi(s, &used);
            if (used != s.size()) throw std::invalid_argument(s);
            return v;
        } catch (const std::exception &) {
            throw UsageError("invalid m value '" + s + "'");
        }
    };
    if (text.find(':') != std::string::npos) {
        const auto parts = split(text, ':');
        if (parts.size() != 3) throw UsageError("m range must be start:stop:step");
        const int start = to_int(parts[0]), stop = to_int(parts[1]), step = to_int(parts[2]);
        if (step <= 0 || stop < start) throw UsageError("m range must have step > 0 and stop >= start");
        for (int m = start; m <= stop; m += step) out.push_back(m);
    } else {
        for (const auto &p : split(text, ',')) out.push_back(to_int(p));
    }
    if (out.empty()) throw UsageError("empty m list");
    for (int m : out) {
        if (m < 1) throw UsageError("m must be >= 1");
    }
    return out;
}

/// "start:stop:step", stop inclusive; points are start + k * step.
std::vector<double> parse_grid(const std::string &text) {
    const auto parts = split(text, ':');
    if (parts.size() != 3) throw UsageError("sigma grid must be start:stop:step");
    const double start = to_double(parts[0], "sigma start");
    const double stop = to_double(parts[1], "sigma stop");
    const double step = to_double(parts[2], "sigma step");
    if (!(step > 0.0) || !(stop >= start)) throw UsageError("sigma grid needs step > 0 and stop >= start");
    const auto count = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
    std::vector<double> grid;
    grid.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        // Round to 12 significant digits so 0.1 * 3 is written as 0.3.
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.12g", start + static_cast<double>(k) * step);
        grid.push_back(std::strtod(buf, nullptr));
    }
    return grid;
}

DeltaRule parse_delta(const std::string &text) {
    if (text == "table") return DeltaRule::table();
    if (text == "edge" || text == "min") return DeltaRule::edge();
    if (text.rfind("2^", 0) == 0) return DeltaRule::fixed(std::ldexp(1.0, static_cast<int>(to_double(text.substr(2), "delta exponent"))));
    return DeltaRule::fixed(to_double(text, "delta"));
}

DisorderKind parse_kind_or_throw(const std::string &text) {
    if (auto k = parse_kind(text)) return *k;
    throw UsageError("unknown disorder kind '" + text + "' (expected cap, squeezed or vmf)");
}

std::string utc_now() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

std::string join_args(const std::vector<std::string> &args) {
    std::string s = "glassyqpe";
    for (const auto &a : args) s += " " + a;
    return s;
}

/// Manifest written next to each output file.
class Manifest {
public:
    Manifest(std::string command, const std::vector<std::string> &args, std::uint64_t seed)
        : started_(std::chrono::steady_clock::now()) {
        doc_["command"] = std::move(command);
        doc_["argv"] = args;
        doc_["rerun"] = join_args(args) + " --seed " + std::to_string(seed);
        doc_["tool_version"] = kVersion;
        doc_["started_utc"] = utc_now();
        doc_["config"]["seed"] = seed;
    }

    json &config() { return doc_["config"]; }
    json &doc() { return doc_; }

    void write_for(const fs::path &output) {
        doc_["output"] = output.filename().string();
        doc_["elapsed_seconds"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started_).count();
        fs::path path = output;
        path += ".manifest.json";
        std::ofstream os(path);
        os << doc_.dump(2) << '\n';
    }

private:
    json doc_;
    std::chrono::steady_clock::time_point started_;
};

std::ofstream open_output(const fs::path &path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream os(path);
    if (!os) throw UsageError("cannot write " + path.string());
    return os;
}

// ---------------------------------------------------------------- sweep

struct SweepArgs {
    std::string kind;
    std::string m_list;
    std::string sigma;
    double area = 0.5;
    std::string branch = "both";
    std::string delta = "table";
    std::uint64_t trials = 100'000;
    std::optional<std::uint64_t> seed;
    int sigfigs = 3;
    bool fixed_trials = false;
    std::uint64_t max_trials = 100'000'000;
    unsigned workers = 1;
    std::string out_dir = ".";
};

void add_run_options(CLI::App *cmd, SweepArgs &a) {
    cmd->add_option("--trials", a.trials, "Trials per sigma point (initial count when adaptive)")
        ->check(CLI::Range(std::uint64_t{1000}, std::uint64_t{1} << 40));
    cmd->add_option("--seed", a.seed, std::string("Master seed (default $") + kSeedEnv + ")");
    cmd->add_option("--workers", a.workers, "Worker threads; results do not depend on it (0 = all cores)");
    cmd->add_option("--out", a.out_dir, "Output directory");
    cmd->add_option("--area", a.area, "Squeezed: elliptic cross-section area D");
}

struct Branch {
    std::string name;
    SigmaSearch search;
    std::vector<double> grid;
};

/// Resolves the sigma grid per branch; out-of-range requests are usage errors.
std::vector<Branch> resolve_branches(DisorderKind kind, const SweepArgs &a, const std::string &default_grid) {
    std::vector<Branch> branches;
    if (kind == DisorderKind::Squeezed) {
        if (!(a.area > 0.0 && a.area <= std::numbers::pi)) throw UsageError("--area must lie in (0, pi]");
        if (a.branch == "both" || a.branch == "wide") branches.push_back({"wide", {a.area, false}, {}});
        if (a.branch == "both" || a.branch == "narrow") branches.push_back({"narrow", {a.area, true}, {}});
        if (branches.empty()) throw UsageError("--branch must be both, wide or narrow");
    } else {
        branches.push_back({"", {}, {}});
    }
    for (auto &b : branches) {
        const auto [lo, hi] = attainable_sigma(kind, b.search);
        if (a.sigma.empty() && kind == DisorderKind::Squeezed) {
            constexpr double step = 0.02;
            for (double k = std::ceil(lo / step); k * step <= hi; k += 1.0) {
                char buf[32];
                std::snprintf(buf, sizeof buf, "%.12g", k * step);
                b.grid.push_back(std::strtod(buf, nullptr));
            }
        } else {
            b.grid = parse_grid(a.sigma.empty() ? default_grid : a.sigma);
        }
        for (double s : b.grid) {
            if (s < lo - 1e-12 || s > hi + 1e-12) {
                std::ostringstream os;
                os << "sigma " << s << " is not attainable for " << kind_name(kind)
                   << (b.name.empty() ? "" : " (" + b.name + " branch)") << "; attainable range is [" << lo
                   << ", " << hi << "]";
                throw UsageError(os.str());
            }
        }
        if (b.grid.empty()) throw UsageError("empty sigma grid");
    }
    return branches;
}

SweepOptions to_options(const SweepArgs &a, const SigmaSearch &search) {
    SweepOptions o;
    o.trials = a.trials;
    o.target_sigfigs = a.sigfigs;
    o.adaptive = !a.fixed_trials;
    o.max_trials = a.max_trials;
    o.workers = a.workers;
    o.search = search;
    return o;
}

fs::path sweep_path(const std::string &dir, DisorderKind kind, int m, const DeltaRule &rule) {
    std::string name = "sweep_" + std::string(kind_name(kind)) + "_m" + std::to_string(m);
    if (rule.kind == DeltaRule::Kind::Edge) name += "_edge";
    return fs::path(dir) / (name + ".csv");
}

struct SweepOutcome {
    fs::path path;
    std::vector<SweepRecord> records;  // all branches, file order
};

SweepOutcome run_and_write_sweep(DisorderKind kind, int m, const DeltaRule &rule, const std::vector<Branch> &branches,
                                 const SweepArgs &a, std::uint64_t seed, const std::vector<std::string> &argv,
                                 const std::string &command) {
    SweepOutcome outcome;
    outcome.path = sweep_path(a.out_dir, kind, m, rule);
    Manifest manifest(command, argv, seed);
    auto &cfg = manifest.config();
    cfg["kind"] = kind_name(kind);
    cfg["m"] = m;
    cfg["delta_rule"] = rule.describe();
    cfg["delta"] = rule.resolve(m);
    cfg["trials"] = a.trials;
    cfg["adaptive"] = !a.fixed_trials;
    cfg["max_trials"] = a.max_trials;
    cfg["target_sigfigs"] = a.sigfigs;
    cfg["workers"] = a.workers;
    if (kind == DisorderKind::Squeezed) cfg["area"] = a.area;

    std::ostringstream body;
    csv::write_row(body, "kind", "param", "sigma", "m", "delta", "q", "stderr", "trials", "converged");
    json unconverged = json::array();
    for (const auto &b : branches) {
        cfg["sigma_grid"][b.name.empty() ? "all" : b.name] = b.grid;
        const auto records = sweep(kind, m, rule, b.grid, seed, to_options(a, b.search));
        for (const auto &r : records) {
            csv::write_row(body, kind_name(kind), r.param, r.sigma, m, r.delta, r.q, r.std_error, r.trials,
                           r.converged);
            if (!r.converged) unconverged.push_back(r.sigma);
            outcome.records.push_back(r);
        }
    }
    manifest.doc()["convergence"] = {{"all_converged", unconverged.empty()}, {"unconverged_sigma", unconverged}};
    auto os = open_output(outcome.path);
    os << body.str();
    os.close();
    manifest.write_for(outcome.path);
    return outcome;
}

int cmd_sweep(const SweepArgs &a, const std::vector<std::string> &argv, std::ostream &out) {
    const DisorderKind kind = parse_kind_or_throw(a.kind);
    const auto ms = parse_m_list(a.m_list);
    const DeltaRule rule = parse_delta(a.delta);
    const std::uint64_t seed = a.seed.value_or(default_seed());
    const auto branches = resolve_branches(kind, a, "0:1.7:0.02");
    for (int m : ms) {
        const auto outcome = run_and_write_sweep(kind, m, rule, branches, a, seed, argv, "sweep");
        out << "wrote " << outcome.path.string() << " (" << outcome.records.size() << " rows)\n";
    }
    return kOk;
}

// ---------------------------------------------------------------- analyze

Curve curve_from_table(const csv::Table &t, int m, const std::string &kind) {
    const std::size_t cs = t.column("sigma"), cq = t.column("q"), ce = t.column("stderr");
    Curve c;
    c.m = m;
    c.kind = kind;
    for (const auto &row : t.rows) {
        c.points.push_back({csv::parse_double(row[cs]), csv::parse_double(row[cq]), csv::parse_double(row[ce])});
    }
    return c;
}

int cmd_derivative(const std::string &input, std::string output, std::ostream &out) {
    csv::Table t;
    try {
        t = csv::read_file(input);
    } catch (const std::exception &e) {
        throw UsageError(e.what());
    }
    Curve curve;
    try {
        curve = curve_from_table(t, 0, "");
    } catch (const std::exception &e) {
        throw UsageError(std::string("bad sweep file: ") + e.what());
    }
    Curve d;
    try {
        d = derivative(curve);
    } catch (const GridError &e) {
        throw UsageError(std::string("derivative needs a uniform increasing sigma grid: ") + e.what());
    }
    if (output.empty()) {
        fs::path p(input);
        output = (p.parent_path() / (p.stem().string() + "_deriv.csv")).string();
    }
    std::ostringstream body;
    for (std::size_t i = 0; i < t.header.size(); ++i) body << t.header[i] << ',';
    body << "dq_dsigma,dq_stderr\n";
    for (std::size_t k = 0; k < t.rows.size(); ++k) {
        for (const auto &field : t.rows[k]) body << field << ',';
        csv::write_row(body, d.points[k].value, d.points[k].std_error);
    }
    auto os = open_output(output);
    os << body.str();
    out << "wrote " << output << '\n';
    return kOk;
}

void write_fit(const fs::path &path, const FitResult &f) {
    auto os = open_output(path);
    csv::write_row(os, "alpha", "beta", "gamma", "mse", "ci_alpha", "ci_beta", "ci_gamma");
    csv::write_row(os, f.alpha, f.beta, f.gamma, f.mse, f.ci_alpha, f.ci_beta, f.ci_gamma);
}

/// sigma-c (half = false) or sigma-half (half = true) over an m list.
int cmd_threshold(bool half, const SweepArgs &a, const std::string &input_dir,
                  const std::vector<std::string> &argv, std::ostream &out, std::ostream &err) {
    const DisorderKind kind = parse_kind_or_throw(a.kind);
    const auto ms = parse_m_list(a.m_list);
    const std::uint64_t seed = a.seed.value_or(default_seed());
    const DeltaRule rule = half ? DeltaRule::edge() : DeltaRule::table();
    SweepArgs run = a;
    run.fixed_trials = true;
    if (kind == DisorderKind::Squeezed && run.branch == "both") run.branch = "wide";
    const std::string label = half ? "sigma_half" : "sigma_c";
    const std::string kname(kind_name(kind));

    std::vector<PowerLawPoint> points;
    std::ostringstream table;
    csv::write_row(table, "m", label, "uncertainty", "at_boundary");
    bool bracket_failed = false;
    for (int m : ms) {
        Curve curve;
        if (!input_dir.empty()) {
            const auto path = sweep_path(input_dir, kind, m, rule);
            csv::Table t;
            try {
                t = csv::read_file(path.string());
            } catch (const std::exception &e) {
                throw UsageError(e.what());
            }
            curve = curve_from_table(t, m, kname);
        } else {
            const auto branches = resolve_branches(kind, run, "0:1.7:0.02");
            const auto outcome = run_and_write_sweep(kind, m, rule, branches, run, seed, argv, "analyze " + label);
            curve.m = m;
            curve.kind = kname;
            for (const auto &r : outcome.records) curve.points.push_back({r.sigma, r.q, r.std_error});
        }
        curve.delta_rule = rule.describe();

        Curve d;
        try {
            d = derivative(curve);
        } catch (const GridError &e) {
            throw UsageError(std::string("sweep for m=") + std::to_string(m) + ": " + e.what());
        }
        {
            auto os = open_output(fs::path(a.out_dir) / ("deriv_" + kname + "_m" + std::to_string(m) +
                                                         (half ? "_edge" : "") + ".csv"));
            csv::write_row(os, "sigma", "q", "stderr", "dq_dsigma", "dq_stderr");
            for (std::size_t k = 0; k < d.points.size(); ++k) {
                csv::write_row(os, curve.points[k].sigma, curve.points[k].value, curve.points[k].std_error,
                               d.points[k].value, d.points[k].std_error);
            }
        }

        SigmaPoint sp;
        try {
            sp = half ? find_sigma_half(curve, m) : find_sigma_c(curve);
        } catch (const BracketError &e) {
            err << "m=" << m << ": " << e.what() << '\n';
            bracket_failed = true;
            continue;
        }
        if (sp.at_boundary) err << "warning: m=" << m << ": derivative minimum at grid boundary\n";
        csv::write_row(table, m, sp.value, sp.uncertainty, sp.at_boundary);
        points.push_back({static_cast<double>(m), sp.value});
        out << label << "(m=" << m << ") = " << csv::format(sp.value) << " +- " << csv::format(sp.uncertainty)
            << '\n';
    }

    const fs::path table_path = fs::path(a.out_dir) / (label + "_" + kname + ".csv");
    {
        auto os = open_output(table_path);
        os << table.str();
    }
    Manifest manifest("analyze " + label, argv, seed);
    manifest.config()["kind"] = kname;
    manifest.config()["m"] = ms;
    manifest.config()["delta_rule"] = rule.describe();
    manifest.config()["trials"] = run.trials;
    manifest.config()["input_dir"] = input_dir;
    manifest.write_for(table_path);

    if (bracket_failed) return kNoBracket;
    if (points.size() >= 4) {
        const FitResult fit = fit_powerlaw(points);
        const fs::path fit_path = fs::path(a.out_dir) / ("fit_" + label + "_" + kname + ".csv");
        write_fit(fit_path, fit);
        manifest.write_for(fit_path);
        out << "fit: alpha=" << csv::format(fit.alpha) << " beta=" << csv::format(fit.beta)
            << " gamma=" << csv::format(fit.gamma) << " mse=" << csv::format(fit.mse) << '\n';
    } else {
        err << "fewer than 4 m values; skipping power-law fit\n";
    }
    return kOk;
}

// ---------------------------------------------------------------- verify

struct VerifyArgs {
    std::string suite = "all";
    std::uint64_t trials = 0;  // 0 = suite default
    int m = 25;
    double sigma = 0.6;
    std::optional<std::uint64_t> seed;
    unsigned workers = 1;
};

struct SuiteLine {
    bool pass;
    std::string text;
};

std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(6) << v;
    return os.str();
}

std::vector<SuiteLine> suite_oracle(const VerifyArgs &a, std::uint64_t seed) {
    const int n = a.trials == 0 ? 200 : static_cast<int>(a.trials);
    const auto cmp = compare_oracle(n, 8, seed);
    return {{cmp.max_abs_diff <= 1e-10 && cmp.max_norm_error <= 1e-10,
             "oracle: " + std::to_string(cmp.instances) + " instances, max |statevector - closed form| = " +
                 fmt(cmp.max_abs_diff) + ", max norm error = " + fmt(cmp.max_norm_error)}};
}

std::vector<SuiteLine> suite_special(const VerifyArgs &a, std::uint64_t seed) {
    std::vector<SuiteLine> lines;
    ExperimentConfig cfg;
    cfg.trials = a.trials == 0 ? 1'000'000 : a.trials;
    cfg.adaptive = false;
    cfg.seed = seed;
    cfg.workers = a.workers;
    for (int m : {1, 5}) {
        cfg.m = m;
        cfg.delta = table_delta(m);
        cfg.spec = CapDisorder{std::numbers::pi};
        const auto r = average_q(cfg);
        const double expect = full_sphere_analytic(m);
        lines.push_back({std::abs(r.q - expect) <= 3.0 * r.std_error,
                         "full sphere m=" + std::to_string(m) + ": q = " + fmt(r.q) + " +- " + fmt(r.std_error) +
                             ", 2^-m = " + fmt(expect)});
    }
    cfg.m = 5;
    cfg.delta = std::ldexp(1.0, -10);
    cfg.spec = CapDisorder{std::numbers::pi / 2};
    const auto r = average_q(cfg);
    const double analytic = half_sphere_analytic(5, cfg.delta);
    lines.push_back({std::abs(r.q - 0.237) <= 0.002 && std::abs(r.q - analytic) <= 3.0 * r.std_error,
                     "half sphere m=5 delta=2^-10: q = " + fmt(r.q) + " +- " + fmt(r.std_error) +
                         ", analytic = " + fmt(analytic) + ", anchor 0.237"});
    const double s_half = sigma(CapDisorder{std::numbers::pi / 2}).value;
    const double s_full = sigma(CapDisorder{std::numbers::pi}).value;
    lines.push_back({std::abs(s_half - 1.07) <= 0.005 && std::abs(s_full - 1.71) <= 0.005,
                     "cap sigma: d=pi/2 -> " + fmt(s_half) + ", d=pi -> " + fmt(s_full)});
    return lines;
}

std::vector<SuiteLine> suite_monotonicity() {
    bool ok = true;
    for (int m = 1; m <= 20; ++m) ok = ok && verify_min_at_edge(m, 1000);
    bool anchors = true;
    for (int m = 1; m <= 30; ++m) {
        anchors = anchors && clean_prob({m, 0.0}) == 1.0 && clean_min_prob(m) >= 4.0 / (std::numbers::pi * std::numbers::pi);
    }
    return {{ok, "edge minimum: clean_prob strictly decreasing on (0, 2^-(m+1)] for m = 1..20"},
            {anchors, "clean anchors: p(delta=0) = 1 and p_min >= 4/pi^2 for m = 1..30"}};
}

std::vector<SuiteLine> suite_samplers(std::uint64_t seed) {
    std::vector<SuiteLine> lines;
    constexpr std::size_t n = 100'000;
    std::uint64_t stream = 0;
    for (double kappa : {0.5, 5.0, 70.0}) {
        const double ks = vmf_ks_statistic(kappa, n, seed + ++stream);
        const double bound = 2.0 / std::sqrt(static_cast<double>(n));
        lines.push_back({ks < bound, "vMF kappa=" + fmt(kappa) + ": KS = " + fmt(ks) + " (bound " + fmt(bound) + ")"});
    }
    const std::vector<DisorderSpec> specs = {CapDisorder{0.3}, CapDisorder{std::numbers::pi / 2}, CapDisorder{std::numbers::pi},
                                             SqueezedDisorder{0.524, 2.0}, SqueezedDisorder{0.524, 0.5},
                                             SqueezedDisorder{0.5, std::numbers::pi / 0.5}};
    std::size_t outside = 0;
    for (const auto &s : specs) outside += count_outside_support(s, n, seed);
    lines.push_back({outside == 0, "cap/squeezed support: " + std::to_string(outside) + " samples outside"});
    return lines;
}

std::vector<SuiteLine> suite_corollary(const VerifyArgs &a, std::uint64_t seed) {
    std::vector<DisorderSpec> specs;
    try {
        specs = matched_specs(a.sigma);
    } catch (const RangeError &e) {
        throw UsageError(e.what());
    }
    ExperimentConfig base;
    base.trials = a.trials == 0 ? 200'000 : a.trials;
    base.adaptive = false;
    base.seed = seed;
    base.workers = a.workers;
    const auto res = corollary_check(specs, a.sigma, a.m, table_delta(a.m), base);
    const double tol = std::max(0.01, 3.0 * res.combined_std_error);
    std::string qs;
    for (const auto &r : res.results) qs += " " + fmt(r.q);
    return {{res.max_abs_diff <= tol, "corollary m=" + std::to_string(a.m) + " sigma=" + fmt(a.sigma) + ": q =" + qs +
                                          ", max |dq| = " + fmt(res.max_abs_diff) + " (tolerance " + fmt(tol) + ")"}};
}

int cmd_verify(const VerifyArgs &a, std::ostream &out) {
    const std::uint64_t seed = a.seed.value_or(default_seed());
    const std::vector<std::string> known = {"oracle", "special-cases", "monotonicity", "samplers", "corollary"};
    if (a.suite != "all" && std::find(known.begin(), known.end(), a.suite) == known.end()) {
        throw UsageError("unknown suite '" + a.suite + "'");
    }
    auto wanted = [&](const std::string &s) { return a.suite == "all" || a.suite == s; };
    std::vector<SuiteLine> lines;
    auto append = [&](std::vector<SuiteLine> more) { lines.insert(lines.end(), more.begin(), more.end()); };
    if (wanted("oracle")) append(suite_oracle(a, seed));
    if (wanted("special-cases")) append(suite_special(a, seed));
    if (wanted("monotonicity")) append(suite_monotonicity());
    if (wanted("samplers")) append(suite_samplers(seed));
    if (wanted("corollary")) append(suite_corollary(a, seed));
    bool all = true;
    for (const auto &l : lines) {
        out << (l.pass ? "PASS " : "FAIL ") << l.text << '\n';
        all = all && l.pass;
    }
    return all ? kOk : kVerificationFailed;
}

// ---------------------------------------------------------------- sample

struct SampleArgs {
    std::string kind;
    std::optional<double> d;
    double area = 0.5;
    double r = 1.0;
    std::optional<double> kappa;
    std::size_t n = 1000;
    std::optional<std::uint64_t> seed;
    std::string output;
};

int cmd_sample(const SampleArgs &a, std::ostream &out) {
    const DisorderKind kind = parse_kind_or_throw(a.kind);
    DisorderSpec spec;
    switch (kind) {
        case DisorderKind::Cap:
            if (!a.d) throw UsageError("cap needs --d");
            spec = CapDisorder{*a.d};
            break;
        case DisorderKind::Squeezed: spec = SqueezedDisorder{a.area, a.r}; break;
        case DisorderKind::VonMisesFisher:
            if (!a.kappa) throw UsageError("vmf needs --kappa");
            spec = VonMisesFisherDisorder{*a.kappa};
            break;
    }
    try {
        validate(spec);
    } catch (const std::exception &e) {
        throw UsageError(e.what());
    }
    const DisorderSampler sampler(spec);
    Xoshiro256 gen(a.seed.value_or(default_seed()));
    std::ostringstream body;
    csv::write_row(body, "x", "y", "z", "theta", "phi");
    for (std::size_t k = 0; k < a.n; ++k) {
        const SphericalPoint p = sampler(gen);
        const AngleSample ang = p.angles();
        // Adding 0.0 turns -0 into +0 so that exact poles print as 0.
        csv::write_row(body, p.x + 0.0, p.y + 0.0, p.z + 0.0, ang.theta, ang.phi + 0.0);
    }
    if (a.output.empty()) {
        out << body.str();
    } else {
        auto os = open_output(a.output);
        os << body.str();
    }
    return kOk;
}

}  // namespace

int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
    CLI::App app{"Quantum phase estimation under glassy Hadamard disorder"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    SweepArgs sweep_args;
    auto *sweep_cmd = app.add_subcommand("sweep", "Disorder-averaged q over a sigma grid, one CSV per (kind, m)");
    sweep_cmd->add_option("--kind", sweep_args.kind, "cap | squeezed | vmf")->required();
    sweep_cmd->add_option("--m", sweep_args.m_list, "m values: 5,15,25 or 5:45:10")->required();
    sweep_cmd->add_option("--sigma", sweep_args.sigma, "start:stop:step (default 0:1.7:0.02)");
    sweep_cmd->add_option("--branch", sweep_args.branch, "Squeezed: both | wide (r >= 1) | narrow (r <= 1)");
    sweep_cmd->add_option("--delta", sweep_args.delta, "table | edge | <value> | 2^<k>");
    sweep_cmd->add_option("--sigfigs", sweep_args.sigfigs, "Convergence target")->check(CLI::Range(2, 4));
    sweep_cmd->add_flag("--fixed-trials", sweep_args.fixed_trials, "Run exactly --trials per point");
    sweep_cmd->add_option("--max-trials", sweep_args.max_trials, "Trial ceiling for adaptive runs");
    add_run_options(sweep_cmd, sweep_args);

    auto *analyze_cmd = app.add_subcommand("analyze", "Derivative curves, sigma_c, sigma_1/2 and power-law fits");
    analyze_cmd->require_subcommand(1);
    std::string deriv_input, deriv_output;
    auto *deriv_cmd = analyze_cmd->add_subcommand("derivative", "Append dq/dsigma to a sweep CSV");
    deriv_cmd->add_option("--input", deriv_input, "Sweep CSV")->required();
    deriv_cmd->add_option("--output", deriv_output, "Output CSV (default <input>_deriv.csv)");
    SweepArgs thr_args;
    std::string input_dir;
    std::vector<CLI::App *> threshold_cmds;
    for (const char *name : {"sigma-c", "sigma-half"}) {
        auto *cmd = analyze_cmd->add_subcommand(name, std::string(name) + " per m, then the power-law fit");
        cmd->add_option("--kind", thr_args.kind, "cap | squeezed | vmf")->required();
        cmd->add_option("--m", thr_args.m_list, "m values")->required();
        cmd->add_option("--sigma", thr_args.sigma, "start:stop:step (default 0:1.7:0.02)");
        cmd->add_option("--input-dir", input_dir, "Read existing sweep CSVs instead of running sweeps");
        cmd->add_option("--branch", thr_args.branch, "Squeezed branch: wide | narrow");
        add_run_options(cmd, thr_args);
        threshold_cmds.push_back(cmd);
    }

    VerifyArgs verify_args;
    auto *verify_cmd = app.add_subcommand("verify", "Run self-check suites");
    verify_cmd->add_option("suite", verify_args.suite, "oracle | special-cases | monotonicity | samplers | corollary | all");
    verify_cmd->add_option("--trials", verify_args.trials, "Instances (oracle) or Monte Carlo trials");
    verify_cmd->add_option("--m", verify_args.m, "Corollary: auxiliary qubits");
    verify_cmd->add_option("--sigma", verify_args.sigma, "Corollary: disorder strength");
    verify_cmd->add_option("--seed", verify_args.seed, "Master seed");
    verify_cmd->add_option("--workers", verify_args.workers, "Worker threads");

    SampleArgs sample_args;
    auto *sample_cmd = app.add_subcommand("sample", "Draw Bloch-sphere points from a disorder distribution");
    sample_cmd->add_option("--kind", sample_args.kind, "cap | squeezed | vmf")->required();
    sample_cmd->add_option("--d", sample_args.d, "Cap angle d (radians)");
    sample_cmd->add_option("--area", sample_args.area, "Squeezed area D");
    sample_cmd->add_option("--r", sample_args.r, "Squeezed ratio r = a/b");
    sample_cmd->add_option("--kappa", sample_args.kappa, "vMF concentration");
    sample_cmd->add_option("-n", sample_args.n, "Number of points");
    sample_cmd->add_option("--seed", sample_args.seed, "Seed");
    sample_cmd->add_option("--output", sample_args.output, "Output CSV (default stdout)");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp &e) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp &e) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::CallForVersion &) {
        out << kVersion << '\n';
        return kOk;
    } catch (const CLI::ParseError &e) {
        err << "error: " << e.what() << '\n';
        return kBadArguments;
    }

    try {
        if (sweep_cmd->parsed()) return cmd_sweep(sweep_args, args, out);
        if (deriv_cmd->parsed()) return cmd_derivative(deriv_input, deriv_output, out);
        for (std::size_t i = 0; i < threshold_cmds.size(); ++i) {
            if (threshold_cmds[i]->parsed()) return cmd_threshold(i == 1, thr_args, input_dir, args, out, err);
        }
        if (verify_cmd->parsed()) return cmd_verify(verify_args, out);
        if (sample_cmd->parsed()) return cmd_sample(sample_args, out);
    } catch (const UsageError &e) {
        err << "error: " << e.what() << '\n';
        return kBadArguments;
    } catch (const RangeError &e) {
        err << "error: " << e.what() << '\n';
        return kBadArguments;
    } catch (const BracketError &e) {
        err << "error: " << e.what() << '\n';
        return kNoBracket;
    } catch (const std::invalid_argument &e) {
        err << "error: " << e.what() << '\n';
        return kBadArguments;
    }
    return kBadArguments;
}

}  // namespace glassyqpe::cli
