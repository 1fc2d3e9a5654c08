#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "matconc/bounds.hpp"
#include "matconc/fuzz.hpp"
#include "matconc/ising.hpp"
#include "matconc/models.hpp"
#include "matconc/report.hpp"
#include "matconc/stein.hpp"

namespace {

namespace fs = std::filesystem;
using namespace matconc;

constexpr int exit_ok = 0;
constexpr int exit_error = 1;
constexpr int exit_violation = 2;

// ---------------------------------------------------------------------------
// Parameters: defaults, then the --config file, then explicit flags.

enum class Kind { integer, unsigned_integer, real, text, boolean, int_list, real_list, text_list };

struct Param {
    std::string name;
    Kind kind;
    json fallback;  // null means required
    std::string help;
};

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(text);
    while (std::getline(in, item, ',')) {
        const auto b = item.find_first_not_of(' ');
        const auto e = item.find_last_not_of(' ');
        if (b == std::string::npos) {
            throw PreconditionError("empty list item in \"" + text + "\"");
        }
        out.push_back(item.substr(b, e - b + 1));
    }
    return out;
}

json parse_scalar(Kind kind, const std::string& name, const std::string& text) {
    std::size_t used = 0;
    try {
        switch (kind) {
            case Kind::integer: {
                const long long v = std::stoll(text, &used);
                if (used == text.size()) {
                    return v;
                }
                break;
            }
            case Kind::unsigned_integer: {
                if (!text.empty() && text[0] != '-') {
                    const unsigned long long v = std::stoull(text, &used);
                    if (used == text.size()) {
                        return v;
                    }
                }
                break;
            }
            case Kind::real: {
                const double v = std::stod(text, &used);
                if (used == text.size()) {
                    return v;
                }
                break;
            }
            case Kind::boolean:
                if (text == "true" || text == "1") {
                    return true;
                }
                if (text == "false" || text == "0") {
                    return false;
                }
                break;
            default:
                return text;
        }
    } catch (const std::exception&) {
    }
    throw PreconditionError("invalid value \"" + text + "\" for " + name);
}

Kind element_kind(Kind kind) {
    switch (kind) {
        case Kind::int_list: return Kind::integer;
        case Kind::real_list: return Kind::real;
        case Kind::text_list: return Kind::text;
        default: return kind;
    }
}

bool is_list(Kind kind) { return kind == Kind::int_list || kind == Kind::real_list || kind == Kind::text_list; }

json from_flag(const Param& p, const std::string& text) {
    if (!is_list(p.kind)) {
        return parse_scalar(p.kind, p.name, text);
    }
    json arr = json::array();
    for (const auto& item : split_list(text)) {
        arr.push_back(parse_scalar(element_kind(p.kind), p.name, item));
    }
    return arr;
}

json check_scalar_json(Kind kind, const std::string& name, const json& v) {
    switch (kind) {
        case Kind::integer:
            if (v.is_number_integer()) {
                return v.get<long long>();
            }
            break;
        case Kind::unsigned_integer:
            if (v.is_number_unsigned() || (v.is_number_integer() && v.get<long long>() >= 0)) {
                return v.get<unsigned long long>();
            }
            break;
        case Kind::real:
            if (v.is_number()) {
                return v.get<double>();
            }
            break;
        case Kind::boolean:
            if (v.is_boolean()) {
                return v;
            }
            break;
        default:
            if (v.is_string()) {
                return v;
            }
            break;
    }
    throw PreconditionError("config field \"" + name + "\" has the wrong type");
}

json from_config(const Param& p, const json& v) {
    if (!is_list(p.kind)) {
        return check_scalar_json(p.kind, p.name, v);
    }
    if (!v.is_array()) {
        throw PreconditionError("config field \"" + p.name + "\" must be an array");
    }
    json arr = json::array();
    for (const auto& item : v) {
        arr.push_back(check_scalar_json(element_kind(p.kind), p.name, item));
    }
    return arr;
}

// ---------------------------------------------------------------------------
// Reports

struct Output {
    fs::path dir;
    std::map<std::string, CsvTable> tables;
    std::map<std::string, std::string> files;
};

void write_report(const Output& out, const std::string& subcommand, const json& config, const json& result) {
    json report;
    report["version"] = version;
    report["subcommand"] = subcommand;
    report["config"] = config;
    report["result"] = result;
    write_text_file(out.dir / "report.json", report.dump(2) + "\n");
    for (const auto& [name, table] : out.tables) {
        write_text_file(out.dir / "tables" / (name + ".csv"), table.str());
    }
    for (const auto& [name, contents] : out.files) {
        write_text_file(out.dir / name, contents);
    }
}

std::string num(double x) { return format_number(x); }

// ---------------------------------------------------------------------------
// Typed access to the resolved config

struct Config {
    json j;

    long long integer(const char* k) const { return j.at(k).get<long long>(); }
    std::uint64_t u64(const char* k) const { return j.at(k).get<std::uint64_t>(); }
    double real(const char* k) const { return j.at(k).get<double>(); }
    std::string text(const char* k) const { return j.at(k).get<std::string>(); }
    bool flag(const char* k) const { return j.at(k).get<bool>(); }
    std::vector<long long> ints(const char* k) const { return j.at(k).get<std::vector<long long>>(); }
    std::vector<double> reals(const char* k) const { return j.at(k).get<std::vector<double>>(); }
    std::vector<std::string> texts(const char* k) const { return j.at(k).get<std::vector<std::string>>(); }
    std::uint64_t seed() const { return u64("seed"); }
    unsigned threads() const { return static_cast<unsigned>(u64("threads")); }
    std::size_t trials() const { return static_cast<std::size_t>(u64("trials")); }

    Index positive_index(const char* k) const {
        const long long v = integer(k);
        if (v < 1) {
            throw PreconditionError(std::string(k) + " must be >= 1");
        }
        return static_cast<Index>(v);
    }
};

void require(bool ok, const std::string& message) {
    if (!ok) {
        throw PreconditionError(message);
    }
}

// ---------------------------------------------------------------------------
// Shared models

/// Rademacher series for the tail, BDG and mgf subcommands.
RademacherSeries rademacher_model(const Config& c) {
    const Index n = c.positive_index("n");
    const Index d = c.positive_index("d");
    const double scale = c.real("scale");
    require(scale > 0.0, "scale must be > 0");
    Rng rng = make_rng(c.seed(), 0, 0xA2);
    return RademacherSeries::random(n, d, rng, scale);
}

std::vector<HermitianMatrix> rademacher_samples(const RademacherSeries& r, std::size_t trials, std::uint64_t seed,
                                                unsigned threads) {
    std::vector<HermitianMatrix> xs(trials);
    parallel_for(trials, threads, [&](std::size_t k) {
        Rng rng = make_rng(seed, k, 0xA3);
        xs[k] = r.sample(rng);
    });
    return xs;
}

SamplerConfig sampler_config(const Config& c) {
    SamplerConfig cfg;
    cfg.min_dim = static_cast<Index>(c.integer("min_dim"));
    cfg.max_dim = static_cast<Index>(c.integer("max_dim"));
    cfg.s_min = c.real("s_min");
    cfg.s_max = c.real("s_max");
    cfg.q_min = static_cast<int>(c.integer("q_min"));
    cfg.q_max = static_cast<int>(c.integer("q_max"));
    cfg.grid_fraction = c.real("grid_fraction");
    cfg.samplers.clear();
    for (const auto& s : c.texts("samplers")) {
        cfg.samplers.push_back(parse_sampler(s));
    }
    cfg.validate();
    return cfg;
}

std::vector<Param> sampler_params() {
    json all = json::array();
    for (Sampler s : all_samplers) {
        all.push_back(std::string(to_string(s)));
    }
    return {{"min_dim", Kind::integer, 1, "smallest matrix dimension"},
            {"max_dim", Kind::integer, 6, "largest matrix dimension"},
            {"s_min", Kind::real, 1e-2, "lower end of the log-uniform s range"},
            {"s_max", Kind::real, 1e2, "upper end of the log-uniform s range"},
            {"q_min", Kind::integer, 1, "smallest power q"},
            {"q_max", Kind::integer, 8, "largest power q"},
            {"grid_fraction", Kind::real, 0.25, "probability of drawing s and q from the fixed grids"},
            {"samplers", Kind::text_list, all, "comma-separated sampler names"}};
}

CsvTable violations_table(const std::vector<FuzzReport>& reports) {
    CsvTable t{{"inequality", "trial", "sampler", "dim", "s", "q", "original_gap_over_scale", "witness_dim",
                "witness_gap_over_scale", "shrink_t"},
               {}};
    for (const auto& rep : reports) {
        for (const auto& v : rep.violations) {
            t.add_row({std::string(to_string(rep.inequality)), std::to_string(v.trial),
                       std::string(to_string(v.original.sampler)), std::to_string(v.original.dim()), num(v.original.s),
                       uses_q(rep.inequality) ? std::to_string(v.original.q) : "", num(v.original_gap.relative()),
                       std::to_string(v.witness.dim()), num(v.witness_gap.relative()), num(v.shrink_t)});
        }
    }
    return t;
}

CsvTable fuzz_summary_table(const std::vector<FuzzReport>& reports) {
    CsvTable t{{"inequality", "trials", "violations", "min_gap_over_scale", "argmin_trial"}, {}};
    for (const auto& rep : reports) {
        t.add_row({std::string(to_string(rep.inequality)), std::to_string(rep.trials),
                   std::to_string(rep.violation_count), num(rep.min_gap_over_scale), std::to_string(rep.argmin_trial)});
    }
    return t;
}

void print_witness(const FuzzReport& rep) {
    if (rep.violations.empty()) {
        return;
    }
    const auto& v = rep.violations.front();
    std::cerr << to_string(rep.inequality) << ": " << rep.violation_count << " violation(s); first witness at trial "
              << v.trial << " (dim " << v.witness.dim() << ", s " << num(v.witness.s);
    if (uses_q(rep.inequality)) {
        std::cerr << ", q " << v.witness.q;
    }
    std::cerr << "): lhs " << num(v.witness_gap.lhs) << " > rhs " << num(v.witness_gap.rhs) << "\n";
}

// ---------------------------------------------------------------------------
// Subcommands

int run_fuzz(const Config& c, Output& out, json& result) {
    const Inequality ineq = parse_inequality(c.text("ineq"));
    const SamplerConfig cfg = sampler_config(c);
    const FuzzReport rep = fuzz(ineq, c.trials(), cfg, c.seed(), c.threads());
    result["fuzz"] = to_json(rep);
    out.tables["violations"] = violations_table({rep});
    out.tables["summary"] = fuzz_summary_table({rep});
    bool self_ok = true;
    if (c.flag("self_test")) {
        const SelfTestReport st =
            self_test(ineq, c.u64("self_test_cases"), c.real("planted_factor"), cfg, c.seed(), c.threads());
        result["self_test"] = to_json(st);
        self_ok = st.passed();
        if (!self_ok) {
            std::cerr << "self test failed: detected " << st.detected << " of " << st.planted << " planted cases\n";
        }
    }
    print_witness(rep);
    if (!self_ok) {
        return exit_error;
    }
    return rep.violation_count > 0 ? exit_violation : exit_ok;
}

int run_conjecture(const Config& c, Output& out, json& result) {
    const std::string form = c.text("form");
    std::vector<Inequality> forms;
    if (form == "exp" || form == "both") {
        forms.push_back(Inequality::conjecture_exp);
    }
    if (form == "poly" || form == "both") {
        forms.push_back(Inequality::conjecture_poly);
    }
    require(!forms.empty(), "form must be exp, poly or both");
    const SamplerConfig cfg = sampler_config(c);
    std::vector<FuzzReport> reports;
    json arr = json::array();
    std::uint64_t found = 0;
    for (Inequality ineq : forms) {
        reports.push_back(fuzz(ineq, c.trials(), cfg, c.seed(), c.threads()));
        arr.push_back(to_json(reports.back()));
        found += reports.back().violation_count;
        print_witness(reports.back());
    }
    result["searches"] = arr;
    result["counterexamples"] = found;
    out.tables["violations"] = violations_table(reports);
    out.tables["summary"] = fuzz_summary_table(reports);
    return found > 0 ? exit_violation : exit_ok;
}

int run_coupling_time(const Config& c, Output& out, json& result) {
    const auto ns = c.ints("n");
    require(!ns.empty(), "n must list at least one size");
    const auto cap = static_cast<std::size_t>(c.u64("cap"));
    CsvTable t{{"n", "trials", "mean", "se", "median", "q90", "q99", "max", "cap_hits", "bound", "holds"}, {}};
    json rows = json::array();
    bool all = true;
    for (std::size_t k = 0; k < ns.size(); ++k) {
        require(ns[k] >= 1, "every n must be >= 1");
        const auto model = gaussian_sum_model(static_cast<Index>(ns[k]));
        const CouplingTimeSummary s =
            coupling_time(model, c.trials(), cap, substream_seed(c.seed(), k, 0xC0), c.threads());
        const double n = static_cast<double>(ns[k]);
        const double bound = n * (1.0 + std::log(n));
        const bool holds = s.mean <= bound + se_slack * s.se;
        all = all && holds;
        json row = to_json(s);
        row["n"] = ns[k];
        row["bound"] = bound;
        row["holds"] = holds;
        rows.push_back(row);
        t.add_row({std::to_string(ns[k]), std::to_string(s.trials), num(s.mean), num(s.se), num(s.median), num(s.q90),
                   num(s.q99), num(s.max), std::to_string(s.cap_hits), num(bound), holds ? "true" : "false"});
    }
    result["coupling_times"] = rows;
    result["all_hold"] = all;
    out.tables["coupling_time"] = t;
    return all ? exit_ok : exit_violation;
}

int run_conditional_variance(const Config& c, Output& out, json& result) {
    const Index n = c.positive_index("n");
    const Index d = c.positive_index("d");
    const auto states = static_cast<std::size_t>(c.u64("states"));
    require(states >= 1, "states must be >= 1");
    const FiniteCoordinates fc = FiniteCoordinates::random(n, d, c.real("coupling"), substream_seed(c.seed(), 0, 0xA1));
    const auto model = fc.model();
    const auto [x_bound, k_bound] = independent_coordinate_bounds(fc.exact_bounds());
    KernelOptions opts;
    opts.tail_tol = c.real("tail_tol");
    opts.max_steps = static_cast<std::size_t>(c.u64("max_steps"));
    opts.replicas = static_cast<std::size_t>(c.u64("replicas"));
    CsvTable t{{"state", "v_x_norm", "v_x_se", "v_x_bound_norm", "v_x_holds", "v_k_norm", "v_k_se", "v_k_bound_norm",
                "v_k_holds", "kernel_steps_max", "kernels_converged"},
               {}};
    json rows = json::array();
    bool all = true;
    for (std::size_t k = 0; k < states; ++k) {
        Rng rng = make_rng(c.seed(), k, 0x5A);
        const auto z = model.sample_state(rng);
        const ConditionalVarianceReport rep = estimate_conditional_variances(
            model, z, c.trials(), opts, substream_seed(c.seed(), k, 0x5B), c.threads(), &x_bound, &k_bound);
        all = all && rep.all_hold();
        json row = to_json(rep);
        row["state"] = z;
        rows.push_back(row);
        t.add_row({std::to_string(k), num(operator_norm(rep.v_x_hat)), num(rep.v_x_se), num(operator_norm(x_bound)),
                   rep.dominance[0].verdict.holds ? "true" : "false", num(operator_norm(rep.v_k_hat)), num(rep.v_k_se),
                   num(operator_norm(k_bound)), rep.dominance[1].verdict.holds ? "true" : "false",
                   std::to_string(rep.kernel_steps_max), rep.kernels_converged ? "true" : "false"});
    }
    result["x_bound"] = matrix_to_json(x_bound);
    result["k_bound"] = matrix_to_json(k_bound);
    result["states"] = rows;
    result["all_hold"] = all;
    out.tables["conditional_variance"] = t;
    return all ? exit_ok : exit_violation;
}

std::vector<double> t_grid(double t_max, std::size_t points) {
    require(points >= 1, "points must be >= 1");
    return linear_grid(t_max / static_cast<double>(points), t_max, points);
}

int run_tail_vs_empirical(const Config& c, Output& out, json& result) {
    const RademacherSeries r = rademacher_model(c);
    require(c.trials() >= 1, "trials must be >= 1");
    const auto xs = rademacher_samples(r, c.trials(), c.seed(), c.threads());
    std::vector<double> lmax(xs.size());
    std::vector<double> neg_lmin(xs.size());
    parallel_for(xs.size(), c.threads(), [&](std::size_t k) {
        const RealVector ev = eigenvalues(xs[k]);
        lmax[k] = ev(ev.size() - 1);
        neg_lmin[k] = -ev(0);
    });
    const double sigma2 = r.sigma2();
    const TailBoundParams fitted = best_params_without_c(operator_norm(r.v_x()), operator_norm(r.v_k()), r.dim());
    double t_max = c.real("t_max");
    if (t_max <= 0.0) {
        t_max = 3.0 * std::sqrt(sigma2);
    }
    const auto grid = t_grid(t_max, static_cast<std::size_t>(c.u64("points")));
    CsvTable t{{"t", "bound_kind", "bound", "empirical_freq", "n_trials"}, {}};
    bool all = true;
    const std::string nt = std::to_string(c.trials());
    for (double tt : grid) {
        const double up = empirical_exceedance(lmax, tt);
        const double lo = empirical_exceedance(neg_lmin, tt);
        const double bd = bdd_diff_bound_sigma2(sigma2, r.dim(), tt).tail;
        const Thm31Tails th = thm31_tails(fitted, tt);
        all = all && up <= bd && up <= th.max_tail_refined && lo <= th.min_tail;
        t.add_row({num(tt), "bdd_diff", num(bd), num(up), nt});
        t.add_row({num(tt), std::string(to_string(BoundKind::max_tail_refined)), num(th.max_tail_refined), num(up), nt});
        t.add_row({num(tt), std::string(to_string(BoundKind::min_tail)), num(th.min_tail), num(lo), nt});
    }
    const MeanSe mean_max = batch_means(std::span<const double>(lmax));
    result["sigma2"] = sigma2;
    result["fitted_params"] = to_json(fitted);
    result["mean_lambda_max"] = mean_max.mean;
    result["mean_lambda_max_se"] = mean_max.se;
    result["bdd_diff_mean_bound"] = bdd_diff_bound_sigma2(sigma2, r.dim(), 0.0).mean_bound;
    result["thm31_mean_bound"] = thm31_expectations(fitted).upper;
    result["never_crossed"] = all;
    out.tables["tail"] = t;
    return all ? exit_ok : exit_violation;
}

int run_bdg_check(const Config& c, Output& out, json& result) {
    const RademacherSeries r = rademacher_model(c);
    const std::string mode = c.text("mode");
    require(mode == "exact" || mode == "monte_carlo", "mode must be exact or monte_carlo");
    std::vector<BdgSample> samples;
    if (mode == "exact") {
        samples = r.enumerate();
    } else {
        require(c.trials() >= 2, "trials must be >= 2");
        const HermitianMatrix vx = r.v_x();
        const HermitianMatrix vk = r.v_k();
        for (auto& x : rademacher_samples(r, c.trials(), c.seed(), c.threads())) {
            samples.push_back({std::move(x), vx, vk, 1.0});
        }
    }
    std::vector<double> ss = c.reals("s");
    if (ss.empty()) {
        ss.push_back(static_cast<double>(r.n()));
    }
    CsvTable t{{"p", "s", "lhs", "rhs", "lhs_se", "rhs_se", "exact", "holds"}, {}};
    json rows = json::array();
    bool all = true;
    for (long long p : c.ints("p")) {
        require(p >= 1, "every p must be >= 1");
        for (double s : ss) {
            const BdgResult res = bdg_bound(static_cast<int>(p), s, samples, mode == "exact");
            all = all && res.holds;
            rows.push_back(to_json(res));
            t.add_row({std::to_string(p), num(s), num(res.lhs), num(res.rhs), num(res.lhs_se), num(res.rhs_se),
                       res.exact ? "true" : "false", res.holds ? "true" : "false"});
        }
    }
    result["outcomes"] = samples.size();
    result["checks"] = rows;
    result["all_hold"] = all;
    out.tables["bdg"] = t;
    return all ? exit_ok : exit_violation;
}

int run_mgf_check(const Config& c, Output& out, json& result) {
    const RademacherSeries r = rademacher_model(c);
    require(c.trials() >= 2, "trials must be >= 2");
    const auto xs = rademacher_samples(r, c.trials(), c.seed(), c.threads());
    const double sigma2 = r.sigma2();
    TailBoundParams p;
    p.c = 0.0;
    p.v = 0.5 * sigma2;
    p.d = r.dim();
    const auto points = static_cast<std::size_t>(c.u64("points"));
    require(points >= 2, "points must be >= 2");
    const auto grid = linear_grid(c.real("theta_min"), c.real("theta_max"), points);
    CsvTable mt{{"theta", "log_m_hat", "log_se", "log_bound", "holds"}, {}};
    bool all = true;
    for (const MgfPoint& pt : trace_mgf_estimate(xs, grid)) {
        const double lb = mgf_log_bound(p, pt.theta);
        const bool holds = pt.log_m <= lb + se_slack * pt.log_se;
        all = all && holds;
        mt.add_row({num(pt.theta), num(pt.log_m), num(pt.log_se), num(lb), holds ? "true" : "false"});
    }
    CsvTable lt{{"t", "laplace_bound", "closed_form", "relative_error", "holds"}, {}};
    double worst = 0.0;
    for (double tt : t_grid(3.0 * std::sqrt(sigma2), static_cast<std::size_t>(c.u64("t_points")))) {
        const LaplaceResult lr =
            laplace_optimize([&](double th) { return mgf_log_bound(p, th); }, p.d, tt, TailBranch::upper, p.c);
        const double closed = thm31_tails(p, tt).max_tail_refined;
        const double rel = std::abs(lr.value - closed) / closed;
        worst = std::max(worst, rel);
        lt.add_row({num(tt), num(lr.value), num(closed), num(rel), rel <= 1e-8 ? "true" : "false"});
    }
    const bool laplace_ok = worst <= 1e-8;
    result["sigma2"] = sigma2;
    result["params"] = to_json(p);
    result["mgf_all_hold"] = all;
    result["laplace_max_relative_error"] = worst;
    result["laplace_ok"] = laplace_ok;
    out.tables["mgf"] = mt;
    out.tables["laplace"] = lt;
    return all && laplace_ok ? exit_ok : exit_violation;
}

std::size_t ising_sweeps(const Config& c, double beta) {
    const auto sweeps = static_cast<std::size_t>(c.u64("sweeps"));
    return sweeps > 0 ? sweeps : default_burn_in_sweeps(beta);
}

void warn_parallel_edges(Index n) {
    if (n == 2) {
        std::cerr << "warning: n = 2 has parallel edges; each is counted separately\n";
    }
}

int run_ising_correlation(const Config& c, Output& out, json& result) {
    const Index n = c.positive_index("n");
    const Index d = c.positive_index("d");
    const double beta = c.real("beta");
    require(d <= n, "d must be <= n");
    warn_parallel_edges(n);
    const std::size_t sweeps = ising_sweeps(c, beta);
    const CorrelationTruth truth = correlation_ground_truth(n, d, beta, c.trials(), sweeps, c.seed(), c.threads());
    result["correlation"] = to_json(truth);
    result["dobrushin_norm"] = dobrushin_norm(beta);
    result["dobrushin_norm_formula"] = "4/(1+exp(-4*beta))-2";
    out.tables["correlation"] = correlation_table(truth.mean, truth.se);
    if (c.flag("snapshot")) {
        Rng rng = make_rng(c.seed(), 0, 0x15);
        out.files["snapshot.txt"] = to_text(sample(n, beta, sweeps, rng));
    }
    return exit_ok;
}

int run_ising_bound(const Config& c, Output& out, json& result) {
    const Index n = c.positive_index("n");
    const Index d = c.positive_index("d");
    const double beta = c.real("beta");
    const double t0 = c.real("t");
    const auto points = static_cast<std::size_t>(c.u64("points"));
    require(d <= n, "d must be <= n");
    require(t0 >= 0.0, "t must be >= 0");
    require(points >= 1, "points must be >= 1");
    warn_parallel_edges(n);
    const double b = ising_b(beta);
    const double sigma2 = ising_sigma2(n, d);
    double t_max = c.real("t_max");
    if (t_max <= 0.0) {
        t_max = std::max(t0, 3.0 * std::sqrt(b * sigma2));
    }
    require(t_max >= t0, "t_max must be >= t");
    const auto grid = linear_grid(t0, t_max, points);
    std::vector<double> dev;
    if (c.trials() > 0) {
        const std::size_t sweeps = ising_sweeps(c, beta);
        const CorrelationTruth truth = correlation_ground_truth(n, d, beta, static_cast<std::size_t>(c.u64("chains")),
                                                                sweeps, substream_seed(c.seed(), 0, 0x17), c.threads());
        dev = ising_deviations(n, beta, truth.mean, c.trials(), sweeps, c.seed(), c.threads());
        const MeanSe md = batch_means(std::span<const double>(dev));
        result["ground_truth"] = to_json(truth);
        result["mean_deviation"] = md.mean;
        result["mean_deviation_se"] = md.se;
    }
    CsvTable t{{"t", "bound_kind", "bound", "empirical_freq", "n_trials"}, {}};
    bool all = true;
    for (double tt : grid) {
        const double bound = ising_tail_bound(n, d, beta, tt);
        std::string freq;
        if (!dev.empty()) {
            const double f = empirical_exceedance(dev, tt);
            all = all && f <= bound;
            freq = num(f);
        }
        t.add_row({num(tt), "ising_tail", num(bound), freq, std::to_string(dev.size())});
    }
    const double mean_bound = ising_mean_bound(n, d, beta);
    if (!dev.empty()) {
        all = all && result["mean_deviation"].get<double>() <= mean_bound;
    }
    result["b"] = b;
    result["sigma2"] = sigma2;
    result["dobrushin_norm"] = dobrushin_norm(beta);
    result["dobrushin_norm_formula"] = "4/(1+exp(-4*beta))-2";
    result["beta_dobrushin"] = beta_dobrushin();
    result["mean_bound"] = mean_bound;
    result["never_crossed"] = all;
    out.tables["ising_bound"] = t;
    return all ? exit_ok : exit_violation;
}

// ---------------------------------------------------------------------------
// Registry

struct Subcommand {
    std::string name;
    std::string help;
    std::vector<Param> params;
    std::function<int(const Config&, Output&, json&)> run;
};

std::vector<Param> with_common(std::vector<Param> specific, std::uint64_t trials) {
    std::vector<Param> p{{"seed", Kind::unsigned_integer, nullptr, "master seed (required)"},
                         {"trials", Kind::unsigned_integer, trials, "number of Monte Carlo trials"},
                         {"threads", Kind::unsigned_integer, 1, "worker threads; results do not depend on it"}};
    p.insert(p.end(), specific.begin(), specific.end());
    return p;
}

std::vector<Param> concat(std::vector<Param> a, const std::vector<Param>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

std::vector<Param> rademacher_params(long long n, long long d) {
    return {{"n", Kind::integer, n, "number of Rademacher coordinates"},
            {"d", Kind::integer, d, "matrix dimension"},
            {"scale", Kind::real, 0.3, "scale of the random Hermitian coefficients"}};
}

std::vector<Subcommand> registry() {
    std::vector<Subcommand> r;
    r.push_back({"fuzz-trace-ineq", "Randomized search for violations of a trace inequality",
                 with_common(concat({{"ineq", Kind::text, "emvti", "emvti, pmvti, conjecture_exp or conjecture_poly"},
                                     {"self_test", Kind::boolean, true, "run the planted-violation self test"},
                                     {"self_test_cases", Kind::unsigned_integer, 1000, "self-test cases"},
                                     {"planted_factor", Kind::real, 0.8, "rhs multiplier for planted cases"}},
                                    sampler_params()),
                             10000),
                 run_fuzz});
    r.push_back({"conjecture-search", "Counterexample search for the signed mean value trace inequalities",
                 with_common(concat({{"form", Kind::text, "both", "exp, poly or both"}}, sampler_params()), 100000),
                 run_conjecture});
    r.push_back({"coupling-time", "Coupling times of the independent-coordinates kernel coupling",
                 with_common({{"n", Kind::int_list, json::array({8, 32, 128}), "comma-separated numbers of coordinates"},
                              {"cap", Kind::unsigned_integer, 1000000, "step cap per trial"}},
                             10000),
                 run_coupling_time});
    r.push_back({"conditional-variance", "Monte Carlo conditional variances against their dominance bounds",
                 with_common({{"n", Kind::integer, 5, "number of coordinates (<= 12)"},
                              {"d", Kind::integer, 3, "matrix dimension"},
                              {"coupling", Kind::real, 0.3, "strength of the non-additive term"},
                              {"states", Kind::unsigned_integer, 20, "number of sampled states Z"},
                              {"replicas", Kind::unsigned_integer, 64, "coupled replicas per kernel estimate"},
                              {"max_steps", Kind::unsigned_integer, 100000, "kernel truncation cap"},
                              {"tail_tol", Kind::real, 0.0, "kernel tail tolerance (0 means 1e-3 L)"}},
                             1000),
                 run_conditional_variance});
    r.push_back({"tail-vs-empirical", "Empirical eigenvalue tails against the exponential tail bounds",
                 with_common(concat(rademacher_params(10, 2),
                                    {{"points", Kind::unsigned_integer, 20, "grid points"},
                                     {"t_max", Kind::real, 0.0, "largest t (0 means 3 sigma)"}}),
                             100000),
                 run_tail_vs_empirical});
    r.push_back({"bdg-check", "Polynomial moment inequality on a Rademacher series",
                 with_common(concat(rademacher_params(10, 2),
                                    {{"p", Kind::int_list, json::array({1, 2, 3}), "comma-separated moment orders"},
                                     {"s", Kind::real_list, json::array(), "comma-separated s values (default n)"},
                                     {"mode", Kind::text, "exact", "exact or monte_carlo"}}),
                             10000),
                 run_bdg_check});
    r.push_back({"mgf-check", "Trace mgf estimates against the mgf bounds, and the Laplace transform bound",
                 with_common(concat(rademacher_params(10, 2),
                                    {{"theta_min", Kind::real, -2.0, "smallest theta"},
                                     {"theta_max", Kind::real, 2.0, "largest theta"},
                                     {"points", Kind::unsigned_integer, 41, "theta grid points"},
                                     {"t_points", Kind::unsigned_integer, 20, "t grid points for the Laplace check"}}),
                             100000),
                 run_mgf_check});
    const std::vector<Param> ising{{"n", Kind::integer, 32, "lattice side"},
                                   {"d", Kind::integer, 4, "correlation window"},
                                   {"beta", Kind::real, 0.2, "inverse temperature"},
                                   {"sweeps", Kind::unsigned_integer, 0, "sweeps per chain (0 means default burn-in)"}};
    r.push_back({"ising-correlation", "Spin-spin correlations of the periodic Ising model by Glauber dynamics",
                 with_common(concat(ising, {{"snapshot", Kind::boolean, false, "also write snapshot.txt"}}), 200),
                 run_ising_correlation});
    r.push_back({"ising-bound", "Deviation bound for the correlation estimator, optionally against samples",
                 with_common(concat(ising, {{"t", Kind::real, 0.0, "first grid point"},
                                            {"t_max", Kind::real, 0.0, "last grid point (0 means 3 sqrt(b) sigma)"},
                                            {"points", Kind::unsigned_integer, 20, "grid points"},
                                            {"chains", Kind::unsigned_integer, 5000, "ground-truth chains"}}),
                             0),
                 run_ising_bound});
    return r;
}

json resolve(const Subcommand& sub, const std::string& config_path, const std::map<std::string, CLI::Option*>& opts,
             const std::map<std::string, std::string>& values) {
    json resolved = json::object();
    for (const auto& p : sub.params) {
        resolved[p.name] = p.fallback;
    }
    resolved["out"] = "matconc_out";
    if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) {
            throw PreconditionError("cannot read config file " + config_path);
        }
        json file;
        try {
            file = json::parse(in);
        } catch (const json::exception& e) {
            throw PreconditionError("config file is not valid JSON: " + std::string(e.what()));
        }
        if (!file.is_object()) {
            throw PreconditionError("config file must hold a JSON object");
        }
        for (const auto& [key, value] : file.items()) {
            if (key == "subcommand") {
                if (!value.is_string() || value.get<std::string>() != sub.name) {
                    throw PreconditionError("config subcommand does not match " + sub.name);
                }
                continue;
            }
            if (key == "out") {
                if (!value.is_string()) {
                    throw PreconditionError("config field \"out\" must be a string");
                }
                resolved["out"] = value;
                continue;
            }
            const auto it = std::find_if(sub.params.begin(), sub.params.end(),
                                         [&](const Param& p) { return p.name == key; });
            if (it == sub.params.end()) {
                throw PreconditionError("unknown config field \"" + key + "\" for " + sub.name);
            }
            resolved[key] = from_config(*it, value);
        }
    }
    for (const auto& p : sub.params) {
        if (opts.at(p.name)->count() > 0) {
            resolved[p.name] = from_flag(p, values.at(p.name));
        }
    }
    if (opts.at("out")->count() > 0) {
        resolved["out"] = values.at("out");
    }
    if (resolved["seed"].is_null()) {
        throw PreconditionError("a seed is required (--seed or the config field \"seed\")");
    }
    return resolved;
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<Subcommand> subs = registry();
    CLI::App app{"Matrix concentration experiments"};
    app.require_subcommand(1);
    std::vector<std::map<std::string, std::string>> values(subs.size());
    std::vector<std::map<std::string, CLI::Option*>> options(subs.size());
    std::vector<std::string> config_paths(subs.size());
    std::vector<CLI::App*> apps;
    for (std::size_t i = 0; i < subs.size(); ++i) {
        CLI::App* sa = app.add_subcommand(subs[i].name, subs[i].help);
        sa->add_option("--config", config_paths[i], "JSON config; explicit flags take precedence");
        for (const auto& p : subs[i].params) {
            std::string help = p.help;
            if (!p.fallback.is_null()) {
                help += " [default: " + p.fallback.dump() + "]";
            }
            options[i][p.name] = sa->add_option("--" + p.name, values[i][p.name], help);
        }
        options[i]["out"] = sa->add_option("--out", values[i]["out"], "output directory [default: matconc_out]");
        apps.push_back(sa);
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_error;
    }
    for (std::size_t i = 0; i < subs.size(); ++i) {
        if (!apps[i]->parsed()) {
            continue;
        }
        try {
            Config cfg{resolve(subs[i], config_paths[i], options[i], values[i])};
            Output out{fs::path(cfg.text("out")), {}, {}};
            json result = json::object();
            const int code = subs[i].run(cfg, out, result);
            write_report(out, subs[i].name, cfg.j, result);
            return code;
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << "\n";
            return exit_error;
        }
    }
    return exit_error;
}
