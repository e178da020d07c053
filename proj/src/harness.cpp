#include "segregate/harness.hpp"

#include "segregate/corrector.hpp"
#include "segregate/error.hpp"
#include "segregate/parallel.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

namespace segregate {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* module_version = "segregate 1.0.0";

const std::set<std::string> known_keys = {
    "n", "d", "p", "q", "r", "nu", "v_inf", "beta", "beta_fraction_of_beta_k", "k", "k_list",
    "ratio_list", "alpha", "r1", "r2", "remainder_coeff", "remainder_eps", "seed", "workers", "out",
    "quick", "options"};

struct FieldReader {
    const json& doc;
    std::vector<std::string>& problems;

    std::optional<double> number(const std::string& key, bool required)
    {
        auto it = doc.find(key);
        if (it == doc.end()) {
            if (required) problems.push_back("field '" + key + "': required, no default");
            return std::nullopt;
        }
        if (!it->is_number()) {
            problems.push_back("field '" + key + "': expected a number");
            return std::nullopt;
        }
        return it->get<double>();
    }

    std::optional<int> integer(const std::string& key, bool required)
    {
        auto v = number(key, required);
        if (!v) return std::nullopt;
        if (std::floor(*v) != *v) {
            problems.push_back("field '" + key + "': expected an integer");
            return std::nullopt;
        }
        return static_cast<int>(*v);
    }

    template <class T>
    std::vector<T> list(const std::string& key)
    {
        std::vector<T> out;
        auto it = doc.find(key);
        if (it == doc.end()) return out;
        if (!it->is_array() || it->empty()) {
            problems.push_back("field '" + key + "': expected a non-empty array");
            return out;
        }
        for (const auto& v : *it) {
            if (!v.is_number() || (std::is_integral_v<T> && std::floor(v.get<double>()) != v.get<double>())) {
                problems.push_back("field '" + key + "': entries must be " +
                                   (std::is_integral_v<T> ? "integers" : "numbers"));
                return {};
            }
            out.push_back(v.get<T>());
        }
        return out;
    }
};

void ensure_dir(const std::string& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw Error(ErrorKind::IoFailure, "cannot create output directory " + dir);
}

void write_json(const std::string& path, const json& j)
{
    std::ofstream f(path);
    if (!f) throw Error(ErrorKind::IoFailure, "cannot write " + path);
    f << j.dump(2) << '\n';
    if (!f) throw Error(ErrorKind::IoFailure, "write failed for " + path);
}

double option_or(const RunConfig& cfg, const char* key, double fallback)
{
    auto it = cfg.options.find(key);
    if (it == cfg.options.end()) return fallback;
    if (!it->is_number()) throw Error(ErrorKind::ConfigInvalid, std::string("field 'options.") + key + "': expected a number");
    return it->get<double>();
}

bool flag_or(const RunConfig& cfg, const char* key, bool fallback)
{
    auto it = cfg.options.find(key);
    if (it == cfg.options.end()) return fallback;
    if (!it->is_boolean()) throw Error(ErrorKind::ConfigInvalid, std::string("field 'options.") + key + "': expected true or false");
    return it->get<bool>();
}

std::string string_or(const RunConfig& cfg, const char* key, const std::string& fallback)
{
    auto it = cfg.options.find(key);
    if (it == cfg.options.end()) return fallback;
    if (!it->is_string()) throw Error(ErrorKind::ConfigInvalid, std::string("field 'options.") + key + "': expected a string");
    return it->get<std::string>();
}

ShootingOptions shooting_options(const RunConfig& cfg)
{
    ShootingOptions s;
    s.r_max = option_or(cfg, "r_max", s.r_max);
    s.points = static_cast<std::size_t>(option_or(cfg, "points", double(s.points)));
    s.tol = option_or(cfg, "shooting_tol", s.tol);
    return s;
}

FitOptions fit_options(const RunConfig& cfg)
{
    FitOptions f;
    f.zeta_min = option_or(cfg, "zeta_min", f.zeta_min);
    f.zeta_max = option_or(cfg, "zeta_max", f.zeta_max);
    f.samples = static_cast<int>(option_or(cfg, "samples", cfg.quick ? 9 : f.samples));
    f.workers = cfg.workers;
    return f;
}

std::vector<int> require_k(const RunConfig& cfg)
{
    if (cfg.k_list.empty()) throw Error(ErrorKind::ConfigInvalid, "field 'k' or 'k_list': required for this command");
    return cfg.k_list;
}

// Ratio list of the config, or the predicted balance ratio.
std::vector<double> ratios_for(const RunConfig& cfg, const SystemParams& s)
{
    if (!cfg.ratio_list.empty()) return cfg.ratio_list;
    return {check_admissibility(s).predicted_ratio};
}

json admissibility_json(const AdmissibilityReport& a)
{
    json checks = json::array();
    for (const auto& c : a.checks) checks.push_back({{"name", c.name}, {"passed", c.passed}});
    return {{"mode", to_string(a.mode)},
            {"admissible", a.admissible},
            {"checks", checks},
            {"beta_k", a.beta_k},
            {"b", a.b},
            {"predicted_ratio", a.predicted_ratio},
            {"ratio_is_derived", a.ratio_is_derived}};
}

json sample_json(const ReducedSample& s)
{
    return {{"rho", s.rho},         {"ratio", s.ratio}, {"mode", to_string(s.mode)}, {"t1", s.t1},
            {"t2", s.t2},           {"t3", s.t3},       {"t4_bound", s.t4_bound},    {"t4_included", s.t4_included},
            {"correction", s.correction}, {"total", s.total}, {"A", s.A}, {"B", s.B}, {"C", s.C},
            {"xi_bound", s.xi_bound}, {"sigma", s.sigma}, {"tau", s.tau}};
}

// Runs body(i) for every case and keeps results in case order.
template <class T, class F>
std::vector<T> run_cases(std::size_t count, int workers, F&& body)
{
    std::vector<T> out(count);
    parallel_for(count, workers, [&](std::size_t i) { out[i] = body(i); });
    return out;
}

struct CommandOutput {
    std::vector<std::string> files;
    json extra = json::object();
};

std::string out_path(const RunConfig& cfg, const std::string& name)
{
    return (fs::path(cfg.out_dir) / name).string();
}

CommandOutput cmd_ground_state(const RunConfig& cfg)
{
    auto U = solve_ground_state(cfg.params.n, cfg.params.p, shooting_options(cfg));
    CsvWriter csv(out_path(cfg, "ground_state.csv"), {"r", "U", "dU"});
    for (std::size_t i = 0; i < U.radii().size(); ++i) csv.row({U.radii()[i], U.values()[i], U.derivatives()[i]});
    json summary = {{"n", U.dimension()},
                    {"p", U.exponent()},
                    {"center_value", U.center_value()},
                    {"decay_constant", decay_constant(U)},
                    {"max_ode_residual", U.max_ode_residual()},
                    {"r_max", U.r_max()}};
    write_json(out_path(cfg, "ground_state.json"), summary);
    std::cout << summary.dump(2) << '\n';
    return {{csv.path(), out_path(cfg, "ground_state.json")}, summary};
}

CommandOutput cmd_eigen(const RunConfig& cfg)
{
    auto U = solve_ground_state(cfg.params.n, cfg.params.p, shooting_options(cfg));
    int count = static_cast<int>(option_or(cfg, "count", 3));
    int max_mode = static_cast<int>(option_or(cfg, "max_mode", 2));
    CsvWriter csv(out_path(cfg, "eigen.csv"), {"mode", "index", "lambda"});
    json list = json::array();
    for (int m = 0; m <= max_mode; ++m) {
        auto pairs = eigenpairs(U, m, count);
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            csv.row({double(m), double(i + 1), pairs[i].lambda});
            list.push_back({{"mode", m}, {"index", i + 1}, {"lambda", pairs[i].lambda}});
        }
    }
    std::cout << list.dump(2) << '\n';
    return {{csv.path()}, {{"eigenvalues", list}}};
}

CommandOutput cmd_interaction_fit(const RunConfig& cfg)
{
    const auto& s = cfg.params;
    auto U = solve_ground_state(s.n, s.p, shooting_options(cfg));
    std::vector<std::pair<double, double>> pairs;
    if (auto it = cfg.options.find("pairs"); it != cfg.options.end()) {
        for (const auto& p : *it) {
            if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number())
                throw Error(ErrorKind::ConfigInvalid, "field 'options.pairs': expected [[s, t], ...]");
            pairs.emplace_back(p[0].get<double>(), p[1].get<double>());
        }
    } else {
        pairs = {{s.p, 1.0}, {s.q + 1.0, s.r}};
    }
    FitOptions fo = fit_options(cfg);
    CsvWriter csv(out_path(cfg, "interaction_fit.csv"),
                  {"s", "t", "n", "rate", "power", "constant", "log_flag", "expected_rate", "expected_power",
                   "expected_log_flag", "zeta_min", "zeta_max", "max_rel_residual"});
    json list = json::array();
    for (auto [a, b] : pairs) {
        auto fit = fit_asymptotics(a, b, U, fo);
        auto law = expected_law(a, b, s.n);
        csv.row({a, b, double(s.n), fit.rate, fit.power, fit.constant, fit.log_flag ? 1.0 : 0.0, law.rate, law.power,
                 law.log_flag ? 1.0 : 0.0, fit.zeta_min, fit.zeta_max, fit.max_rel_residual});
        list.push_back(to_json(fit));
    }
    std::cout << list.dump(2) << '\n';
    return {{csv.path()}, {{"fits", list}}};
}

CommandOutput cmd_gamma_rho(const RunConfig& cfg)
{
    auto ks = require_k(cfg);
    auto U = solve_ground_state(cfg.params.n, cfg.params.p, shooting_options(cfg));
    bool full = flag_or(cfg, "full_quadrature", false);
    struct Case { int k; double ratio; };
    std::vector<Case> cases;
    for (int k : ks)
        for (double r : ratios_for(cfg, params_for(cfg, k))) cases.push_back({k, r});
    int inner = cases.size() > 1 ? 1 : cfg.workers;
    auto results = run_cases<GammaRho>(cases.size(), cases.size() > 1 ? cfg.workers : 1, [&](std::size_t i) {
        SystemParams s = params_for(cfg, cases[i].k);
        QuadOptions q;
        q.workers = inner;
        return gamma_rho(peaks_for(s, s.rho_of(cases[i].ratio)), s, U, full, {}, q);
    });
    CsvWriter csv(out_path(cfg, "gamma_rho.csv"), {"k", "ratio", "rho", "numerator", "denominator", "gamma"});
    for (std::size_t i = 0; i < cases.size(); ++i) {
        SystemParams s = params_for(cfg, cases[i].k);
        csv.row({double(cases[i].k), cases[i].ratio, s.rho_of(cases[i].ratio), results[i].numerator,
                 results[i].denominator, results[i].value});
    }
    return {{csv.path()}};
}

CommandOutput cmd_error_sweep(const RunConfig& cfg)
{
    auto ks = require_k(cfg);
    auto U = solve_ground_state(cfg.params.n, cfg.params.p, shooting_options(cfg));
    struct Case { int k; double ratio; };
    std::vector<Case> cases;
    for (int k : ks)
        for (double r : ratios_for(cfg, params_for(cfg, k))) cases.push_back({k, r});
    int inner = cases.size() > 1 ? 1 : cfg.workers;
    auto results = run_cases<ErrorComponents>(cases.size(), cases.size() > 1 ? cfg.workers : 1, [&](std::size_t i) {
        SystemParams s = params_for(cfg, cases[i].k);
        auto c = peaks_for(s, s.rho_of(cases[i].ratio));
        std::optional<double> g;
        if (s.cubic() && s.d >= 2) g = gamma_rho(c, s, U).value;
        NormOptions no;
        no.workers = inner;
        return error_components(c, s, U, g, no);
    });
    CsvWriter csv(out_path(cfg, "error_sweep.csv"), {"k", "ratio", "rho", "e1", "e2", "e3", "gamma", "total"});
    for (std::size_t i = 0; i < cases.size(); ++i) {
        SystemParams s = params_for(cfg, cases[i].k);
        const auto& e = results[i];
        csv.row({double(cases[i].k), cases[i].ratio, s.rho_of(cases[i].ratio), e.e1, e.e2, e.e3, e.gamma_rho, e.total});
    }
    return {{csv.path()}};
}

QuadOptions quad_options(const RunConfig& cfg)
{
    QuadOptions q;
    q.panel = option_or(cfg, "panel", q.panel);
    q.order = static_cast<int>(option_or(cfg, "order", q.order));
    q.rel_tol = option_or(cfg, "quadrature_tol", q.rel_tol);
    q.workers = cfg.workers;
    return q;
}

CommandOutput cmd_reduced_sweep(const RunConfig& cfg)
{
    auto ks = require_k(cfg);
    std::string mode = string_or(cfg, "mode", "leading");
    if (mode != "leading" && mode != "quadrature" && mode != "both")
        throw Error(ErrorKind::ConfigInvalid, "field 'options.mode': expected leading, quadrature or both");
    auto U = solve_ground_state(cfg.params.n, cfg.params.p, shooting_options(cfg));
    auto lc = cached_leading_constants(params_for(cfg, ks.front()), U, fit_options(cfg));
    LeadingOptions lo;
    lo.include_bound = flag_or(cfg, "include_bound", false);
    int samples = static_cast<int>(option_or(cfg, "samples_per_k", cfg.quick ? 5 : 9));

    struct Case { int k; double ratio; bool quad; };
    std::vector<Case> cases;
    for (int k : ks) {
        SystemParams s = params_for(cfg, k);
        std::vector<double> rs = cfg.ratio_list;
        if (rs.empty()) {
            auto [lo_r, hi_r] = radius_bracket(s);
            for (int j = 0; j < samples; ++j)
                rs.push_back(lo_r + (hi_r - lo_r) * j / std::max(1, samples - 1));
        }
        for (double r : rs) {
            if (mode != "quadrature") cases.push_back({k, r, false});
            if (mode != "leading") cases.push_back({k, r, true});
        }
    }
    QuadOptions q = quad_options(cfg);
    q.workers = cases.size() > 1 ? 1 : cfg.workers;
    auto results = run_cases<ReducedSample>(cases.size(), cases.size() > 1 ? cfg.workers : 1, [&](std::size_t i) {
        SystemParams s = params_for(cfg, cases[i].k);
        double rho = s.rho_of(cases[i].ratio);
        if (!cases[i].quad) return reduced_leading(s, rho, lc, lo);
        return reduced_quadrature(peaks_for(s, rho), s, U, q);
    });
    CsvWriter csv(out_path(cfg, "reduced_sweep.csv"),
                  {"k", "ratio", "rho", "mode", "t1", "t2", "t3", "t4_bound", "total"});
    for (std::size_t i = 0; i < cases.size(); ++i) {
        const auto& r = results[i];
        csv.row(std::vector<std::string>{std::to_string(cases[i].k), format_double(r.ratio), format_double(r.rho),
                                         to_string(r.mode), format_double(r.t1), format_double(r.t2),
                                         format_double(r.t3), format_double(r.t4_bound), format_double(r.total)});
    }
    return {{csv.path()}, {{"leading_constants", to_json(lc)}}};
}

CommandOutput cmd_find_rho(const RunConfig& cfg)
{
    auto ks = require_k(cfg);
    std::string mode = string_or(cfg, "mode", "leading");
    if (mode != "leading" && mode != "quadrature")
        throw Error(ErrorKind::ConfigInvalid, "field 'options.mode': expected leading or quadrature");
    auto U = solve_ground_state(cfg.params.n, cfg.params.p, shooting_options(cfg));
    auto lc = cached_leading_constants(params_for(cfg, ks.front()), U, fit_options(cfg));
    LeadingOptions lo;
    lo.include_bound = flag_or(cfg, "include_bound", false);
    RootOptions ro;
    ro.rel_tol = option_or(cfg, "root_tol", ro.rel_tol);
    QuadOptions q = quad_options(cfg);

    json list = json::array();
    CsvWriter csv(out_path(cfg, "find_rho.csv"),
                  {"k", "r_star", "rho_star", "predicted_ratio", "r_lo", "r_hi", "c_lo", "c_hi", "iterations"});
    for (int k : ks) {
        SystemParams s = params_for(cfg, k);
        auto adm = check_admissibility(s);
        if (!adm.admissible && !flag_or(cfg, "allow_inadmissible", false)) {
            std::string failed;
            for (const auto& c : adm.checks)
                if (!c.passed) failed += (failed.empty() ? "" : ", ") + c.name;
            throw Error(ErrorKind::ConfigInvalid, "k = " + std::to_string(k) + " fails the admissibility checks: " +
                                                      (failed.empty() ? to_string(adm.mode) : failed));
        }
        RadiusReport rep = mode == "leading"
                               ? find_radius_leading(s, lc, lo, ro)
                               : find_radius(s, [&](double rho) { return reduced_quadrature(peaks_for(s, rho), s, U, q); }, ro);
        csv.row({double(k), rep.r_star, rep.rho_star, rep.predicted_ratio, rep.r_lo, rep.r_hi, rep.c_lo, rep.c_hi,
                 double(rep.iterations)});
        list.push_back({{"k", k},
                        {"beta", s.beta},
                        {"r_star", rep.r_star},
                        {"rho_star", rep.rho_star},
                        {"predicted_ratio", rep.predicted_ratio},
                        {"bracket", {rep.r_lo, rep.r_hi}},
                        {"end_values", {rep.c_lo, rep.c_hi}},
                        {"sign_pattern", rep.sign_pattern},
                        {"iterations", rep.iterations},
                        {"at_root", sample_json(rep.at_root)},
                        {"admissibility", admissibility_json(adm)}});
    }
    json result = {{"mode", mode}, {"roots", list}};
    write_json(out_path(cfg, "find_rho.json"), result);
    std::cout << result.dump(2) << '\n';
    return {{csv.path(), out_path(cfg, "find_rho.json")}, {{"leading_constants", to_json(lc)}}};
}

json correction_json(const CorrectionResult& c)
{
    return {{"multiplier", c.multiplier},       {"norm_star", c.norm_star}, {"orthogonality", c.orthogonality},
            {"linear_residual", c.linear_residual}, {"iterations", c.iterations}, {"step_norms", c.step_norms}};
}

void write_field(const std::string& path, const GridDomain& g, const Eigen::VectorXd& f)
{
    CsvWriter csv(path, {"r", "theta", "value"});
    for (std::size_t c = 0; c < g.size(); ++c)
        csv.row({g.radius(static_cast<int>(c / g.ntheta)), g.angle(static_cast<int>(c % g.ntheta)), f[c]});
}

CommandOutput cmd_correct(const RunConfig& cfg)
{
    auto ks = require_k(cfg);
    if (cfg.params.n != 2) throw Error(ErrorKind::ModeUnsupported, "the corrector runs for n = 2 only");
    if (!cfg.params.cubic()) throw Error(ErrorKind::ModeUnsupported, "the corrector handles the cubic system only");
    auto U = solve_ground_state(2, 3.0, shooting_options(cfg));
    GridOptions go;
    go.nodes_per_unit = option_or(cfg, "nodes_per_unit", cfg.quick ? 8.0 : go.nodes_per_unit);
    go.margin = option_or(cfg, "margin", go.margin);
    go.half = !flag_or(cfg, "full_sector", false);
    FixedPointOptions fo;
    fo.max_iters = static_cast<int>(option_or(cfg, "max_iters", fo.max_iters));
    fo.tol = option_or(cfg, "fixed_point_tol", fo.tol);
    bool fields = flag_or(cfg, "write_fields", false);

    CommandOutput out;
    json list = json::array();
    for (int k : ks) {
        SystemParams s = params_for(cfg, k);
        for (double ratio : ratios_for(cfg, s)) {
            double rho = s.rho_of(ratio);
            auto config = peaks_for(s, rho);
            auto grid = build_grid(config, go);
            AssembleOptions ao;
            ao.workers = cfg.workers;
            auto op = assemble_linear(grid, s, U, OperatorVariant::Full, ao);
            SolveOptions so;
            so.resonance_profile = &U;
            so.beta = s.beta;
            ConstrainedSolver solver(op, grid, s.alpha, so);
            double g = gamma_rho(config, s, U).value;
            auto y = compute_Y(solver, op, grid, g);
            Eigen::VectorXd psi = s.beta * y.field;
            auto e = error_field(grid, op, s, U, g, y);
            auto phi = fixed_point(solver, op, grid, s, psi, e, fo);
            double scale = std::min(std::pow(rho, s.nu), std::exp((1.0 - s.alpha) * 4.0 * std::acos(-1.0) * rho / (double(s.d) * k)));
            list.push_back({{"k", k},
                            {"ratio", ratio},
                            {"rho", rho},
                            {"beta", s.beta},
                            {"grid", {{"nr", grid.nr}, {"ntheta", grid.ntheta}, {"r_in", grid.r_in}, {"r_out", grid.r_out}, {"half", grid.half}}},
                            {"self_test_error", op.self_test_error},
                            {"gamma_rho", g},
                            {"Y", correction_json(y)},
                            {"error_norm", grid_norm(grid, e, s.alpha)},
                            {"Phi", correction_json(phi)},
                            {"equation_residual", equation_residual(op, grid, s, psi, e, phi)},
                            {"reduced_correction", reduced_correction(op, grid, s, psi, y, phi)},
                            {"size_normalized", phi.norm_star * scale}});
            if (fields) {
                std::ostringstream tag;
                tag << "k" << k << "_r" << format_double(ratio);
                write_field(out_path(cfg, "phi_" + tag.str() + ".csv"), grid, phi.field);
                write_field(out_path(cfg, "y_" + tag.str() + ".csv"), grid, y.field);
                out.files.push_back(out_path(cfg, "phi_" + tag.str() + ".csv"));
                out.files.push_back(out_path(cfg, "y_" + tag.str() + ".csv"));
            }
        }
    }
    write_json(out_path(cfg, "correct.json"), list);
    std::cout << list.dump(2) << '\n';
    out.files.push_back(out_path(cfg, "correct.json"));
    return out;
}

}  // namespace

bool needs_physical_params(const std::string& command)
{
    return command != "ground-state" && command != "eigen" && command != "interaction-fit";
}

RunConfig parse_config(const json& doc, const std::string& command)
{
    if (!doc.is_object()) throw Error(ErrorKind::ConfigInvalid, "configuration must be a JSON object");
    std::vector<std::string> problems;
    for (const auto& [key, _] : doc.items())
        if (!known_keys.count(key)) problems.push_back("field '" + key + "': unknown");
    FieldReader rd{doc, problems};
    RunConfig cfg;
    cfg.raw = doc;
    bool physical = needs_physical_params(command);
    SystemParams& s = cfg.params;

    if (auto v = rd.integer("n", true)) s.n = *v;
    if (auto v = rd.number("p", false)) s.p = *v;
    if (auto v = rd.number("q", false)) s.q = *v;
    if (auto v = rd.number("r", false)) s.r = *v;
    if (auto v = rd.integer("d", physical)) s.d = *v;
    if (auto v = rd.number("nu", physical)) s.nu = *v;
    if (auto v = rd.number("v_inf", physical)) s.v_inf = *v;
    auto beta = rd.number("beta", false);
    auto frac = rd.number("beta_fraction_of_beta_k", false);
    if (beta && frac) problems.push_back("fields 'beta' and 'beta_fraction_of_beta_k': give only one");
    else if (physical && !beta && !frac) problems.push_back("field 'beta': required (or 'beta_fraction_of_beta_k'), no default");
    if (beta) s.beta = *beta;
    cfg.beta_fraction = frac;
    if (auto v = rd.number("alpha", false)) s.alpha = *v;
    if (auto v = rd.number("r1", false)) s.r1 = *v;
    if (auto v = rd.number("r2", false)) s.r2 = *v;
    if (auto v = rd.number("remainder_coeff", false)) s.remainder_coeff = *v;
    if (auto v = rd.number("remainder_eps", false)) s.remainder_eps = *v;

    auto k = rd.integer("k", false);
    cfg.k_list = rd.list<int>("k_list");
    if (k && !cfg.k_list.empty()) problems.push_back("fields 'k' and 'k_list': give only one");
    if (k) cfg.k_list = {*k};
    for (int kk : cfg.k_list)
        if (kk < 2) problems.push_back("field 'k': peak counts must be >= 2");
    cfg.ratio_list = rd.list<double>("ratio_list");
    for (double r : cfg.ratio_list)
        if (!(r > 0.0)) problems.push_back("field 'ratio_list': ratios must be positive");

    if (auto v = rd.integer("seed", false)) cfg.seed = static_cast<std::uint64_t>(*v);
    if (auto v = rd.integer("workers", false)) cfg.workers = *v;
    if (auto it = doc.find("out"); it != doc.end()) {
        if (it->is_string()) cfg.out_dir = it->get<std::string>();
        else problems.push_back("field 'out': expected a string");
    }
    if (auto it = doc.find("quick"); it != doc.end()) {
        if (it->is_boolean()) cfg.quick = it->get<bool>();
        else problems.push_back("field 'quick': expected true or false");
    }
    if (auto it = doc.find("options"); it != doc.end()) {
        if (it->is_object()) cfg.options = *it;
        else problems.push_back("field 'options': expected an object");
    }

    if (problems.empty()) {
        if (!cfg.k_list.empty()) s.k = cfg.k_list.front();
        try {
            if (physical) {
                validate(params_for(cfg, s.k));
            } else {
                if (s.n < 1 || s.n > 3) problems.push_back("field 'n': expected 1, 2 or 3");
                else if (!(s.p > 1.0)) problems.push_back("field 'p': expected p > 1");
            }
        } catch (const Error& e) {
            problems.push_back(e.what());
        }
    }
    if (!problems.empty()) {
        std::string msg;
        for (const auto& p : problems) msg += (msg.empty() ? "" : "; ") + p;
        throw Error(ErrorKind::ConfigInvalid, msg);
    }
    return cfg;
}

RunConfig load_config(const std::string& path, const std::string& command)
{
    std::ifstream f(path);
    if (!f) throw Error(ErrorKind::IoFailure, "cannot read configuration file " + path);
    json doc;
    try {
        f >> doc;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::ConfigInvalid, path + ": " + e.what());
    }
    return parse_config(doc, command);
}

SystemParams params_for(const RunConfig& cfg, int k)
{
    SystemParams s = cfg.params;
    s.k = k;
    if (cfg.beta_fraction) s.beta = *cfg.beta_fraction * beta_threshold(s).beta_k;
    return s;
}

std::string config_hash(const json& doc)
{
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : doc.dump()) {
        h ^= c;
        h *= 1099511628211ull;
    }
    std::ostringstream o;
    o << std::hex << std::setw(16) << std::setfill('0') << h;
    return o.str();
}

std::string format_double(double v)
{
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header)
    : path_(path), out_(path), columns_(header.size())
{
    if (!out_) throw Error(ErrorKind::IoFailure, "cannot write " + path);
    for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
    out_ << '\n';
}

void CsvWriter::row(const std::vector<double>& values)
{
    std::vector<std::string> cells;
    cells.reserve(values.size());
    for (double v : values) cells.push_back(format_double(v));
    row(cells);
}

void CsvWriter::row(const std::vector<std::string>& cells)
{
    if (cells.size() != columns_) throw Error(ErrorKind::InvalidArgument, "CSV row width differs from the header");
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << '\n';
    if (!out_) throw Error(ErrorKind::IoFailure, "write failed for " + path_);
}

json to_json(const InteractionFit& f)
{
    return {{"s", f.s},
            {"t", f.t},
            {"n", f.n},
            {"rate", f.rate},
            {"power", f.power},
            {"constant", f.constant},
            {"log_flag", f.log_flag},
            {"zeta_min", f.zeta_min},
            {"zeta_max", f.zeta_max},
            {"max_rel_residual", f.max_rel_residual},
            {"rms_plain", f.rms_plain},
            {"rms_log", f.rms_log}};
}

InteractionFit fit_from_json(const json& j)
{
    InteractionFit f;
    f.s = j.at("s");
    f.t = j.at("t");
    f.n = j.at("n");
    f.rate = j.at("rate");
    f.power = j.at("power");
    f.constant = j.at("constant");
    f.log_flag = j.at("log_flag");
    f.zeta_min = j.at("zeta_min");
    f.zeta_max = j.at("zeta_max");
    f.max_rel_residual = j.at("max_rel_residual");
    f.rms_plain = j.at("rms_plain");
    f.rms_log = j.at("rms_log");
    return f;
}

namespace {
json law_json(const AsymptoticLaw& l)
{
    return {{"rate", l.rate}, {"power", l.power}, {"log_flag", l.log_flag}};
}
AsymptoticLaw law_from_json(const json& j)
{
    return {j.at("rate").get<double>(), j.at("power").get<double>(), j.at("log_flag").get<bool>()};
}
}  // namespace

json to_json(const LeadingConstants& c)
{
    return {{"mass", c.mass},
            {"same", to_json(c.same)},
            {"cross", to_json(c.cross)},
            {"same_law", law_json(c.same_law)},
            {"cross_law", law_json(c.cross_law)},
            {"same_c", c.same_c},
            {"cross_c", c.cross_c}};
}

LeadingConstants leading_from_json(const json& j)
{
    LeadingConstants c;
    c.mass = j.at("mass");
    c.same = fit_from_json(j.at("same"));
    c.cross = fit_from_json(j.at("cross"));
    c.same_law = law_from_json(j.at("same_law"));
    c.cross_law = law_from_json(j.at("cross_law"));
    c.same_c = j.at("same_c");
    c.cross_c = j.at("cross_c");
    return c;
}

LeadingConstants cached_leading_constants(const SystemParams& s, const GroundStateProfile& U, const FitOptions& fit)
{
    const char* dir = std::getenv("SEGREGATE_CACHE");
    if (!dir || !*dir) return leading_constants(s, U, fit);
    json key = {{"n", s.n},
                {"p", s.p},
                {"q", s.q},
                {"r", s.r},
                {"nu", s.nu},
                {"profile_r_max", U.r_max()},
                {"profile_points", U.radii().size()},
                {"zeta_min", fit.zeta_min},
                {"zeta_max", fit.zeta_max},
                {"samples", fit.samples}};
    fs::path file = fs::path(dir) / ("leading_" + config_hash(key) + ".json");
    if (std::ifstream in(file); in) {
        try {
            json j;
            in >> j;
            if (j.at("key") == key) return leading_from_json(j.at("constants"));
        } catch (const std::exception&) {
            // unreadable entries are recomputed and overwritten
        }
    }
    auto c = leading_constants(s, U, fit);
    std::error_code ec;
    fs::create_directories(dir, ec);
    std::ofstream out(file);
    if (out) out << json{{"key", key}, {"constants", to_json(c)}}.dump(2) << '\n';
    return c;
}

json persist(const RunConfig& cfg, const std::string& command, const std::vector<std::string>& files,
             const json& extra)
{
    ensure_dir(cfg.out_dir);
    auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream stamp;
    stamp << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    json names = json::array();
    for (const auto& f : files) names.push_back(fs::path(f).filename().string());
    json m = {{"command", command},
              {"config_hash", config_hash(cfg.raw)},
              {"config", cfg.raw},
              {"seed", cfg.seed},
              {"workers", cfg.workers},
              {"quick", cfg.quick},
              {"files", names},
              {"module_version", module_version},
              {"created", stamp.str()}};
    for (const auto& [k, v] : extra.items()) m[k] = v;
    write_json(out_path(cfg, "manifest.json"), m);
    return m;
}

int run_cli(int argc, char** argv, const CliHooks& hooks)
{
    CLI::App app{"Segregated multi-peak solutions of coupled Schroedinger systems"};
    app.require_subcommand(1);

    struct Flags {
        std::string config, out;
        std::optional<int> workers;
        std::optional<std::uint64_t> seed;
        bool quick = false;
    } flags;

    const std::vector<std::pair<std::string, std::string>> commands = {
        {"ground-state", "tabulate the radial ground state"},
        {"eigen", "weighted eigenvalues of the linearised scalar problem"},
        {"interaction-fit", "fit decay laws of the interaction integrals"},
        {"gamma-rho", "projection coefficient of the cross coupling"},
        {"error-sweep", "weighted norms of the error components"},
        {"reduced-sweep", "sample the reduced function"},
        {"find-rho", "locate the concentration radius"},
        {"correct", "constrained linear solves and fixed point (n = 2)"},
        {"verify-all", "run the acceptance suite"},
    };
    for (const auto& [name, help] : commands) {
        auto* sub = app.add_subcommand(name, help);
        if (name != "verify-all") sub->add_option("--config", flags.config, "JSON configuration")->required();
        sub->add_option("--out", flags.out, "output directory");
        sub->add_option("--workers", flags.workers, "worker threads, 0 for all cores");
        sub->add_option("--seed", flags.seed, "seed for sampled checks");
        sub->add_flag("--quick", flags.quick, "reduced sizes");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        std::cerr << "UnknownCommand: " << e.what() << '\n';
        return 1;
    }

    std::string command = app.get_subcommands().front()->get_name();
    try {
        if (command == "verify-all") {
            if (!hooks.verify_all) throw Error(ErrorKind::UnknownCommand, "verify-all is not available in this build");
            return hooks.verify_all(flags.quick, flags.workers.value_or(0));
        }
        RunConfig cfg = load_config(flags.config, command);
        if (!flags.out.empty()) cfg.out_dir = flags.out;
        if (flags.workers) cfg.workers = *flags.workers;
        if (flags.seed) cfg.seed = *flags.seed;
        if (flags.quick) cfg.quick = true;
        ensure_dir(cfg.out_dir);

        static const std::map<std::string, CommandOutput (*)(const RunConfig&)> table = {
            {"ground-state", cmd_ground_state}, {"eigen", cmd_eigen},
            {"interaction-fit", cmd_interaction_fit}, {"gamma-rho", cmd_gamma_rho},
            {"error-sweep", cmd_error_sweep}, {"reduced-sweep", cmd_reduced_sweep},
            {"find-rho", cmd_find_rho}, {"correct", cmd_correct},
        };
        CommandOutput out = table.at(command)(cfg);
        persist(cfg, command, out.files, out.extra);
        return 0;
    } catch (const Error& e) {
        std::cerr << e.what() << '\n';
        return e.is_validation() ? 1 : 2;
    } catch (const std::exception& e) {
        std::cerr << "unexpected failure: " << e.what() << '\n';
        return 2;
    }
}

}  // namespace segregate
