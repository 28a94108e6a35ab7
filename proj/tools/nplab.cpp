#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "json.hpp"

#include "nplab/barriers.hpp"
#include "nplab/config.hpp"
#include "nplab/envelope.hpp"
#include "nplab/estimators.hpp"
#include "nplab/evolution.hpp"
#include "nplab/suite.hpp"
#include "nplab/svg.hpp"
#include "nplab/version.hpp"

namespace {

using nlohmann::json;
using namespace nplab;

namespace fs = std::filesystem;

// Closed-form data fields described in config blocks. Supported kinds:
//   constant(value), gaussian(amp, center, width), sum(terms),
//   sine(amp, freq, phase), checkerboard(amp, period, phase),
//   abs(amp, center), linear_t(slope), quadratic(coeff)
gridfn::ScalarField parse_field(const json& j) {
    if (j.is_number()) {
        const double v = j.get<double>();
        return gridfn::constant_field(v);
    }
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "constant") {
        return gridfn::constant_field(j.at("value").get<double>());
    }
    if (kind == "gaussian") {
        const double amp = j.at("amp").get<double>();
        const double width = j.at("width").get<double>();
        std::vector<double> ctr;
        if (j.at("center").is_array())
            ctr = j.at("center").get<std::vector<double>>();
        else
            ctr = {j.at("center").get<double>()};
        return [amp, width, ctr](std::span<const double> x, double) {
            double d2 = 0.0;
            for (std::size_t d = 0; d < x.size(); ++d) {
                const double c = d < ctr.size() ? ctr[d] : 0.0;
                d2 += (x[d] - c) * (x[d] - c);
            }
            return amp * std::exp(-d2 / (width * width));
        };
    }
    if (kind == "sine") {
        const double amp = j.at("amp").get<double>();
        const double freq = j.at("freq").get<double>();
        const double phase = j.value("phase", 0.0);
        return [amp, freq, phase](std::span<const double> x, double) {
            return amp * std::sin(freq * x[0] + phase);
        };
    }
    if (kind == "checkerboard") {
        const double amp = j.value("amp", 1.0);
        const double period = j.at("period").get<double>();
        const double phase = j.value("phase", 0.0);
        return [amp, period, phase](std::span<const double> x, double) {
            return std::sin(2.0 * M_PI * (x[0] - phase) / period) >= 0.0 ? amp : -amp;
        };
    }
    if (kind == "abs") {
        const double amp = j.value("amp", 1.0);
        const double center = j.value("center", 0.0);
        return [amp, center](std::span<const double> x, double) { return amp * std::fabs(x[0] - center); };
    }
    if (kind == "linear_t") {
        const double slope = j.at("slope").get<double>();
        return [slope](std::span<const double>, double t) { return slope * t; };
    }
    if (kind == "quadratic") {
        const double coeff = j.value("coeff", 1.0);
        return [coeff](std::span<const double> x, double) {
            double s = 0.0;
            for (double v : x) s += v * v;
            return coeff * s;
        };
    }
    if (kind == "sum") {
        std::vector<gridfn::ScalarField> terms;
        for (const auto& t : j.at("terms")) terms.push_back(parse_field(t));
        return [terms](std::span<const double> x, double t) {
            double s = 0.0;
            for (const auto& f : terms) s += f(x, t);
            return s;
        };
    }
    throw std::runtime_error("config: unknown field kind '" + kind + "'");
}

json provenance(std::uint64_t kernel_hash, const gridfn::LatticeSpec* lat) {
    json p;
    p["version"] = kVersion;
    p["kernel_hash"] = kernel_hash;
    if (lat) {
        p["lattice"] = {{"n", lat->n},       {"h_x", lat->h_x}, {"h_t", lat->h_t}, {"extent", lat->extent},
                        {"t0", lat->t0},     {"t1", lat->t1},   {"sigma", lat->sigma}};
    }
    return p;
}

void write_text(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path.string());
    os << text;
    if (text.empty() || text.back() != '\n') os << "\n";
}

gridfn::GridFunction load_trajectory(const json& cfg) {
    const std::string path = cfg.at("trajectory").get<std::string>();
    gridfn::ScalarField ext = gridfn::constant_field(0.0);
    double bound = 0.0;
    if (cfg.contains("exterior")) {
        ext = parse_field(cfg.at("exterior"));
        bound = cfg.value("exterior_bound", 1.0);
    }
    return gridfn::GridFunction::read_binary(path, ext, bound);
}

evolution::EvolutionProblem parse_problem(const json& cfg) {
    config::require_known_keys(cfg, {"operator", "sigma", "lambda", "Lambda", "lattice", "domain", "horizon",
                                     "cfl_safety", "R_out", "initial", "exterior", "forcing", "store_stride",
                                     "out", "seed"},
                               "solve");
    evolution::EvolutionProblem prob;
    const std::string op = cfg.value("operator", std::string("linear"));
    if (op == "linear")
        prob.op = evolution::OperatorKind::linear;
    else if (op == "pucci_plus")
        prob.op = evolution::OperatorKind::pucci_plus;
    else if (op == "pucci_minus")
        prob.op = evolution::OperatorKind::pucci_minus;
    else
        throw std::runtime_error("config: solve.operator must be linear|pucci_plus|pucci_minus");
    prob.sigma = config::get_number(cfg, "sigma", 1.5);
    prob.lambda = config::get_number(cfg, "lambda", 1.0);
    prob.Lambda = config::get_number(cfg, "Lambda", prob.lambda);
    if (cfg.contains("lattice")) {
        const auto& l = cfg.at("lattice");
        config::require_known_keys(l, {"n", "h_x", "extent"}, "solve.lattice");
        prob.n = int(config::get_number(l, "n", 1));
        prob.h_x = config::get_number(l, "h_x", 1.0 / 64.0);
        prob.extent = config::get_number(l, "extent", 2.0);
    }
    if (cfg.contains("domain")) {
        const auto& d = cfg.at("domain");
        config::require_known_keys(d, {"radius", "ball"}, "solve.domain");
        prob.domain_radius = config::get_number(d, "radius", 1.0);
        prob.domain_is_ball = d.value("ball", false);
    }
    prob.horizon = config::get_number(cfg, "horizon", 1.0);
    prob.cfl_safety = config::get_number(cfg, "cfl_safety", 0.9);
    prob.R_out = config::get_number(cfg, "R_out", 1.0);
    prob.store_stride = int(config::get_number(cfg, "store_stride", 1));
    if (cfg.contains("initial")) prob.initial = parse_field(cfg.at("initial"));
    if (cfg.contains("exterior")) prob.exterior = parse_field(cfg.at("exterior"));
    if (cfg.contains("forcing")) prob.forcing = parse_field(cfg.at("forcing"));
    return prob;
}

struct CommonArgs {
    std::string config_path;
    std::string out_dir = "out";
    std::uint64_t seed = 1;
    double resolution_scale = 1.0;
    int workers = 1;
    bool svg = false;
    bool rebuild_tables = false;
};

json load_config_or_empty(const CommonArgs& args) {
    if (args.config_path.empty()) return json::object();
    return config::load(args.config_path);
}

void dump_resolved_config(const CommonArgs& args, const json& cfg, const std::string& command) {
    json out = cfg;
    out["_command"] = command;
    out["_seed"] = args.seed;
    out["_version"] = kVersion;
    write_text(fs::path(args.out_dir) / (command + "_config.json"), out.dump(2));
}

int cmd_solve(const CommonArgs& args) {
    const json cfg = load_config_or_empty(args);
    auto prob = parse_problem(cfg);
    prob.table_cache_dir = (fs::path(args.out_dir) / "table_cache").string();
    prob.rebuild_tables = args.rebuild_tables;
    dump_resolved_config(args, cfg, "solve");
    const auto traj = evolution::solve(prob);
    traj.states.write_binary((fs::path(args.out_dir) / "trajectory.bin").string());
    traj.states.write_csv((fs::path(args.out_dir) / "trajectory.csv").string());
    json rep;
    rep["dt"] = traj.dt;
    rep["steps"] = traj.diagnostics.size();
    double max_op = 0.0, min_margin = 1.0;
    for (const auto& d : traj.diagnostics) {
        max_op = std::max(max_op, d.max_op);
        min_margin = std::min(min_margin, d.cfl_margin);
    }
    rep["max_op"] = max_op;
    rep["min_cfl_margin"] = min_margin;
    rep["provenance"] = provenance(0, &traj.states.lattice());
    write_text(fs::path(args.out_dir) / "solve_report.json", rep.dump(2));
    std::printf("solve: %zu steps, dt=%.3e -> %s\n", traj.diagnostics.size(), traj.dt, args.out_dir.c_str());
    return 0;
}

int cmd_verify_barrier(const CommonArgs& args) {
    const json cfg = load_config_or_empty(args);
    config::require_known_keys(cfg, {"sigma", "n", "h_x", "h_t", "lambda", "Lambda", "R_out", "params",
                                     "tol_residual_rel", "kplus_threshold"},
                               "verify-barrier");
    const double sigma = config::get_number(cfg, "sigma", 1.9);
    const int n = int(config::get_number(cfg, "n", 1));
    const double h_x = config::get_number(cfg, "h_x", 1.0 / 128.0);
    const double h_t = config::get_number(cfg, "h_t", h_x);
    barriers::VerifyConfig vc;
    vc.lambda = config::get_number(cfg, "lambda", 1.0);
    vc.Lambda = config::get_number(cfg, "Lambda", 2.0);
    vc.R_out = config::get_number(cfg, "R_out", 1.0);
    vc.tol_residual_rel = config::get_number(cfg, "tol_residual_rel", 1e-6);
    vc.kplus_threshold = config::get_number(cfg, "kplus_threshold", 2.0);
    const auto lat = gridfn::LatticeSpec::make(n, h_x, h_t, 2.0, 0.0, 1.0, sigma);
    dump_resolved_config(args, cfg, "verify_barrier");

    barriers::BarrierParams params;
    bool ok;
    auto with_prov = [&](const std::string& text) {
        json j = json::parse(text);
        j["provenance"] = provenance(0, &lat);
        return j.dump(2);
    };
    if (cfg.contains("params")) {
        const auto& p = cfg.at("params");
        params.alpha = p.at("alpha").get<double>();
        params.beta = p.at("beta").get<double>();
        params.gamma = p.at("gamma").get<double>();
        params.zeta = p.at("zeta").get<double>();
        params.A = p.at("A").get<double>();
        params.delta = p.at("delta").get<double>();
        params.c = p.at("c").get<double>();
        params.r = p.value("r", 1.0 / (9.0 * std::sqrt(double(n))));
        params.tau = p.value("tau", params.r / 8.0);
        params.sigma = sigma;
        params.n = n;
        const auto rep = barriers::verify_subsolution(params, lat, vc);
        write_text(fs::path(args.out_dir) / "barrier_report.json", with_prov(rep.to_json()));
        ok = rep.pass();
    } else {
        const auto sr = barriers::parameter_search(sigma, n, lat, vc);
        write_text(fs::path(args.out_dir) / "barrier_report.json", with_prov(sr.to_json()));
        ok = sr.found;
        params = sr.params;
    }
    const auto field = barriers::residual_field(params, lat, vc);
    field.write_csv((fs::path(args.out_dir) / "barrier_residual.csv").string());
    std::printf("verify-barrier: %s (report in %s)\n", ok ? "PASS" : "FAIL", args.out_dir.c_str());
    return ok ? 0 : 2;
}

void write_envelope_fields(const envelope::EnvelopeResult& env, const std::string& path) {
    std::ofstream os(path);
    os.precision(17);
    const auto& lat = env.lat;
    os << (lat.n == 1 ? "x1,t,gamma,contact,dt_gamma,det_minus\n" : "x1,x2,t,gamma,contact,dt_gamma,det_minus\n");
    double xs[2];
    for (std::size_t sp = 0; sp < env.slices.size(); ++sp)
        for (int node = 0; node < lat.nodes_per_slice(); ++node) {
            lat.node_coords(node, xs);
            const std::size_t at = sp * std::size_t(lat.nodes_per_slice()) + node;
            for (int d = 0; d < lat.n; ++d) os << xs[d] << ",";
            os << lat.slice_time(env.slices[sp]) << "," << env.gamma[at] << "," << int(env.contact[at]) << ","
               << env.dt_gamma[at] << "," << env.hess_det_minus[at] << "\n";
        }
}

int cmd_envelope(const CommonArgs& args, bool with_abp) {
    const json cfg = load_config_or_empty(args);
    config::require_known_keys(cfg, {"trajectory", "forcing", "exterior", "exterior_bound", "domain_r",
                                     "domain_anchor_t", "lambda", "Lambda", "contact_tol", "ring_rho",
                                     "ring_M", "C_fit", "rho0_scale"},
                               with_abp ? "abp" : "envelope");
    const auto u = load_trajectory(cfg);
    const double r = config::get_number(cfg, "domain_r", 1.0);
    geometry::Point anchor;
    anchor.x.assign(u.lattice().n, 0.0);
    anchor.t = config::get_number(cfg, "domain_anchor_t", u.lattice().t1);
    const auto domain = geometry::cube_Q(r, u.lattice().sigma, anchor);
    const auto env = envelope::concave_envelope(u, domain, config::get_number(cfg, "contact_tol", 1e-9));
    dump_resolved_config(args, cfg, with_abp ? "abp" : "envelope");
    write_envelope_fields(env, (fs::path(args.out_dir) / "envelope_fields.csv").string());

    if (!with_abp) {
        json rep;
        rep["normal_map_total"] = envelope::normal_map_measure(env, domain);
        rep["slices"] = env.slices.size();
        rep["provenance"] = provenance(0, &u.lattice());
        write_text(fs::path(args.out_dir) / "envelope_report.json", rep.dump(2));
        std::printf("envelope: fields in %s\n", args.out_dir.c_str());
        return 0;
    }
    gridfn::GridFunction f = cfg.contains("forcing")
                                 ? gridfn::sample(parse_field(cfg.at("forcing")), u.lattice())
                                 : gridfn::GridFunction(u.lattice(),
                                                        std::vector<double>(u.values().size(), 0.0),
                                                        gridfn::constant_field(0.0), 0.0);
    envelope::AbpConfig acfg;
    acfg.ring_rho = config::get_number(cfg, "ring_rho", 0.5);
    acfg.ring_M = config::get_number(cfg, "ring_M", 1.0);
    acfg.C_fit = config::get_number(cfg, "C_fit", 2.0);
    acfg.rho0_scale = config::get_number(cfg, "rho0_scale", 1.0);
    const auto rep = envelope::abp_diagnostics(u, f, env, acfg);
    {
        json j = json::parse(rep.to_json());
        j["provenance"] = provenance(0, &u.lattice());
        write_text(fs::path(args.out_dir) / "abp_report.json", j.dump(2));
    }
    std::printf("abp: tso=%.4g contact=%d -> %s\n", rep.tso_ratio, rep.contact_count, args.out_dir.c_str());
    return rep.contact_sign_ok ? 0 : 2;
}

int cmd_cz_demo(const CommonArgs& args) {
    const json cfg = load_config_or_empty(args);
    config::require_known_keys(cfg, {"n", "rule", "cubes", "random", "delta_num", "delta_den", "m", "mode"},
                               "cz-demo");
    const int n = int(config::get_number(cfg, "n", 1));
    geometry::SplitRule rule{1, 1};
    if (cfg.contains("rule")) {
        rule.p = cfg.at("rule").at(0).get<int>();
        rule.q = cfg.at("rule").at(1).get<int>();
    }
    std::vector<geometry::DyadicCube> cubes;
    if (cfg.contains("cubes")) {
        json tree;
        tree["sigma"] = 1.0;
        tree["rule"] = {rule.p, rule.q};
        tree["cubes"] = cfg.at("cubes");
        cubes = geometry::dyadic_tree_from_json(tree.dump(), n);
    } else {
        const auto& rj = cfg.at("random");
        std::uint64_t s = rj.value("seed", 1) + args.seed;
        auto next = [&s] {
            s += 0x9E3779B97F4A7C15ull;
            std::uint64_t z = s;
            z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
            z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
            return z ^ (z >> 31);
        };
        const int count = rj.value("count", 4);
        const int maxd = rj.value("depth", 3);
        for (int i = 0; i < count; ++i) {
            const int depth = 1 + int(next() % std::uint64_t(maxd));
            std::vector<std::int64_t> ix;
            for (int d = 0; d < n; ++d) ix.push_back(std::int64_t(next() % (1ull << (rule.q * depth))));
            cubes.emplace_back(n, rule, depth, ix, std::int64_t(next() % (1ull << (rule.p * depth))));
        }
    }
    const int m = int(config::get_number(cfg, "m", 2));
    const Rational delta(std::int64_t(config::get_number(cfg, "delta_num", 1)),
                         std::int64_t(config::get_number(cfg, "delta_den", 2)));
    const auto mode = cfg.value("mode", std::string("elongation")) == "shifted"
                          ? geometry::CzMode::shifted_elongation
                          : geometry::CzMode::elongation_clipped;
    const auto cz = geometry::cz_decompose(cubes, delta, m, mode);
    dump_resolved_config(args, cfg, "cz_demo");
    write_text(fs::path(args.out_dir) / "cz_selected.json",
               geometry::dyadic_tree_to_json(1.0, rule, cz.selected));
    write_text(fs::path(args.out_dir) / "cz_region.json", geometry::region_to_json(1.0, cz.region));
    const Rational lhs = cz.region.measure() * Rational(m + 1) * delta;
    const Rational rhs = cz.measure_a * Rational(m);
    json rep;
    rep["measure_A"] = cz.measure_a.str();
    rep["measure_region"] = cz.region.measure().str();
    rep["selected"] = cz.selected.size();
    rep["inequality_holds"] = lhs >= rhs;
    rep["m"] = m;
    rep["provenance"] = provenance(0, nullptr);
    write_text(fs::path(args.out_dir) / "cz_report.json", rep.dump(2));
    std::printf("cz-demo: |A|=%s |region|=%s %s\n", cz.measure_a.str().c_str(),
                cz.region.measure().str().c_str(), lhs >= rhs ? "PASS" : "FAIL");
    return lhs >= rhs ? 0 : 2;
}

int cmd_decay(const CommonArgs& args) {
    const json cfg = load_config_or_empty(args);
    config::require_known_keys(cfg, {"trajectory", "exterior", "exterior_bound", "region_r", "s_grid"},
                               "decay");
    const auto u = load_trajectory(cfg);
    const double r = config::get_number(cfg, "region_r", 1.0);
    const auto region = geometry::cube_forward_Q(r, u.lattice().sigma, u.lattice().n, 0.0);
    std::vector<double> s_grid = cfg.contains("s_grid") ? cfg.at("s_grid").get<std::vector<double>>()
                                                        : std::vector<double>{2, 4, 8, 16, 32, 64, 128};
    const auto fit = estimators::decay_fit(u, region, s_grid);
    dump_resolved_config(args, cfg, "decay");
    {
        json j = json::parse(fit.to_json());
        j["provenance"] = provenance(0, &u.lattice());
        write_text(fs::path(args.out_dir) / "decay_fit.json", j.dump(2));
    }
    {
        std::ofstream os(fs::path(args.out_dir) / "decay_curve.csv");
        os.precision(17);
        os << "s,measure\n";
        for (std::size_t i = 0; i < fit.s_grid.size(); ++i) os << fit.s_grid[i] << "," << fit.measures[i] << "\n";
    }
    if (args.svg) {
        svg::Series pts{"level-set measure", fit.s_grid, fit.measures, "#1f77b4"};
        svg::FittedLine line;
        line.slope = -fit.eps_star_fit;
        line.intercept = std::log10(fit.C_fit * region.measure());
        svg::write_loglog((fs::path(args.out_dir) / "decay_fit.svg").string(),
                          "upper level-set decay", "threshold s", "|{u>s} ∩ Q|", {pts}, {line});
    }
    std::printf("decay: eps*=%.4g C=%.4g R2=%.4g\n", fit.eps_star_fit, fit.C_fit, fit.r_squared);
    return fit.degenerate ? 2 : 0;
}

int cmd_weak_harnack(const CommonArgs& args) {
    const json cfg = load_config_or_empty(args);
    config::require_known_keys(cfg, {"trajectory", "exterior", "exterior_bound", "center", "r", "c0", "C",
                                     "eps_star", "s_grid"},
                               "weak-harnack");
    const auto u = load_trajectory(cfg);
    geometry::Point center;
    center.x.assign(u.lattice().n, 0.0);
    if (cfg.contains("center")) {
        const auto c = cfg.at("center").get<std::vector<double>>();
        for (int d = 0; d < u.lattice().n; ++d) center.x[d] = c[d];
        center.t = c.back();
    }
    const auto res = estimators::weak_harnack_check(
        u, center, config::get_number(cfg, "r", 0.5), config::get_number(cfg, "c0", 0.0),
        config::get_number(cfg, "C", 1.0), config::get_number(cfg, "eps_star", 0.5),
        cfg.contains("s_grid") ? cfg.at("s_grid").get<std::vector<double>>()
                               : std::vector<double>{2, 4, 8, 16, 32});
    dump_resolved_config(args, cfg, "weak_harnack");
    json rep;
    rep["pass"] = res.pass;
    rep["worst_margin"] = res.worst_margin;
    rep["lhs"] = res.lhs;
    rep["rhs"] = res.rhs;
    rep["provenance"] = provenance(0, &u.lattice());
    write_text(fs::path(args.out_dir) / "weak_harnack.json", rep.dump(2));
    std::printf("weak-harnack: %s (worst margin %.4g)\n", res.pass ? "PASS" : "FAIL", res.worst_margin);
    return res.pass ? 0 : 2;
}

int cmd_harnack(const CommonArgs& args) {
    const json cfg = load_config_or_empty(args);
    config::require_known_keys(cfg, {"trajectory", "exterior", "exterior_bound", "c0"}, "harnack");
    const auto u = load_trajectory(cfg);
    const double q = estimators::harnack_quotient(u, config::get_number(cfg, "c0", 0.0));
    dump_resolved_config(args, cfg, "harnack");
    json rep;
    rep["quotient"] = q;
    rep["sigma"] = u.lattice().sigma;
    rep["asserted"] = u.lattice().sigma > 1.0; // quotient reported only outside (1,2)
    rep["provenance"] = provenance(0, &u.lattice());
    write_text(fs::path(args.out_dir) / "harnack.json", rep.dump(2));
    std::printf("harnack: quotient=%.6g\n", q);
    return std::isfinite(q) ? 0 : 2;
}

int cmd_holder(const CommonArgs& args) {
    const json cfg = load_config_or_empty(args);
    config::require_known_keys(cfg, {"trajectory", "exterior", "exterior_bound", "point", "levels", "N", "r0"},
                               "holder");
    const auto u = load_trajectory(cfg);
    geometry::Point pt;
    pt.x.assign(u.lattice().n, 0.0);
    if (cfg.contains("point")) {
        const auto c = cfg.at("point").get<std::vector<double>>();
        for (int d = 0; d < u.lattice().n; ++d) pt.x[d] = c[d];
        pt.t = c.back();
    }
    const auto fit = estimators::holder_fit(u, pt, int(config::get_number(cfg, "levels", 5)),
                                            int(config::get_number(cfg, "N", 1)),
                                            config::get_number(cfg, "r0", 0.25));
    dump_resolved_config(args, cfg, "holder");
    {
        json j = json::parse(fit.to_json());
        j["provenance"] = provenance(0, &u.lattice());
        write_text(fs::path(args.out_dir) / "holder_fit.json", j.dump(2));
    }
    if (args.svg) {
        svg::Series pts{"oscillation", fit.scales, fit.oscillations, "#2ca02c"};
        svg::write_loglog((fs::path(args.out_dir) / "holder_fit.svg").string(), "oscillation decay",
                          "scale r", "osc over bQ_r", {pts});
    }
    std::printf("holder: alpha=%.4g%s\n", fit.alpha_fit, fit.exact ? " (exact)" : "");
    return 0;
}

int cmd_c1alpha(const CommonArgs& args) {
    const json cfg = load_config_or_empty(args);
    config::require_known_keys(cfg, {"trajectory", "exterior", "exterior_bound", "point", "levels", "r0",
                                     "kernel_class", "h_list"},
                               "c1alpha");
    const auto u = load_trajectory(cfg);
    geometry::Point pt;
    pt.x.assign(u.lattice().n, 0.0);
    if (cfg.contains("point")) {
        const auto c = cfg.at("point").get<std::vector<double>>();
        for (int d = 0; d < u.lattice().n; ++d) pt.x[d] = c[d];
        pt.t = c.back();
    }
    const auto tag = cfg.value("kernel_class", std::string("L1")) == "L1" ? kernels::KernelClass::L1
                                                                          : kernels::KernelClass::L0;
    const auto h_list = cfg.contains("h_list") ? cfg.at("h_list").get<std::vector<double>>()
                                               : std::vector<double>{2.0 * u.lattice().h_x,
                                                                     4.0 * u.lattice().h_x};
    const auto res = estimators::c1alpha_fit(u, tag, h_list, pt, int(config::get_number(cfg, "levels", 5)),
                                             config::get_number(cfg, "r0", 0.25));
    dump_resolved_config(args, cfg, "c1alpha");
    {
        json j = json::parse(res.to_json());
        j["provenance"] = provenance(0, &u.lattice());
        write_text(fs::path(args.out_dir) / "c1alpha.json", j.dump(2));
    }
    std::printf("c1alpha: %s\n", res.available ? std::to_string(res.exponent).c_str() : res.reason.c_str());
    return 0;
}

int cmd_paraboloid(const CommonArgs& args) {
    const json cfg = load_config_or_empty(args);
    config::require_known_keys(cfg, {"trajectory", "exterior", "exterior_bound", "aperture", "k1_r",
                                     "domain_r"},
                               "paraboloid");
    const auto u = load_trajectory(cfg);
    const double aperture = config::get_number(cfg, "aperture", 1.0);
    const double k1r = config::get_number(cfg, "k1_r", 0.5);
    const double domr = config::get_number(cfg, "domain_r", 1.0);
    const auto& lat = u.lattice();
    geometry::Point o;
    o.x.assign(lat.n, 0.0);
    const auto k1 = geometry::cube_box_forward(k1r, lat.sigma, o);
    geometry::Point da = o;
    da.t = lat.t1;
    const auto domain = geometry::cube_Q(domr, lat.sigma, da);
    const auto masks = estimators::paraboloid_classify(u, aperture, k1, domain);
    dump_resolved_config(args, cfg, "paraboloid");
    json rep;
    rep["aperture"] = aperture;
    rep["good_count"] = masks.good_count;
    rep["bad_count"] = masks.bad_count;
    rep["good_measure"] = masks.good_measure();
    rep["bad_measure"] = masks.bad_measure();
    rep["provenance"] = provenance(0, &lat);
    write_text(fs::path(args.out_dir) / "paraboloid.json", rep.dump(2));
    std::printf("paraboloid: good=%d bad=%d\n", masks.good_count, masks.bad_count);
    return 0;
}

int cmd_suite(const CommonArgs& args, const std::string& only_csv) {
    suite::SuiteConfig scfg;
    scfg.seed = args.seed;
    scfg.resolution_scale = args.resolution_scale;
    scfg.out_dir = args.out_dir;
    scfg.workers = args.workers;
    if (!only_csv.empty()) {
        std::stringstream ss(only_csv);
        std::string id;
        while (std::getline(ss, id, ',')) scfg.only.push_back(id);
    }
    const auto results = suite::run_suite(scfg);
    bool all = true;
    for (const auto& r : results) {
        std::printf("%s %-18s %s [%.1fs]\n", r.pass ? "PASS" : "FAIL", r.id.c_str(), r.details.c_str(),
                    r.seconds);
        all = all && r.pass;
    }
    std::printf("suite: %s (%s/suite_report.json)\n", all ? "PASS" : "FAIL", args.out_dir.c_str());
    return all ? 0 : 2;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"numerical laboratory for nonlocal parabolic extremal operators"};
    app.set_version_flag("--version", std::string(nplab::kVersion));
    app.fallthrough();
    CommonArgs args;
    app.add_option("--config", args.config_path, "JSON config (supports include-by-reference)");
    app.add_option("--out", args.out_dir, "output directory");
    app.add_option("--seed", args.seed, "seed for randomized families");
    app.add_option("--resolution-scale", args.resolution_scale, "coarsen property checks (>1) for smoke runs");
    app.add_option("--workers", args.workers, "worker threads for independent runs");
    app.add_flag("--svg", args.svg, "emit SVG plots");
    app.add_flag("--rebuild-tables", args.rebuild_tables, "ignore the weight-table disk cache");

    std::string only_csv;
    auto* s_solve = app.add_subcommand("solve", "evolve a nonlocal Dirichlet problem");
    auto* s_barrier = app.add_subcommand("verify-barrier", "verify the special-function inequalities");
    auto* s_abp = app.add_subcommand("abp", "concave envelope + ABP diagnostics for a trajectory");
    auto* s_env = app.add_subcommand("envelope", "concave envelope fields for a trajectory");
    auto* s_cz = app.add_subcommand("cz-demo", "dyadic decomposition demo with exact measures");
    auto* s_decay = app.add_subcommand("decay", "level-set decay fit");
    auto* s_wh = app.add_subcommand("weak-harnack", "weak Harnack inequality check");
    auto* s_ha = app.add_subcommand("harnack", "Harnack quotient");
    auto* s_ho = app.add_subcommand("holder", "oscillation-decay Hoelder fit");
    auto* s_c1 = app.add_subcommand("c1alpha", "difference-quotient regularity fit");
    auto* s_pb = app.add_subcommand("paraboloid", "tangent-paraboloid classification");
    auto* s_suite = app.add_subcommand("suite", "run the verification matrix");
    s_suite->add_option("--only", only_csv, "comma-separated check ids");

    app.require_subcommand(1);
    CLI11_PARSE(app, argc, argv);

    try {
        if (s_solve->parsed()) return cmd_solve(args);
        if (s_barrier->parsed()) return cmd_verify_barrier(args);
        if (s_abp->parsed()) return cmd_envelope(args, true);
        if (s_env->parsed()) return cmd_envelope(args, false);
        if (s_cz->parsed()) return cmd_cz_demo(args);
        if (s_decay->parsed()) return cmd_decay(args);
        if (s_wh->parsed()) return cmd_weak_harnack(args);
        if (s_ha->parsed()) return cmd_harnack(args);
        if (s_ho->parsed()) return cmd_holder(args);
        if (s_c1->parsed()) return cmd_c1alpha(args);
        if (s_pb->parsed()) return cmd_paraboloid(args);
        if (s_suite->parsed()) return cmd_suite(args, only_csv);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 1;
}
