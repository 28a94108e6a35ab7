#include "nplab/barriers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "json.hpp"

namespace nplab::barriers {

using nonlocal::PucciSign;
using nonlocal::SliceView;

namespace {

double norm2(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

} // namespace

void BarrierParams::validate() const {
    if (!(sigma > 0.0 && sigma < 2.0)) throw std::invalid_argument("BarrierParams: sigma out of (0,2)");
    if (!(alpha > 0.0 && beta > 0.0)) throw std::invalid_argument("BarrierParams: alpha, beta must be positive");
    if (!(gamma > 1.0)) throw std::invalid_argument("BarrierParams: gamma must exceed 1");
    if (!(A > 0.0 && c > 0.0)) throw std::invalid_argument("BarrierParams: A, c must be positive");
    if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("BarrierParams: delta out of (0,1)");
    if (!(r > 0.0 && r < 1.0 / (2.0 * std::sqrt(double(n)))))
        throw std::invalid_argument("BarrierParams: r must lie in (0, 1/(2 sqrt n))");
}

double heat_majorant(std::span<const double> x, double t, const BarrierParams& p, PsiVariant variant) {
    if (!(t > 0.0)) throw std::invalid_argument("heat_majorant: t must be positive");
    const double cap = variant == PsiVariant::base ? std::pow(2.0, p.n) : std::pow(p.delta, -double(p.n));
    const double arg = p.alpha * std::pow(norm2(x), p.sigma) / t;
    // exp underflows long before the power factor matters
    if (arg > 700.0) return 0.0;
    const double val = std::pow(4.0 * M_PI * t, -double(p.n) / p.sigma) * std::exp(-arg);
    return std::min(cap, val);
}

double barrier_f(std::span<const double> x, double t, const BarrierParams& p, PsiVariant variant) {
    return std::exp(-p.beta * t) * std::pow(heat_majorant(x, t, p, variant), p.gamma);
}

double barrier_psi(std::span<const double> x, double t, const BarrierParams& p, PsiVariant variant) {
    if (t <= 0.0) return 0.0;
    const double f = barrier_f(x, t, p, variant);
    return std::min(std::max(f - p.zeta, 0.0), p.A * t);
}

double special_function_Psi(std::span<const double> x, double t, const BarrierParams& p) {
    return p.c * barrier_psi(x, t, p, p.variant);
}

namespace {

// Active branch of the min/max composite at a point: 0 dead, 1 ramp (A t), 2 bulk (f - zeta).
int psi_branch(std::span<const double> x, double t, const BarrierParams& p) {
    if (t <= 0.0) return 0;
    const double f = barrier_f(x, t, p, p.variant) - p.zeta;
    if (f <= 0.0) return 0;
    return p.A * t < f ? 1 : 2;
}

} // namespace

BarrierReport verify_subsolution(const BarrierParams& p, const LatticeSpec& lat, const VerifyConfig& cfg) {
    p.validate();
    if (lat.n != p.n) throw std::invalid_argument("verify_subsolution: lattice dimension mismatch");
    if (lat.h_x > p.r / 2.0)
        throw std::invalid_argument("verify_subsolution: lattice too coarse for the K-_{r/2} margin");

    const gridfn::ScalarField psi_field = [p](std::span<const double> x, double t) {
        return special_function_Psi(x, t, p);
    };
    const GridFunction Psi = gridfn::sample(psi_field, lat, p.c * std::pow(p.delta, -double(p.n) * p.gamma));
    const auto tables = nonlocal::make_extremal_tables(p.sigma, cfg.lambda, cfg.Lambda, lat, cfg.R_out);

    BarrierReport rep;
    rep.scale = Psi.scale();

    const int m = lat.nodes_per_dim();
    const int nps = lat.nodes_per_slice();
    const double rs_half = std::pow(p.r / 2.0, p.sigma);
    const double kplus_lo = std::pow(p.r, p.sigma);
    const double kplus_hi = (std::pow(3.0, p.sigma) + 2.0) * std::pow(p.r, p.sigma);

    rep.min_subsolution_residual = std::numeric_limits<double>::infinity();
    rep.min_on_Kplus = std::numeric_limits<double>::infinity();
    rep.max_on_parabolic_complement = -std::numeric_limits<double>::infinity();
    double min_on_closure = std::numeric_limits<double>::infinity();

    double xs[2];
    int ix[2];
    for (int j = 0; j < lat.num_slices(); ++j) {
        const double t = lat.slice_time(j);
        const SliceView v = SliceView::of(Psi, j);
        for (int node = 0; node < nps; ++node) {
            lat.node_coords(node, xs);
            const std::span<const double> x(xs, std::size_t(lat.n));
            const double absx = norm2(x);
            const double val = Psi.at(j, node);

            // partial*_p Q = (R^n \ B_1) x (0,1] union R^n x {0}
            if (j == 0 || absx >= 1.0 - 1e-12)
                rep.max_on_parabolic_complement = std::max(rep.max_on_parabolic_complement, val);

            // K+_{3r}
            bool in_kplus = t > kplus_lo + 1e-14 && t <= kplus_hi + 1e-14;
            for (int d = 0; d < lat.n && in_kplus; ++d)
                if (std::fabs(xs[d]) >= 3.0 * p.r - 1e-12) in_kplus = false;
            if (in_kplus) rep.min_on_Kplus = std::min(rep.min_on_Kplus, val);

            if (j == 0) continue;
            if (absx >= 1.0 - 1e-12 || t > 1.0 + 1e-14) continue; // residual only on Q

            // closure of K-_{r/2}
            bool in_closure = t <= rs_half + 1e-14;
            for (int d = 0; d < lat.n && in_closure; ++d)
                if (std::fabs(xs[d]) > p.r / 2.0 + 1e-12) in_closure = false;

            // seam flag: branch changes within one cell (space or time)
            const int br = psi_branch(x, t, p);
            bool seam = false;
            {
                double xn[2] = {xs[0], lat.n == 2 ? xs[1] : 0.0};
                for (int d = 0; d < lat.n && !seam; ++d) {
                    for (int s = -1; s <= 1 && !seam; s += 2) {
                        xn[d] = xs[d] + s * lat.h_x;
                        if (psi_branch(std::span<const double>(xn, std::size_t(lat.n)), t, p) != br) seam = true;
                    }
                    xn[d] = xs[d];
                }
                if (!seam && psi_branch(x, t - lat.h_t, p) != br) seam = true;
                if (!seam && t + lat.h_t <= 1.0 + 1e-14 && psi_branch(x, t + lat.h_t, p) != br) seam = true;
            }
            if (seam && !in_closure) {
                ++rep.seam_nodes_excluded;
                continue;
            }

            ix[0] = lat.n == 1 ? node : node / m;
            ix[1] = lat.n == 1 ? 0 : node % m;
            const double mpsi =
                nonlocal::pucci_apply_at(v, tables.lam, tables.Lam, std::span<const int>(ix, 2), PucciSign::minus);
            // one-sided time slopes; the smaller one is the meaningful slope off seams
            const double back = (val - Psi.at(j - 1, node)) / lat.h_t;
            double slope = back;
            if (j + 1 < lat.num_slices()) {
                const double fwd = (Psi.at(j + 1, node) - val) / lat.h_t;
                slope = std::min(back, fwd);
            }
            const double residual = mpsi - slope;
            if (in_closure) {
                min_on_closure = std::min(min_on_closure, residual);
            } else {
                rep.min_subsolution_residual = std::min(rep.min_subsolution_residual, residual);
                rep.region_scale = std::max(rep.region_scale, std::fabs(val));
            }
        }
    }

    rep.bump_required = std::max(0.0, -(std::isfinite(min_on_closure) ? min_on_closure : 0.0));
    rep.residual_pass = rep.min_subsolution_residual >= -cfg.tol_residual_rel * rep.scale;
    rep.kplus_pass = std::isfinite(rep.min_on_Kplus) && rep.min_on_Kplus > cfg.kplus_threshold;
    rep.boundary_pass = rep.max_on_parabolic_complement <= cfg.boundary_tol_rel * rep.scale;
    return rep;
}

GridFunction residual_field(const BarrierParams& p, const LatticeSpec& lat, const VerifyConfig& cfg) {
    p.validate();
    const gridfn::ScalarField psi_field = [p](std::span<const double> x, double t) {
        return special_function_Psi(x, t, p);
    };
    const GridFunction Psi = gridfn::sample(psi_field, lat, p.c * std::pow(p.delta, -double(p.n) * p.gamma));
    const auto tables = nonlocal::make_extremal_tables(p.sigma, cfg.lambda, cfg.Lambda, lat, cfg.R_out);
    std::vector<double> vals(Psi.values().size(), 0.0);
    const int nps = lat.nodes_per_slice();
    const int m = lat.nodes_per_dim();
    int ix[2];
    for (int j = 1; j < lat.num_slices(); ++j) {
        const SliceView v = SliceView::of(Psi, j);
        for (int node = 0; node < nps; ++node) {
            ix[0] = lat.n == 1 ? node : node / m;
            ix[1] = lat.n == 1 ? 0 : node % m;
            const double mpsi =
                nonlocal::pucci_apply_at(v, tables.lam, tables.Lam, std::span<const int>(ix, 2), PucciSign::minus);
            const double back = (Psi.at(j, node) - Psi.at(j - 1, node)) / lat.h_t;
            double slope = back;
            if (j + 1 < lat.num_slices())
                slope = std::min(back, (Psi.at(j + 1, node) - Psi.at(j, node)) / lat.h_t);
            vals[std::size_t(j) * nps + node] = mpsi - slope;
        }
    }
    return GridFunction(lat, std::move(vals), gridfn::constant_field(0.0), 0.0);
}

namespace {

// eta just above sup f on {|x| >= 1} x (0,1]; f is radial and decreasing in
// |x|, so the supremum sits at |x| = 1.
double boundary_level(const BarrierParams& p) {
    double sup = 0.0;
    double x[2] = {1.0, 0.0};
    for (int i = 1; i <= 4000; ++i) {
        const double t = i / 4000.0;
        sup = std::max(sup, barrier_f(std::span<const double>(x, std::size_t(p.n)), t, p, p.variant));
    }
    // stationary point of the exponent part
    const double tstar = p.alpha * p.sigma / double(p.n);
    if (tstar > 0.0 && tstar <= 1.0)
        sup = std::max(sup, barrier_f(std::span<const double>(x, std::size_t(p.n)), tstar, p, p.variant));
    return sup * (1.0 + 1e-6);
}

// ramp slope so that { max(f - zeta, 0) >= A t } sits inside B_tau x [0, tau^sigma]
double ramp_slope(const BarrierParams& p) {
    double A = 1.0;
    const double ts = std::pow(p.tau, p.sigma);
    double x[2] = {0.0, 0.0};
    for (int i = 0; i <= 200; ++i) {
        x[0] = i / 200.0 * 1.5;
        const bool outside_ball = x[0] > p.tau;
        for (int jt = 1; jt <= 400; ++jt) {
            const double t = jt / 400.0;
            if (!outside_ball && t <= ts) continue;
            const double fz = barrier_f(std::span<const double>(x, std::size_t(p.n)), t, p, p.variant) - p.zeta;
            if (fz > 0.0) A = std::max(A, fz / t);
        }
    }
    return 1.01 * A;
}

double kplus_min_psi(const BarrierParams& p) {
    // sample psi^delta over K+_{3r} on a fixed fine grid
    const double lo_t = std::pow(p.r, p.sigma), hi_t = (std::pow(3.0, p.sigma) + 2.0) * std::pow(p.r, p.sigma);
    double mn = std::numeric_limits<double>::infinity();
    double x[2] = {0.0, 0.0};
    const int nx = 33, nt = 33;
    for (int a = 0; a < nx; ++a) {
        x[0] = -3.0 * p.r + 6.0 * p.r * a / (nx - 1.0);
        const int nb = p.n == 2 ? nx : 1;
        for (int b = 0; b < nb; ++b) {
            if (p.n == 2) x[1] = -3.0 * p.r + 6.0 * p.r * b / (nx - 1.0);
            for (int jt = 1; jt <= nt; ++jt) {
                const double t = lo_t + (hi_t - lo_t) * jt / double(nt);
                mn = std::min(mn, barrier_psi(std::span<const double>(x, std::size_t(p.n)), t, p, p.variant));
            }
        }
    }
    return mn;
}

} // namespace

SearchResult parameter_search(double sigma, int n, const LatticeSpec& lat, const VerifyConfig& cfg) {
    if (!(sigma > 0.25 && sigma < 2.0))
        throw std::invalid_argument("parameter_search: sigma outside the supported range (0.25, 2)");

    // coarse search lattice, same geometry
    const double h_coarse = std::max(lat.h_x, 1.0 / 32.0);
    const LatticeSpec coarse = LatticeSpec::make(n, h_coarse, std::max(lat.h_t, 1.0 / 32.0), lat.extent,
                                                 lat.t0, lat.t1, sigma);

    SearchResult res;
    res.best_residual = -std::numeric_limits<double>::infinity();

    const double seed_alpha = double(n) / sigma;
    const double gammas[] = {24.0, 16.0, 32.0, 8.0, 48.0};
    const double alphas[] = {0.1, 0.15, seed_alpha, 0.25, 0.05};
    const double betas[] = {0.1, 0.5};
    const double r0 = 1.0 / (9.0 * std::sqrt(double(n)));

    for (double gamma : gammas) {
        for (double alpha : alphas) {
            for (double beta : betas) {
                BarrierParams p;
                p.sigma = sigma;
                p.n = n;
                p.variant = PsiVariant::delta;
                p.r = r0;
                p.tau = r0 / 8.0;
                p.gamma = gamma;
                p.delta = std::min(0.9, 1.0 / (gamma * sigma));
                p.alpha = alpha;
                p.beta = beta;
                p.zeta = boundary_level(p);
                p.A = ramp_slope(p);
                const double mn = kplus_min_psi(p);
                ++res.evaluated;
                if (!(mn > 0.0)) continue;
                p.c = (cfg.kplus_threshold + 0.05 * cfg.kplus_threshold) / mn;

                const BarrierReport rep = verify_subsolution(p, coarse, cfg);
                const double normalized = rep.min_subsolution_residual / rep.scale;
                if (normalized > res.best_residual) {
                    res.best_residual = normalized;
                    res.params = p;
                    res.report = rep;
                }
                if (rep.pass()) {
                    const BarrierReport fine = verify_subsolution(p, lat, cfg);
                    res.params = p;
                    res.report = fine;
                    if (fine.pass()) {
                        res.found = true;
                        res.best_residual = fine.min_subsolution_residual / fine.scale;
                        return res;
                    }
                }
            }
        }
    }
    return res;
}

double sigma_star_search(int n, double h_x, const VerifyConfig& cfg, double lo, double hi, int iters) {
    const LatticeSpec lat = LatticeSpec::make(n, h_x, h_x, 2.0, 0.0, 1.0, 1.5);
    auto passes = [&](double sigma) {
        const LatticeSpec l = LatticeSpec::make(n, h_x, h_x, 2.0, 0.0, 1.0, sigma);
        SearchResult r = parameter_search(sigma, n, l, cfg);
        return r.found;
    };
    (void)lat;
    if (!passes(hi)) return 2.0; // not found below 2 at this resolution
    for (int i = 0; i < iters; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (passes(mid))
            hi = mid;
        else
            lo = mid;
    }
    return hi;
}

std::string BarrierReport::to_json() const {
    nlohmann::json j;
    j["min_subsolution_residual"] = min_subsolution_residual;
    j["min_on_Kplus"] = min_on_Kplus;
    j["max_on_parabolic_complement"] = max_on_parabolic_complement;
    j["bump_required"] = bump_required;
    j["scale"] = scale;
    j["region_scale"] = region_scale;
    j["min_residual_over_region_scale"] = min_subsolution_residual / region_scale;
    j["seam_nodes_excluded"] = seam_nodes_excluded;
    j["residual_pass"] = residual_pass;
    j["kplus_pass"] = kplus_pass;
    j["boundary_pass"] = boundary_pass;
    j["pass"] = pass();
    return j.dump(2);
}

std::string SearchResult::to_json() const {
    nlohmann::json j;
    j["found"] = found;
    j["evaluated"] = evaluated;
    j["best_residual"] = best_residual;
    j["params"] = {{"alpha", params.alpha}, {"beta", params.beta},   {"gamma", params.gamma},
                   {"zeta", params.zeta},   {"A", params.A},         {"delta", params.delta},
                   {"c", params.c},         {"r", params.r},         {"tau", params.tau},
                   {"sigma", params.sigma}, {"n", params.n}};
    j["report"] = nlohmann::json::parse(report.to_json());
    return j.dump(2);
}

} // namespace nplab::barriers
