#include "nplab/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "json.hpp"

#include "nplab/envelope.hpp"

namespace nplab::estimators {

using geometry::CubeVariant;
using gridfn::LatticeSpec;

namespace {

struct LineFit {
    double slope = 0.0, intercept = 0.0, r2 = 0.0;
    int points = 0;
};

LineFit least_squares(const std::vector<double>& xs, const std::vector<double>& ys) {
    LineFit f;
    f.points = int(xs.size());
    if (f.points < 2) return f;
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (int i = 0; i < f.points; ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
        syy += ys[i] * ys[i];
    }
    const double nn = f.points;
    const double denom = nn * sxx - sx * sx;
    if (std::fabs(denom) < 1e-300) return f;
    f.slope = (nn * sxy - sx * sy) / denom;
    f.intercept = (sy - f.slope * sx) / nn;
    const double sst = syy - sy * sy / nn;
    double sse = 0.0;
    for (int i = 0; i < f.points; ++i) {
        const double e = ys[i] - (f.intercept + f.slope * xs[i]);
        sse += e * e;
    }
    f.r2 = sst > 1e-300 ? 1.0 - sse / sst : 1.0;
    return f;
}

} // namespace

DecayFit decay_fit(const GridFunction& u, const ParabolicCube& region, const std::vector<double>& s_grid) {
    for (std::size_t i = 0; i < s_grid.size(); ++i) {
        if (!(s_grid[i] > 0.0)) throw std::invalid_argument("decay_fit: thresholds must be positive");
        if (i > 0 && !(s_grid[i] > s_grid[i - 1]))
            throw std::invalid_argument("decay_fit: thresholds must be increasing");
    }
    const auto mn = gridfn::extremum(u, region, gridfn::Extremum::inf);
    if (mn.value < -1e-9 * u.scale()) throw std::invalid_argument("decay_fit: u must be nonnegative");

    DecayFit fit;
    fit.s_grid = s_grid;
    const double vol = region.measure();
    std::vector<double> lx, ly;
    for (double s : s_grid) {
        const double m = gridfn::level_set_measure(u, s, region, gridfn::LevelSetMode::above);
        fit.measures.push_back(m);
        if (m > 0.0) {
            lx.push_back(std::log(s));
            ly.push_back(std::log(m / vol));
        }
    }
    if (lx.size() < 2) {
        fit.degenerate = true;
        return fit;
    }
    const LineFit lf = least_squares(lx, ly);
    fit.eps_star_fit = -lf.slope;
    fit.C_fit = std::exp(lf.intercept);
    fit.r_squared = lf.r2;
    return fit;
}

WeakHarnackResult weak_harnack_check(const GridFunction& u, const Point& center, double r, double c0, double C,
                                     double eps_star, const std::vector<double>& s_grid) {
    const auto& lat = u.lattice();
    const double rs = std::pow(r, lat.sigma);
    geometry::Point anchor = center;
    anchor.t += rs;
    const ParabolicCube cube(anchor, r, lat.sigma, CubeVariant::Q); // B_r(x0) x (t0, t0 + r^s]

    const int node = lat.snap_node(std::span<const double>(center.x.data(), center.x.size()));
    const int slice = lat.snap_slice(center.t);
    if (node < 0 || slice < 0) throw std::invalid_argument("weak_harnack_check: center is not a lattice node");
    const double u0 = u.at(slice, node);

    WeakHarnackResult res;
    res.worst_margin = std::numeric_limits<double>::infinity();
    for (double s : s_grid) {
        const double lhs = gridfn::level_set_measure(u, s, cube, gridfn::LevelSetMode::above);
        const double rhs =
            C * std::pow(r, lat.n + lat.sigma) * std::pow(u0 + c0 * rs, eps_star) * std::pow(s, -eps_star);
        res.lhs.push_back(lhs);
        res.rhs.push_back(rhs);
        const double margin = rhs > 0.0 ? (rhs - lhs) / rhs : (lhs > 0.0 ? -1.0 : 1.0);
        res.worst_margin = std::min(res.worst_margin, margin);
        if (lhs > rhs) res.pass = false;
    }
    return res;
}

double harnack_quotient(const GridFunction& u, double c0) {
    const auto& lat = u.lattice();
    const ParabolicCube qminus = geometry::cube_Q_minus(0.5, lat.sigma, lat.n, 0.0);
    const ParabolicCube qplus = geometry::cube_Q_plus(0.5, lat.sigma, lat.n, 0.0);
    if (qplus.time_hi() > lat.t1 + 1e-12)
        throw std::invalid_argument("harnack_quotient: trajectory does not cover rQ+_{1/2}");
    const double sup = gridfn::extremum(u, qminus, gridfn::Extremum::sup).value;
    const double inf = gridfn::extremum(u, qplus, gridfn::Extremum::inf).value;
    const double denom = inf + c0;
    if (!(denom > 0.0)) throw std::invalid_argument("harnack_quotient: inf + c0 must be positive");
    return sup / denom;
}

HolderFit holder_fit(const GridFunction& u, const Point& point, int levels, int N, double r0, double alpha_cap) {
    const auto& lat = u.lattice();
    HolderFit fit;
    std::vector<double> ks, losc;
    for (int k = 0; k < levels; ++k) {
        const double r = r0 * std::pow(2.0, -double(k) * N);
        if (r < 2.0 * lat.h_x) break;
        const ParabolicCube cube(point, r, lat.sigma, CubeVariant::bQ);
        if (cube.time_lo() < lat.t0 - 1e-12 || cube.time_hi() > lat.t1 + 1e-12) break;
        const double osc = gridfn::oscillation(u, cube);
        fit.scales.push_back(r);
        fit.oscillations.push_back(osc);
        if (osc > 0.0) {
            ks.push_back(double(k));
            losc.push_back(std::log2(osc));
        }
    }
    if (fit.oscillations.size() < 3) throw std::runtime_error("holder_fit: fewer than 3 usable scales");
    for (std::size_t i = 0; i + 1 < fit.oscillations.size(); ++i)
        fit.ratios.push_back(fit.oscillations[i] > 0.0 ? fit.oscillations[i + 1] / fit.oscillations[i] : 0.0);
    if (ks.size() < 2) {
        fit.exact = true;
        fit.alpha_fit = alpha_cap;
        return fit;
    }
    const LineFit lf = least_squares(ks, losc);
    fit.alpha_fit = -lf.slope / double(N);
    fit.r_squared = lf.r2;
    return fit;
}

C1AlphaResult c1alpha_fit(const GridFunction& u, kernels::KernelClass tag, const std::vector<double>& h_list,
                          const Point& point, int levels, double r0) {
    C1AlphaResult res;
    if (tag != kernels::KernelClass::L1) {
        res.reason = "kernel class is L0 only; the smoothness condition is unavailable";
        return res;
    }
    const auto& lat = u.lattice();
    bool all_exact = true;
    for (double h : h_list) {
        const int shift = int(std::lround(h / lat.h_x));
        if (shift == 0 || std::fabs(shift * lat.h_x - h) > 1e-9)
            throw std::invalid_argument("c1alpha_fit: h must be a nonzero lattice multiple");
        if (std::fabs(h) > 0.25 * lat.extent)
            throw std::invalid_argument("c1alpha_fit: h too large for the margin");
        // u^h = (tau_h u - u)/|h|, shift along the first axis
        std::vector<double> vals(u.values().size());
        const int m = lat.nodes_per_dim();
        double xs[2];
        for (int j = 0; j < lat.num_slices(); ++j) {
            const double t = lat.slice_time(j);
            for (int node = 0; node < lat.nodes_per_slice(); ++node) {
                const int a = lat.n == 1 ? node : node / m;
                const int b = lat.n == 1 ? 0 : node % m;
                const int as = a + shift;
                double shifted;
                if (as >= 0 && as < m) {
                    shifted = u.at(j, lat.n == 1 ? as : as * m + b);
                } else {
                    lat.node_coords(node, xs);
                    double xq[2] = {xs[0] + h, lat.n == 2 ? xs[1] : 0.0};
                    shifted = u.exterior()(std::span<const double>(xq, std::size_t(lat.n)), t);
                }
                vals[std::size_t(j) * lat.nodes_per_slice() + node] = (shifted - u.at(j, node)) / std::fabs(h);
            }
        }
        const auto ext = u.exterior();
        gridfn::ScalarField qext = [ext, h](std::span<const double> x, double t) {
            double xq[2] = {x[0] + h, x.size() == 2 ? x[1] : 0.0};
            return (ext(std::span<const double>(xq, x.size()), t) - ext(x, t)) / std::fabs(h);
        };
        const GridFunction uh(lat, std::move(vals), qext, 2.0 * u.exterior_bound() / std::fabs(h));
        const HolderFit hf = holder_fit(uh, point, levels, 1, r0);
        res.per_h.push_back(hf.alpha_fit);
        all_exact = all_exact && hf.exact;
    }
    res.available = true;
    res.exact = all_exact;
    std::vector<double> sorted = res.per_h;
    std::sort(sorted.begin(), sorted.end());
    res.exponent = sorted[sorted.size() / 2];
    return res;
}

ParaboloidMasks paraboloid_classify(const GridFunction& u, double aperture, const ParabolicCube& k1,
                                    const ParabolicCube& domain) {
    if (!(aperture > 0.0)) throw std::invalid_argument("paraboloid_classify: aperture must be positive");
    const auto& lat = u.lattice();
    ParaboloidMasks masks{k1, aperture, {}, {}, 0, 0, std::pow(lat.h_x, lat.n) * lat.h_t};
    masks.slices = gridfn::slices_in_region(lat, k1);
    const int nps = lat.nodes_per_slice();
    masks.good.assign(masks.slices.size() * std::size_t(nps), 0);

    const auto domain_slices = gridfn::slices_in_region(lat, domain);
    if (domain_slices.empty()) throw std::invalid_argument("paraboloid_classify: domain misses the lattice");

    const int m = lat.nodes_per_dim();
    const double hw = domain.spatial_halfwidth();
    const bool ball = domain.is_ball();
    double xs[2];

    // spatial membership of the domain (time handled per slice)
    std::vector<int> dom_nodes;
    std::vector<std::uint8_t> dom_mask(nps, 0);
    for (int node = 0; node < nps; ++node) {
        lat.node_coords(node, xs);
        double r2 = 0.0;
        bool in = true;
        for (int d = 0; d < lat.n; ++d) {
            const double dx = xs[d] - domain.anchor().x[d];
            r2 += dx * dx;
            if (!ball && std::fabs(dx) >= hw - 1e-12) in = false;
        }
        if (ball && !(std::sqrt(r2) < hw - 1e-12)) in = false;
        if (in) {
            dom_nodes.push_back(node);
            dom_mask[node] = 1;
        }
    }
    if (dom_nodes.empty()) throw std::invalid_argument("paraboloid_classify: domain misses the lattice");

    const double tol = 1e-9 * std::max(1.0, u.scale() + aperture);

    // time-running min of u + h (t0 - t), formed per t0
    std::vector<double> runmin(nps, std::numeric_limits<double>::infinity());
    for (std::size_t sp = 0; sp < masks.slices.size(); ++sp) {
        const int j0 = masks.slices[sp];
        const double t0 = lat.slice_time(j0);
        // m(x) = min_{t <= t0} [u(x,t) + h (t0 - t)] over domain slices
        std::fill(runmin.begin(), runmin.end(), std::numeric_limits<double>::infinity());
        for (int j : domain_slices) {
            const double t = lat.slice_time(j);
            if (t > t0 + 1e-14) break;
            const double shift = aperture * (t0 - t);
            for (int node : dom_nodes) runmin[node] = std::min(runmin[node], u.at(j, node) + shift);
        }

        // lift by h/2 |x|^2 and take the lower convex envelope over the domain
        std::vector<double> lifted(nps, 0.0);
        for (int node : dom_nodes) {
            lat.node_coords(node, xs);
            double q = 0.0;
            for (int d = 0; d < lat.n; ++d) q += xs[d] * xs[d];
            lifted[node] = runmin[node] + 0.5 * aperture * q;
        }

        std::vector<double> conv(nps, 0.0);
        if (lat.n == 1) {
            std::vector<double> pos, neg;
            for (int node : dom_nodes) {
                pos.push_back(lat.node_coord(node));
                neg.push_back(-lifted[node]);
            }
            const auto hull = envelope::least_concave_majorant_1d(pos, neg);
            for (std::size_t i = 0; i < hull.size(); ++i) conv[dom_nodes[i]] = -hull[i];
        } else {
            std::vector<double> g(nps);
            for (int node = 0; node < nps; ++node) g[node] = dom_mask[node] ? -lifted[node] : 0.0;
            envelope::midpoint_concavify_2d(g, dom_mask, dom_mask, m, 1e-13 * std::max(1.0, u.scale()));
            for (int node : dom_nodes) conv[node] = -g[node];
        }

        for (int node : gridfn::nodes_in_region(lat, k1, j0)) {
            if (!dom_mask[node]) continue;
            const double center_val = u.at(j0, node);
            lat.node_coords(node, xs);
            double q = 0.0;
            for (int d = 0; d < lat.n; ++d) q += xs[d] * xs[d];
            const double lifted_center = center_val + 0.5 * aperture * q;
            // membership: running min attained at t0 and hull contact at x0
            const bool attained = lifted[node] >= lifted_center - tol;
            const bool contact = lifted[node] - conv[node] <= tol;
            if (attained && contact) {
                masks.good[sp * std::size_t(nps) + node] = 1;
                ++masks.good_count;
            } else {
                ++masks.bad_count;
            }
        }
    }
    return masks;
}

double bad_set_measure(const GridFunction& u, double aperture, const ParabolicCube& region,
                       const ParabolicCube& domain) {
    const ParaboloidMasks masks = paraboloid_classify(u, aperture, region, domain);
    return masks.bad_measure();
}

std::string DecayFit::to_json() const {
    nlohmann::json j;
    j["s_grid"] = s_grid;
    j["measures"] = measures;
    j["C_fit"] = C_fit;
    j["eps_star_fit"] = eps_star_fit;
    j["r_squared"] = r_squared;
    j["degenerate"] = degenerate;
    return j.dump(2);
}

std::string HolderFit::to_json() const {
    nlohmann::json j;
    j["alpha_fit"] = alpha_fit;
    j["exact"] = exact;
    j["scales"] = scales;
    j["oscillations"] = oscillations;
    j["ratios"] = ratios;
    j["r_squared"] = r_squared;
    return j.dump(2);
}

std::string C1AlphaResult::to_json() const {
    nlohmann::json j;
    j["available"] = available;
    j["reason"] = reason;
    j["exponent"] = exponent;
    j["exact"] = exact;
    j["per_h"] = per_h;
    return j.dump(2);
}

std::string RegularityReport::to_json() const {
    nlohmann::json j;
    j["alpha_fit"] = alpha_fit;
    if (c1alpha)
        j["c1alpha"] = *c1alpha;
    else
        j["c1alpha"] = nullptr;
    j["harnack_quotient"] = harnack_quotient;
    j["weak_harnack_pass"] = weak_harnack_pass;
    j["decay_C"] = decay_C;
    j["decay_eps_star"] = decay_eps_star;
    j["decay_r2"] = decay_r2;
    return j.dump(2);
}

} // namespace nplab::estimators
