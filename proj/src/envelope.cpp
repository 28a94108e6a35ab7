#include "nplab/envelope.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "nplab/nonlocal.hpp"

namespace nplab::envelope {

using geometry::CubeVariant;
using geometry::Point;
using geometry::cube_Q;

GridFunction sup_convolution(const GridFunction& u, double eps) {
    if (!(eps >= 0.0)) throw std::invalid_argument("sup_convolution: eps must be nonnegative");
    const auto& lat = u.lattice();
    std::vector<double> out(u.values().size());
    const int m = lat.nodes_per_dim();
    const int wx = int(std::ceil(eps / lat.h_x)) + 1;
    const int wt = int(std::ceil(eps * eps / lat.h_t)) + 1;

    double xs[2], ys[2];
    for (int j = 0; j < lat.num_slices(); ++j) {
        for (int node = 0; node < lat.nodes_per_slice(); ++node) {
            lat.node_coords(node, xs);
            double best = -std::numeric_limits<double>::infinity();
            for (int js = j; js <= std::min(j + wt, lat.num_slices() - 1); ++js) {
                const double ds = lat.slice_time(js) - lat.slice_time(j);
                if (ds > eps * eps) break;
                const int i0 = lat.n == 1 ? node : node / m;
                const int i1 = lat.n == 1 ? 0 : node % m;
                for (int a = std::max(0, i0 - wx); a <= std::min(m - 1, i0 + wx); ++a) {
                    const int b_lo = lat.n == 1 ? 0 : std::max(0, i1 - wx);
                    const int b_hi = lat.n == 1 ? 0 : std::min(m - 1, i1 + wx);
                    for (int b = b_lo; b <= b_hi; ++b) {
                        ys[0] = lat.node_coord(a);
                        ys[1] = lat.n == 2 ? lat.node_coord(b) : 0.0;
                        double d2 = ds;
                        for (int d = 0; d < lat.n; ++d) d2 += (xs[d] - ys[d]) * (xs[d] - ys[d]);
                        if (d2 > eps * eps) continue;
                        const int ynode = lat.n == 1 ? a : a * m + b;
                        best = std::max(best, u.at(js, ynode) + std::sqrt(eps * eps - d2));
                    }
                }
            }
            out[std::size_t(j) * lat.nodes_per_slice() + node] = best;
        }
    }
    return GridFunction(lat, std::move(out), u.exterior(), u.exterior_bound() + eps);
}

// Least concave majorant of (pos_i, val_i); evaluated back at the positions.
// Monotone-chain upper hull, exact in 1-D.
std::vector<double> least_concave_majorant_1d(const std::vector<double>& pos, const std::vector<double>& val) {
    const int k = int(pos.size());
    std::vector<int> hull;
    for (int i = 0; i < k; ++i) {
        while (hull.size() >= 2) {
            const int a = hull[hull.size() - 2], b = hull[hull.size() - 1];
            const double cross = (pos[b] - pos[a]) * (val[i] - val[a]) - (val[b] - val[a]) * (pos[i] - pos[a]);
            if (cross >= 0.0)
                hull.pop_back();
            else
                break;
        }
        hull.push_back(i);
    }
    std::vector<double> out(k);
    std::size_t seg = 0;
    for (int i = 0; i < k; ++i) {
        while (seg + 1 < hull.size() && pos[hull[seg + 1]] < pos[i]) ++seg;
        const int a = hull[seg];
        const int b = seg + 1 < hull.size() ? hull[seg + 1] : a;
        if (a == b || pos[b] == pos[a]) {
            out[i] = val[a];
        } else {
            const double th = (pos[i] - pos[a]) / (pos[b] - pos[a]);
            out[i] = val[a] + th * (val[b] - val[a]);
        }
    }
    return out;
}

namespace {

struct BallWindow {
    int lo = 0, hi = -1;                 // per-dim index window
    std::vector<std::uint8_t> in_ball;   // over window nodes
    std::vector<std::uint8_t> in_collar; // zero-boundary collar just outside the ball
};

BallWindow ball_window(const gridfn::LatticeSpec& lat, const Point& center, double radius) {
    BallWindow w;
    const int m = lat.nodes_per_dim();
    w.lo = std::max(0, int(std::floor((center.x[0] - radius - 2 * lat.h_x + lat.extent) / lat.h_x)));
    w.hi = std::min(m - 1, int(std::ceil((center.x[0] + radius + 2 * lat.h_x + lat.extent) / lat.h_x)));
    const int side = w.hi - w.lo + 1;
    const int count = lat.n == 1 ? side : side * side;
    w.in_ball.assign(count, 0);
    w.in_collar.assign(count, 0);
    for (int p = 0; p < count; ++p) {
        const int a = lat.n == 1 ? p : p / side;
        const int b = lat.n == 1 ? 0 : p % side;
        double dx = lat.node_coord(w.lo + a) - center.x[0];
        double r2 = dx * dx;
        if (lat.n == 2) {
            const double dy = lat.node_coord(w.lo + b) - center.x[1];
            r2 += dy * dy;
        }
        const double r = std::sqrt(r2);
        if (r < radius - 1e-12)
            w.in_ball[p] = 1;
        else if (r < radius + 2.5 * lat.h_x)
            w.in_collar[p] = 1;
    }
    return w;
}

} // namespace

void midpoint_concavify_2d(std::vector<double>& g, const std::vector<std::uint8_t>& domain_mask,
                           const std::vector<std::uint8_t>& support_mask, int side, double tol) {
    for (int sweep = 0; sweep < 400; ++sweep) {
        double change = 0.0;
        for (int a = 0; a < side; ++a)
            for (int b = 0; b < side; ++b) {
                const int p = a * side + b;
                if (!domain_mask[p]) continue;
                double best = g[p];
                const int amax = std::min(a, side - 1 - a);
                const int bmax = std::min(b, side - 1 - b);
                for (int da = -amax; da <= amax; ++da)
                    for (int db = (da > 0 ? -bmax : 1); db <= bmax; ++db) {
                        const int q1 = (a + da) * side + (b + db);
                        const int q2 = (a - da) * side + (b - db);
                        if (!support_mask[q1] || !support_mask[q2]) continue;
                        best = std::max(best, 0.5 * (g[q1] + g[q2]));
                    }
                change = std::max(change, best - g[p]);
                g[p] = best;
            }
        if (change <= tol) break;
    }
}

int EnvelopeResult::pos_of_slice(int lattice_slice) const {
    for (std::size_t i = 0; i < slices.size(); ++i)
        if (slices[i] == lattice_slice) return int(i);
    return -1;
}

double EnvelopeResult::gamma_at(int slice_pos, int node) const {
    return gamma[std::size_t(slice_pos) * lat.nodes_per_slice() + node];
}

EnvelopeResult concave_envelope(const GridFunction& u, const ParabolicCube& domain, double contact_tol_rel) {
    if (domain.variant() != CubeVariant::Q)
        throw std::invalid_argument("concave_envelope: domain must be a past ball cube (variant Q)");
    const auto& lat = u.lattice();
    const Point& c = domain.anchor();
    const double r = domain.r();

    // precondition: u <= 0 on partial*_p Q_{r/2}, checked on lattice nodes
    {
        const ParabolicCube half = cube_Q(r / 2.0, domain.sigma(), c);
        std::ostringstream bad;
        int nbad = 0;
        double xs[2];
        const double t_lo = half.time_lo(), t_hi = half.time_hi();
        for (int j = 0; j < lat.num_slices(); ++j) {
            const double t = lat.slice_time(j);
            const bool bottom = std::fabs(t - t_lo) <= 1e-12 * std::max(1.0, std::fabs(t_lo));
            const bool in_time = t > t_lo && t <= t_hi + 1e-12;
            if (!bottom && !in_time) continue;
            for (int node = 0; node < lat.nodes_per_slice(); ++node) {
                lat.node_coords(node, xs);
                double r2 = 0.0;
                for (int d = 0; d < lat.n; ++d) r2 += (xs[d] - c.x[d]) * (xs[d] - c.x[d]);
                const bool outside_ball = std::sqrt(r2) >= r / 2.0 - 1e-12;
                if ((bottom || outside_ball) && u.at(j, node) > 1e-12 * u.scale()) {
                    if (++nbad <= 8) bad << " (slice " << j << ", node " << node << ")";
                }
            }
        }
        if (nbad > 0)
            throw std::invalid_argument("concave_envelope: u > 0 on partial*_p of the half cube at " +
                                        std::to_string(nbad) + " nodes:" + bad.str());
    }

    EnvelopeResult env{lat, domain, cube_Q(2.0 * r, domain.sigma(), c), {}, {}, {}, {}, {}, {},
                       contact_tol_rel * u.scale()};
    env.slices = gridfn::slices_in_region(lat, env.envelope_cube);
    if (env.slices.empty()) throw std::runtime_error("concave_envelope: envelope cube misses the lattice");

    const int nps = lat.nodes_per_slice();
    const int m = lat.nodes_per_dim();
    const std::size_t total = env.slices.size() * std::size_t(nps);
    env.gamma.assign(total, 0.0);
    env.contact.assign(total, 0);
    env.dt_gamma.assign(total, 0.0);
    env.hess_det_minus.assign(total, 0.0);
    env.slope.assign(total * lat.n, 0.0);

    const BallWindow w = ball_window(lat, c, 2.0 * r);
    const int side = w.hi - w.lo + 1;
    const int wcount = lat.n == 1 ? side : side * side;

    // running max of u^+ in time, then per-slice hull
    std::vector<double> run(wcount, 0.0);
    const double hull_tol = 1e-13 * u.scale();
    for (std::size_t sp = 0; sp < env.slices.size(); ++sp) {
        const int j = env.slices[sp];
        for (int p = 0; p < wcount; ++p) {
            if (!w.in_ball[p]) continue;
            const int a = lat.n == 1 ? p : p / side;
            const int b = lat.n == 1 ? 0 : p % side;
            const int node = lat.n == 1 ? (w.lo + a) : (w.lo + a) * m + (w.lo + b);
            run[p] = std::max(run[p], std::max(u.at(j, node), 0.0));
        }
        std::vector<double> g(wcount, 0.0);
        if (lat.n == 1) {
            std::vector<double> pos, val;
            std::vector<int> idx;
            pos.push_back(c.x[0] - 2.0 * r);
            val.push_back(0.0);
            idx.push_back(-1);
            for (int p = 0; p < wcount; ++p)
                if (w.in_ball[p]) {
                    pos.push_back(lat.node_coord(w.lo + p));
                    val.push_back(run[p]);
                    idx.push_back(p);
                }
            pos.push_back(c.x[0] + 2.0 * r);
            val.push_back(0.0);
            idx.push_back(-1);
            const auto hull = least_concave_majorant_1d(pos, val);
            for (std::size_t i = 0; i < hull.size(); ++i)
                if (idx[i] >= 0) g[idx[i]] = hull[i];
        } else {
            for (int p = 0; p < wcount; ++p) g[p] = w.in_ball[p] ? run[p] : 0.0;
            std::vector<std::uint8_t> support(wcount);
            for (int p = 0; p < wcount; ++p) support[p] = w.in_ball[p] || w.in_collar[p];
            midpoint_concavify_2d(g, w.in_ball, support, side, hull_tol);
        }
        for (int p = 0; p < wcount; ++p) {
            if (!w.in_ball[p]) continue;
            const int a = lat.n == 1 ? p : p / side;
            const int b = lat.n == 1 ? 0 : p % side;
            const int node = lat.n == 1 ? (w.lo + a) : (w.lo + a) * m + (w.lo + b);
            env.gamma[sp * std::size_t(nps) + node] = g[p];
        }
    }

    // derived fields: backward dt, centered space, det(D^2)^- on the concave branch
    auto gam = [&](std::size_t sp, int node) { return env.gamma[sp * std::size_t(nps) + node]; };
    double xs[2];
    for (std::size_t sp = 0; sp < env.slices.size(); ++sp) {
        const int j = env.slices[sp];
        const double t = lat.slice_time(j);
        for (int node = 0; node < nps; ++node) {
            const std::size_t at = sp * std::size_t(nps) + node;
            env.dt_gamma[at] = sp == 0 ? gam(sp, node) / lat.h_t : (gam(sp, node) - gam(sp - 1, node)) / lat.h_t;
            const int a = lat.n == 1 ? node : node / m;
            const int b = lat.n == 1 ? 0 : node % m;
            if (a > 0 && a < m - 1) {
                if (lat.n == 1) {
                    const double gxx = (gam(sp, a + 1) - 2.0 * gam(sp, a) + gam(sp, a - 1)) / (lat.h_x * lat.h_x);
                    env.hess_det_minus[at] = std::max(-gxx, 0.0);
                    env.slope[at] = (gam(sp, a + 1) - gam(sp, a - 1)) / (2.0 * lat.h_x);
                } else if (b > 0 && b < m - 1) {
                    const double h2 = lat.h_x * lat.h_x;
                    const double g11 =
                        (gam(sp, (a + 1) * m + b) - 2.0 * gam(sp, node) + gam(sp, (a - 1) * m + b)) / h2;
                    const double g22 =
                        (gam(sp, a * m + b + 1) - 2.0 * gam(sp, node) + gam(sp, a * m + b - 1)) / h2;
                    const double g12 = (gam(sp, (a + 1) * m + b + 1) - gam(sp, (a + 1) * m + b - 1) -
                                        gam(sp, (a - 1) * m + b + 1) + gam(sp, (a - 1) * m + b - 1)) /
                                       (4.0 * h2);
                    const double tr = g11 + g22;
                    const double disc = std::sqrt(std::max(0.25 * (g11 - g22) * (g11 - g22) + g12 * g12, 0.0));
                    const double l1 = 0.5 * tr + disc, l2 = 0.5 * tr - disc;
                    env.hess_det_minus[at] = std::max(-l1, 0.0) * std::max(-l2, 0.0);
                    env.slope[at * 2] = (gam(sp, (a + 1) * m + b) - gam(sp, (a - 1) * m + b)) / (2.0 * lat.h_x);
                    env.slope[at * 2 + 1] = (gam(sp, a * m + b + 1) - gam(sp, a * m + b - 1)) / (2.0 * lat.h_x);
                }
            }
            lat.node_coords(node, xs);
            if (domain.contains(std::span<const double>(xs, std::size_t(lat.n)), t))
                env.contact[at] = gam(sp, node) - u.at(j, node) <= env.contact_tol ? 1 : 0;
        }
    }
    return env;
}

double normal_map_measure(const EnvelopeResult& env, const ParabolicCube& region) {
    const auto& lat = env.lat;
    const double cell = std::pow(lat.h_x, lat.n) * lat.h_t;
    double total = 0.0;
    for (std::size_t sp = 0; sp < env.slices.size(); ++sp) {
        const int j = env.slices[sp];
        for (int node : gridfn::nodes_in_region(lat, region, j)) {
            const std::size_t at = sp * std::size_t(lat.nodes_per_slice()) + node;
            total += env.dt_gamma[at] * env.hess_det_minus[at] * cell;
        }
    }
    return total;
}

AbpReport abp_diagnostics(const GridFunction& u, const GridFunction& f, const EnvelopeResult& env,
                          const AbpConfig& cfg) {
    const auto& lat = u.lattice();
    AbpReport rep;
    const auto sup_u = gridfn::extremum(u, env.domain, gridfn::Extremum::sup);
    rep.sup_u_plus = std::max(sup_u.value, 0.0);
    rep.normal_map_total = normal_map_measure(env, env.domain);
    rep.tso_ratio =
        rep.normal_map_total > 0.0 ? std::pow(rep.sup_u_plus, lat.n + 1) / rep.normal_map_total : -1.0;
    rep.f_sup = std::max(gridfn::extremum(f, env.domain, gridfn::Extremum::sup).value, 0.0);

    const int nps = lat.nodes_per_slice();
    for (std::size_t sp = 0; sp < env.slices.size(); ++sp)
        for (int node : gridfn::nodes_in_region(lat, env.domain, env.slices[sp]))
            rep.gamma_t_sup = std::max(rep.gamma_t_sup, env.dt_gamma[sp * std::size_t(nps) + node]);
    rep.gamma_t_over_f = rep.f_sup > 0.0 ? rep.gamma_t_sup / rep.f_sup : -1.0;

    // contact sign check: mu(u,x,y,t) <= tol for every stencil offset
    const int m = lat.nodes_per_dim();
    const int jmax = int(std::floor(cfg.R_stencil / lat.h_x + 1e-9));
    std::vector<std::pair<int, int>> contact_nodes; // (slice_pos, node)
    for (std::size_t sp = 0; sp < env.slices.size(); ++sp)
        for (int node = 0; node < nps; ++node)
            if (env.contact[sp * std::size_t(nps) + node]) contact_nodes.emplace_back(int(sp), node);
    rep.contact_count = int(contact_nodes.size());
    rep.contact_empty = contact_nodes.empty();

    int ix[2];
    for (const auto& [sp, node] : contact_nodes) {
        ix[0] = lat.n == 1 ? node : node / m;
        ix[1] = lat.n == 1 ? 0 : node % m;
        for (int j1 = lat.n == 1 ? 1 : 0; j1 <= jmax; ++j1) {
            for (int j2 = lat.n == 1 ? 0 : -jmax; j2 <= (lat.n == 1 ? 0 : jmax); ++j2) {
                if (lat.n == 2 && j1 == 0 && j2 <= 0) continue;
                double y[2] = {j1 * lat.h_x, j2 * lat.h_x};
                if (std::hypot(y[0], y[1]) > cfg.R_stencil + 1e-12) continue;
                const double mu = nonlocal::second_difference(u, env.slices[sp], std::span<const int>(ix, 2),
                                                              std::span<const double>(y, std::size_t(lat.n)));
                rep.contact_mu_max = std::max(rep.contact_mu_max, mu);
            }
        }
    }
    rep.contact_sign_ok = rep.contact_mu_max <= cfg.contact_mu_tol * u.scale();

    // ring diagnostics at a deterministic subset of contact nodes
    const std::size_t stride = std::max<std::size_t>(1, contact_nodes.size() / std::max(1, cfg.max_ring_points));
    for (std::size_t i = 0; i < contact_nodes.size() && int(rep.rings.size()) < cfg.max_ring_points; i += stride) {
        const auto [sp, node] = contact_nodes[i];
        const int j = env.slices[sp];
        RingDiagnostic ring;
        ring.node = node;
        ring.slice = j;
        ix[0] = lat.n == 1 ? node : node / m;
        ix[1] = lat.n == 1 ? 0 : node % m;
        const double fval = std::max(f.at(j, node), 0.0);
        ring.bound = cfg.C_fit * fval / cfg.ring_M;
        double rk = cfg.ring_rho * std::pow(2.0, -1.0 / (2.0 - lat.sigma));
        for (int k = 0; k < 40; ++k) {
            const double rk1 = rk / 2.0;
            if (rk1 < 2.0 * lat.h_x) break;
            int cnt = 0, bad = 0;
            const int span_j = int(rk / lat.h_x) + 1;
            for (int j1 = -span_j; j1 <= span_j; ++j1) {
                const int j2max = lat.n == 1 ? 0 : span_j;
                for (int j2 = -j2max; j2 <= j2max; ++j2) {
                    double y[2] = {j1 * lat.h_x, j2 * lat.h_x};
                    const double rr = std::hypot(y[0], y[1]);
                    if (rr <= rk1 || rr > rk || rr == 0.0) continue;
                    ++cnt;
                    const double mu = nonlocal::second_difference(u, j, std::span<const int>(ix, 2),
                                                                  std::span<const double>(y, std::size_t(lat.n)));
                    if (std::max(-mu, 0.0) >= cfg.ring_M * rk * rk) ++bad;
                }
            }
            ring.fractions.push_back(cnt > 0 ? double(bad) / double(cnt) : 0.0);
            if (ring.best_ring < 0 || ring.fractions.back() < ring.best_fraction) {
                ring.best_ring = k;
                ring.best_fraction = ring.fractions.back();
            }
            rk = rk1;
        }
        rep.rings.push_back(std::move(ring));
    }

    // dyadic space-time cube cover of the contact set, size-capped by
    // 2 rho0 2^{-1/(2-sigma)} (rho0 exposed through rho0_scale)
    const double cap = 2.0 * cfg.rho0_scale * cfg.ring_rho * std::pow(2.0, -1.0 / (2.0 - lat.sigma));
    struct Work {
        std::vector<double> center;
        double side;
    };
    std::vector<Work> queue;
    const double side0 = std::max(cap, 4.0 * lat.h_x);
    const double hw = env.domain.spatial_halfwidth();
    const double t_lo = env.domain.time_lo(), t_hi = env.domain.time_hi();
    const int nx_cells = std::max(1, int(std::ceil(2.0 * hw / side0)));
    const int nt_cells = std::max(1, int(std::ceil((t_hi - t_lo) / side0)));
    for (int a = 0; a < nx_cells; ++a)
        for (int b = 0; b < (lat.n == 2 ? nx_cells : 1); ++b)
            for (int c = 0; c < nt_cells; ++c) {
                Work wk;
                wk.center = {env.domain.anchor().x[0] - hw + (a + 0.5) * side0};
                if (lat.n == 2) wk.center.push_back(env.domain.anchor().x[1] - hw + (b + 0.5) * side0);
                wk.center.push_back(t_lo + (c + 0.5) * side0);
                wk.side = side0;
                queue.push_back(std::move(wk));
            }

    auto cube_stats = [&](const Work& wk, CoverCube& out) {
        out.center = wk.center;
        out.side = wk.side;
        const double cell = std::pow(lat.h_x, lat.n) * lat.h_t;
        double xsl[2];
        for (std::size_t sp = 0; sp < env.slices.size(); ++sp) {
            const int j = env.slices[sp];
            const double t = lat.slice_time(j);
            if (t <= wk.center[lat.n] - 0.5 * wk.side || t > wk.center[lat.n] + 0.5 * wk.side) continue;
            for (int node = 0; node < nps; ++node) {
                lat.node_coords(node, xsl);
                bool in = true;
                for (int d = 0; d < lat.n; ++d)
                    if (std::fabs(xsl[d] - wk.center[d]) > 0.5 * wk.side) in = false;
                if (!in) continue;
                const std::size_t at = sp * std::size_t(nps) + node;
                out.normal_map += env.dt_gamma[at] * env.hess_det_minus[at] * cell;
                if (env.contact[at]) {
                    out.contact_measure += cell;
                    out.f_sup = std::max(out.f_sup, f.at(j, node));
                }
            }
        }
        const double r = 0.5 * wk.side;
        out.xi_r = r * r * (out.f_sup + r * rep.f_sup);
        out.bound_ok = out.normal_map <=
                       cfg.C_fit * std::pow(out.f_sup + r * rep.f_sup, lat.n + 1) * out.contact_measure + 1e-14;
    };

    while (!queue.empty()) {
        const Work wk = queue.back();
        queue.pop_back();
        CoverCube cc;
        cube_stats(wk, cc);
        if (cc.contact_measure == 0.0) continue;
        if (!cc.bound_ok && wk.side > 4.0 * lat.h_x) {
            const double s2 = 0.5 * wk.side;
            const int children = 1 << (lat.n + 1);
            for (int mask = 0; mask < children; ++mask) {
                Work child;
                child.side = s2;
                for (int d = 0; d <= lat.n; ++d)
                    child.center.push_back(wk.center[d] + ((mask >> d) & 1 ? 0.25 : -0.25) * wk.side);
                queue.push_back(std::move(child));
            }
            continue;
        }
        rep.cover.push_back(std::move(cc));
    }
    return rep;
}

std::string AbpReport::to_json() const {
    nlohmann::json j;
    j["sup_u_plus"] = sup_u_plus;
    j["normal_map_total"] = normal_map_total;
    j["tso_ratio"] = tso_ratio;
    j["gamma_t_sup"] = gamma_t_sup;
    j["f_sup"] = f_sup;
    j["gamma_t_over_f"] = gamma_t_over_f;
    j["contact_empty"] = contact_empty;
    j["contact_count"] = contact_count;
    j["contact_mu_max"] = contact_mu_max;
    j["contact_sign_ok"] = contact_sign_ok;
    j["rings"] = nlohmann::json::array();
    for (const auto& r : rings) {
        nlohmann::json jr;
        jr["node"] = r.node;
        jr["slice"] = r.slice;
        jr["fractions"] = r.fractions;
        jr["best_ring"] = r.best_ring;
        jr["best_fraction"] = r.best_fraction;
        jr["bound"] = r.bound;
        j["rings"].push_back(jr);
    }
    j["cover"] = nlohmann::json::array();
    for (const auto& c : cover) {
        nlohmann::json jc;
        jc["center"] = c.center;
        jc["side"] = c.side;
        jc["normal_map"] = c.normal_map;
        jc["contact_measure"] = c.contact_measure;
        jc["f_sup"] = c.f_sup;
        jc["xi_r"] = c.xi_r;
        jc["bound_ok"] = c.bound_ok;
        j["cover"].push_back(jc);
    }
    return j.dump(2);
}

} // namespace nplab::envelope
