#include "nplab/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace nplab::evolution {

using nonlocal::PucciSign;
using nonlocal::SliceView;

namespace {

LatticeSpec spatial_lattice(const EvolutionProblem& prob, double t0, double t1, double h_t) {
    return LatticeSpec::make(prob.n, prob.h_x, h_t, prob.extent, t0, t1, prob.sigma);
}

bool inside_domain(const EvolutionProblem& prob, const double* x) {
    if (prob.domain_is_ball) {
        double r2 = 0.0;
        for (int d = 0; d < prob.n; ++d) r2 += x[d] * x[d];
        return std::sqrt(r2) < prob.domain_radius - 1e-12;
    }
    for (int d = 0; d < prob.n; ++d)
        if (std::fabs(x[d]) >= prob.domain_radius - 1e-12) return false;
    return true;
}

double op_value(const OperatorTables& T, const SliceView& v, std::span<const int> ix) {
    switch (T.op) {
        case OperatorKind::linear:
            return nonlocal::linear_apply_at(v, T.tables[0], ix);
        case OperatorKind::pucci_plus:
            return nonlocal::pucci_apply_at(v, T.tables[0], T.tables[1], ix, PucciSign::plus);
        case OperatorKind::pucci_minus:
            return nonlocal::pucci_apply_at(v, T.tables[0], T.tables[1], ix, PucciSign::minus);
        case OperatorKind::infsup: {
            double inf = std::numeric_limits<double>::infinity();
            for (int r = 0; r < T.family_rows; ++r) {
                double sup = -std::numeric_limits<double>::infinity();
                for (int c = 0; c < T.family_cols; ++c)
                    sup = std::max(sup, nonlocal::linear_apply_at(v, T.tables[r * T.family_cols + c], ix));
                inf = std::min(inf, sup);
            }
            return inf;
        }
    }
    return 0.0;
}

} // namespace

double OperatorTables::cfl_mass() const {
    double w = 0.0;
    for (const auto& t : tables) w = std::max(w, t.cfl_mass());
    return w;
}

OperatorTables build_operator_tables(const EvolutionProblem& prob) {
    OperatorTables T;
    T.op = prob.op;
    const auto lat = spatial_lattice(prob, 0.0, 0.0, 1.0);
    auto table_for = [&](const KernelSpec& K) {
        if (prob.table_cache_dir.empty()) return kernels::build_weight_table(K, lat, prob.R_out);
        return kernels::cached_weight_table(K, lat, prob.R_out, prob.table_cache_dir, prob.rebuild_tables);
    };
    switch (prob.op) {
        case OperatorKind::linear: {
            const KernelSpec K =
                prob.kernel ? *prob.kernel : kernels::extremal_kernel(prob.sigma, prob.lambda, prob.n);
            T.tables.push_back(table_for(K));
            break;
        }
        case OperatorKind::pucci_plus:
        case OperatorKind::pucci_minus: {
            T.tables.push_back(table_for(kernels::extremal_kernel(prob.sigma, prob.lambda, prob.n)));
            T.tables.push_back(table_for(kernels::extremal_kernel(prob.sigma, prob.Lambda, prob.n)));
            break;
        }
        case OperatorKind::infsup: {
            if (prob.family.empty() || prob.family.front().empty())
                throw std::invalid_argument("build_operator_tables: empty inf-sup family");
            T.family_rows = int(prob.family.size());
            T.family_cols = int(prob.family.front().size());
            for (const auto& row : prob.family) {
                if (int(row.size()) != T.family_cols)
                    throw std::invalid_argument("build_operator_tables: ragged inf-sup family");
                for (const auto& K : row) T.tables.push_back(table_for(K));
            }
            break;
        }
    }
    return T;
}

double cfl_timestep(const OperatorTables& tables, double cfl_safety) {
    if (!(cfl_safety > 0.0 && cfl_safety < 1.0))
        throw std::invalid_argument("cfl_timestep: cfl_safety must lie in (0,1)");
    const double W = tables.cfl_mass();
    if (!(W > 0.0)) throw std::invalid_argument("cfl_timestep: zero weight mass");
    return cfl_safety / W;
}

GridFunction step(const GridFunction& u, const EvolutionProblem& prob, const OperatorTables& tables, double dt,
                  StepDiagnostics* diag) {
    const auto& lat = u.lattice();
    const int last = lat.num_slices() - 1;
    const double t_now = lat.slice_time(last);
    const double t_new = t_now + dt;
    const SliceView v = SliceView::of(u, last);

    const auto out_lat = LatticeSpec::make(lat.n, lat.h_x, dt, lat.extent, t_new, t_new, lat.sigma);
    std::vector<double> out(lat.nodes_per_slice());

    const int m = lat.nodes_per_dim();
    double xs[2];
    int ix[2] = {0, 0};
    double max_op = 0.0;
    for (int node = 0; node < lat.nodes_per_slice(); ++node) {
        lat.node_coords(node, xs);
        ix[0] = lat.n == 1 ? node : node / m;
        ix[1] = lat.n == 1 ? 0 : node % m;
        double val;
        if (inside_domain(prob, xs)) {
            const double op = op_value(tables, v, std::span<const int>(ix, 2));
            const double f =
                prob.forcing ? prob.forcing(std::span<const double>(xs, std::size_t(lat.n)), t_now) : 0.0;
            val = u.at(last, node) + dt * (op + f);
            max_op = std::max(max_op, std::fabs(op));
        } else {
            val = prob.exterior ? prob.exterior(std::span<const double>(xs, std::size_t(lat.n)), t_new) : 0.0;
        }
        if (!std::isfinite(val)) {
            std::ostringstream os;
            os << "step: non-finite value produced at node " << node << " (";
            for (int d = 0; d < lat.n; ++d) os << (d ? "," : "") << xs[d];
            os << "), t=" << t_new;
            throw std::runtime_error(os.str());
        }
        out[node] = val;
    }
    if (diag) {
        diag->max_op = max_op;
        diag->cfl_margin = 1.0 - dt * tables.cfl_mass();
    }
    return GridFunction(out_lat, std::move(out), u.exterior(), u.exterior_bound());
}

Trajectory solve(const EvolutionProblem& prob) {
    if (!(prob.horizon > 0.0)) throw std::invalid_argument("solve: horizon must be positive");
    const OperatorTables tables = build_operator_tables(prob);
    const double dt_max = cfl_timestep(tables, prob.cfl_safety);
    const int stride = std::max(1, prob.store_stride);
    long steps = long(std::ceil(prob.horizon / dt_max));
    steps = ((steps + stride - 1) / stride) * stride;
    const double dt = prob.horizon / double(steps);

    const ScalarField phi = prob.exterior ? prob.exterior : gridfn::constant_field(0.0);
    const auto full_lat = spatial_lattice(prob, 0.0, prob.horizon, dt * stride);

    std::vector<double> all(std::size_t(full_lat.num_slices()) * full_lat.nodes_per_slice());
    std::vector<StepDiagnostics> diags;
    diags.reserve(steps);

    // initial slice: g inside Omega, phi outside
    const auto lat0 = LatticeSpec::make(prob.n, prob.h_x, 1.0, prob.extent, 0.0, 0.0, prob.sigma);
    std::vector<double> vals0(lat0.nodes_per_slice());
    double xs[2];
    for (int node = 0; node < lat0.nodes_per_slice(); ++node) {
        lat0.node_coords(node, xs);
        const std::span<const double> x(xs, std::size_t(prob.n));
        vals0[node] = inside_domain(prob, xs) ? (prob.initial ? prob.initial(x, 0.0) : 0.0) : phi(x, 0.0);
        if (!std::isfinite(vals0[node])) throw std::runtime_error("solve: non-finite initial data");
    }
    GridFunction state(lat0, vals0, phi, 1.0);
    std::copy(vals0.begin(), vals0.end(), all.begin());

    int stored = 1;
    for (long s = 1; s <= steps; ++s) {
        StepDiagnostics d;
        state = step(state, prob, tables, dt, &d);
        diags.push_back(d);
        if (s % stride == 0) {
            std::copy(state.values().begin(), state.values().end(),
                      all.begin() + std::size_t(stored) * full_lat.nodes_per_slice());
            ++stored;
        }
    }
    if (stored != full_lat.num_slices()) throw std::logic_error("solve: snapshot bookkeeping mismatch");

    Trajectory traj{GridFunction(full_lat, std::move(all), phi, 1.0), dt, std::move(diags)};
    return traj;
}

} // namespace nplab::evolution
