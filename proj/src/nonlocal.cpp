#include "nplab/nonlocal.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace nplab::nonlocal {

SliceView SliceView::of(const GridFunction& u, int slice) {
    SliceView v;
    v.lat = &u.lattice();
    v.vals = u.slice(slice);
    v.exterior = &u.exterior();
    v.t = u.lattice().slice_time(slice);
    return v;
}

namespace {

// u at lattice index offset (may fall outside the box -> exterior evaluator).
inline double value_at_offset(const SliceView& u, const int* ix, int j1, int j2) {
    const auto& lat = *u.lat;
    const int m = lat.nodes_per_dim();
    if (lat.n == 1) {
        const int i = ix[0] + j1;
        if (i >= 0 && i < m) return u.vals[i];
        double x[1] = {lat.node_coord(i)};
        return (*u.exterior)(std::span<const double>(x, 1), u.t);
    }
    const int a = ix[0] + j1, b = ix[1] + j2;
    if (a >= 0 && a < m && b >= 0 && b < m) return u.vals[a * m + b];
    double x[2] = {lat.node_coord(a), lat.node_coord(b)};
    return (*u.exterior)(std::span<const double>(x, 2), u.t);
}

// u at a physical offset from the node (tail samples; interpolated in-box).
inline double value_at_physical(const SliceView& u, const double* xnode, double y1, double y2) {
    const auto& lat = *u.lat;
    double x[2] = {xnode[0] + y1, xnode[1] + y2};
    for (int d = 0; d < lat.n; ++d)
        if (x[d] < -lat.extent - 1e-12 || x[d] > lat.extent + 1e-12)
            return (*u.exterior)(std::span<const double>(x, std::size_t(lat.n)), u.t);
    // multilinear interpolation on the slice
    const int m = lat.nodes_per_dim();
    double wgt[2][2] = {{1.0, 0.0}, {1.0, 0.0}};
    int i0[2] = {0, 0};
    for (int d = 0; d < lat.n; ++d) {
        double fi = (x[d] + lat.extent) / lat.h_x;
        fi = std::min(std::max(fi, 0.0), double(m - 1));
        int i = int(fi);
        if (i >= m - 1) i = m - 2;
        double frac = fi - i;
        i0[d] = i;
        wgt[d][0] = 1.0 - frac;
        wgt[d][1] = frac;
    }
    if (lat.n == 1) return wgt[0][0] * u.vals[i0[0]] + wgt[0][1] * u.vals[i0[0] + 1];
    double acc = 0.0;
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) acc += wgt[0][a] * wgt[1][b] * u.vals[(i0[0] + a) * m + i0[1] + b];
    return acc;
}

// cplus/cminus weights per quadrature node (linear: both equal the table's w).
struct SplitWeights {
    const WeightTable* plus;
    const WeightTable* minus;
};

double apply_split(const SliceView& u, const SplitWeights& sw, std::span<const int> ix) {
    const auto& lat = *u.lat;
    const WeightTable& P = *sw.plus;
    const WeightTable& M = *sw.minus;
    const int n = lat.n;
    const int m = lat.nodes_per_dim();
    const double uc = n == 1 ? u.vals[ix[0]] : u.vals[ix[0] * m + ix[1]];
    double xnode[2] = {lat.node_coord(ix[0]), n == 2 ? lat.node_coord(ix[1]) : 0.0};

    double acc = 0.0;
    const std::size_t no = P.offsets.size();
    for (std::size_t j = 0; j < no; ++j) {
        const int j1 = P.offsets[j][0], j2 = P.offsets[j][1];
        const double up = value_at_offset(u, ix.data(), j1, j2);
        const double um = value_at_offset(u, ix.data(), -j1, -j2);
        const double mu = (up + um) - 2.0 * uc;
        const double mup = mu > 0.0 ? mu : 0.0;
        const double mum = mu < 0.0 ? -mu : 0.0;
        acc += P.w[j] * mup - M.w[j] * mum;
    }
    // origin-cell correction via nearest-neighbor second differences
    for (int d = 0; d < n; ++d) {
        const double up = value_at_offset(u, ix.data(), d == 0 ? 1 : 0, d == 1 ? 1 : 0);
        const double um = value_at_offset(u, ix.data(), d == 0 ? -1 : 0, d == 1 ? -1 : 0);
        const double mu = (up + um) - 2.0 * uc;
        const double mup = mu > 0.0 ? mu : 0.0;
        const double mum = mu < 0.0 ? -mu : 0.0;
        acc += P.near_origin_coeff * mup - M.near_origin_coeff * mum;
    }
    // exterior tail on the geometric radial grid
    const std::size_t ntail = P.tail_offsets.size();
    for (std::size_t j = 0; j < ntail; ++j) {
        const double y1 = P.tail_offsets[j][0], y2 = P.tail_offsets[j][1];
        const double up = value_at_physical(u, xnode, y1, y2);
        const double um = value_at_physical(u, xnode, -y1, -y2);
        const double mu = (up + um) - 2.0 * uc;
        const double mup = mu > 0.0 ? mu : 0.0;
        const double mum = mu < 0.0 ? -mu : 0.0;
        acc += P.tail_w[j] * mup - M.tail_w[j] * mum;
    }
    return acc;
}

void check_compatible(const SliceView& u, const WeightTable& T) {
    if (T.n != u.lat->n || std::fabs(T.h_x - u.lat->h_x) > 1e-12)
        throw std::invalid_argument("weight table does not match the grid function's lattice");
}

OperatorField apply_all(const GridFunction& u, const SplitWeights& sw, std::string name, std::uint64_t hash) {
    OperatorField F;
    F.lat = u.lattice();
    F.op_name = std::move(name);
    F.kernel_hash = hash;
    const int ns = F.lat.num_slices(), nps = F.lat.nodes_per_slice(), m = F.lat.nodes_per_dim();
    F.slices.resize(ns);
    for (int j = 0; j < ns; ++j) F.slices[j] = j;
    F.values.resize(std::size_t(ns) * nps);
    int ix[2];
    for (int j = 0; j < ns; ++j) {
        const SliceView v = SliceView::of(u, j);
        for (int node = 0; node < nps; ++node) {
            ix[0] = F.lat.n == 1 ? node : node / m;
            ix[1] = F.lat.n == 1 ? 0 : node % m;
            F.values[std::size_t(j) * nps + node] = apply_split(v, sw, std::span<const int>(ix, 2));
        }
    }
    return F;
}

} // namespace

double second_difference(const GridFunction& u, int slice, std::span<const int> ix, std::span<const double> y) {
    const auto& lat = u.lattice();
    const SliceView v = SliceView::of(u, slice);
    // lattice-aligned offsets resolve exactly; otherwise go through physical sampling
    const double f1 = y[0] / lat.h_x;
    const double f2 = lat.n == 2 ? y[1] / lat.h_x : 0.0;
    const int j1 = int(std::lround(f1)), j2 = int(std::lround(f2));
    const int m = lat.nodes_per_dim();
    const double uc = lat.n == 1 ? v.vals[ix[0]] : v.vals[ix[0] * m + ix[1]];
    if (std::fabs(f1 - j1) < 1e-9 && std::fabs(f2 - j2) < 1e-9) {
        return value_at_offset(v, ix.data(), j1, j2) + value_at_offset(v, ix.data(), -j1, -j2) - 2.0 * uc;
    }
    double xnode[2] = {lat.node_coord(ix[0]), lat.n == 2 ? lat.node_coord(ix[1]) : 0.0};
    return value_at_physical(v, xnode, y[0], lat.n == 2 ? y[1] : 0.0) +
           value_at_physical(v, xnode, -y[0], lat.n == 2 ? -y[1] : 0.0) - 2.0 * uc;
}

double mu_plus(const GridFunction& u, int slice, std::span<const int> ix, std::span<const double> y) {
    return std::max(second_difference(u, slice, ix, y), 0.0);
}

double mu_minus(const GridFunction& u, int slice, std::span<const int> ix, std::span<const double> y) {
    return std::max(-second_difference(u, slice, ix, y), 0.0);
}

double linear_apply_at(const SliceView& u, const WeightTable& T, std::span<const int> ix) {
    return apply_split(u, SplitWeights{&T, &T}, ix);
}

double pucci_apply_at(const SliceView& u, const WeightTable& lambda_table, const WeightTable& Lambda_table,
                      std::span<const int> ix, PucciSign sign) {
    if (lambda_table.offsets.size() != Lambda_table.offsets.size() ||
        lambda_table.tail_offsets.size() != Lambda_table.tail_offsets.size())
        throw std::invalid_argument("pucci_apply: extremal tables must share the quadrature layout");
    const SplitWeights sw = sign == PucciSign::plus ? SplitWeights{&Lambda_table, &lambda_table}
                                                    : SplitWeights{&lambda_table, &Lambda_table};
    return apply_split(u, sw, ix);
}

OperatorField linear_apply(const GridFunction& u, const WeightTable& T) {
    check_compatible(SliceView::of(u, 0), T);
    return apply_all(u, SplitWeights{&T, &T}, "L", T.kernel_hash);
}

OperatorField pucci_apply(const GridFunction& u, const WeightTable& lambda_table, const WeightTable& Lambda_table,
                          PucciSign sign) {
    check_compatible(SliceView::of(u, 0), lambda_table);
    check_compatible(SliceView::of(u, 0), Lambda_table);
    const SplitWeights sw = sign == PucciSign::plus ? SplitWeights{&Lambda_table, &lambda_table}
                                                    : SplitWeights{&lambda_table, &Lambda_table};
    return apply_all(u, sw, sign == PucciSign::plus ? "M+" : "M-", Lambda_table.kernel_hash);
}

double infsup_apply_at(const SliceView& u, const std::vector<std::vector<WeightTable>>& family,
                       std::span<const int> ix) {
    if (family.empty() || family.front().empty()) throw std::invalid_argument("infsup_apply: empty family");
    double inf = std::numeric_limits<double>::infinity();
    for (const auto& row : family) {
        double sup = -std::numeric_limits<double>::infinity();
        for (const auto& T : row) sup = std::max(sup, linear_apply_at(u, T, ix));
        inf = std::min(inf, sup);
    }
    return inf;
}

OperatorField infsup_apply(const GridFunction& u, const std::vector<std::vector<WeightTable>>& family) {
    if (family.empty() || family.front().empty()) throw std::invalid_argument("infsup_apply: empty family");
    for (const auto& row : family)
        for (const auto& T : row) check_compatible(SliceView::of(u, 0), T);
    OperatorField F;
    F.lat = u.lattice();
    F.op_name = "I";
    F.kernel_hash = family.front().front().kernel_hash;
    const int ns = F.lat.num_slices(), nps = F.lat.nodes_per_slice(), m = F.lat.nodes_per_dim();
    F.slices.resize(ns);
    for (int j = 0; j < ns; ++j) F.slices[j] = j;
    F.values.resize(std::size_t(ns) * nps);
    int ix[2];
    for (int j = 0; j < ns; ++j) {
        const SliceView v = SliceView::of(u, j);
        for (int node = 0; node < nps; ++node) {
            ix[0] = F.lat.n == 1 ? node : node / m;
            ix[1] = F.lat.n == 1 ? 0 : node % m;
            F.values[std::size_t(j) * nps + node] = infsup_apply_at(v, family, std::span<const int>(ix, 2));
        }
    }
    return F;
}

ExtremalTables make_extremal_tables(double sigma, double lambda, double Lambda, const LatticeSpec& lat,
                                    double R_out, kernels::TailPolicy tail) {
    ExtremalTables T{kernels::build_weight_table(kernels::extremal_kernel(sigma, lambda, lat.n), lat, R_out, tail),
                     kernels::build_weight_table(kernels::extremal_kernel(sigma, Lambda, lat.n), lat, R_out, tail)};
    return T;
}

void OperatorField::write_csv(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("OperatorField::write_csv: cannot open " + path);
    os.precision(17);
    os << "# operator=" << op_name << "\n# kernel_hash=" << kernel_hash << "\n";
    os << (lat.n == 1 ? "x1,t,value\n" : "x1,x2,t,value\n");
    double xs[2];
    for (std::size_t sp = 0; sp < slices.size(); ++sp)
        for (int node = 0; node < lat.nodes_per_slice(); ++node) {
            lat.node_coords(node, xs);
            for (int d = 0; d < lat.n; ++d) os << xs[d] << ",";
            os << lat.slice_time(slices[sp]) << "," << at(int(sp), node) << "\n";
        }
}

} // namespace nplab::nonlocal
