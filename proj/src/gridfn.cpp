#include "nplab/gridfn.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace nplab::gridfn {

ScalarField constant_field(double c) {
    return [c](std::span<const double>, double) { return c; };
}

LatticeSpec LatticeSpec::make(int n, double h_x, double h_t, double extent, double t0, double t1, double sigma) {
    if (n != 1 && n != 2) throw std::invalid_argument("LatticeSpec: n must be 1 or 2");
    if (!(h_x > 0.0) || !(h_t > 0.0)) throw std::invalid_argument("LatticeSpec: steps must be positive");
    if (!(extent >= 2.0)) throw std::invalid_argument("LatticeSpec: extent must be >= 2 (covers Q_2)");
    if (!(t1 >= t0)) throw std::invalid_argument("LatticeSpec: t1 must be >= t0");
    if (!(sigma > 0.0 && sigma < 2.0)) throw std::invalid_argument("LatticeSpec: sigma must lie in (0,2)");

    LatticeSpec lat;
    lat.n = n;
    lat.h_x = h_x;
    lat.h_t = h_t;
    lat.extent = extent;
    lat.t0 = t0;
    lat.t1 = t1;
    lat.sigma = sigma;

    const double nxf = 2.0 * extent / h_x;
    lat.nx_ = int(std::lround(nxf));
    if (std::fabs(nxf - lat.nx_) > 1e-9)
        throw std::invalid_argument("LatticeSpec: 2*extent must be an integer multiple of h_x");
    const double ntf = (t1 - t0) / h_t;
    lat.nt_ = int(std::lround(ntf));
    if (lat.nt_ < 0 || std::fabs(ntf - lat.nt_) > 1e-9 * std::max(1.0, ntf))
        throw std::invalid_argument("LatticeSpec: (t1-t0) must be an integer multiple of h_t");

    const double nodes = std::pow(double(lat.nx_ + 1), n) * (lat.nt_ + 1);
    if (nodes > 2.5e8) throw std::invalid_argument("LatticeSpec: node count beyond the desk-scale cap");
    return lat;
}

int LatticeSpec::nodes_per_slice() const {
    int m = nx_ + 1;
    return n == 1 ? m : m * m;
}

int LatticeSpec::node_index(std::span<const int> ix) const {
    return n == 1 ? ix[0] : ix[0] * (nx_ + 1) + ix[1];
}

void LatticeSpec::node_coords(int flat, double* out) const {
    if (n == 1) {
        out[0] = node_coord(flat);
    } else {
        out[0] = node_coord(flat / (nx_ + 1));
        out[1] = node_coord(flat % (nx_ + 1));
    }
}

int LatticeSpec::snap_node(std::span<const double> x) const {
    int flat = 0;
    for (int d = 0; d < n; ++d) {
        const double fi = (x[d] + extent) / h_x;
        const int i = int(std::lround(fi));
        if (i < 0 || i > nx_ || std::fabs(fi - i) > 1e-9) return -1;
        flat = flat * (nx_ + 1) + i;
    }
    return flat;
}

int LatticeSpec::snap_slice(double t) const {
    const double fj = (t - t0) / h_t;
    const int j = int(std::lround(fj));
    if (j < 0 || j > nt_ || std::fabs(fj - j) > 1e-9) return -1;
    return j;
}

bool LatticeSpec::same_geometry(const LatticeSpec& o) const {
    return n == o.n && h_x == o.h_x && h_t == o.h_t && extent == o.extent && t0 == o.t0 && t1 == o.t1;
}

GridFunction::GridFunction(LatticeSpec lat, std::vector<double> values, ScalarField exterior, double exterior_bound)
    : lat_(lat), values_(std::move(values)), exterior_(std::move(exterior)), exterior_bound_(exterior_bound) {
    if (values_.size() != std::size_t(lat_.nodes_per_slice()) * lat_.num_slices())
        throw std::invalid_argument("GridFunction: value array size mismatch");
    if (!exterior_) exterior_ = constant_field(0.0);
}

std::span<const double> GridFunction::slice(int j) const {
    return std::span<const double>(values_.data() + std::size_t(j) * lat_.nodes_per_slice(),
                                   lat_.nodes_per_slice());
}

double GridFunction::value_on_slice(std::span<const double> x, int slice_j) const {
    const double t = lat_.slice_time(slice_j);
    for (int d = 0; d < lat_.n; ++d)
        if (x[d] < -lat_.extent - 1e-12 || x[d] > lat_.extent + 1e-12) return exterior_(x, t);

    const auto vals = slice(slice_j);
    const int m = lat_.nodes_per_dim();
    // multilinear interpolation (exact at nodes)
    double w[2][2];
    int i0[2];
    for (int d = 0; d < lat_.n; ++d) {
        double fi = (x[d] + lat_.extent) / lat_.h_x;
        fi = std::min(std::max(fi, 0.0), double(m - 1));
        int i = int(fi);
        if (i >= m - 1) i = m - 2;
        double frac = fi - i;
        if (frac < 1e-12) frac = 0.0;
        if (frac > 1.0 - 1e-12) frac = 1.0;
        i0[d] = i;
        w[d][0] = 1.0 - frac;
        w[d][1] = frac;
    }
    if (lat_.n == 1) {
        if (m == 1) return vals[0];
        return w[0][0] * vals[i0[0]] + w[0][1] * vals[i0[0] + 1];
    }
    double acc = 0.0;
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
            acc += w[0][a] * w[1][b] * vals[(i0[0] + a) * m + i0[1] + b];
    return acc;
}

double GridFunction::scale() const {
    double s = 1.0;
    for (double v : values_) s = std::max(s, std::fabs(v));
    return s;
}

GridFunction sample(const ScalarField& f, const LatticeSpec& lat, double exterior_bound) {
    std::vector<double> vals(std::size_t(lat.nodes_per_slice()) * lat.num_slices());
    double xs[2];
    std::size_t k = 0;
    for (int j = 0; j < lat.num_slices(); ++j) {
        const double t = lat.slice_time(j);
        for (int node = 0; node < lat.nodes_per_slice(); ++node, ++k) {
            lat.node_coords(node, xs);
            const double v = f(std::span<const double>(xs, std::size_t(lat.n)), t);
            if (!std::isfinite(v)) {
                std::ostringstream os;
                os << "sample: non-finite value at node (";
                for (int d = 0; d < lat.n; ++d) os << (d ? "," : "") << xs[d];
                os << "), t=" << t;
                throw std::runtime_error(os.str());
            }
            vals[k] = v;
        }
    }
    return GridFunction(lat, std::move(vals), f, exterior_bound);
}

std::vector<int> slices_in_region(const LatticeSpec& lat, const ParabolicCube& region) {
    std::vector<int> out;
    const double lo = region.time_lo(), hi = region.time_hi();
    const double tol = 1e-12 * std::max({1.0, std::fabs(lo), std::fabs(hi)});
    for (int j = 0; j < lat.num_slices(); ++j) {
        const double t = lat.slice_time(j);
        if (t > lo + tol && t <= hi + tol) out.push_back(j);
    }
    return out;
}

std::vector<int> nodes_in_region(const LatticeSpec& lat, const ParabolicCube& region, int slice) {
    std::vector<int> out;
    double xs[2];
    const double t = lat.slice_time(slice);
    for (int node = 0; node < lat.nodes_per_slice(); ++node) {
        lat.node_coords(node, xs);
        if (region.contains(std::span<const double>(xs, std::size_t(lat.n)), t)) out.push_back(node);
    }
    return out;
}

namespace {

template <class Fn>
void for_region(const GridFunction& u, const ParabolicCube& region, Fn&& fn) {
    const auto& lat = u.lattice();
    for (int j : slices_in_region(lat, region))
        for (int node : nodes_in_region(lat, region, j)) fn(j, node, u.at(j, node));
}

} // namespace

double oscillation(const GridFunction& u, const ParabolicCube& region) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for_region(u, region, [&](int, int, double v) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    });
    if (!(hi >= lo)) throw std::runtime_error("oscillation: region does not intersect the lattice");
    return hi - lo;
}

double level_set_measure(const GridFunction& u, double s, const ParabolicCube& region, LevelSetMode mode) {
    std::size_t count = 0;
    for_region(u, region, [&](int, int, double v) {
        if (mode == LevelSetMode::above ? (v > s) : (v <= s)) ++count;
    });
    const auto& lat = u.lattice();
    return double(count) * std::pow(lat.h_x, lat.n) * lat.h_t;
}

ExtremumResult extremum(const GridFunction& u, const ParabolicCube& region, Extremum which) {
    ExtremumResult res;
    bool found = false;
    for_region(u, region, [&](int j, int node, double v) {
        const bool better = !found || (which == Extremum::sup ? v > res.value : v < res.value);
        if (better) {
            res.value = v;
            res.slice = j;
            res.node = node;
            found = true;
        }
    });
    if (!found) throw std::runtime_error("extremum: region does not intersect the lattice");
    res.where.x.assign(u.lattice().n, 0.0);
    u.lattice().node_coords(res.node, res.where.x.data());
    res.where.t = u.lattice().slice_time(res.slice);
    return res;
}

void GridFunction::write_csv(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("write_csv: cannot open " + path);
    os.precision(17);
    os << (lat_.n == 1 ? "x1,t,value\n" : "x1,x2,t,value\n");
    double xs[2];
    for (int j = 0; j < lat_.num_slices(); ++j)
        for (int node = 0; node < lat_.nodes_per_slice(); ++node) {
            lat_.node_coords(node, xs);
            for (int d = 0; d < lat_.n; ++d) os << xs[d] << ",";
            os << lat_.slice_time(j) << "," << at(j, node) << "\n";
        }
}

namespace {
constexpr char kMagic[8] = {'N', 'P', 'G', 'R', 'I', 'D', '0', '1'};
}

void GridFunction::write_binary(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("write_binary: cannot open " + path);
    os.write(kMagic, 8);
    const std::int32_t n = lat_.n, nx = lat_.nodes_per_dim(), nt = lat_.num_slices();
    const double hdr[5] = {lat_.h_x, lat_.h_t, lat_.sigma, lat_.extent, lat_.t0};
    os.write(reinterpret_cast<const char*>(&n), 4);
    os.write(reinterpret_cast<const char*>(&nx), 4);
    os.write(reinterpret_cast<const char*>(&nt), 4);
    os.write(reinterpret_cast<const char*>(hdr), sizeof hdr);
    os.write(reinterpret_cast<const char*>(values_.data()), values_.size() * sizeof(double));
}

GridFunction GridFunction::read_binary(const std::string& path, ScalarField exterior, double exterior_bound) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("read_binary: cannot open " + path);
    char magic[8];
    is.read(magic, 8);
    if (std::memcmp(magic, kMagic, 8) != 0) throw std::runtime_error("read_binary: bad magic in " + path);
    std::int32_t n, nx, nt;
    double hdr[5];
    is.read(reinterpret_cast<char*>(&n), 4);
    is.read(reinterpret_cast<char*>(&nx), 4);
    is.read(reinterpret_cast<char*>(&nt), 4);
    is.read(reinterpret_cast<char*>(hdr), sizeof hdr);
    const auto lat = LatticeSpec::make(n, hdr[0], hdr[1], hdr[3], hdr[4], hdr[4] + (nt - 1) * hdr[1], hdr[2]);
    std::vector<double> vals(std::size_t(lat.nodes_per_slice()) * lat.num_slices());
    is.read(reinterpret_cast<char*>(vals.data()), vals.size() * sizeof(double));
    if (!is) throw std::runtime_error("read_binary: truncated file " + path);
    return GridFunction(lat, std::move(vals), std::move(exterior), exterior_bound);
}

} // namespace nplab::gridfn
