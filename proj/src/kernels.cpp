#include "nplab/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace nplab::kernels {

namespace {

double norm2(std::span<const double> y) {
    double s = 0.0;
    for (double v : y) s += v * v;
    return std::sqrt(s);
}

// 3-point Gauss-Legendre nodes/weights on [-1,1]
constexpr double kG3x[3] = {-0.7745966692414834, 0.0, 0.7745966692414834};
constexpr double kG3w[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};

// Composite 3^n-point product Gauss rule over an axis-aligned cell split into
// panels^n subcells; panels = 1 is the plain rule.
double cell_integral_g3_panels(const KernelFn& k, int n, const double* lo, const double* hi, int panels);

// Integral of k over an axis-aligned cell, 3^n-point product Gauss rule.
double cell_integral_g3(const KernelFn& k, int n, const double* lo, const double* hi) {
    double acc = 0.0;
    double y[2];
    if (n == 1) {
        const double c = 0.5 * (lo[0] + hi[0]), h = 0.5 * (hi[0] - lo[0]);
        for (int i = 0; i < 3; ++i) {
            y[0] = c + h * kG3x[i];
            acc += kG3w[i] * k(std::span<const double>(y, 1));
        }
        return acc * h;
    }
    const double c0 = 0.5 * (lo[0] + hi[0]), h0 = 0.5 * (hi[0] - lo[0]);
    const double c1 = 0.5 * (lo[1] + hi[1]), h1 = 0.5 * (hi[1] - lo[1]);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            y[0] = c0 + h0 * kG3x[i];
            y[1] = c1 + h1 * kG3x[j];
            acc += kG3w[i] * kG3w[j] * k(std::span<const double>(y, 2));
        }
    return acc * h0 * h1;
}

double cell_integral_g3_panels(const KernelFn& k, int n, const double* lo, const double* hi, int panels) {
    if (panels <= 1) return cell_integral_g3(k, n, lo, hi);
    double acc = 0.0;
    double plo[2], phi[2];
    if (n == 1) {
        for (int i = 0; i < panels; ++i) {
            plo[0] = lo[0] + (hi[0] - lo[0]) * i / panels;
            phi[0] = lo[0] + (hi[0] - lo[0]) * (i + 1) / panels;
            acc += cell_integral_g3(k, 1, plo, phi);
        }
        return acc;
    }
    for (int i = 0; i < panels; ++i)
        for (int j = 0; j < panels; ++j) {
            plo[0] = lo[0] + (hi[0] - lo[0]) * i / panels;
            phi[0] = lo[0] + (hi[0] - lo[0]) * (i + 1) / panels;
            plo[1] = lo[1] + (hi[1] - lo[1]) * j / panels;
            phi[1] = lo[1] + (hi[1] - lo[1]) * (j + 1) / panels;
            acc += cell_integral_g3(k, 2, plo, phi);
        }
    return acc;
}

// Integral of y_1^2 k(y) over the origin cell (-a,a)^n by geometric shells.
// The integrand is O(|y|^{2-n-sigma}), so shell contributions decay
// geometrically toward the singularity.
double origin_second_moment(const KernelFn& k, int n, double a) {
    auto mom = [&](std::span<const double> y) {
        return y[0] * y[0] * k(y);
    };
    KernelFn momfn = mom;
    double total = 0.0;
    double outer = a;
    for (int shell = 0; shell < 200; ++shell) {
        const double inner = outer * 0.5;
        double contrib = 0.0;
        if (n == 1) {
            const double lo1[1] = {inner}, hi1[1] = {outer};
            const double lo2[1] = {-outer}, hi2[1] = {-inner};
            contrib = cell_integral_g3_panels(momfn, 1, lo1, hi1, 8) +
                      cell_integral_g3_panels(momfn, 1, lo2, hi2, 8);
        } else {
            // square annulus as 4 rectangles
            const double rects[4][4] = {
                {inner, -outer, outer, outer},   // right band
                {-outer, -outer, -inner, outer}, // left band
                {-inner, inner, inner, outer},   // top middle
                {-inner, -outer, inner, -inner}, // bottom middle
            };
            for (const auto& r : rects) {
                const double lor[2] = {r[0], r[1]}, hir[2] = {r[2], r[3]};
                contrib += cell_integral_g3_panels(momfn, 2, lor, hir, 4);
            }
        }
        total += contrib;
        if (shell > 4 && contrib < 1e-14 * std::max(total, 1e-300)) break;
        outer = inner;
    }
    return total;
}

} // namespace

std::uint64_t fnv1a(std::span<const unsigned char> bytes, std::uint64_t seed) {
    std::uint64_t h = seed;
    for (unsigned char b : bytes) {
        h ^= b;
        h *= 1099511628211ull;
    }
    return h;
}

std::uint64_t KernelSpec::hash() const {
    std::ostringstream os;
    os.precision(17);
    os << n << "|" << sigma << "|" << lambda << "|" << Lambda << "|" << label;
    const std::string s = os.str();
    return fnv1a(std::span<const unsigned char>(reinterpret_cast<const unsigned char*>(s.data()), s.size()));
}

KernelSpec extremal_kernel(double sigma, double c, int n) {
    if (!(sigma > 0.0 && sigma < 2.0)) throw std::invalid_argument("extremal_kernel: sigma must lie in (0,2)");
    if (!(c > 0.0)) throw std::invalid_argument("extremal_kernel: c must be positive");
    KernelSpec K;
    K.n = n;
    K.sigma = sigma;
    K.lambda = c;
    K.Lambda = c;
    K.tag = KernelClass::L1;
    K.eps1 = 0.25;
    K.label = "extremal(c=" + std::to_string(c) + ")";
    K.k = [sigma, c, n](std::span<const double> y) {
        return (2.0 - sigma) * c * std::pow(norm2(y), -double(n) - sigma);
    };
    return K;
}

BoundsReport validate_bounds(const KernelSpec& K, const std::vector<std::vector<double>>& samples) {
    BoundsReport rep;
    for (const auto& y : samples) {
        const double r = norm2(std::span<const double>(y.data(), y.size()));
        if (!(r > 0.0)) throw std::invalid_argument("validate_bounds: samples must be nonzero");
        const double base = (2.0 - K.sigma) * std::pow(r, -double(K.n) - K.sigma);
        const double lo = K.lambda * base, hi = K.Lambda * base;
        const double v = K.k(std::span<const double>(y.data(), y.size()));
        const double tol = 1e-12 * hi;
        if (v < lo - tol || v > hi + tol) {
            rep.pass = false;
            rep.violations.push_back({y, v, lo, hi});
        }
    }
    return rep;
}

double smoothness_seminorm(const KernelSpec& K, double eps1, const std::vector<std::vector<double>>& h_samples) {
    if (!(eps1 > 0.0)) throw std::invalid_argument("smoothness_seminorm: eps1 must be positive");
    for (const auto& h : h_samples)
        if (!(norm2(std::span<const double>(h.data(), h.size())) < eps1))
            throw std::invalid_argument("smoothness_seminorm: |h| must be < eps1");

    const double R0 = 2.0 * eps1;
    double worst = 0.0;
    for (const auto& h : h_samples) {
        const double habs = norm2(std::span<const double>(h.data(), h.size()));
        KernelFn diff = [&K, &h, habs](std::span<const double> y) {
            double ym[2];
            for (std::size_t d = 0; d < h.size(); ++d) ym[d] = y[d] - h[d];
            return std::fabs(K.k(y) - K.k(std::span<const double>(ym, h.size()))) / habs;
        };
        // geometric radial shells; integrand ~ |k'| ~ r^{-n-sigma-1} decays fast
        double total = 0.0;
        double inner = R0;
        bool converged = false;
        for (int shell = 0; shell < 400; ++shell) {
            const double outer = inner * 1.25;
            double contrib = 0.0;
            if (K.n == 1) {
                const int panels = 8;
                for (int s = 0; s < panels; ++s) {
                    const double a = inner + (outer - inner) * s / panels;
                    const double b = inner + (outer - inner) * (s + 1) / panels;
                    const double lo1[1] = {a}, hi1[1] = {b}, lo2[1] = {-b}, hi2[1] = {-a};
                    contrib += cell_integral_g3(diff, 1, lo1, hi1) + cell_integral_g3(diff, 1, lo2, hi2);
                }
            } else {
                const int nang = 48, nrad = 4;
                double y[2];
                for (int ir = 0; ir < nrad; ++ir) {
                    const double ra = inner + (outer - inner) * ir / nrad;
                    const double rb = inner + (outer - inner) * (ir + 1) / nrad;
                    const double rm = 0.5 * (ra + rb);
                    for (int ia = 0; ia < nang; ++ia) {
                        const double th = 2.0 * M_PI * (ia + 0.5) / nang;
                        y[0] = rm * std::cos(th);
                        y[1] = rm * std::sin(th);
                        contrib += diff(std::span<const double>(y, 2)) * rm * (rb - ra) * (2.0 * M_PI / nang);
                    }
                }
            }
            total += contrib;
            if (shell > 8 && contrib < 1e-10 * std::max(total, 1e-30)) {
                converged = true;
                break;
            }
            inner = outer;
        }
        if (!converged)
            throw std::runtime_error("smoothness_seminorm: tail quadrature did not converge within tolerance");
        worst = std::max(worst, total);
    }
    return worst;
}

double WeightTable::cfl_mass() const {
    double s = 0.0;
    for (double v : w) s += v;
    double t = 0.0;
    for (double v : tail_w) t += v;
    return 2.0 * s + 2.0 * n * near_origin_coeff + 2.0 * t;
}

WeightTable build_weight_table(const KernelSpec& K, const LatticeSpec& lat, double R_out, TailPolicy tail) {
    if (!(K.sigma > 0.0 && K.sigma < 2.0)) throw std::invalid_argument("build_weight_table: sigma out of range");
    if (K.n != lat.n) throw std::invalid_argument("build_weight_table: kernel/lattice dimension mismatch");
    if (!(R_out >= 2.0 * lat.h_x)) throw std::invalid_argument("build_weight_table: R_out must be >= 2 h_x");

    WeightTable T;
    T.n = lat.n;
    T.h_x = lat.h_x;
    T.R_out = R_out;
    T.sigma = K.sigma;
    T.kernel_hash = K.hash();

    const double h = lat.h_x;
    const int jmax = int(std::floor(R_out / h + 1e-9));
    const double cap = 4.0e7;
    if (lat.n == 2 && double(jmax) * jmax * 4 > cap)
        throw std::invalid_argument("build_weight_table: table size beyond the configured cap");

    // Cell weights match the second moment: w_j = 2 int_cell |y|^2 k / |y_j|^2.
    // Together with the origin-cell coefficient this makes the scheme exact on
    // global quadratics for radial kernels while keeping all weights
    // nonnegative (the mass convention would carry an O(h^{2-sigma}) moment
    // error that does not vanish as sigma -> 2).
    const KernelFn moment = [&K](std::span<const double> y) {
        double r2 = 0.0;
        for (double v : y) r2 += v * v;
        return r2 * K.k(y);
    };
    auto push_offset = [&](int j1, int j2) {
        double y[2] = {j1 * h, j2 * h};
        const double r = norm2(std::span<const double>(y, std::size_t(lat.n)));
        if (r > R_out + 1e-12) return;
        double lo[2] = {y[0] - 0.5 * h, y[1] - 0.5 * h};
        double hi[2] = {y[0] + 0.5 * h, y[1] + 0.5 * h};
        if (lat.n == 1) { // clip the outermost cell at the truncation radius
            lo[0] = std::max(lo[0], -R_out);
            hi[0] = std::min(hi[0], R_out);
        }
        const int panels = r <= 4.0 * h ? (lat.n == 1 ? 16 : 6) : 1;
        const double m2 = cell_integral_g3_panels(moment, lat.n, lo, hi, panels);
        T.offsets.push_back({j1, j2});
        T.w.push_back(2.0 * m2 / (r * r));
    };
    if (lat.n == 1) {
        for (int j = 1; j <= jmax; ++j) push_offset(j, 0);
    } else {
        for (int j1 = 0; j1 <= jmax; ++j1)
            for (int j2 = -jmax; j2 <= jmax; ++j2) {
                if (j1 == 0 && j2 <= 0) continue;
                push_offset(j1, j2);
            }
    }

    // origin-cell correction: exact on global quadratics
    T.near_origin_coeff = origin_second_moment(K.k, lat.n, 0.5 * h) / (h * h);

    if (tail == TailPolicy::sample_exterior) {
        // geometric radial grid beyond R_out; weights are +-pair kernel masses
        const double growth = 1.2;
        double inner = R_out;
        double mass = 0.0;
        for (int shell = 0; shell < 400; ++shell) {
            const double outer = inner * growth;
            if (lat.n == 1) {
                const double lo1[1] = {inner}, hi1[1] = {outer};
                const double wj = 2.0 * cell_integral_g3(K.k, 1, lo1, hi1);
                T.tail_offsets.push_back({0.5 * (inner + outer), 0.0});
                T.tail_w.push_back(wj);
                mass += wj;
                if (shell > 4 && wj < 1e-10 * std::max(mass, 1e-30)) break;
            } else {
                const int nang = 16;
                double shell_mass = 0.0;
                const double rm = 0.5 * (inner + outer);
                for (int ia = 0; ia < nang; ++ia) {
                    const double th = M_PI * (ia + 0.5) / nang; // half circle; mu covers the pair
                    double y[2] = {rm * std::cos(th), rm * std::sin(th)};
                    const double area = rm * (outer - inner) * (M_PI / nang);
                    const double wj = 2.0 * K.k(std::span<const double>(y, 2)) * area;
                    T.tail_offsets.push_back({y[0], y[1]});
                    T.tail_w.push_back(wj);
                    shell_mass += wj;
                }
                mass += shell_mass;
                if (shell > 4 && shell_mass < 1e-10 * std::max(mass, 1e-30)) break;
            }
            inner = outer;
        }
        T.tail_coeff = mass;
    }
    return T;
}

namespace {
constexpr char kTableMagic[8] = {'N', 'P', 'W', 'T', 'B', 'L', '0', '1'};
}

void WeightTable::write(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("WeightTable::write: cannot open " + path);
    os.write(kTableMagic, 8);
    const std::int32_t n32 = n, no = std::int32_t(offsets.size()), nt = std::int32_t(tail_offsets.size());
    const double hdr[5] = {h_x, R_out, sigma, near_origin_coeff, tail_coeff};
    os.write(reinterpret_cast<const char*>(&n32), 4);
    os.write(reinterpret_cast<const char*>(&no), 4);
    os.write(reinterpret_cast<const char*>(&nt), 4);
    os.write(reinterpret_cast<const char*>(hdr), sizeof hdr);
    os.write(reinterpret_cast<const char*>(&kernel_hash), 8);
    os.write(reinterpret_cast<const char*>(offsets.data()), offsets.size() * sizeof(offsets[0]));
    os.write(reinterpret_cast<const char*>(w.data()), w.size() * sizeof(double));
    os.write(reinterpret_cast<const char*>(tail_offsets.data()), tail_offsets.size() * sizeof(tail_offsets[0]));
    os.write(reinterpret_cast<const char*>(tail_w.data()), tail_w.size() * sizeof(double));
}

WeightTable WeightTable::read(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("WeightTable::read: cannot open " + path);
    char magic[8];
    is.read(magic, 8);
    if (std::memcmp(magic, kTableMagic, 8) != 0) throw std::runtime_error("WeightTable::read: bad magic");
    std::int32_t n32, no, nt;
    double hdr[5];
    WeightTable T;
    is.read(reinterpret_cast<char*>(&n32), 4);
    is.read(reinterpret_cast<char*>(&no), 4);
    is.read(reinterpret_cast<char*>(&nt), 4);
    is.read(reinterpret_cast<char*>(hdr), sizeof hdr);
    is.read(reinterpret_cast<char*>(&T.kernel_hash), 8);
    T.n = n32;
    T.h_x = hdr[0];
    T.R_out = hdr[1];
    T.sigma = hdr[2];
    T.near_origin_coeff = hdr[3];
    T.tail_coeff = hdr[4];
    T.offsets.resize(no);
    T.w.resize(no);
    T.tail_offsets.resize(nt);
    T.tail_w.resize(nt);
    is.read(reinterpret_cast<char*>(T.offsets.data()), T.offsets.size() * sizeof(T.offsets[0]));
    is.read(reinterpret_cast<char*>(T.w.data()), T.w.size() * sizeof(double));
    is.read(reinterpret_cast<char*>(T.tail_offsets.data()), T.tail_offsets.size() * sizeof(T.tail_offsets[0]));
    is.read(reinterpret_cast<char*>(T.tail_w.data()), T.tail_w.size() * sizeof(double));
    if (!is) throw std::runtime_error("WeightTable::read: truncated file " + path);
    return T;
}

WeightTable cached_weight_table(const KernelSpec& K, const LatticeSpec& lat, double R_out,
                                const std::string& cache_dir, bool force_rebuild, TailPolicy tail) {
    std::ostringstream os;
    os.precision(17);
    os << K.hash() << "|" << lat.h_x << "|" << R_out << "|" << lat.n << "|" << int(tail);
    const std::string key = os.str();
    const std::uint64_t h =
        fnv1a(std::span<const unsigned char>(reinterpret_cast<const unsigned char*>(key.data()), key.size()));
    std::ostringstream name;
    name << std::hex << h;
    const auto path = std::filesystem::path(cache_dir) / ("table_" + name.str() + ".bin");
    if (!force_rebuild && std::filesystem::exists(path)) {
        try {
            return WeightTable::read(path.string());
        } catch (const std::exception&) {
            // fall through to rebuild
        }
    }
    WeightTable T = build_weight_table(K, lat, R_out, tail);
    std::filesystem::create_directories(cache_dir);
    T.write(path.string());
    return T;
}

} // namespace nplab::kernels
