#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nplab/gridfn.hpp"

namespace nplab::kernels {

using gridfn::LatticeSpec;

// Symmetric jump kernel k(y), pinned in time.
using KernelFn = std::function<double(std::span<const double>)>;

enum class KernelClass { L0, L1 };

struct KernelSpec {
    int n = 1;
    double sigma = 1.0;
    double lambda = 1.0;  // ellipticity lower bound
    double Lambda = 1.0;  // ellipticity upper bound
    KernelFn k;
    KernelClass tag = KernelClass::L0;
    std::optional<double> eps1; // L1 smoothness radius
    std::string label;          // enters the cache hash

    double eval(std::span<const double> y) const { return k(y); }
    std::uint64_t hash() const;
};

// k(y) = (2 - sigma) c |y|^{-n-sigma}. Throws unless sigma in (0,2), c > 0.
KernelSpec extremal_kernel(double sigma, double c, int n);

struct BoundsViolation {
    std::vector<double> y;
    double value = 0.0, lo = 0.0, hi = 0.0;
};

struct BoundsReport {
    bool pass = true;
    std::vector<BoundsViolation> violations;
};

// Checks (2-s)*lambda |y|^{-n-s} <= k(y) <= (2-s)*Lambda |y|^{-n-s} at the samples.
BoundsReport validate_bounds(const KernelSpec& K, const std::vector<std::vector<double>>& samples);

// max over h of the quadrature of  \int_{|y| > 2 eps1} |k(y) - k(y-h)| / |h| dy.
// Throws if the tail of the quadrature fails to converge.
double smoothness_seminorm(const KernelSpec& K, double eps1, const std::vector<std::vector<double>>& h_samples);

enum class TailPolicy { sample_exterior, none };

// Quadrature weights for the discrete nonlocal operator
//   Lu(x) = sum_j w_j mu(u,x,y_j) + near_origin_coeff sum_d mu(u,x,h e_d) + tail,
// offsets enumerate a half-space (the mu form covers both signs); w_j is the
// full +-pair cell mass of k. The near-origin coefficient makes the scheme
// exact for global quadratics over the innermost cell. tail_coeff is the
// kernel mass beyond R_out; tail offsets sample the exterior on a geometric
// radial grid.
struct WeightTable {
    int n = 1;
    double h_x = 0.0;
    double R_out = 0.0;
    double sigma = 1.0;
    std::vector<std::array<int, 2>> offsets; // lattice offsets, half-space
    std::vector<double> w;
    double near_origin_coeff = 0.0;
    std::vector<std::array<double, 2>> tail_offsets; // physical offsets beyond R_out
    std::vector<double> tail_w;
    double tail_coeff = 0.0;
    std::uint64_t kernel_hash = 0;

    // mass entering the CFL bound: coefficient magnitude of u(x) in Lu
    double cfl_mass() const;

    void write(const std::string& path) const;
    static WeightTable read(const std::string& path);
};

// Builds the table; pre: R_out >= 2 h_x. Throws on precondition violations or
// a table beyond the configured memory cap.
WeightTable build_weight_table(const KernelSpec& K, const LatticeSpec& lat, double R_out,
                               TailPolicy tail = TailPolicy::sample_exterior);

// Disk cache keyed by (sigma, lambda, Lambda, h_x, R_out, n, label).
WeightTable cached_weight_table(const KernelSpec& K, const LatticeSpec& lat, double R_out,
                                const std::string& cache_dir, bool force_rebuild = false,
                                TailPolicy tail = TailPolicy::sample_exterior);

std::uint64_t fnv1a(std::span<const unsigned char> bytes, std::uint64_t seed = 1469598103934665603ull);

} // namespace nplab::kernels
