#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nplab/gridfn.hpp"
#include "nplab/kernels.hpp"

namespace nplab::estimators {

using geometry::ParabolicCube;
using geometry::Point;
using gridfn::GridFunction;

// Least-squares power-law fit of the upper level-set measures
// |{u > s} ∩ region| ≈ C_fit s^{-eps_star} |region|.
struct DecayFit {
    std::vector<double> s_grid;
    std::vector<double> measures;
    double C_fit = 0.0;
    double eps_star_fit = 0.0;
    double r_squared = 0.0;
    bool degenerate = false; // too few nonzero measures to fit
    std::string to_json() const;
};

DecayFit decay_fit(const GridFunction& u, const ParabolicCube& region, const std::vector<double>& s_grid);

struct WeakHarnackResult {
    bool pass = true;
    double worst_margin = 1.0; // min over s of (rhs - lhs) / rhs
    std::vector<double> lhs, rhs;
};

// Verifies |{u > s} ∩ rQ_r(x0,t0)| <= C r^{n+s} (u(x0,t0) + c0 r^s)^{e*} s^{-e*}
// for every s in the grid, at the calibrated (C, eps_star).
WeakHarnackResult weak_harnack_check(const GridFunction& u, const Point& center, double r, double c0, double C,
                                     double eps_star, const std::vector<double>& s_grid);

// sup over rQ-_{1/2} of u divided by (inf over rQ+_{1/2} of u + c0); both
// cubes anchored at the space-time origin, rQ- earlier than rQ+.
double harnack_quotient(const GridFunction& u, double c0);

struct HolderFit {
    double alpha_fit = 0.0;
    bool exact = false; // all oscillations vanished; alpha capped
    std::vector<double> scales;
    std::vector<double> oscillations;
    std::vector<double> ratios; // osc_{k+1} / osc_k
    double r_squared = 0.0;
    std::string to_json() const;
};

// Oscillation decay over two-sided cubes bQ_{r0 2^{-kN}}(point); alpha from
// the log-osc slope. Throws if fewer than 3 scales are usable.
HolderFit holder_fit(const GridFunction& u, const Point& point, int levels, int N = 1, double r0 = 0.25,
                     double alpha_cap = 2.0);

struct C1AlphaResult {
    bool available = false;
    std::string reason;
    double exponent = 0.0;
    bool exact = false;
    std::vector<double> per_h;
    std::string to_json() const;
};

// Difference-quotient regularity u^h = (tau_h u - u)/|h| measured by
// holder_fit; absent unless the kernel class is L1.
C1AlphaResult c1alpha_fit(const GridFunction& u, kernels::KernelClass tag, const std::vector<double>& h_list,
                          const Point& point, int levels, double r0 = 0.25);

struct ParaboloidMasks {
    ParabolicCube cube; // K_1 (masks partition its lattice nodes)
    double aperture = 0.0;
    std::vector<int> slices;
    std::vector<std::uint8_t> good; // per slice x node over the full lattice slice
    int good_count = 0, bad_count = 0;
    double cell_volume = 0.0;

    double good_measure() const { return good_count * cell_volume; }
    double bad_measure() const { return bad_count * cell_volume; }
};

// Tangent-paraboloid classification: a node belongs to the good set iff
// u + h(|x - x0|^2/2 + (t0 - t)) admits a supporting hyperplane from below at
// (x0,t0) over domain ∩ {t <= t0} — decided via the lower convex envelope in x
// of the time-running-min.
ParaboloidMasks paraboloid_classify(const GridFunction& u, double aperture, const ParabolicCube& k1,
                                    const ParabolicCube& domain);

// |B^u_h ∩ region| for the decay-iteration shape checks.
double bad_set_measure(const GridFunction& u, double aperture, const ParabolicCube& region,
                       const ParabolicCube& domain);

struct RegularityReport {
    double alpha_fit = 0.0;
    std::optional<double> c1alpha;
    double harnack_quotient = 0.0;
    bool weak_harnack_pass = false;
    double decay_C = 0.0, decay_eps_star = 0.0, decay_r2 = 0.0;
    std::string to_json() const;
};

} // namespace nplab::estimators
