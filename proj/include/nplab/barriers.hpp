#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nplab/gridfn.hpp"
#include "nplab/nonlocal.hpp"

namespace nplab::barriers {

using gridfn::GridFunction;
using gridfn::LatticeSpec;

enum class PsiVariant { base, delta };

// Parameters of the special functions psi, psi^delta, Psi = c psi^delta.
struct BarrierParams {
    double alpha = 1.0;  // exponent rate in exp(-alpha |x|^sigma / t)
    double beta = 0.1;   // temporal decay e^{-beta t}
    double gamma = 8.0;  // power, > 1
    double zeta = 0.0;   // level shift (eta in the capped variant)
    double A = 1.0;      // ramp slope
    double delta = 0.5;  // cap parameter in (0,1)
    double c = 1.0;      // amplitude of Psi
    double r = 0.0;      // localization radius, < 1/(2 sqrt n)
    double tau = 0.0;    // inner truncation radius, 0 < tau << r
    double sigma = 1.5;
    int n = 1;
    PsiVariant variant = PsiVariant::delta;

    void validate() const; // throws on violated hypotheses
};

// min{cap, (4 pi t)^{-n/sigma} exp(-alpha |x|^sigma / t)}; cap = 2^n for the
// base variant, delta^{-n} for the capped one. Throws for t <= 0.
double heat_majorant(std::span<const double> x, double t, const BarrierParams& p, PsiVariant variant);

// f = e^{-beta t} h^gamma
double barrier_f(std::span<const double> x, double t, const BarrierParams& p, PsiVariant variant);

// psi = min(max(f - zeta, 0), A t); defined as 0 at t <= 0.
double barrier_psi(std::span<const double> x, double t, const BarrierParams& p, PsiVariant variant);

// Psi = c psi^delta
double special_function_Psi(std::span<const double> x, double t, const BarrierParams& p);

struct VerifyConfig {
    double lambda = 1.0;
    double Lambda = 2.0;
    double R_out = 1.0;
    double tol_residual_rel = 1e-6; // residual >= -tol * scale(Psi)
    double kplus_threshold = 2.0;   // Psi > threshold on K+_{3r}
    double boundary_tol_rel = 1e-9; // Psi <= tol * scale on partial*_p Q
};

struct BarrierReport {
    double min_subsolution_residual = 0.0; // min over Q \ closure(K-_{r/2}) of M-Psi - Psi_t
    double min_on_Kplus = 0.0;
    double max_on_parabolic_complement = 0.0;
    double bump_required = 0.0; // max(0, -min residual) on closure(K-_{r/2})
    double scale = 1.0;         // sup |Psi| on the lattice (tolerance scale)
    double region_scale = 1.0;  // sup |Psi| over the residual test region (diagnostic)
    int seam_nodes_excluded = 0;
    bool residual_pass = false;
    bool kplus_pass = false;
    bool boundary_pass = false;
    bool pass() const { return residual_pass && kplus_pass && boundary_pass; }
    std::string to_json() const;
};

// Checks the three barrier inequalities on the lattice:
// subsolution residual on Q \ K-_{r/2} (seam cells excluded, one-sided time
// slopes), Psi > threshold on K+_{3r}, Psi <= 0 on sampled partial*_p Q.
// Throws if the lattice is too coarse to resolve the regions.
BarrierReport verify_subsolution(const BarrierParams& p, const LatticeSpec& lat, const VerifyConfig& cfg);

// M-Psi - Psi_t over the whole lattice (0 on the initial slice), for plotting.
GridFunction residual_field(const BarrierParams& p, const LatticeSpec& lat, const VerifyConfig& cfg);

struct SearchResult {
    bool found = false;
    BarrierParams params;
    BarrierReport report;      // report of the returned params (or the best attempt)
    double best_residual = 0.0;
    int evaluated = 0;
    std::string to_json() const;
};

// Deterministic grid search over (gamma, alpha, beta, tau) with
// delta = 1/(gamma sigma); zeta/A/c derived from the construction. Searches on
// a coarse lattice and re-verifies the winner on `lat`.
SearchResult parameter_search(double sigma, int n, const LatticeSpec& lat, const VerifyConfig& cfg);

// Empirical threshold sigma* above which the base-variant construction
// verifies; bisection with the verifier as oracle.
double sigma_star_search(int n, double h_x, const VerifyConfig& cfg, double lo = 1.0, double hi = 1.95,
                         int iters = 5);

} // namespace nplab::barriers
