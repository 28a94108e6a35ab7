#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nplab/gridfn.hpp"
#include "nplab/kernels.hpp"

namespace nplab::envelope {

using geometry::ParabolicCube;
using gridfn::GridFunction;
using gridfn::LatticeSpec;

// Upper eps-envelope (parabolic sup-convolution):
//   u^eps(x,t) = max over lattice (y,s), s >= t, |x-y|^2 + (s-t) <= eps^2
//                of u(y,s) + sqrt(eps^2 - |x-y|^2 - (s-t)).
GridFunction sup_convolution(const GridFunction& u, double eps);

// Parabolic concave envelope of u over the doubled cube around `domain`:
// per slice the least concave majorant (zero boundary at radius 2r) of the
// running-in-time max of u^+, hence concave in x and nondecreasing in t.
struct EnvelopeResult {
    LatticeSpec lat;             // the grid of u (fields stored on full slices)
    ParabolicCube domain;        // contact/diagnostics cube Q
    ParabolicCube envelope_cube; // doubled cube the hull lives on
    std::vector<int> slices;     // lattice slices covered by the envelope cube
    // per covered slice, full spatial arrays (nodes outside the envelope ball are 0)
    std::vector<double> gamma;
    std::vector<std::uint8_t> contact; // Gamma - u <= tol, on domain nodes
    std::vector<double> dt_gamma;      // backward differences (0 base below first slice)
    std::vector<double> hess_det_minus;
    std::vector<double> slope; // n components per node
    double contact_tol = 0.0;

    int pos_of_slice(int lattice_slice) const;
    double gamma_at(int slice_pos, int node) const;
};

// Throws (listing offending nodes) unless u <= 0 on the lattice part of
// partial*_p of the half cube Q_{r/2}.
EnvelopeResult concave_envelope(const GridFunction& u, const ParabolicCube& domain,
                                double contact_tol_rel = 1e-9);

// integral of dt_Gamma * det(D^2 Gamma)^- over the region (cell sums).
double normal_map_measure(const EnvelopeResult& env, const ParabolicCube& region);

struct RingDiagnostic {
    int node = -1, slice = -1;
    std::vector<double> fractions; // |{mu^- >= M r_k^2}| / |R_k| per ring
    int best_ring = -1;
    double best_fraction = 0.0;
    double bound = 0.0; // C_fit * f(x,t) / M
};

struct CoverCube {
    std::vector<double> center; // space then time
    double side = 0.0;
    double normal_map = 0.0;
    double contact_measure = 0.0;
    double f_sup = 0.0;
    double xi_r = 0.0; // r^2 (sup_{K_{r/2}} f + r sup f)
    bool bound_ok = false;
};

struct AbpConfig {
    double contact_mu_tol = 1e-9;
    double ring_rho = 0.5;
    double ring_M = 1.0;
    double C_fit = 2.0;      // fitted constant for the per-cube bound
    double rho0_scale = 1.0; // scale on the cube-size cap 2 rho0 2^{-1/(2-s)}
    int max_ring_points = 8; // contact points carrying ring tables
    double R_stencil = 1.0;  // stencil radius for the contact sign check
};

struct AbpReport {
    double sup_u_plus = 0.0;
    double normal_map_total = 0.0;
    double tso_ratio = 0.0; // (sup u+)^{n+1} / normal_map_total
    double gamma_t_sup = 0.0;
    double f_sup = 0.0;
    double gamma_t_over_f = 0.0;
    bool contact_empty = true;
    int contact_count = 0;
    double contact_mu_max = -1.0; // max mu over contact nodes and stencil offsets
    bool contact_sign_ok = true;
    std::vector<RingDiagnostic> rings;
    std::vector<CoverCube> cover;
    std::string to_json() const;
};

// ABP diagnostic sweep for a subsolution record (u, f) with envelope `env`.
AbpReport abp_diagnostics(const GridFunction& u, const GridFunction& f, const EnvelopeResult& env,
                          const AbpConfig& cfg);

// Hull machinery (shared with the paraboloid classifier, which uses it
// reflected). 1-D: least concave majorant of (pos_i, val_i), exact monotone
// chain, evaluated back at the positions. 2-D: least majorant that is
// midpoint-concave along every lattice direction; monotone Gauss-Seidel
// fixpoint over the masked window. Nodes may only be raised where
// domain_mask is set; pair endpoints must carry support_mask.
std::vector<double> least_concave_majorant_1d(const std::vector<double>& pos, const std::vector<double>& val);
void midpoint_concavify_2d(std::vector<double>& g, const std::vector<std::uint8_t>& domain_mask,
                           const std::vector<std::uint8_t>& support_mask, int side, double tol);

} // namespace nplab::envelope
