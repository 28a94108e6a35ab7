#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nplab/nonlocal.hpp"

namespace nplab::evolution {

using gridfn::GridFunction;
using gridfn::LatticeSpec;
using gridfn::ScalarField;
using kernels::KernelSpec;
using kernels::WeightTable;

enum class OperatorKind { linear, pucci_plus, pucci_minus, infsup };

// u_t = Op(u) + f on Omega x (0,T]; u = phi on the whole complement
// (nonlocal Dirichlet data), u(.,0) = g on Omega.
struct EvolutionProblem {
    OperatorKind op = OperatorKind::linear;
    double sigma = 1.0;
    double lambda = 1.0;
    double Lambda = 1.0;
    std::optional<KernelSpec> kernel;                 // linear (defaults to extremal at lambda)
    std::vector<std::vector<KernelSpec>> family;      // infsup
    ScalarField forcing;                              // f(x,t); empty = 0
    ScalarField exterior;                             // phi(x,t); empty = 0
    ScalarField initial;                              // g(x); empty = 0
    double domain_radius = 1.0;
    bool domain_is_ball = false;                      // box by default
    double horizon = 1.0;
    double cfl_safety = 0.9;
    double R_out = 1.0;
    int n = 1;
    double h_x = 1.0 / 64.0;
    double extent = 2.0;
    int store_stride = 1;
    std::string table_cache_dir; // empty = build tables in memory
    bool rebuild_tables = false;
};

// Quadrature tables the stepper uses (shared across runs of one problem).
struct OperatorTables {
    OperatorKind op;
    std::vector<WeightTable> tables; // linear: 1; pucci: {lambda, Lambda}; infsup: row-major
    int family_rows = 0, family_cols = 0;
    double cfl_mass() const;
};

OperatorTables build_operator_tables(const EvolutionProblem& prob);

// dt = cfl_safety / W; W = max over kernels of the monotonicity mass
// (2 sum w + 2 n near + 2 tail). Throws if cfl_safety is not in (0,1) or W = 0.
double cfl_timestep(const OperatorTables& tables, double cfl_safety);

struct StepDiagnostics {
    double max_op = 0.0;   // max |Op u| over interior nodes
    double cfl_margin = 0.0; // 1 - dt * W
};

// One explicit Euler step from the last slice of `u`; returns the state at
// t + dt as a single-slice grid function. Throws on non-finite production,
// naming the node. Requires dt <= cfl_timestep for monotonicity.
GridFunction step(const GridFunction& u, const EvolutionProblem& prob, const OperatorTables& tables, double dt,
                  StepDiagnostics* diag = nullptr);

struct Trajectory {
    GridFunction states;                // h_t = dt * store_stride
    double dt = 0.0;
    std::vector<StepDiagnostics> diagnostics;
};

Trajectory solve(const EvolutionProblem& prob);

} // namespace nplab::evolution
