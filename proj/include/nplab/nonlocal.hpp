#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nplab/gridfn.hpp"
#include "nplab/kernels.hpp"

namespace nplab::nonlocal {

using gridfn::GridFunction;
using gridfn::LatticeSpec;
using gridfn::ScalarField;
using kernels::WeightTable;

// mu(u,x,y,t) = u(x+y,t) + u(x-y,t) - 2 u(x,t); x a lattice node, x +- y
// resolved through the lattice or the exterior evaluator.
double second_difference(const GridFunction& u, int slice, std::span<const int> ix, std::span<const double> y);
double mu_plus(const GridFunction& u, int slice, std::span<const int> ix, std::span<const double> y);
double mu_minus(const GridFunction& u, int slice, std::span<const int> ix, std::span<const double> y);

// A nonlocal operator evaluated on lattice slices. With exterior data present
// the stencil never leaves the resolvable domain, so the field covers every
// lattice node of the evaluated slices.
struct OperatorField {
    LatticeSpec lat;
    std::vector<int> slices;
    std::vector<double> values; // slices.size() * nodes_per_slice
    std::string op_name;
    std::uint64_t kernel_hash = 0;

    double at(int slice_pos, int node) const {
        return values[std::size_t(slice_pos) * lat.nodes_per_slice() + node];
    }
    void write_csv(const std::string& path) const;
};

// One time slice of a grid function bound to per-slice storage; the cheap
// view the evolution loop iterates on.
struct SliceView {
    const LatticeSpec* lat = nullptr;
    std::span<const double> vals;
    const ScalarField* exterior = nullptr;
    double t = 0.0;

    static SliceView of(const GridFunction& u, int slice);
};

enum class PucciSign { plus, minus };

// Discrete operator value at one node. The mu+/mu- split is applied per
// quadrature node; linear corresponds to cplus == cminus == w.
double linear_apply_at(const SliceView& u, const WeightTable& T, std::span<const int> ix);
double pucci_apply_at(const SliceView& u, const WeightTable& lambda_table, const WeightTable& Lambda_table,
                      std::span<const int> ix, PucciSign sign);

OperatorField linear_apply(const GridFunction& u, const WeightTable& T);
OperatorField pucci_apply(const GridFunction& u, const WeightTable& lambda_table, const WeightTable& Lambda_table,
                          PucciSign sign);

// inf over rows of sup over columns of the linear operators in the family.
OperatorField infsup_apply(const GridFunction& u, const std::vector<std::vector<WeightTable>>& family);
double infsup_apply_at(const SliceView& u, const std::vector<std::vector<WeightTable>>& family,
                       std::span<const int> ix);

// Extremal table pair for the Pucci operators at (sigma, lambda, Lambda).
struct ExtremalTables {
    WeightTable lam, Lam;
};
ExtremalTables make_extremal_tables(double sigma, double lambda, double Lambda, const LatticeSpec& lat,
                                    double R_out, kernels::TailPolicy tail = kernels::TailPolicy::sample_exterior);

} // namespace nplab::nonlocal
