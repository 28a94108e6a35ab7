#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "nplab/geometry.hpp"

namespace nplab::gridfn {

using geometry::ParabolicCube;
using geometry::Point;

// Closed-form scalar field f(x, t).
using ScalarField = std::function<double(std::span<const double>, double)>;

ScalarField constant_field(double c);

// Uniform space-time lattice: nodes x_i = -extent + i h_x per dimension and
// slices t_j = t0 + j h_t, j = 0..num_slices-1 with t_last = t1. Slice 0
// carries the data at the interval's left endpoint; region membership follows
// the half-open (t0, t1] convention.
struct LatticeSpec {
    int n = 1;           // spatial dimension, 1 or 2
    double h_x = 0.0;
    double h_t = 0.0;
    double extent = 2.0; // box [-extent, extent]^n, extent >= 2 (covers Q_2)
    double t0 = 0.0;
    double t1 = 1.0;
    double sigma = 1.0;

    static LatticeSpec make(int n, double h_x, double h_t, double extent, double t0, double t1, double sigma);

    int nodes_per_dim() const { return nx_ + 1; }
    int nodes_per_slice() const;
    int num_slices() const { return nt_ + 1; }
    double node_coord(int i) const { return -extent + i * h_x; }
    double slice_time(int j) const { return t0 + j * h_t; }

    // flat node index within a slice (x1 fastest for n=2)
    int node_index(std::span<const int> ix) const;
    void node_coords(int flat, double* out) const;
    // nearest node / slice if within snap tolerance, else -1
    int snap_node(std::span<const double> x) const;
    int snap_slice(double t) const;

    bool same_geometry(const LatticeSpec& o) const;

private:
    int nx_ = 0, nt_ = 0;
};

// Grid function: stored values on the lattice plus a bounded exterior
// evaluator used for the nonlocal tail and for points beyond the box.
class GridFunction {
public:
    GridFunction(LatticeSpec lat, std::vector<double> values, ScalarField exterior, double exterior_bound);

    const LatticeSpec& lattice() const { return lat_; }
    const std::vector<double>& values() const { return values_; }
    std::vector<double>& mutable_values() { return values_; }
    double exterior_bound() const { return exterior_bound_; }
    const ScalarField& exterior() const { return exterior_; }

    double at(int slice, int node) const { return values_[std::size_t(slice) * lat_.nodes_per_slice() + node]; }
    double& at(int slice, int node) { return values_[std::size_t(slice) * lat_.nodes_per_slice() + node]; }
    std::span<const double> slice(int j) const;

    // Resolve a value anywhere: stored lattice value at nodes, multilinear
    // interpolation inside the box, exterior evaluator outside. Time is
    // resolved against a fixed slice.
    double value_on_slice(std::span<const double> x, int slice) const;

    double scale() const; // max(1, sup |values|)

    void write_csv(const std::string& path) const;
    void write_binary(const std::string& path) const;
    static GridFunction read_binary(const std::string& path, ScalarField exterior, double exterior_bound);

private:
    LatticeSpec lat_;
    std::vector<double> values_;
    ScalarField exterior_;
    double exterior_bound_;
};

// values[i] = f(node_i) on every slice; exterior = f. Throws on a non-finite
// sample, naming the node.
GridFunction sample(const ScalarField& f, const LatticeSpec& lat, double exterior_bound = 0.0);

// max - min of u over lattice nodes in the region; throws if empty.
double oscillation(const GridFunction& u, const ParabolicCube& region);

enum class LevelSetMode { above, at_most };

// (# nodes in region with u > s, resp. u <= s) * h_x^n * h_t
double level_set_measure(const GridFunction& u, double s, const ParabolicCube& region, LevelSetMode mode);

enum class Extremum { sup, inf };

struct ExtremumResult {
    double value = 0.0;
    int slice = -1;
    int node = -1;
    Point where;
};

ExtremumResult extremum(const GridFunction& u, const ParabolicCube& region, Extremum which);

// Nodes of one slice lying in the region (flat node ids).
std::vector<int> nodes_in_region(const LatticeSpec& lat, const ParabolicCube& region, int slice);
// Slices whose time lies in the region's time interval.
std::vector<int> slices_in_region(const LatticeSpec& lat, const ParabolicCube& region);

} // namespace nplab::gridfn
