#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nplab/rational.hpp"

namespace nplab::geometry {

// Space-time point (x, t), x of length n >= 1.
struct Point {
    std::vector<double> x;
    double t = 0.0;

    int dim() const { return static_cast<int>(x.size()); }
};

Point make_point(std::initializer_list<double> xs, double t);

// (|x-y|^sigma + |t-s|)^{1/sigma} for t <= s, +infinity for t > s.
// Throws std::invalid_argument unless sigma in (0,2).
double parabolic_distance(const Point& p1, const Point& p2, double sigma);

// Space-time rectangles respecting the r^sigma parabolic scaling. All time
// intervals are half-open (lo, hi]; balls and boxes are open in space.
//   Q      B_r(x) x (t - r^s, t]          past ball cube
//   rK     (x-r, x+r)^n x (t, t + r^s]    forward box (dyadic/elongation base)
//   Kminus same geometry as rK, kept as the K^-_r notation tag
//   Kplus  (x-3r, x+3r)^n x (t + r^s, t + (3^s + 2) r^s]
//   bQ     B_r(x) x (t - r^s, t + r^s]    two-sided ball cube
enum class CubeVariant { Q, rK, Kminus, Kplus, bQ };

class ParabolicCube {
public:
    ParabolicCube(Point anchor, double r, double sigma, CubeVariant variant);

    const Point& anchor() const { return anchor_; }
    double r() const { return r_; }
    double sigma() const { return sigma_; }
    CubeVariant variant() const { return variant_; }
    int dim() const { return anchor_.dim(); }

    bool is_box() const;
    bool is_ball() const;

    double time_lo() const;
    double time_hi() const;
    double time_length() const { return time_hi() - time_lo(); }
    // Half-width of the spatial box / radius of the ball (3r for Kplus).
    double spatial_halfwidth() const;

    bool contains(std::span<const double> x, double t) const;
    bool contains(const Point& p) const { return contains(p.x, p.t); }

    // Lebesgue measure of the space-time region.
    double measure() const;

    ParabolicCube translated(const Point& by) const;

private:
    Point anchor_;
    double r_;
    double sigma_;
    CubeVariant variant_;
};

// Named constructors for the standard cube family (anchor defaults to the
// space-time origin where omitted).
ParabolicCube cube_Q(double r, double sigma, Point anchor);                 // Q_r(x,t)
ParabolicCube cube_forward_Q(double r, double sigma, int n, double t0 = 0); // B_r x (t0, t0+r^s]
ParabolicCube cube_Q_minus(double r, double sigma, int n, double t0 = 0);   // B_r x (t0+r^s, t0+2r^s]
ParabolicCube cube_Q_plus(double r, double sigma, int n, double t0 = 0);    // B_r x (t0+3r^s, t0+4r^s]
ParabolicCube cube_two_sided(double r, double sigma, Point anchor);         // bQ_r(x,t)
ParabolicCube cube_box_forward(double r, double sigma, Point anchor);       // K^-_r anchored at its base
ParabolicCube cube_K_plus3(double r, double sigma, Point anchor);           // K^+_{3r}

// Axis-aligned space-time box with scalar type S (double or Rational).
template <class S>
struct BasicBox {
    std::vector<S> x_lo, x_hi; // open in space
    S t_lo, t_hi;              // (t_lo, t_hi]

    int dim() const { return static_cast<int>(x_lo.size()); }
    S volume() const {
        S v = t_hi - t_lo;
        for (int d = 0; d < dim(); ++d) v = v * (x_hi[d] - x_lo[d]);
        return v;
    }
};

// Finite union of pairwise disjoint boxes; measure is the sum of volumes.
template <class S>
class BasicCubeRegion {
public:
    BasicCubeRegion() : measure_(0) {}

    // Disjointifies an arbitrary collection of boxes (time-slab sweep).
    static BasicCubeRegion from_boxes(std::vector<BasicBox<S>> boxes);

    const std::vector<BasicBox<S>>& boxes() const { return boxes_; }
    S measure() const { return measure_; }
    bool empty() const { return boxes_.empty(); }

private:
    std::vector<BasicBox<S>> boxes_;
    S measure_;
};

using Box = BasicBox<double>;
using CubeRegion = BasicCubeRegion<double>;
using ExactBox = BasicBox<Rational>;
using ExactCubeRegion = BasicCubeRegion<Rational>;

// Time elongation K̄^m: m+1 boxes over the cube's own spatial box with time
// breakpoints (3^{s i} - 1)/(3^s - 1) r^s measured from the cube's time base.
// Requires a box variant of time length r^sigma (rK or Kminus).
CubeRegion elongation(const ParabolicCube& k, int m);

// Expansion K̃^m: as elongation but the i-th box has spatial half-width 3^i r.
CubeRegion expansion(const ParabolicCube& k, int m);

// Dyadic splitting of K^-_1 = (-1,1)^n x (0,1].
struct SplitRule {
    int p = 1; // time splits per step: 2^p
    int q = 1; // spatial splits per dimension per step: 2^q
};

class DyadicCube {
public:
    // Root cube of the tree over K^-_1.
    static DyadicCube root(int n, SplitRule rule);

    DyadicCube(int n, SplitRule rule, int depth, std::vector<std::int64_t> ix, std::int64_t it);

    int dim() const { return n_; }
    SplitRule rule() const { return rule_; }
    int depth() const { return depth_; }
    const std::vector<std::int64_t>& space_index() const { return ix_; }
    std::int64_t time_index() const { return it_; }

    // Exact bounds relative to the root K^-_1.
    Rational x_lo(int d) const;
    Rational x_hi(int d) const;
    Rational t_lo() const;
    Rational t_hi() const;
    Rational spatial_halfwidth() const; // 2^{-q*depth}
    Rational measure() const;
    ExactBox box() const;

    // 2^{n q + p} children; disjoint, union = parent.
    std::vector<DyadicCube> split() const;
    std::optional<DyadicCube> parent() const;

    bool contains(const DyadicCube& other) const; // nesting (same tree)
    bool operator==(const DyadicCube& other) const;

private:
    int n_;
    SplitRule rule_;
    int depth_;
    std::vector<std::int64_t> ix_;
    std::int64_t it_;
};

// Children of an arbitrary cube under rule (p,q); counting helper mirroring
// DyadicCube::split for stand-alone use.
std::vector<DyadicCube> dyadic_split(const DyadicCube& k, SplitRule rule);

// Exact measure of (union of a) ∩ K for a list of tree cubes.
Rational dyadic_union_measure(const std::vector<DyadicCube>& a);

enum class CzMode {
    elongation_clipped, // union of the m-step elongations, clipped to {|x^i| <= 1}
    shifted_elongation  // union of the single stacked boxes (t, t + T_{m+1}]
};

struct CzResult {
    std::vector<DyadicCube> selected; // maximal cubes with |K ∩ A| >= delta |K|
    ExactCubeRegion region;           // A^m_delta (resp. B^m_delta)
    Rational measure_a;               // |A|
};

// Calderon-Zygmund stopping-time selection over the dyadic tree of K^-_1.
// `a` is a finite union of dyadic cubes (all on the same tree); measures are
// exact rationals. Requires rule.p == rule.q (rational breakpoints) and
// delta in (0,1); throws std::invalid_argument otherwise.
CzResult cz_decompose(const std::vector<DyadicCube>& a, const Rational& delta, int m,
                      CzMode mode = CzMode::elongation_clipped);

// JSON serialization: {"sigma":..., "rule":[p,q], "cubes":[{"depth":..., "index":[...]}...]}
std::string dyadic_tree_to_json(double sigma, SplitRule rule, const std::vector<DyadicCube>& cubes);
std::vector<DyadicCube> dyadic_tree_from_json(const std::string& text, int n, double* sigma_out = nullptr,
                                              SplitRule* rule_out = nullptr);
std::string region_to_json(double sigma, const CubeRegion& region);
std::string region_to_json(double sigma, const ExactCubeRegion& region);

} // namespace nplab::geometry
