#include "nplab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include "json.hpp"

namespace nplab::geometry {

namespace {

constexpr double kEdgeTol = 1e-12;

double tol_for(double a, double b) { return kEdgeTol * std::max({1.0, std::fabs(a), std::fabs(b)}); }

void check_sigma(double sigma) {
    if (!(sigma > 0.0 && sigma < 2.0))
        throw std::invalid_argument("sigma must lie in (0,2), got " + std::to_string(sigma));
}

} // namespace

Point make_point(std::initializer_list<double> xs, double t) {
    Point p;
    p.x.assign(xs.begin(), xs.end());
    p.t = t;
    return p;
}

double parabolic_distance(const Point& p1, const Point& p2, double sigma) {
    check_sigma(sigma);
    if (p1.dim() != p2.dim()) throw std::invalid_argument("parabolic_distance: dimension mismatch");
    if (p1.t > p2.t) return std::numeric_limits<double>::infinity();
    double r2 = 0.0;
    for (int d = 0; d < p1.dim(); ++d) {
        const double dx = p1.x[d] - p2.x[d];
        r2 += dx * dx;
    }
    return std::pow(std::pow(std::sqrt(r2), sigma) + (p2.t - p1.t), 1.0 / sigma);
}

ParabolicCube::ParabolicCube(Point anchor, double r, double sigma, CubeVariant variant)
    : anchor_(std::move(anchor)), r_(r), sigma_(sigma), variant_(variant) {
    check_sigma(sigma_);
    if (!(r_ > 0.0)) throw std::invalid_argument("ParabolicCube: r must be positive");
    if (anchor_.dim() < 1) throw std::invalid_argument("ParabolicCube: dimension must be >= 1");
}

bool ParabolicCube::is_box() const {
    return variant_ == CubeVariant::rK || variant_ == CubeVariant::Kminus || variant_ == CubeVariant::Kplus;
}

bool ParabolicCube::is_ball() const { return !is_box(); }

double ParabolicCube::time_lo() const {
    const double rs = std::pow(r_, sigma_);
    switch (variant_) {
        case CubeVariant::Q: return anchor_.t - rs;
        case CubeVariant::rK: return anchor_.t;
        case CubeVariant::Kminus: return anchor_.t;
        case CubeVariant::Kplus: return anchor_.t + rs;
        case CubeVariant::bQ: return anchor_.t - rs;
    }
    return 0.0;
}

double ParabolicCube::time_hi() const {
    const double rs = std::pow(r_, sigma_);
    switch (variant_) {
        case CubeVariant::Q: return anchor_.t;
        case CubeVariant::rK: return anchor_.t + rs;
        case CubeVariant::Kminus: return anchor_.t + rs;
        case CubeVariant::Kplus: return anchor_.t + (std::pow(3.0, sigma_) + 2.0) * rs;
        case CubeVariant::bQ: return anchor_.t + rs;
    }
    return 0.0;
}

double ParabolicCube::spatial_halfwidth() const {
    return variant_ == CubeVariant::Kplus ? 3.0 * r_ : r_;
}

bool ParabolicCube::contains(std::span<const double> x, double t) const {
    const double lo = time_lo(), hi = time_hi();
    if (!(t > lo + tol_for(lo, hi) && t <= hi + tol_for(lo, hi))) return false;
    const double hw = spatial_halfwidth();
    if (is_box()) {
        for (int d = 0; d < dim(); ++d)
            if (std::fabs(x[d] - anchor_.x[d]) >= hw - tol_for(hw, x[d])) return false;
        return true;
    }
    double r2 = 0.0;
    for (int d = 0; d < dim(); ++d) {
        const double dx = x[d] - anchor_.x[d];
        r2 += dx * dx;
    }
    return std::sqrt(r2) < hw - tol_for(hw, 0.0);
}

double ParabolicCube::measure() const {
    const double hw = spatial_halfwidth();
    double space;
    if (is_box()) {
        space = std::pow(2.0 * hw, dim());
    } else {
        space = dim() == 1 ? 2.0 * hw : M_PI * hw * hw; // n <= 2 in this artifact
    }
    return space * time_length();
}

ParabolicCube ParabolicCube::translated(const Point& by) const {
    Point a = anchor_;
    for (int d = 0; d < dim(); ++d) a.x[d] += by.x[d];
    a.t += by.t;
    return ParabolicCube(a, r_, sigma_, variant_);
}

ParabolicCube cube_Q(double r, double sigma, Point anchor) {
    return ParabolicCube(std::move(anchor), r, sigma, CubeVariant::Q);
}

ParabolicCube cube_forward_Q(double r, double sigma, int n, double t0) {
    Point a;
    a.x.assign(n, 0.0);
    a.t = t0 + std::pow(r, sigma);
    return ParabolicCube(std::move(a), r, sigma, CubeVariant::Q);
}

ParabolicCube cube_Q_minus(double r, double sigma, int n, double t0) {
    return cube_forward_Q(r, sigma, n, t0 + std::pow(r, sigma));
}

ParabolicCube cube_Q_plus(double r, double sigma, int n, double t0) {
    return cube_forward_Q(r, sigma, n, t0 + 3.0 * std::pow(r, sigma));
}

ParabolicCube cube_two_sided(double r, double sigma, Point anchor) {
    return ParabolicCube(std::move(anchor), r, sigma, CubeVariant::bQ);
}

ParabolicCube cube_box_forward(double r, double sigma, Point anchor) {
    return ParabolicCube(std::move(anchor), r, sigma, CubeVariant::Kminus);
}

ParabolicCube cube_K_plus3(double r, double sigma, Point anchor) {
    return ParabolicCube(std::move(anchor), r, sigma, CubeVariant::Kplus);
}

// --- box regions -----------------------------------------------------------

namespace {

template <class S>
std::vector<S> sorted_unique(std::vector<S> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

template <class S>
S max_of(const S& a, const S& b) { return a < b ? b : a; }

// Union of 1-D open intervals; returns merged disjoint intervals.
template <class S>
std::vector<std::pair<S, S>> merge_intervals(std::vector<std::pair<S, S>> iv) {
    std::sort(iv.begin(), iv.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<std::pair<S, S>> out;
    for (const auto& i : iv) {
        if (!out.empty() && !(out.back().second < i.first))
            out.back().second = max_of(out.back().second, i.second);
        else
            out.push_back(i);
    }
    return out;
}

} // namespace

template <class S>
BasicCubeRegion<S> BasicCubeRegion<S>::from_boxes(std::vector<BasicBox<S>> in) {
    BasicCubeRegion<S> region;
    in.erase(std::remove_if(in.begin(), in.end(),
                            [](const BasicBox<S>& b) {
                                if (!(b.t_lo < b.t_hi)) return true;
                                for (int d = 0; d < b.dim(); ++d)
                                    if (!(b.x_lo[d] < b.x_hi[d])) return true;
                                return false;
                            }),
             in.end());
    if (in.empty()) return region;
    const int n = in.front().dim();

    std::vector<S> tcuts;
    for (const auto& b : in) {
        tcuts.push_back(b.t_lo);
        tcuts.push_back(b.t_hi);
    }
    tcuts = sorted_unique(std::move(tcuts));

    S total(0);
    for (std::size_t s = 0; s + 1 < tcuts.size(); ++s) {
        const S ta = tcuts[s], tb = tcuts[s + 1];
        std::vector<const BasicBox<S>*> active;
        for (const auto& b : in)
            if (!(ta < b.t_lo) && !(b.t_hi < tb)) active.push_back(&b);
        if (active.empty()) continue;

        if (n == 1) {
            std::vector<std::pair<S, S>> iv;
            for (auto* b : active) iv.emplace_back(b->x_lo[0], b->x_hi[0]);
            for (const auto& [lo, hi] : merge_intervals<S>(std::move(iv))) {
                BasicBox<S> out;
                out.x_lo = {lo};
                out.x_hi = {hi};
                out.t_lo = ta;
                out.t_hi = tb;
                total += out.volume();
                region.boxes_.push_back(std::move(out));
            }
        } else {
            // strip sweep along x0, interval union along x1
            std::vector<S> xcuts;
            for (auto* b : active) {
                xcuts.push_back(b->x_lo[0]);
                xcuts.push_back(b->x_hi[0]);
            }
            xcuts = sorted_unique(std::move(xcuts));
            for (std::size_t i = 0; i + 1 < xcuts.size(); ++i) {
                const S xa = xcuts[i], xb = xcuts[i + 1];
                std::vector<std::pair<S, S>> iv;
                for (auto* b : active)
                    if (!(xa < b->x_lo[0]) && !(b->x_hi[0] < xb)) iv.emplace_back(b->x_lo[1], b->x_hi[1]);
                for (const auto& [lo, hi] : merge_intervals<S>(std::move(iv))) {
                    BasicBox<S> out;
                    out.x_lo = {xa, lo};
                    out.x_hi = {xb, hi};
                    out.t_lo = ta;
                    out.t_hi = tb;
                    total += out.volume();
                    region.boxes_.push_back(std::move(out));
                }
            }
        }
    }
    region.measure_ = total;
    return region;
}

template class BasicCubeRegion<double>;
template class BasicCubeRegion<Rational>;

namespace {

void require_elongation_base(const ParabolicCube& k) {
    if (k.variant() != CubeVariant::rK && k.variant() != CubeVariant::Kminus)
        throw std::invalid_argument("elongation/expansion require a forward box cube (rK or Kminus)");
}

double breakpoint(double sigma, double rs, int i) {
    // (3^{sigma i} - 1) / (3^sigma - 1) * r^sigma
    return (std::pow(3.0, sigma * i) - 1.0) / (std::pow(3.0, sigma) - 1.0) * rs;
}

} // namespace

CubeRegion elongation(const ParabolicCube& k, int m) {
    require_elongation_base(k);
    if (m < 0) throw std::invalid_argument("elongation: m must be nonnegative");
    const double rs = std::pow(k.r(), k.sigma());
    const double base = k.time_lo();
    std::vector<Box> boxes;
    for (int i = 0; i <= m; ++i) {
        Box b;
        for (int d = 0; d < k.dim(); ++d) {
            b.x_lo.push_back(k.anchor().x[d] - k.r());
            b.x_hi.push_back(k.anchor().x[d] + k.r());
        }
        b.t_lo = base + breakpoint(k.sigma(), rs, i);
        b.t_hi = base + breakpoint(k.sigma(), rs, i + 1);
        boxes.push_back(std::move(b));
    }
    return CubeRegion::from_boxes(std::move(boxes));
}

CubeRegion expansion(const ParabolicCube& k, int m) {
    require_elongation_base(k);
    if (m < 0) throw std::invalid_argument("expansion: m must be nonnegative");
    const double rs = std::pow(k.r(), k.sigma());
    const double base = k.time_lo();
    std::vector<Box> boxes;
    for (int i = 0; i <= m; ++i) {
        const double hw = std::pow(3.0, i) * k.r();
        Box b;
        for (int d = 0; d < k.dim(); ++d) {
            b.x_lo.push_back(k.anchor().x[d] - hw);
            b.x_hi.push_back(k.anchor().x[d] + hw);
        }
        b.t_lo = base + breakpoint(k.sigma(), rs, i);
        b.t_hi = base + breakpoint(k.sigma(), rs, i + 1);
        boxes.push_back(std::move(b));
    }
    return CubeRegion::from_boxes(std::move(boxes));
}

// --- dyadic cubes -----------------------------------------------------------

DyadicCube DyadicCube::root(int n, SplitRule rule) {
    return DyadicCube(n, rule, 0, std::vector<std::int64_t>(n, 0), 0);
}

DyadicCube::DyadicCube(int n, SplitRule rule, int depth, std::vector<std::int64_t> ix, std::int64_t it)
    : n_(n), rule_(rule), depth_(depth), ix_(std::move(ix)), it_(it) {
    if (rule_.p < 1 || rule_.q < 1) throw std::invalid_argument("SplitRule: p,q must be >= 1");
    if (static_cast<int>(ix_.size()) != n_) throw std::invalid_argument("DyadicCube: index size mismatch");
}

Rational DyadicCube::spatial_halfwidth() const { return Rational::dyadic(1, rule_.q * depth_); }

Rational DyadicCube::x_lo(int d) const {
    // -1 + 2 * ix / 2^{q depth}
    return Rational(-1) + Rational::dyadic(2 * ix_[d], rule_.q * depth_);
}

Rational DyadicCube::x_hi(int d) const {
    return Rational(-1) + Rational::dyadic(2 * (ix_[d] + 1), rule_.q * depth_);
}

Rational DyadicCube::t_lo() const { return Rational::dyadic(it_, rule_.p * depth_); }

Rational DyadicCube::t_hi() const { return Rational::dyadic(it_ + 1, rule_.p * depth_); }

Rational DyadicCube::measure() const {
    Rational m = t_hi() - t_lo();
    for (int d = 0; d < n_; ++d) m *= x_hi(d) - x_lo(d);
    return m;
}

ExactBox DyadicCube::box() const {
    ExactBox b;
    for (int d = 0; d < n_; ++d) {
        b.x_lo.push_back(x_lo(d));
        b.x_hi.push_back(x_hi(d));
    }
    b.t_lo = t_lo();
    b.t_hi = t_hi();
    return b;
}

std::vector<DyadicCube> DyadicCube::split() const {
    const std::int64_t sx = std::int64_t(1) << rule_.q;
    const std::int64_t st = std::int64_t(1) << rule_.p;
    std::vector<DyadicCube> out;
    std::vector<std::int64_t> child_ix(n_, 0);
    // enumerate spatial offsets in lexicographic order, time fastest last
    std::vector<std::int64_t> offs(n_, 0);
    while (true) {
        for (std::int64_t jt = 0; jt < st; ++jt) {
            for (int d = 0; d < n_; ++d) child_ix[d] = ix_[d] * sx + offs[d];
            out.emplace_back(n_, rule_, depth_ + 1, child_ix, it_ * st + jt);
        }
        int d = n_ - 1;
        while (d >= 0 && ++offs[d] == sx) offs[d--] = 0;
        if (d < 0) break;
    }
    return out;
}

std::optional<DyadicCube> DyadicCube::parent() const {
    if (depth_ == 0) return std::nullopt;
    std::vector<std::int64_t> pix(n_);
    for (int d = 0; d < n_; ++d) pix[d] = ix_[d] >> rule_.q;
    return DyadicCube(n_, rule_, depth_ - 1, std::move(pix), it_ >> rule_.p);
}

bool DyadicCube::contains(const DyadicCube& other) const {
    if (other.depth_ < depth_) return false;
    const int dd = other.depth_ - depth_;
    for (int d = 0; d < n_; ++d)
        if (other.ix_[d] >> (rule_.q * dd) != ix_[d]) return false;
    return other.it_ >> (rule_.p * dd) == it_;
}

bool DyadicCube::operator==(const DyadicCube& other) const {
    return depth_ == other.depth_ && ix_ == other.ix_ && it_ == other.it_;
}

std::vector<DyadicCube> dyadic_split(const DyadicCube& k, SplitRule rule) {
    if (k.depth() > 0 && (rule.p != k.rule().p || rule.q != k.rule().q))
        throw std::invalid_argument("dyadic_split: rule must match the cube's tree below the root");
    DyadicCube c(k.dim(), rule, k.depth(), k.space_index(), k.time_index());
    return c.split();
}

namespace {

// Keep only maximal cubes (dedupe, then drop cubes nested inside another).
std::vector<DyadicCube> normalize_union(const std::vector<DyadicCube>& a) {
    std::vector<DyadicCube> uniq;
    for (const auto& c : a) {
        bool dup = false;
        for (const auto& u : uniq)
            if (u == c) { dup = true; break; }
        if (!dup) uniq.push_back(c);
    }
    std::vector<DyadicCube> out;
    for (std::size_t i = 0; i < uniq.size(); ++i) {
        bool covered = false;
        for (std::size_t j = 0; j < uniq.size() && !covered; ++j)
            if (i != j && uniq[j].contains(uniq[i])) covered = true;
        if (!covered) out.push_back(uniq[i]);
    }
    return out;
}

// |K ∩ A| for A a disjoint list of tree cubes.
Rational intersection_measure(const DyadicCube& k, const std::vector<DyadicCube>& a) {
    Rational m(0);
    for (const auto& c : a) {
        if (k.contains(c))
            m += c.measure();
        else if (c.contains(k))
            return k.measure();
    }
    return m;
}

int max_depth(const std::vector<DyadicCube>& a) {
    int d = 0;
    for (const auto& c : a) d = std::max(d, c.depth());
    return d;
}

void select_cubes(const DyadicCube& k, const std::vector<DyadicCube>& a, const Rational& delta, int depth_cap,
                  std::vector<DyadicCube>& out) {
    const Rational inter = intersection_measure(k, a);
    if (inter.num() == 0) return;
    if (inter >= delta * k.measure()) {
        out.push_back(k);
        return;
    }
    if (k.depth() > depth_cap) return; // cannot happen: below A's depth density is 0 or 1
    for (const auto& child : k.split()) select_cubes(child, a, delta, depth_cap, out);
}

} // namespace

Rational dyadic_union_measure(const std::vector<DyadicCube>& a) {
    Rational m(0);
    for (const auto& c : normalize_union(a)) m += c.measure();
    return m;
}

CzResult cz_decompose(const std::vector<DyadicCube>& a_in, const Rational& delta, int m, CzMode mode) {
    if (!(Rational(0) < delta && delta < Rational(1)))
        throw std::invalid_argument("cz_decompose: delta must lie in (0,1)");
    if (m < 0) throw std::invalid_argument("cz_decompose: m must be nonnegative");

    CzResult res;
    if (a_in.empty()) return res;
    const int n = a_in.front().dim();
    const SplitRule rule = a_in.front().rule();
    if (rule.p != rule.q)
        throw std::invalid_argument("cz_decompose: exact arithmetic requires rule.p == rule.q (sigma = 1)");

    const std::vector<DyadicCube> a = normalize_union(a_in);
    res.measure_a = dyadic_union_measure(a);

    select_cubes(DyadicCube::root(n, rule), a, delta, max_depth(a), res.selected);

    // sigma = 1: breakpoints (3^{i} - 1)/2 * r, exact rationals.
    std::vector<ExactBox> boxes;
    for (const auto& k : res.selected) {
        const Rational r = k.spatial_halfwidth();
        const Rational base = k.t_lo();
        auto bp = [&](int i) {
            long long p3 = 1;
            for (int j = 0; j < i; ++j) p3 *= 3;
            return Rational(p3 - 1, 2) * r;
        };
        auto spatial = [&](ExactBox& b) {
            for (int d = 0; d < n; ++d) {
                // clip to {|x^i| <= 1}: spatial boxes of tree cubes already lie inside
                b.x_lo.push_back(max(k.x_lo(d), Rational(-1)));
                b.x_hi.push_back(min(k.x_hi(d), Rational(1)));
            }
        };
        if (mode == CzMode::elongation_clipped) {
            for (int i = 0; i <= m; ++i) {
                ExactBox b;
                spatial(b);
                b.t_lo = base + bp(i);
                b.t_hi = base + bp(i + 1);
                boxes.push_back(std::move(b));
            }
        } else {
            ExactBox b;
            spatial(b);
            b.t_lo = base;
            b.t_hi = base + bp(m + 1);
            boxes.push_back(std::move(b));
        }
    }
    res.region = ExactCubeRegion::from_boxes(std::move(boxes));
    return res;
}

// --- serialization ----------------------------------------------------------

std::string dyadic_tree_to_json(double sigma, SplitRule rule, const std::vector<DyadicCube>& cubes) {
    nlohmann::json j;
    j["sigma"] = sigma;
    j["rule"] = {rule.p, rule.q};
    j["cubes"] = nlohmann::json::array();
    for (const auto& c : cubes) {
        nlohmann::json jc;
        jc["depth"] = c.depth();
        std::vector<std::int64_t> idx(c.space_index());
        idx.push_back(c.time_index());
        jc["index"] = idx;
        j["cubes"].push_back(jc);
    }
    return j.dump();
}

std::vector<DyadicCube> dyadic_tree_from_json(const std::string& text, int n, double* sigma_out,
                                              SplitRule* rule_out) {
    const auto j = nlohmann::json::parse(text);
    SplitRule rule{j.at("rule").at(0).get<int>(), j.at("rule").at(1).get<int>()};
    if (sigma_out) *sigma_out = j.at("sigma").get<double>();
    if (rule_out) *rule_out = rule;
    std::vector<DyadicCube> out;
    for (const auto& jc : j.at("cubes")) {
        auto idx = jc.at("index").get<std::vector<std::int64_t>>();
        if (static_cast<int>(idx.size()) != n + 1)
            throw std::invalid_argument("dyadic_tree_from_json: index length mismatch");
        std::vector<std::int64_t> ix(idx.begin(), idx.end() - 1);
        out.emplace_back(n, rule, jc.at("depth").get<int>(), std::move(ix), idx.back());
    }
    return out;
}

namespace {

template <class S>
nlohmann::json region_json(double sigma, const BasicCubeRegion<S>& region, bool exact) {
    nlohmann::json j;
    j["sigma"] = sigma;
    j["boxes"] = nlohmann::json::array();
    for (const auto& b : region.boxes()) {
        nlohmann::json jb;
        for (int d = 0; d < b.dim(); ++d) {
            if constexpr (std::is_same_v<S, Rational>) {
                jb["x_lo"].push_back(b.x_lo[d].to_double());
                jb["x_hi"].push_back(b.x_hi[d].to_double());
            } else {
                jb["x_lo"].push_back(b.x_lo[d]);
                jb["x_hi"].push_back(b.x_hi[d]);
            }
        }
        if constexpr (std::is_same_v<S, Rational>) {
            jb["t_lo"] = b.t_lo.to_double();
            jb["t_hi"] = b.t_hi.to_double();
        } else {
            jb["t_lo"] = b.t_lo;
            jb["t_hi"] = b.t_hi;
        }
        j["boxes"].push_back(jb);
    }
    if constexpr (std::is_same_v<S, Rational>) {
        j["measure"] = region.measure().to_double();
        j["measure_exact"] = region.measure().str();
    } else {
        j["measure"] = region.measure();
    }
    j["exact"] = exact;
    return j;
}

} // namespace

std::string region_to_json(double sigma, const CubeRegion& region) {
    return region_json(sigma, region, false).dump();
}

std::string region_to_json(double sigma, const ExactCubeRegion& region) {
    return region_json(sigma, region, true).dump();
}

} // namespace nplab::geometry
