#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "point.hpp"

namespace cdtw {

// Norm whose unit ball is a balanced convex polygon K.  The gauge G_K is
// linear on each cone spanned by two adjacent vertices, with value given by a
// precomputed evaluation vector per cone.
class GaugePolygon {
public:
    GaugePolygon() = default;

    explicit GaugePolygon(std::vector<Point2> vertices) : verts_(std::move(vertices)) {
        normalize_and_validate();
        build_cones();
    }

    std::size_t cone_count() const { return verts_.size(); }
    const std::vector<Point2>& vertices() const { return verts_; }
    Point2 vertex(std::size_t i) const { return verts_[i % verts_.size()]; }

    // Evaluation vector e of cone i (spanned by v_i, v_{i+1}): G(z) = dot(e, z)
    // for z in that cone.
    Point2 evaluation_vector(std::size_t i) const {
        if (i >= eval_.size()) throw std::out_of_range("cone index out of range");
        return eval_[i];
    }

    // Index of the cone containing z (z != 0).  Points on a shared ray belong
    // to the lower-index cone.
    std::size_t cone_index(Point2 z) const {
        const std::size_t k = verts_.size();
        // strictly_before(i) is true on a prefix of 0..k-1 in CCW vertex order;
        // with c = count of true entries, z lies in cone (c-1 mod k).
        std::size_t lo = 0, hi = k;  // first false index is in (lo, hi] once lo is true
        if (!strictly_before(0, z)) return k - 1;
        while (hi - lo > 1) {
            std::size_t mid = (lo + hi) / 2;
            if (strictly_before(mid, z))
                lo = mid;
            else
                hi = mid;
        }
        return lo;  // c = lo + 1, cone = c - 1
    }

    double operator()(Point2 z) const {
        if (z.x == 0.0 && z.y == 0.0) return 0.0;
        const std::size_t i = cone_index(z);
        double v = dot(eval_[i], z);
        return v < 0.0 ? 0.0 : v;
    }

    double eval_brute(Point2 z) const {
        if (z.x == 0.0 && z.y == 0.0) return 0.0;
        double best = -1.0;
        const std::size_t k = verts_.size();
        for (std::size_t i = 0; i < k; ++i) {
            Point2 v = verts_[i], w = verts_[(i + 1) % k];
            if (cross(v, z) >= 0.0 && cross(z, w) >= 0.0) {
                double val = dot(eval_[i], z);
                if (best < 0.0 || val < best) best = val;
            }
        }
        return best;
    }

private:
    std::vector<Point2> verts_;
    std::vector<Point2> eval_;

    // Half-turn index of direction p in the CCW sweep starting at v_0.
    int half_of(Point2 p) const {
        double c = cross(verts_[0], p);
        return (c > 0.0 || (c == 0.0 && dot(verts_[0], p) > 0.0)) ? 0 : 1;
    }

    // True iff the ray of v_i comes strictly before direction z in the CCW
    // sweep starting at v_0 (v_0 itself counts as before everything except z
    // on its own ray).
    bool strictly_before(std::size_t i, Point2 z) const {
        int hv = (i == 0) ? 0 : half_of(verts_[i]);
        int hz = half_of(z);
        if (hv != hz) return hv < hz;
        return cross(verts_[i], z) > 0.0;
    }

    void normalize_and_validate() {
        const std::size_t k = verts_.size();
        if (k < 4) throw std::invalid_argument("gauge polygon: needs at least 4 vertices");
        if (k % 2 != 0) throw std::invalid_argument("gauge polygon: not balanced (odd vertex count)");
        for (auto& v : verts_) require_finite(v, "gauge polygon vertex");

        double scale = 0.0;
        for (auto& v : verts_) scale = std::max({scale, std::abs(v.x), std::abs(v.y)});
        if (scale <= 0.0) throw std::invalid_argument("gauge polygon: degenerate (all vertices zero)");

        // merge near-collinear adjacent vertices
        std::vector<Point2> merged;
        for (std::size_t i = 0; i < verts_.size(); ++i) {
            Point2 prev = verts_[(i + verts_.size() - 1) % verts_.size()];
            Point2 cur = verts_[i];
            Point2 next = verts_[(i + 1) % verts_.size()];
            if (std::abs(cross(cur - prev, next - cur)) >= 1e-12 * scale * scale)
                merged.push_back(cur);
        }
        if (merged.size() >= 4 && merged.size() % 2 == 0) verts_ = std::move(merged);

        const std::size_t n = verts_.size();
        if (n < 4 || n % 2 != 0)
            throw std::invalid_argument("gauge polygon: not balanced after collinear merge");

        // convex & CCW
        for (std::size_t i = 0; i < n; ++i) {
            Point2 a = verts_[i], b = verts_[(i + 1) % n], c = verts_[(i + 2) % n];
            if (cross(b - a, c - b) <= 0.0)
                throw std::invalid_argument("gauge polygon: not convex (or not counter-clockwise)");
        }
        // balanced: v_{i+n/2} == -v_i
        for (std::size_t i = 0; i < n / 2; ++i) {
            Point2 d = verts_[i] + verts_[i + n / 2];
            if (std::abs(d.x) > 1e-9 * scale || std::abs(d.y) > 1e-9 * scale)
                throw std::invalid_argument("gauge polygon: not balanced (missing -v for some vertex v)");
        }
        // origin strictly inside
        for (std::size_t i = 0; i < n; ++i) {
            Point2 a = verts_[i], b = verts_[(i + 1) % n];
            if (cross(b - a, Point2{} - a) <= 0.0)
                throw std::invalid_argument("gauge polygon: origin not strictly interior");
        }
    }

    void build_cones() {
        const std::size_t n = verts_.size();
        eval_.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            Point2 v = verts_[i], w = verts_[(i + 1) % n];
            double den = cross(v, w);
            eval_[i] = Point2{(w.y - v.y) / den, (v.x - w.x) / den};
        }
    }
};

inline GaugePolygon l1_unit_polygon() {
    return GaugePolygon({{1, 0}, {0, 1}, {-1, 0}, {0, -1}});
}

inline GaugePolygon linf_unit_polygon() {
    return GaugePolygon({{1, -1}, {1, 1}, {-1, 1}, {-1, -1}});
}

enum class NormKind { L1, L2, Linf, Gauge };

struct NormHandle {
    NormKind kind{NormKind::L1};
    GaugePolygon polygon;  // used iff kind == Gauge

    static NormHandle l1() { return {NormKind::L1, {}}; }
    static NormHandle l2() { return {NormKind::L2, {}}; }
    static NormHandle linf() { return {NormKind::Linf, {}}; }
    static NormHandle gauge(GaugePolygon k) { return {NormKind::Gauge, std::move(k)}; }

    bool is_polygonal() const { return kind != NormKind::L2; }

    // The gauge polygon realizing this norm; L2 has none.
    GaugePolygon as_polygon() const {
        switch (kind) {
            case NormKind::L1: return l1_unit_polygon();
            case NormKind::Linf: return linf_unit_polygon();
            case NormKind::Gauge: return polygon;
            case NormKind::L2:
                throw std::invalid_argument(
                    "L2 is not polygonal; apply approximate_norm(eps) first");
        }
        throw std::logic_error("unreachable");
    }
};

inline double norm_eval(const NormHandle& norm, Point2 z) {
    switch (norm.kind) {
        case NormKind::L1: return std::abs(z.x) + std::abs(z.y);
        case NormKind::L2: return std::hypot(z.x, z.y);
        case NormKind::Linf: return std::max(std::abs(z.x), std::abs(z.y));
        case NormKind::Gauge: return norm.polygon(z);
    }
    throw std::logic_error("unreachable");
}

struct ApproxConfig {
    double epsilon{0.01};
};

// Regular 2m-gon inscribed in the Euclidean unit disk, m minimal with
// sec(pi/(2m)) <= 1+eps, so that norm <= G_K <= (1+eps)*norm.
inline GaugePolygon approximate_l2(double epsilon) {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon))
        throw std::invalid_argument("approximate_norm: epsilon must be positive and finite");
    std::size_t m = 2;
    while (1.0 / std::cos(M_PI / double(2 * m)) > 1.0 + epsilon) ++m;
    const std::size_t n = 2 * m;
    std::vector<Point2> verts(n);
    for (std::size_t j = 0; j < n; ++j) {
        double th = 2.0 * M_PI * double(j) / double(n);
        verts[j] = {std::cos(th), std::sin(th)};
        if (j >= m) verts[j] = -verts[j - m];  // exact central symmetry
    }
    return GaugePolygon(std::move(verts));
}

inline GaugePolygon approximate_norm(const NormHandle& norm, ApproxConfig cfg) {
    if (!(cfg.epsilon > 0.0) || !std::isfinite(cfg.epsilon))
        throw std::invalid_argument("approximate_norm: epsilon must be positive and finite");
    switch (norm.kind) {
        case NormKind::L1: return l1_unit_polygon();
        case NormKind::Linf: return linf_unit_polygon();
        case NormKind::Gauge: return norm.polygon;
        case NormKind::L2: return approximate_l2(cfg.epsilon);
    }
    throw std::logic_error("unreachable");
}

// Best-effort polygonalization of a black-box norm: sample the unit sphere at
// 2m directions and take the sampled boundary points as vertices.  Valid only
// for norms whose unit ball is convex and symmetric (i.e. actual norms).
template <class Fn>
GaugePolygon approximate_norm_blackbox(Fn&& norm_fn, double epsilon) {
    if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
    std::size_t m = 2;
    while (1.0 / std::cos(M_PI / double(2 * m)) > 1.0 + epsilon) ++m;
    const std::size_t n = 2 * m;
    std::vector<Point2> verts(n);
    for (std::size_t j = 0; j < m; ++j) {
        double th = 2.0 * M_PI * double(j) / double(n);
        Point2 d{std::cos(th), std::sin(th)};
        double v = norm_fn(d);
        if (!(v > 0.0) || !std::isfinite(v))
            throw std::invalid_argument("black-box norm returned non-positive value on unit circle");
        verts[j] = d * (1.0 / v);
        verts[j + m] = -verts[j];
    }
    return GaugePolygon(std::move(verts));
}

// Throwing validation is in the constructor; this wraps it into a message.
inline std::string validate_gauge(const std::vector<Point2>& vertices) {
    try {
        GaugePolygon k(vertices);
        return {};
    } catch (const std::exception& e) {
        return e.what();
    }
}

}  // namespace cdtw
