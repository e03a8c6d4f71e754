#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "norms.hpp"
#include "point.hpp"

namespace cdtw {

class PolygonalCurve {
public:
    explicit PolygonalCurve(std::vector<Point2> vertices) : verts_(std::move(vertices)) {
        if (verts_.size() < 2)
            throw std::invalid_argument("curve: needs at least two vertices (one segment)");
        double scale = 0.0;
        for (auto& v : verts_) {
            require_finite(v, "curve vertex");
            scale = std::max({scale, std::abs(v.x), std::abs(v.y)});
        }
        for (std::size_t i = 1; i < verts_.size(); ++i) {
            Point2 d = verts_[i] - verts_[i - 1];
            if (std::abs(d.x) <= 1e-12 * std::max(1.0, scale) &&
                std::abs(d.y) <= 1e-12 * std::max(1.0, scale))
                throw std::invalid_argument("curve: duplicate consecutive vertices at index " +
                                            std::to_string(i));
        }
    }

    std::size_t segments() const { return verts_.size() - 1; }
    const std::vector<Point2>& vertices() const { return verts_; }
    Point2 vertex(std::size_t i) const { return verts_[i]; }
    Point2 segment_dir(std::size_t i) const { return verts_[i + 1] - verts_[i]; }  // i in [0, n)

private:
    std::vector<Point2> verts_;
};

struct ArcTable {
    std::vector<double> prefix;  // prefix[i] = arc length of the first i segments

    double total() const { return prefix.back(); }
    double tolerance() const { return 1e-9 * std::max(1.0, total()); }

    // Segment index containing parameter s (clamped into range).
    std::size_t segment_at(double s) const {
        if (s < -tolerance() || s > total() + tolerance())
            throw std::domain_error("arc parameter out of range");
        auto it = std::upper_bound(prefix.begin(), prefix.end(), s);
        std::size_t i = (it == prefix.begin()) ? 0 : std::size_t(it - prefix.begin()) - 1;
        return std::min(i, prefix.size() - 2);
    }
};

inline ArcTable build_arc_table(const PolygonalCurve& curve, const NormHandle& norm) {
    ArcTable t;
    t.prefix.resize(curve.vertices().size());
    t.prefix[0] = 0.0;
    for (std::size_t i = 0; i + 1 < curve.vertices().size(); ++i)
        t.prefix[i + 1] = t.prefix[i] + norm_eval(norm, curve.segment_dir(i));
    return t;
}

inline double arc_length(const PolygonalCurve& curve, const NormHandle& norm) {
    double s = 0.0;
    for (std::size_t i = 0; i < curve.segments(); ++i) s += norm_eval(norm, curve.segment_dir(i));
    return s;
}

inline Point2 point_at(const PolygonalCurve& curve, const ArcTable& table, double s) {
    std::size_t i = table.segment_at(s);
    double len = table.prefix[i + 1] - table.prefix[i];
    double f = std::clamp((s - table.prefix[i]) / len, 0.0, 1.0);
    return curve.vertex(i) + f * curve.segment_dir(i);
}

}  // namespace cdtw
