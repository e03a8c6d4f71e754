#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "geometry.hpp"
#include "norms.hpp"

namespace cdtw {

// Convex hull (Andrew's monotone chain), CCW, no duplicate endpoint.
inline std::vector<Point2> convex_hull(std::vector<Point2> pts) {
    std::sort(pts.begin(), pts.end(), [](Point2 a, Point2 b) {
        return a.x < b.x || (a.x == b.x && a.y < b.y);
    });
    pts.erase(std::unique(pts.begin(), pts.end(), [](Point2 a, Point2 b) { return a == b; }),
              pts.end());
    if (pts.size() < 3) return pts;
    std::vector<Point2> h(2 * pts.size());
    std::size_t k = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        while (k >= 2 && cross(h[k - 1] - h[k - 2], pts[i] - h[k - 2]) <= 0) --k;
        h[k++] = pts[i];
    }
    for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
        while (k >= t && cross(h[k - 1] - h[k - 2], pts[i] - h[k - 2]) <= 0) --k;
        h[k++] = pts[i];
    }
    h.resize(k - 1);
    return h;
}

// Random balanced convex polygon with roughly 2*half_count vertices.
inline GaugePolygon random_gauge(std::mt19937& rng, int half_count) {
    std::uniform_real_distribution<double> radius(0.5, 2.0);
    std::uniform_real_distribution<double> jitter(0.15, 0.85);
    for (int attempt = 0; attempt < 32; ++attempt) {
        std::vector<Point2> pts;
        for (int i = 0; i < half_count; ++i) {
            double th = M_PI * (double(i) + jitter(rng)) / double(half_count);
            double r = radius(rng);
            pts.push_back({r * std::cos(th), r * std::sin(th)});
        }
        std::vector<Point2> all;
        for (auto p : pts) {
            all.push_back(p);
            all.push_back(-p);
        }
        std::vector<Point2> hull = convex_hull(all);
        if (hull.size() < 4) continue;
        try {
            return GaugePolygon(hull);
        } catch (const std::exception&) {
        }
    }
    return l1_unit_polygon();
}

// Random curve as a bounded-step walk; consecutive vertices distinct.
inline PolygonalCurve random_curve(std::mt19937& rng, int segments, double step = 1.0) {
    std::uniform_real_distribution<double> u(-step, step);
    std::vector<Point2> v;
    Point2 at{u(rng), u(rng)};
    v.push_back(at);
    while (int(v.size()) < segments + 1) {
        Point2 d{u(rng), u(rng)};
        if (std::abs(d.x) + std::abs(d.y) < 1e-3 * step) continue;
        at = at + d;
        v.push_back(at);
    }
    return PolygonalCurve(v);
}

}  // namespace cdtw
