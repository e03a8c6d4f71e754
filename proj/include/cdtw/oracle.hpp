#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <vector>

#include "cell.hpp"
#include "geometry.hpp"
#include "norms.hpp"
#include "point.hpp"

namespace cdtw {

struct GridConfig {
    int g{64};  // subdivisions per cell side
};

struct NumericIntegrator {
    int steps{1024};
};

struct MonotonePath {
    std::vector<Point2> waypoints;  // parameter-space, coordinatewise nondecreasing
};

namespace detail {

struct ParamSpace {
    const PolygonalCurve* P;
    const PolygonalCurve* Q;
    const ArcTable* tp;
    const ArcTable* tq;
    const NormHandle* norm;

    double dist(double s, double t) const {
        return norm_eval(*norm, point_at(*P, *tp, s) - point_at(*Q, *tq, t));
    }
};

// Cuts of (0,1] where the straight segment a->b crosses a cell boundary.
inline void collect_cell_cuts(const ArcTable& tab, double a, double b, std::vector<double>& cuts) {
    if (b <= a) return;
    for (double p : tab.prefix)
        if (p > a && p < b) cuts.push_back((p - a) / (b - a));
}

// Trapezoid integral of dist along the straight parameter-space segment a->b,
// weighted by the segment's 1-norm length, split at cell boundaries.
inline double segment_integral(const ParamSpace& ps, Point2 a, Point2 b, int steps) {
    double mass = (b.x - a.x) + (b.y - a.y);
    if (mass <= 0.0) return 0.0;
    std::vector<double> cuts{0.0, 1.0};
    collect_cell_cuts(*ps.tp, a.x, b.x, cuts);
    collect_cell_cuts(*ps.tq, a.y, b.y, cuts);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        double f0 = cuts[k], f1 = cuts[k + 1];
        int n = std::max(1, int(std::ceil(steps * (f1 - f0))));
        double h = (f1 - f0) / n;
        double acc = 0.0;
        for (int i = 0; i <= n; ++i) {
            double f = f0 + h * i;
            double v = ps.dist(a.x + f * (b.x - a.x), a.y + f * (b.y - a.y));
            acc += (i == 0 || i == n) ? 0.5 * v : v;
        }
        total += acc * h;
    }
    return total * mass;
}

}  // namespace detail

inline double path_cost_numeric(const PolygonalCurve& P, const PolygonalCurve& Q,
                                const MonotonePath& path, const NormHandle& norm,
                                NumericIntegrator integ = {}) {
    if (integ.steps < 16) throw std::invalid_argument("integrator: steps must be >= 16");
    ArcTable tp = build_arc_table(P, norm), tq = build_arc_table(Q, norm);
    detail::ParamSpace ps{&P, &Q, &tp, &tq, &norm};
    double tol = 1e-9 * (1.0 + tp.total() + tq.total());
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < path.waypoints.size(); ++k) {
        Point2 a = path.waypoints[k], b = path.waypoints[k + 1];
        if (b.x < a.x - tol || b.y < a.y - tol)
            throw std::invalid_argument("path_cost_numeric: path not monotone");
        total += detail::segment_integral(ps, a, b, integ.steps);
    }
    return total;
}

// Discretized CDTW: DP over a per-cell-subdivided grid with moves
// (1,0),(0,1),(1,1),(1,2),(2,1).  value converges to cdtw from above;
// lower_hint subtracts the heuristic additive mesh bound.
struct GridResult {
    double lower_hint{0};
    double value{0};
};

inline GridResult grid_cdtw(const PolygonalCurve& P, const PolygonalCurve& Q,
                            const NormHandle& norm, GridConfig cfg = {}) {
    if (cfg.g < 2) throw std::invalid_argument("grid_cdtw: g must be >= 2");
    ArcTable tp = build_arc_table(P, norm), tq = build_arc_table(Q, norm);
    detail::ParamSpace ps{&P, &Q, &tp, &tq, &norm};

    const std::size_t n = P.segments(), m = Q.segments();
    const std::size_t W = n * std::size_t(cfg.g) + 1, H = m * std::size_t(cfg.g) + 1;

    double limit_mb = 512.0;
    if (const char* env = std::getenv("CDTW_MEM_LIMIT_MB")) limit_mb = std::atof(env);
    double need_mb = double(W) * double(H) * 2.0 * sizeof(double) / (1024.0 * 1024.0);
    if (need_mb > limit_mb)
        throw std::runtime_error("grid_cdtw: grid of " + std::to_string(W) + "x" +
                                 std::to_string(H) + " needs " + std::to_string(need_mb) +
                                 " MB, over CDTW_MEM_LIMIT_MB=" + std::to_string(limit_mb));

    std::vector<double> scoord(W), tcoord(H);
    for (std::size_t a = 0; a < W; ++a) {
        std::size_t ci = std::min(a / cfg.g, n - 1);
        double f = double(a - ci * cfg.g) / cfg.g;
        scoord[a] = tp.prefix[ci] + f * (tp.prefix[ci + 1] - tp.prefix[ci]);
    }
    for (std::size_t b = 0; b < H; ++b) {
        std::size_t cj = std::min(b / cfg.g, m - 1);
        double f = double(b - cj * cfg.g) / cfg.g;
        tcoord[b] = tq.prefix[cj] + f * (tq.prefix[cj + 1] - tq.prefix[cj]);
    }
    std::vector<double> dfield(W * H);
    for (std::size_t b = 0; b < H; ++b)
        for (std::size_t a = 0; a < W; ++a) dfield[b * W + a] = ps.dist(scoord[a], tcoord[b]);

    // trapezoid edge cost split at cell boundaries; within one cell the
    // distance is convex along the edge, so this overestimates
    auto edge_cost = [&](std::size_t a0, std::size_t b0, std::size_t a1, std::size_t b1) {
        Point2 p{scoord[a0], tcoord[b0]}, q{scoord[a1], tcoord[b1]};
        double mass = (q.x - p.x) + (q.y - p.y);
        std::vector<double> cuts{0.0, 1.0};
        if (a1 > a0 + 1) cuts.push_back(0.5);
        if (b1 > b0 + 1) {
            cuts.push_back(1.0 / double(b1 - b0));
            if (b1 - b0 > 1) cuts.push_back(double(b1 - b0 - 1) / double(b1 - b0));
        }
        detail::collect_cell_cuts(tp, p.x, q.x, cuts);
        detail::collect_cell_cuts(tq, p.y, q.y, cuts);
        std::sort(cuts.begin(), cuts.end());
        cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
        double acc = 0.0;
        double prev_f = 0.0, prev_v = dfield[b0 * W + a0];
        for (std::size_t k = 1; k < cuts.size(); ++k) {
            double f = cuts[k];
            double v = (f == 1.0) ? dfield[b1 * W + a1]
                                  : ps.dist(p.x + f * (q.x - p.x), p.y + f * (q.y - p.y));
            acc += 0.5 * (prev_v + v) * (f - prev_f);
            prev_f = f;
            prev_v = v;
        }
        return acc * mass;
    };

    const double INF = std::numeric_limits<double>::infinity();
    std::vector<double> dist(W * H, INF);
    dist[0] = 0.0;
    const int moves[5][2] = {{1, 0}, {0, 1}, {1, 1}, {1, 2}, {2, 1}};
    for (std::size_t b = 0; b < H; ++b) {
        for (std::size_t a = 0; a < W; ++a) {
            double d = dist[b * W + a];
            if (d == INF) continue;
            for (auto& mv : moves) {
                std::size_t a1 = a + mv[0], b1 = b + mv[1];
                if (a1 >= W || b1 >= H) continue;
                double nd = d + edge_cost(a, b, a1, b1);
                if (nd < dist[b1 * W + a1]) dist[b1 * W + a1] = nd;
            }
        }
    }
    GridResult r;
    r.value = dist[(H - 1) * W + (W - 1)];
    double mesh = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        mesh = std::max(mesh, (tp.prefix[i + 1] - tp.prefix[i]) / cfg.g);
    for (std::size_t j = 0; j < m; ++j)
        mesh = std::max(mesh, (tq.prefix[j + 1] - tq.prefix[j]) / cfg.g);
    r.lower_hint = r.value - 2.0 * mesh * (tp.total() + tq.total());
    return r;
}

// cost(gamma_yx) / cost(gamma_xy): the two-bend paths through (y1,x2) and
// (x1,y2) respectively.
inline double lemma1_ratio(const PolygonalCurve& P, const PolygonalCurve& Q, Point2 x, Point2 y,
                           const NormHandle& norm, NumericIntegrator integ = {}) {
    MonotonePath gxy{{x, {x.x, y.y}, y}};
    MonotonePath gyx{{x, {y.x, x.y}, y}};
    double cxy = path_cost_numeric(P, Q, gxy, norm, integ);
    double cyx = path_cost_numeric(P, Q, gyx, norm, integ);
    if (cxy <= 0.0 && cyx <= 0.0)
        throw std::domain_error("lemma1_ratio: both path costs vanish, ratio undefined");
    if (cxy <= 0.0) throw std::domain_error("lemma1_ratio: gamma_xy cost vanishes");
    return cyx / cxy;
}

}  // namespace cdtw
