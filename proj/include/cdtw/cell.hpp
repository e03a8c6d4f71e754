#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

#include "geometry.hpp"
#include "norms.hpp"
#include "point.hpp"
#include "pwq.hpp"

namespace cdtw {

enum class ValleyKind { line, degenerate };

// Valley line t = m*s + c of the cell's distance terrain.  kind==degenerate
// marks a slope that had to be clamped away from 0 or infinity.
struct Valley {
    ValleyKind kind{ValleyKind::line};
    double m{1.0};
    double c{0.0};

    double at(double x) const { return m * x + c; }
    double inv(double y) const { return (y - c) / m; }
};

// One parameter-space cell.  psi(s,t) = P(s) - Q(t) = D0 + s*dP - t*dQ with
// unit-speed directions dP, dQ under the equipped gauge.
struct Cell {
    std::size_t i{0}, j{0};
    double sx0{0}, sx1{1}, sy0{0}, sy1{1};
    Point2 D0, dP, dQ;
    const GaugePolygon* K{nullptr};
    Valley valley;

    Point2 psi(double s, double t) const { return D0 + s * dP - t * dQ; }
    double width() const { return sx1 - sx0; }
    double height() const { return sy1 - sy0; }
    double span() const { return width() + height(); }
    Point2 ne() const { return {sx1, sy1}; }
};

// ---------------------------------------------------------------------------
// Closed-form gauge integrals along affine maps

namespace detail {

// Parameters where mu -> z0 + mu*zd leaves its current gauge cone, within
// (l0, l1) exclusive.
inline std::vector<double> cone_crossings(const GaugePolygon& K, Point2 z0, Point2 zd, double l0,
                                          double l1) {
    std::vector<double> out;
    const double span = std::abs(l0) + std::abs(l1) + 1.0;
    const double zscale =
        std::max({1.0, std::abs(z0.x), std::abs(z0.y)}) + span * std::max(std::abs(zd.x), std::abs(zd.y));
    for (std::size_t i = 0; i < K.cone_count(); ++i) {
        Point2 v = K.vertex(i);
        double den = cross(v, zd);
        if (std::abs(den) < 1e-15 * zscale) continue;
        double mu = -cross(v, z0) / den;
        if (!(mu > l0 && mu < l1)) continue;
        if (dot(v, z0 + mu * zd) > 0.0) out.push_back(mu);
    }
    // trajectory through the origin: every ray is touched there but the dot
    // test filters all of them out, so add the kink explicitly
    double dd = dot(zd, zd);
    if (dd > 0.0 && std::abs(cross(z0, zd)) <= 1e-12 * zscale * zscale) {
        double mu0 = -dot(z0, zd) / dd;
        if (mu0 > l0 && mu0 < l1) out.push_back(mu0);
    }
    std::sort(out.begin(), out.end());
    double tol = 1e-12 * span;
    out.erase(std::unique(out.begin(), out.end(),
                          [&](double a, double b) { return std::abs(a - b) <= tol; }),
              out.end());
    return out;
}

}  // namespace detail

// Antiderivative F(mu) = weight * Int_{l0}^{mu} G_K(z0 + x*zd) dx on [l0, l1].
inline PiecewiseQuadratic integrate_norm_affine(const GaugePolygon& K, Point2 z0, Point2 zd,
                                                double l0, double l1, double weight) {
    if (!(l1 > l0)) throw std::invalid_argument("integrate_norm_affine: empty interval");
    if (zd.x == 0.0 && zd.y == 0.0) {
        double g = K(z0) * weight;
        return PiecewiseQuadratic::single(0.0, g, -g * l0, l0, l1);
    }
    std::vector<double> cuts = detail::cone_crossings(K, z0, zd, l0, l1);
    std::vector<QuadPiece> pieces;
    double acc = 0.0;
    double at = l0;
    for (std::size_t ci = 0; ci <= cuts.size(); ++ci) {
        double end = (ci < cuts.size()) ? cuts[ci] : l1;
        double mid = 0.5 * (at + end);
        Point2 zm = z0 + mid * zd;
        double p = 0.0, q = 0.0;
        if (!(zm.x == 0.0 && zm.y == 0.0)) {
            Point2 e = K.evaluation_vector(K.cone_index(zm));
            p = dot(e, z0);
            q = dot(e, zd);
        }
        double a = 0.5 * weight * q;
        double b = weight * p;
        double c = acc - (a * at + b) * at;
        pieces.push_back({a, b, c, at, end, -1});
        acc = (a * end + b) * end + c;
        at = end;
    }
    return PiecewiseQuadratic::from_pieces(std::move(pieces));
}

// Piecewise-linear profile u -> G_K(z0 + u*zd) on [l0, l1].
inline PiecewiseQuadratic gauge_linear_profile(const GaugePolygon& K, Point2 z0, Point2 zd,
                                               double l0, double l1) {
    if (zd.x == 0.0 && zd.y == 0.0)
        return PiecewiseQuadratic::single(0.0, 0.0, K(z0), l0, l1);
    std::vector<double> cuts = detail::cone_crossings(K, z0, zd, l0, l1);
    std::vector<QuadPiece> pieces;
    double at = l0;
    for (std::size_t ci = 0; ci <= cuts.size(); ++ci) {
        double end = (ci < cuts.size()) ? cuts[ci] : l1;
        double mid = 0.5 * (at + end);
        Point2 zm = z0 + mid * zd;
        double p = 0.0, q = 0.0;
        if (!(zm.x == 0.0 && zm.y == 0.0)) {
            Point2 e = K.evaluation_vector(K.cone_index(zm));
            p = dot(e, z0);
            q = dot(e, zd);
        }
        pieces.push_back({0.0, q, p, at, end, -1});
        at = end;
    }
    return PiecewiseQuadratic::from_pieces(std::move(pieces));
}

// f(u) = weight * Int_{lo(u)}^{hi(u)} G_K(W0 + u*W1 + tau*W2) dtau as a
// piecewise quadratic in u on [u0, u1], with affine limits lo(u) = lp + lq*u,
// hi(u) = hp + hq*u (hi >= lo required up to tolerance).
inline PiecewiseQuadratic strip_cost(const GaugePolygon& K, Point2 W0, Point2 W1, Point2 W2,
                                     double lp, double lq, double hp, double hq, double u0,
                                     double u1, double weight) {
    if (!(u1 > u0)) throw std::invalid_argument("strip_cost: empty u-interval");
    const double uspan = std::abs(u0) + std::abs(u1) + 1.0;

    if (W2.x == 0.0 && W2.y == 0.0) {
        // integrand independent of tau: (hi - lo)(u) * G(W0 + u*W1)
        PiecewiseQuadratic g = gauge_linear_profile(K, W0, W1, u0, u1);
        std::vector<QuadPiece> pieces;
        double dp = hp - lp, dq = hq - lq;
        for (const auto& pc : g.pieces()) {
            // (pc.b u + pc.c) * (dp + dq u), scaled
            double a = weight * pc.b * dq;
            double b = weight * (pc.b * dp + pc.c * dq);
            double c = weight * pc.c * dp;
            pieces.push_back({a, b, c, pc.lo, pc.hi, -1});
        }
        return PiecewiseQuadratic::from_pieces(std::move(pieces));
    }

    const double zscale = std::max({1.0, std::abs(W0.x), std::abs(W0.y),
                                    uspan * std::abs(W1.x), uspan * std::abs(W1.y),
                                    std::abs(W2.x), std::abs(W2.y)});

    // u-breakpoints: cone boundary rays crossing the strip limits, vertical
    // boundaries, and the zero of psi
    std::vector<double> cuts;
    auto add_cut = [&](double u) {
        if (u > u0 && u < u1) cuts.push_back(u);
    };
    {
        double det = cross(W1, W2);
        if (std::abs(det) > 1e-15 * zscale * zscale) add_cut(cross(W2, W0) / det);
    }
    for (std::size_t i = 0; i < K.cone_count(); ++i) {
        Point2 v = K.vertex(i);
        double A = cross(v, W0), B = cross(v, W1), C = cross(v, W2);
        if (std::abs(C) > 1e-15 * zscale) {
            // tau*(u) = -(A + B u)/C meets lo and hi
            double dl = B + C * lq;
            if (std::abs(dl) > 1e-15 * zscale) add_cut(-(A + C * lp) / dl);
            double dh = B + C * hq;
            if (std::abs(dh) > 1e-15 * zscale) add_cut(-(A + C * hp) / dh);
        } else if (std::abs(B) > 1e-15 * zscale) {
            add_cut(-A / B);
        }
    }
    std::sort(cuts.begin(), cuts.end());
    {
        double tol = 1e-12 * uspan;
        cuts.erase(std::unique(cuts.begin(), cuts.end(),
                               [&](double a, double b) { return std::abs(a - b) <= tol; }),
                   cuts.end());
    }

    std::vector<QuadPiece> pieces;
    double at = u0;
    for (std::size_t ci = 0; ci <= cuts.size(); ++ci) {
        double end = (ci < cuts.size()) ? cuts[ci] : u1;
        double um = 0.5 * (at + end);
        double lo_m = lp + lq * um, hi_m = hp + hq * um;
        double tscale = std::abs(lo_m) + std::abs(hi_m) + 1.0;
        if (hi_m < lo_m - 1e-9 * tscale)
            throw std::invalid_argument("strip_cost: upper limit below lower limit");

        // strip boundaries as affine tau(u) = first .p + .q*u, sorted by value at um
        struct Bnd { double p, q, val; };
        std::vector<Bnd> bnds;
        bnds.push_back({lp, lq, lo_m});
        for (std::size_t i = 0; i < K.cone_count(); ++i) {
            Point2 v = K.vertex(i);
            double A = cross(v, W0), B = cross(v, W1), C = cross(v, W2);
            if (std::abs(C) <= 1e-15 * zscale) continue;
            double tp = -A / C, tq = -B / C;
            double tv = tp + tq * um;
            if (!(tv > lo_m + 1e-12 * tscale && tv < hi_m - 1e-12 * tscale)) continue;
            Point2 z = W0 + um * W1 + tv * W2;
            if (dot(v, z) > 0.0) bnds.push_back({tp, tq, tv});
        }
        bnds.push_back({hp, hq, hi_m});
        std::sort(bnds.begin(), bnds.end(), [](const Bnd& x, const Bnd& y) { return x.val < y.val; });

        double a = 0.0, b = 0.0, c = 0.0;
        for (std::size_t k = 0; k + 1 < bnds.size(); ++k) {
            const Bnd& T1 = bnds[k];
            const Bnd& T2 = bnds[k + 1];
            double tm = 0.5 * (T1.val + T2.val);
            Point2 z = W0 + um * W1 + tm * W2;
            if (z.x == 0.0 && z.y == 0.0) continue;
            Point2 e = K.evaluation_vector(K.cone_index(z));
            double alpha = dot(e, W0), beta = dot(e, W1), gamma = dot(e, W2);
            // alpha + beta u integrated over [T1(u), T2(u)] plus the gamma tau term
            double dpd = T2.p - T1.p, dqd = T2.q - T1.q;
            c += alpha * dpd;
            b += alpha * dqd + beta * dpd;
            a += beta * dqd;
            c += 0.5 * gamma * (T2.p * T2.p - T1.p * T1.p);
            b += 0.5 * gamma * 2.0 * (T2.p * T2.q - T1.p * T1.q);
            a += 0.5 * gamma * (T2.q * T2.q - T1.q * T1.q);
        }
        pieces.push_back({weight * a, weight * b, weight * c, at, end, -1});
        at = end;
    }
    return PiecewiseQuadratic::from_pieces(std::move(pieces));
}

// ---------------------------------------------------------------------------
// Valley

namespace detail {

// Minimizer of tau -> G(zb + tau*w): midpoint of the (convex) flat minimum.
inline double antidiagonal_min(const GaugePolygon& K, Point2 zb, Point2 w) {
    std::vector<double> cand;
    const double zscale = std::max({1.0, std::abs(zb.x), std::abs(zb.y)});
    for (std::size_t i = 0; i < K.cone_count(); ++i) {
        Point2 v = K.vertex(i);
        double den = cross(v, w);
        if (std::abs(den) < 1e-15) continue;
        double tau = -cross(v, zb) / den;
        if (dot(v, zb + tau * w) >= -1e-12 * zscale) cand.push_back(tau);
    }
    double dd = dot(w, w);
    if (dd > 0.0) cand.push_back(-dot(zb, w) / dd);
    if (cand.empty()) return 0.0;
    double best = K(zb + cand[0] * w);
    for (double t : cand) best = std::min(best, K(zb + t * w));
    double tol = 1e-9 * (1.0 + best);
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (double t : cand) {
        if (K(zb + t * w) <= best + tol) {
            lo = std::min(lo, t);
            hi = std::max(hi, t);
        }
    }
    return 0.5 * (lo + hi);
}

// Cone of directions r such that every anti-diagonal minimizer of
// tau -> G(z + tau*w) lies on span(r): bounded by the rays where the per-cone
// slope dot(e_i, w) changes sign.  A sharp transition gives a == b; a flat run
// (slope 0, at most one cone since adjacent evaluation vectors differ) gives
// the full cone [a, b].
inline bool valley_cone(const GaugePolygon& K, Point2 w, Point2& a_out, Point2& b_out) {
    const std::size_t k = K.cone_count();
    std::vector<double> g(k);
    double scale = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        g[i] = dot(K.evaluation_vector(i), w);
        scale = std::max(scale, std::abs(g[i]));
    }
    if (scale == 0.0) return false;
    const double eps = 1e-12 * scale;
    auto sgn = [&](std::size_t i) {
        double v = g[i % k];
        return v > eps ? 1 : (v < -eps ? -1 : 0);
    };
    for (std::size_t j = 0; j < k; ++j) {
        if (sgn(j + k - 1) != -1) continue;
        std::size_t run = 0;
        while (run < k && sgn(j + run) == 0) ++run;
        if (run >= k || sgn(j + run) != 1) continue;
        a_out = K.vertex(j);
        b_out = K.vertex(j + run);
        return true;
    }
    return false;
}

inline bool in_cone(Point2 a, Point2 b, Point2 d, double eps) {
    return cross(a, d) >= -eps && cross(d, b) >= -eps;
}

}  // namespace detail

inline Valley compute_valley(const Cell& cell) {
    const GaugePolygon& K = *cell.K;
    Point2 w = cell.dP + cell.dQ;
    double cx = 0.5 * (cell.sx0 + cell.sx1), cy = 0.5 * (cell.sy0 + cell.sy1);
    if (K(w) < 1e-12) {
        // cost is constant along anti-diagonals; any slope-1 line is a valley
        return {ValleyKind::line, 1.0, cy - cx};
    }
    double det = -cross(cell.dP, cell.dQ);
    double dscale = (std::abs(cell.dP.x) + std::abs(cell.dP.y)) *
                    (std::abs(cell.dQ.x) + std::abs(cell.dQ.y));
    Point2 ca, cb;
    if (std::abs(det) > 1e-9 * std::max(dscale, 1e-30) && detail::valley_cone(K, w, ca, cb)) {
        // slope of the preimage line of span(r) under psi
        auto slope_of = [&](Point2 r) { return cross(cell.dP, r) / cross(cell.dQ, r); };
        double bs = -cross(cell.dQ, cell.D0) / det;
        double bt = -cross(cell.dP, cell.D0) / det;
        std::vector<Point2> rs;
        double ceps = 1e-12 * (std::hypot(ca.x, ca.y) + std::hypot(cb.x, cb.y)) *
                      std::max(std::hypot(cell.dP.x, cell.dP.y), std::hypot(cell.dQ.x, cell.dQ.y));
        // a flat run admits any ray in the cone; the combination of the unit
        // directions of dP and -dQ always yields slope |dP|/|dQ| > 0
        Point2 up = cell.dP * (1.0 / std::hypot(cell.dP.x, cell.dP.y));
        Point2 uq = cell.dQ * (-1.0 / std::hypot(cell.dQ.x, cell.dQ.y));
        if ((detail::in_cone(ca, cb, up, ceps) && detail::in_cone(ca, cb, uq, ceps)) ||
            (detail::in_cone(ca, cb, -1.0 * up, ceps) && detail::in_cone(ca, cb, -1.0 * uq, ceps)))
            rs.push_back(up + uq);
        double la = std::hypot(ca.x, ca.y), lb = std::hypot(cb.x, cb.y);
        rs.push_back(ca * (1.0 / la) + cb * (1.0 / lb));
        rs.push_back(ca);
        rs.push_back(cb);
        for (Point2 r : rs) {
            double m = slope_of(r);
            if (std::isfinite(m) && m >= 1e-9 && m <= 1e9)
                return {ValleyKind::line, m, bt - m * bs};
        }
        // slope collapsed: clamp toward the nearer axis through the base point
        double mm = slope_of(rs.back());
        double mc = (std::isfinite(mm) && std::abs(mm) > 1.0) ? 1e9 : 1e-9;
        return {ValleyKind::degenerate, mc, bt - mc * bs};
    }
    // psi is (near-)singular: the terrain is constant along its kernel
    // direction; anchor a slope-1 line at one anti-diagonal minimizer
    double tau = detail::antidiagonal_min(K, cell.psi(cx, cy), w);
    return {ValleyKind::line, 1.0, (cy - tau) - (cx + tau)};
}

inline Cell make_cell(const PolygonalCurve& P, const PolygonalCurve& Q, const ArcTable& tp,
                      const ArcTable& tq, std::size_t i, std::size_t j, const GaugePolygon& K) {
    if (i >= P.segments() || j >= Q.segments()) throw std::out_of_range("cell index");
    Cell c;
    c.i = i;
    c.j = j;
    c.sx0 = tp.prefix[i];
    c.sx1 = tp.prefix[i + 1];
    c.sy0 = tq.prefix[j];
    c.sy1 = tq.prefix[j + 1];
    c.dP = P.segment_dir(i) * (1.0 / (c.sx1 - c.sx0));
    c.dQ = Q.segment_dir(j) * (1.0 / (c.sy1 - c.sy0));
    c.D0 = (P.vertex(i) - Q.vertex(j)) - c.sx0 * c.dP + c.sy0 * c.dQ;
    c.K = &K;
    c.valley = compute_valley(c);
    return c;
}

// Swap the roles of the two curves: cell of (Q, P) at (j, i).  Valid because
// the gauge is balanced, so G(-z) = G(z).
inline Cell transposed(const Cell& c) {
    Cell t;
    t.i = c.j;
    t.j = c.i;
    t.sx0 = c.sy0; t.sx1 = c.sy1;
    t.sy0 = c.sx0; t.sy1 = c.sx1;
    t.dP = c.dQ;
    t.dQ = c.dP;
    t.D0 = -c.D0;
    t.K = c.K;
    t.valley.kind = c.valley.kind;
    t.valley.m = 1.0 / c.valley.m;
    t.valley.c = -c.valley.c / c.valley.m;
    return t;
}

// Reverse both parameter directions: s -> sx0+sx1-s, t -> sy0+sy1-t.  Turns
// fixed-end problems into fixed-start ones.
inline Cell reversed(const Cell& c) {
    double Sx = c.sx0 + c.sx1, Sy = c.sy0 + c.sy1;
    Cell r = c;
    r.dP = -c.dP;
    r.dQ = -c.dQ;
    r.D0 = c.D0 + Sx * c.dP - Sy * c.dQ;
    r.valley.kind = c.valley.kind;
    r.valley.m = c.valley.m;
    r.valley.c = Sy - c.valley.m * Sx - c.valley.c;
    return r;
}

// ---------------------------------------------------------------------------
// Path costs

inline double straight_cost(const Cell& cell, Point2 a, Point2 b) {
    double dx = b.x - a.x, dy = b.y - a.y;
    double L = dx + dy;  // 1-norm mass of the parameter-space move
    if (L <= 1e-14 * (1.0 + cell.span())) return 0.0;
    Point2 z0 = cell.psi(a.x, a.y);
    Point2 zd = (dx * cell.dP - dy * cell.dQ) * (1.0 / L);
    PiecewiseQuadratic F = integrate_norm_affine(*cell.K, z0, zd, 0.0, L, 1.0);
    return F.eval(L);
}

inline bool on_valley(const Cell& cell, Point2 p, double tol) {
    return std::abs(p.y - cell.valley.at(p.x)) <= tol * (1.0 + cell.valley.m);
}

inline double segment_cost(const Cell& cell, Point2 from, Point2 to) {
    double tol = 1e-9 * (1.0 + cell.span());
    if (from.x > to.x + tol || from.y > to.y + tol)
        throw std::invalid_argument("segment_cost: endpoints not monotone");
    bool vertical = std::abs(from.x - to.x) <= tol;
    bool horizontal = std::abs(from.y - to.y) <= tol;
    bool valley = on_valley(cell, from, tol) && on_valley(cell, to, tol);
    if (!vertical && !horizontal && !valley)
        throw std::invalid_argument("segment_cost: segment is neither axis-parallel nor on the valley");
    return straight_cost(cell, from, to);
}

// Optimal (x,y)-path inside one cell: via the valley when it crosses the
// bounding box, else via the box corner nearest the valley.
inline std::vector<Point2> opt_path(const Cell& cell, Point2 x, Point2 y) {
    double tol = 1e-9 * (1.0 + cell.span());
    if (x.x > y.x + tol || x.y > y.y + tol)
        throw std::invalid_argument("opt_path: x must precede y coordinatewise");
    x.x = std::min(x.x, y.x);
    x.y = std::min(x.y, y.y);
    const Valley& l = cell.valley;
    std::vector<Point2> wp{x};
    auto push = [&](Point2 p) {
        if (std::abs(p.x - wp.back().x) > tol * 1e-3 || std::abs(p.y - wp.back().y) > tol * 1e-3)
            wp.push_back(p);
    };
    if (l.at(x.x) > y.y) {
        push({x.x, y.y});  // valley above the box: NW corner
    } else if (l.at(y.x) < x.y) {
        push({y.x, x.y});  // valley below the box: SE corner
    } else {
        double xx = std::max(x.x, l.inv(x.y));
        double xy = std::min(y.x, l.inv(y.y));
        xy = std::max(xy, xx);
        push({xx, l.at(xx)});
        push({xy, l.at(xy)});
    }
    push(y);
    if (wp.size() == 1) wp.push_back(y);
    return wp;
}

inline std::pair<double, std::vector<Point2>> opt_path_cost(const Cell& cell, Point2 x, Point2 y) {
    std::vector<Point2> wp = opt_path(cell, x, y);
    double cost = 0.0;
    for (std::size_t k = 0; k + 1 < wp.size(); ++k) cost += straight_cost(cell, wp[k], wp[k + 1]);
    return {cost, std::move(wp)};
}

// ---------------------------------------------------------------------------
// Border antiderivatives and parametric cost functions

// F(x) = Int_{x0}^{x} G(psi(s, t_fixed)) ds on [x0, x1].
inline PiecewiseQuadratic horizontal_antideriv(const Cell& cell, double t_fixed, double x0,
                                               double x1) {
    return integrate_norm_affine(*cell.K, cell.D0 - t_fixed * cell.dQ, cell.dP, x0, x1, 1.0);
}

// Antiderivative of the on-valley cost, parametrized by x; per unit dx the
// path mass is (1 + m).
inline PiecewiseQuadratic valley_antideriv(const Cell& cell, double x0, double x1) {
    const Valley& l = cell.valley;
    Point2 z0 = cell.D0 - l.c * cell.dQ;
    Point2 zd = cell.dP - l.m * cell.dQ;
    return integrate_norm_affine(*cell.K, z0, zd, x0, x1, 1.0 + l.m);
}

// f(u) = cost of the vertical run at s=u from t=lo(u) to t=hi(u).
inline PiecewiseQuadratic vertical_strip(const Cell& cell, double lp, double lq, double hp,
                                         double hq, double u0, double u1) {
    return strip_cost(*cell.K, cell.D0, cell.dP, -cell.dQ, lp, lq, hp, hq, u0, u1, 1.0);
}

// t |-> opt(x0, (t, sy1)) over [u_lo, u_hi]: the Theorem-1 path cost from a
// fixed start to the sliding north-border point.
inline PiecewiseQuadratic fixed_start_to_north(const Cell& cell, Point2 x0, double u_lo,
                                               double u_hi) {
    const Valley& l = cell.valley;
    const double X1 = x0.x, X2 = x0.y;
    if (!(u_hi > u_lo)) throw std::invalid_argument("fixed_start_to_north: empty domain");

    PiecewiseQuadratic NF = horizontal_antideriv(cell, cell.sy1, cell.sx0, cell.sx1);

    if (l.at(X1) > cell.sy1) {
        // valley passes above every target box: single bend at (X1, sy1)
        double entry = straight_cost(cell, x0, {X1, cell.sy1});
        PiecewiseQuadratic f = NF.compose_affine(0.0, 1.0, u_lo, u_hi);
        return f.add_quadratic(0.0, 0.0, entry - NF.eval(std::min(std::max(X1, cell.sx0), cell.sx1)));
    }

    double u_c = l.inv(X2);        // below: single bend at (u, X2)
    double u_v = l.inv(cell.sy1);  // beyond: exit the valley at (u_v, sy1)
    std::vector<PiecewiseQuadratic> parts;

    double seg1_hi = std::min(u_c, u_hi);
    if (seg1_hi > u_lo) {
        PiecewiseQuadratic HA = horizontal_antideriv(cell, X2, std::min(X1, u_lo), cell.sx1);
        PiecewiseQuadratic tail = vertical_strip(cell, X2, 0.0, cell.sy1, 0.0, u_lo, seg1_hi);
        PiecewiseQuadratic head = HA.compose_affine(0.0, 1.0, u_lo, seg1_hi)
                                      .add_quadratic(0.0, 0.0, -HA.eval(X1));
        parts.push_back(add(head, tail));
    }

    // entry to the valley, shared by segments (ii) and (iii)
    double xx = std::max(X1, u_c);
    double seg2_lo = std::max(u_c, u_lo), seg2_hi = std::min(u_v, u_hi);
    double seg3_lo = std::max(u_v, u_lo);
    if (seg2_hi > seg2_lo || u_hi > seg3_lo) {
        Point2 xi_x{xx, std::max(l.at(xx), X2)};
        double entry = straight_cost(cell, x0, xi_x);
        double va_hi = std::max({xx, std::min(u_v, cell.sx1), u_hi});
        PiecewiseQuadratic VA = valley_antideriv(cell, std::min(xx, u_lo), va_hi + 1e-9 * (1.0 + cell.span()));
        double va0 = VA.eval(xx);
        if (seg2_hi > seg2_lo) {
            PiecewiseQuadratic along = VA.compose_affine(0.0, 1.0, seg2_lo, seg2_hi)
                                           .add_quadratic(0.0, 0.0, entry - va0);
            PiecewiseQuadratic tail =
                vertical_strip(cell, l.c, l.m, cell.sy1, 0.0, seg2_lo, seg2_hi);
            parts.push_back(add(along, tail));
        }
        if (u_hi > seg3_lo) {
            double exit_const = entry + VA.eval(std::min(u_v, va_hi)) - va0;
            PiecewiseQuadratic f = NF.compose_affine(0.0, 1.0, seg3_lo, u_hi);
            double uvc = std::min(std::max(u_v, cell.sx0), cell.sx1);
            parts.push_back(f.add_quadratic(0.0, 0.0, exit_const - NF.eval(uvc)));
        }
    }
    if (parts.empty()) throw std::logic_error("fixed_start_to_north: no segments");
    PiecewiseQuadratic out = PiecewiseQuadratic::concat(parts);
    out.repair_continuity(1e-6);
    return out;
}

// s |-> opt((s, sy0), y0) over [s_lo, s_hi]: fixed end, sliding south start.
inline PiecewiseQuadratic fixed_end_from_south(const Cell& cell, Point2 y0, double s_lo,
                                               double s_hi) {
    Cell rc = reversed(cell);
    double Sx = cell.sx0 + cell.sx1, Sy = cell.sy0 + cell.sy1;
    Point2 ry{Sx - y0.x, Sy - y0.y};
    PiecewiseQuadratic g = fixed_start_to_north(rc, ry, Sx - s_hi, Sx - s_lo);
    return g.compose_affine(Sx, -1.0, s_lo, s_hi);
}

// t |-> opt(x0, (sx1, t)): fixed start, sliding east-border point.
inline PiecewiseQuadratic fixed_start_to_east(const Cell& cell, Point2 x0, double u_lo,
                                              double u_hi) {
    Cell tc = transposed(cell);
    return fixed_start_to_north(tc, {x0.y, x0.x}, u_lo, u_hi);
}

// s |-> opt((sx0, s), y0): fixed end, sliding west start.
inline PiecewiseQuadratic fixed_end_from_west(const Cell& cell, Point2 y0, double s_lo,
                                              double s_hi) {
    Cell tc = transposed(cell);
    return fixed_end_from_south(tc, {y0.y, y0.x}, s_lo, s_hi);
}

// t |-> opt((t, sy0), (t, sy1)): the straight vertical crossing used by
// opposing-propagation diagonal starts.
inline PiecewiseQuadratic south_north_crossing(const Cell& cell) {
    return vertical_strip(cell, cell.sy0, 0.0, cell.sy1, 0.0, cell.sx0, cell.sx1);
}

inline PiecewiseQuadratic west_east_crossing(const Cell& cell) {
    return south_north_crossing(transposed(cell));
}

// ---------------------------------------------------------------------------
// Happiness-Lemma split for opposing borders (south -> north orientation)

struct RhoSplit {
    PiecewiseQuadratic rho_in;   // over dom(S)
    PiecewiseQuadratic rho_out;  // over dom(N)
};

inline RhoSplit rho_split_south_north(const Cell& cell) {
    PiecewiseQuadratic F = fixed_end_from_south(cell, cell.ne(), cell.sx0, cell.sx1);
    PiecewiseQuadratic G = fixed_start_to_north(cell, {cell.sx0, cell.sy0}, cell.sx0, cell.sx1);
    RhoSplit r;
    r.rho_in = F.add_quadratic(0.0, 0.0, -F.eval(cell.sx0));
    r.rho_out = G;
    return r;
}

inline RhoSplit rho_split_west_east(const Cell& cell) {
    return rho_split_south_north(transposed(cell));
}

// Test hook: sampled anti-diagonal sweeps confirming the terrain decreases
// into the valley and increases after it.
inline bool valley_property_holds(const Cell& cell, int lines = 100, int samples = 64,
                                  double tol = 1e-7) {
    const GaugePolygon& K = *cell.K;
    const Valley& l = cell.valley;
    for (int li = 0; li < lines; ++li) {
        double f = (li + 0.5) / lines;
        // anti-diagonal through a point of the valley inside the cell's span
        double xb = cell.sx0 + f * cell.width();
        double yb = l.at(xb);
        double reach = cell.span();
        double prev_before = -1.0, prev_after = -1.0;
        for (int k = 0; k <= samples; ++k) {
            double tau = reach * double(k) / samples;
            double before = K(cell.psi(xb - tau, yb + tau));
            double after = K(cell.psi(xb + tau, yb - tau));
            if (k > 0) {
                if (before < prev_before - tol * (1.0 + prev_before)) return false;
                if (after < prev_after - tol * (1.0 + prev_after)) return false;
            }
            prev_before = before;
            prev_after = after;
        }
    }
    return true;
}

}  // namespace cdtw
