#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace cdtw {

// One quadratic piece t -> a*t^2 + b*t + c on [lo, hi).  tag carries witness
// provenance through envelopes; -1 means untracked.
struct QuadPiece {
    double a{0}, b{0}, c{0};
    double lo{0}, hi{0};
    std::int64_t tag{-1};

    double eval(double t) const { return (a * t + b) * t + c; }
    double deriv(double t) const { return 2.0 * a * t + b; }
};

namespace detail {
inline bool coeffs_close(const QuadPiece& p, const QuadPiece& q, double tol) {
    return std::abs(p.a - q.a) <= tol && std::abs(p.b - q.b) <= tol && std::abs(p.c - q.c) <= tol;
}
}  // namespace detail

class PiecewiseQuadratic {
public:
    PiecewiseQuadratic() = default;

    static PiecewiseQuadratic single(double a, double b, double c, double lo, double hi,
                                     std::int64_t tag = -1) {
        PiecewiseQuadratic f;
        f.pieces_.push_back({a, b, c, lo, hi, tag});
        f.validate();
        return f;
    }

    static PiecewiseQuadratic from_pieces(std::vector<QuadPiece> pieces) {
        PiecewiseQuadratic f;
        f.pieces_ = std::move(pieces);
        f.validate();
        f.coalesce();
        return f;
    }

    const std::vector<QuadPiece>& pieces() const { return pieces_; }
    std::size_t size() const { return pieces_.size(); }
    bool empty() const { return pieces_.empty(); }
    double domain_lo() const { return pieces_.front().lo; }
    double domain_hi() const { return pieces_.back().hi; }
    double domain_width() const { return domain_hi() - domain_lo(); }
    double domain_tol() const { return 1e-9 * std::max(1.0, std::abs(domain_lo()) + std::abs(domain_hi())); }

    std::size_t piece_index(double t) const {
        if (empty()) throw std::domain_error("empty piecewise function");
        double tol = domain_tol();
        if (t < domain_lo() - tol || t > domain_hi() + tol)
            throw std::domain_error("evaluation point outside domain");
        auto it = std::upper_bound(pieces_.begin(), pieces_.end(), t,
                                   [](double v, const QuadPiece& p) { return v < p.lo; });
        std::size_t i = (it == pieces_.begin()) ? 0 : std::size_t(it - pieces_.begin()) - 1;
        return std::min(i, pieces_.size() - 1);
    }

    double eval(double t) const { return pieces_[piece_index(t)].eval(t); }
    double operator()(double t) const { return eval(t); }

    std::int64_t tag_at(double t) const { return pieces_[piece_index(t)].tag; }

    // Largest |value| over all breakpoints; scale for relative tolerances.
    double value_scale() const {
        double s = 1.0;
        for (const auto& p : pieces_) s = std::max({s, std::abs(p.eval(p.lo)), std::abs(p.eval(p.hi))});
        return s;
    }

    PiecewiseQuadratic add_quadratic(double a, double b, double c) const {
        PiecewiseQuadratic g = *this;
        for (auto& p : g.pieces_) { p.a += a; p.b += b; p.c += c; }
        g.coalesce();
        return g;
    }

    PiecewiseQuadratic shift(double c) const { return add_quadratic(0, 0, c); }

    PiecewiseQuadratic merge_refine(const std::vector<double>& extra) const {
        std::vector<QuadPiece> out;
        std::vector<double> cuts(extra);
        std::sort(cuts.begin(), cuts.end());
        std::size_t ci = 0;
        double tol = domain_tol();
        for (const auto& p : pieces_) {
            double at = p.lo;
            while (ci < cuts.size() && cuts[ci] <= p.lo + tol) ++ci;
            std::size_t cj = ci;
            while (cj < cuts.size() && cuts[cj] < p.hi - tol) {
                out.push_back({p.a, p.b, p.c, at, cuts[cj], p.tag});
                at = cuts[cj];
                ++cj;
            }
            out.push_back({p.a, p.b, p.c, at, p.hi, p.tag});
            ci = cj;
        }
        PiecewiseQuadratic g;
        g.pieces_ = std::move(out);
        g.validate();
        return g;
    }

    std::vector<double> breakpoints() const {
        std::vector<double> b;
        b.reserve(pieces_.size() + 1);
        b.push_back(pieces_.front().lo);
        for (const auto& p : pieces_) b.push_back(p.hi);
        return b;
    }

    // g(u) = f(alpha + beta*u) on [ulo, uhi]; the image must stay inside the
    // domain (within tolerance, clamped).
    PiecewiseQuadratic compose_affine(double alpha, double beta, double ulo, double uhi) const {
        if (!(ulo < uhi)) throw std::invalid_argument("compose_affine: empty target interval");
        double i0 = alpha + beta * ulo, i1 = alpha + beta * uhi;
        double lo = std::min(i0, i1), hi = std::max(i0, i1);
        double tol = std::max(domain_tol(), 1e-9 * std::max(1.0, std::abs(lo) + std::abs(hi)));
        if (lo < domain_lo() - tol || hi > domain_hi() + tol)
            throw std::domain_error("compose_affine: image escapes the domain");
        std::vector<QuadPiece> out;
        auto emit = [&](const QuadPiece& p, double l, double h) {
            // t = alpha + beta*u
            double a2 = p.a * beta * beta;
            double b2 = 2.0 * p.a * alpha * beta + p.b * beta;
            double c2 = (p.a * alpha + p.b) * alpha + p.c;
            out.push_back({a2, b2, c2, l, h, p.tag});
        };
        if (beta == 0.0) {
            const QuadPiece& p = pieces_[piece_index(alpha)];
            emit(p, ulo, uhi);
        } else if (beta > 0.0) {
            for (const auto& p : pieces_) {
                double l = std::max(ulo, (p.lo - alpha) / beta);
                double h = std::min(uhi, (p.hi - alpha) / beta);
                if (h - l > 1e-15 * std::max(1.0, std::abs(uhi))) emit(p, l, h);
            }
        } else {
            for (auto it = pieces_.rbegin(); it != pieces_.rend(); ++it) {
                double l = std::max(ulo, (it->hi - alpha) / beta);
                double h = std::min(uhi, (it->lo - alpha) / beta);
                if (h - l > 1e-15 * std::max(1.0, std::abs(uhi))) emit(*it, l, h);
            }
        }
        if (out.empty()) {
            const QuadPiece& p = pieces_[piece_index(alpha + beta * 0.5 * (ulo + uhi))];
            emit(p, ulo, uhi);
        }
        out.front().lo = ulo;
        out.back().hi = uhi;
        for (std::size_t i = 0; i + 1 < out.size(); ++i) out[i + 1].lo = out[i].hi;
        PiecewiseQuadratic g;
        g.pieces_ = std::move(out);
        g.validate();
        g.coalesce();
        return g;
    }

    std::pair<double, double> global_min() const {  // (argmin, value), smallest t on ties
        double best_t = pieces_.front().lo;
        double best_v = pieces_.front().eval(best_t);
        auto consider = [&](double t, double v) {
            if (v < best_v || (v == best_v && t < best_t)) { best_v = v; best_t = t; }
        };
        for (const auto& p : pieces_) {
            consider(p.lo, p.eval(p.lo));
            consider(p.hi, p.eval(p.hi));
            if (p.a > 0.0) {
                double v = -p.b / (2.0 * p.a);
                if (v > p.lo && v < p.hi) consider(v, p.eval(v));
            }
        }
        return {best_t, best_v};
    }

    friend PiecewiseQuadratic add(const PiecewiseQuadratic& f, const PiecewiseQuadratic& g) {
        check_same_domain(f, g);
        std::vector<double> grid = merged_grid(f, g);
        std::vector<QuadPiece> out;
        out.reserve(grid.size());
        for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
            double mid = 0.5 * (grid[i] + grid[i + 1]);
            QuadPiece p = f.pieces_[f.piece_index(mid)];
            const QuadPiece& q = g.pieces_[g.piece_index(mid)];
            p.a += q.a; p.b += q.b; p.c += q.c;
            if (p.tag < 0) p.tag = q.tag;
            p.lo = grid[i];
            p.hi = grid[i + 1];
            out.push_back(p);
        }
        PiecewiseQuadratic h;
        h.pieces_ = std::move(out);
        h.validate();
        h.coalesce();
        return h;
    }

    friend PiecewiseQuadratic lower_envelope(const PiecewiseQuadratic& f, const PiecewiseQuadratic& g) {
        check_same_domain(f, g);
        std::vector<double> grid = merged_grid(f, g);
        const double vs = std::max(f.value_scale(), g.value_scale());
        const double snap = 1e-9 * std::max(1.0, std::abs(f.domain_lo()) + std::abs(f.domain_hi()));
        std::vector<QuadPiece> out;
        for (std::size_t gi = 0; gi + 1 < grid.size(); ++gi) {
            double glo = grid[gi], ghi = grid[gi + 1];
            double gmid = 0.5 * (glo + ghi);
            QuadPiece pf = f.pieces_[f.piece_index(gmid)];
            QuadPiece pg = g.pieces_[g.piece_index(gmid)];
            pf.lo = pg.lo = glo;
            pf.hi = pg.hi = ghi;
            double da = pf.a - pg.a, db = pf.b - pg.b, dc = pf.c - pg.c;
            if (std::abs(da) < 1e-12) da = 0.0;
            std::vector<double> roots;
            if (da == 0.0) {
                if (db != 0.0) roots.push_back(-dc / db);
            } else {
                double disc = db * db - 4.0 * da * dc;
                if (disc > 1e-12 * vs * std::abs(da) && disc > 0.0) {
                    double sq = std::sqrt(disc);
                    double q = -0.5 * (db + (db >= 0.0 ? sq : -sq));
                    double r1 = q / da;
                    double r2 = (q != 0.0) ? dc / q : r1;
                    roots.push_back(std::min(r1, r2));
                    roots.push_back(std::max(r1, r2));
                }
            }
            std::vector<double> cuts;
            for (double r : roots)
                if (r > pf.lo + snap && r < pf.hi - snap) cuts.push_back(r);
            std::sort(cuts.begin(), cuts.end());
            double at = pf.lo;
            for (std::size_t ci = 0; ci <= cuts.size(); ++ci) {
                double end = (ci < cuts.size()) ? cuts[ci] : pf.hi;
                if (end - at <= snap * 1e-3 && ci < cuts.size()) { at = end; continue; }
                double mid = 0.5 * (at + end);
                double dv = (da * mid + db) * mid + dc;
                const QuadPiece& win = (dv <= 0.0) ? pf : pg;
                out.push_back({win.a, win.b, win.c, at, end, win.tag});
                at = end;
            }
        }
        PiecewiseQuadratic h;
        h.pieces_ = std::move(out);
        h.validate();
        h.coalesce();
        return h;
    }

    // Glue functions with contiguous domains into one.
    static PiecewiseQuadratic concat(const std::vector<PiecewiseQuadratic>& parts) {
        std::vector<QuadPiece> out;
        for (const auto& f : parts) {
            for (auto p : f.pieces_) {
                if (!out.empty()) p.lo = std::max(p.lo, out.back().hi);
                if (!(p.hi > p.lo)) continue;
                out.push_back(p);
            }
        }
        if (out.empty()) throw std::invalid_argument("concat: no pieces");
        PiecewiseQuadratic h;
        h.pieces_ = std::move(out);
        h.validate();
        h.coalesce();
        return h;
    }

    // Max relative jump across interior breakpoints.
    double max_discontinuity() const {
        double worst = 0.0;
        for (std::size_t i = 0; i + 1 < pieces_.size(); ++i) {
            double t = pieces_[i].hi;
            double l = pieces_[i].eval(t), r = pieces_[i + 1].eval(t);
            worst = std::max(worst, std::abs(l - r) / std::max(1.0, std::max(std::abs(l), std::abs(r))));
        }
        return worst;
    }

    // Left-anchored continuity repair: snap each piece's value at its left
    // breakpoint to the previous piece's value there.  Jumps beyond max_rel
    // abort.
    void repair_continuity(double max_rel = 1e-7) {
        for (std::size_t i = 0; i + 1 < pieces_.size(); ++i) {
            double t = pieces_[i].hi;
            double l = pieces_[i].eval(t), r = pieces_[i + 1].eval(t);
            double jump = l - r;
            double rel = std::abs(jump) / std::max(1.0, std::max(std::abs(l), std::abs(r)));
            if (rel > max_rel)
                throw std::runtime_error("numeric guard: discontinuity of relative size " +
                                         std::to_string(rel) + " across breakpoint");
            pieces_[i + 1].c += jump;
        }
    }

    // Raise pieces dipping below zero by at most tol; deeper dips abort.
    void clamp_nonnegative(double tol_abs) {
        for (auto& p : pieces_) {
            double mn = std::min(p.eval(p.lo), p.eval(p.hi));
            if (p.a > 0.0) {
                double v = -p.b / (2.0 * p.a);
                if (v > p.lo && v < p.hi) mn = std::min(mn, p.eval(v));
            }
            if (mn < 0.0) {
                if (mn < -tol_abs)
                    throw std::runtime_error("numeric guard: cost function dipped below zero by " +
                                             std::to_string(-mn));
                p.c -= mn;
            }
        }
    }

    void set_all_tags(std::int64_t tag) {
        for (auto& p : pieces_) p.tag = tag;
    }

private:
    std::vector<QuadPiece> pieces_;

    void validate() const {
        if (pieces_.empty()) throw std::invalid_argument("piecewise function: no pieces");
        for (std::size_t i = 0; i < pieces_.size(); ++i) {
            const auto& p = pieces_[i];
            if (!(p.lo < p.hi) || !std::isfinite(p.a) || !std::isfinite(p.b) || !std::isfinite(p.c) ||
                !std::isfinite(p.lo) || !std::isfinite(p.hi))
                throw std::invalid_argument("piecewise function: invalid piece");
            if (i > 0 && pieces_[i].lo != pieces_[i - 1].hi)
                throw std::invalid_argument("piecewise function: pieces not contiguous");
        }
    }

    void coalesce() {
        std::vector<QuadPiece> out;
        for (auto& p : pieces_) {
            QuadPiece q = p;
            if (std::abs(q.a) < 1e-12) q.a = 0.0;
            if (!out.empty() && detail::coeffs_close(out.back(), q, 1e-12) && out.back().tag == q.tag)
                out.back().hi = q.hi;
            else
                out.push_back(q);
        }
        pieces_ = std::move(out);
    }

    static void check_same_domain(const PiecewiseQuadratic& f, const PiecewiseQuadratic& g) {
        double tol = std::max(f.domain_tol(), g.domain_tol());
        if (std::abs(f.domain_lo() - g.domain_lo()) > tol ||
            std::abs(f.domain_hi() - g.domain_hi()) > tol)
            throw std::invalid_argument("domain mismatch");
    }

    // Sorted union of both breakpoint sets on f's domain, slivers dropped.
    static std::vector<double> merged_grid(const PiecewiseQuadratic& f, const PiecewiseQuadratic& g) {
        double lo = f.domain_lo(), hi = f.domain_hi();
        double tiny = 1e-12 * std::max(1.0, std::abs(lo) + std::abs(hi));
        std::vector<double> cuts;
        for (double b : f.breakpoints()) cuts.push_back(b);
        for (double b : g.breakpoints()) cuts.push_back(b);
        std::sort(cuts.begin(), cuts.end());
        std::vector<double> grid{lo};
        for (double c : cuts)
            if (c > grid.back() + tiny && c < hi - tiny) grid.push_back(c);
        grid.push_back(hi);
        return grid;
    }
};

namespace detail {

// Smallest c in [a, b] such that g drops strictly below f immediately after c;
// nullopt if g never undercuts f there.
inline std::optional<double> earliest_undercut(const PiecewiseQuadratic& f,
                                               const PiecewiseQuadratic& g, double a, double b) {
    std::vector<double> grid{a};
    auto collect = [&](const PiecewiseQuadratic& h) {
        for (double t : h.breakpoints())
            if (t > a && t < b) grid.push_back(t);
    };
    collect(f);
    collect(g);
    grid.push_back(b);
    std::sort(grid.begin(), grid.end());
    const double vtol = 1e-10 * (1.0 + std::max(f.value_scale(), g.value_scale()));
    for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
        double p = grid[k], q = grid[k + 1];
        if (!(q > p)) continue;
        double mid = 0.5 * (p + q);
        const QuadPiece& pf = f.pieces()[f.piece_index(mid)];
        const QuadPiece& pg = g.pieces()[g.piece_index(mid)];
        double da = pg.a - pf.a, db = pg.b - pf.b, dc = pg.c - pf.c;
        std::vector<double> cuts{p};
        if (std::abs(da) < 1e-14) {
            if (db != 0.0) cuts.push_back(-dc / db);
        } else {
            double disc = db * db - 4.0 * da * dc;
            if (disc > 0.0) {
                double sq = std::sqrt(disc);
                double qq = -0.5 * (db + (db >= 0.0 ? sq : -sq));
                double r1 = qq / da, r2 = (qq != 0.0) ? dc / qq : r1;
                cuts.push_back(std::min(r1, r2));
                cuts.push_back(std::max(r1, r2));
            }
        }
        cuts.erase(std::remove_if(cuts.begin(), cuts.end(),
                                  [&](double r) { return r < p || r >= q; }),
                   cuts.end());
        std::sort(cuts.begin(), cuts.end());
        cuts.push_back(q);
        for (std::size_t ci = 0; ci + 1 < cuts.size(); ++ci) {
            double m = 0.5 * (cuts[ci] + cuts[ci + 1]);
            if (g.eval(m) < f.eval(m) - vtol) return cuts[ci];
        }
    }
    return std::nullopt;
}

}  // namespace detail

struct MinimaSet {
    std::vector<std::pair<double, double>> points;  // (t, value), t increasing
};

// Semistrict local minima: local minima that are strict to the left and/or to
// the right; interiors of constant pieces never qualify.
inline MinimaSet semistrict_local_minima(const PiecewiseQuadratic& f) {
    MinimaSet out;
    const auto& ps = f.pieces();
    double dscale = 1.0;
    for (const auto& p : ps)
        dscale = std::max({dscale, std::abs(p.deriv(p.lo)), std::abs(p.deriv(p.hi))});
    const double dtol = 1e-9 * dscale;
    const double ttol = f.domain_tol();

    // side = -1: behavior approaching t from the left (using piece pl);
    // returns +1 strictly higher than f(t), 0 flat, -1 strictly lower.
    auto side_class = [&](const QuadPiece& p, double t, int side) {
        double d = p.deriv(t);
        if (side < 0) {
            if (d < -dtol) return +1;
            if (d > dtol) return -1;
            if (p.a > 1e-12) return +1;
            if (p.a < -1e-12) return -1;
            return 0;
        }
        if (d > dtol) return +1;
        if (d < -dtol) return -1;
        if (p.a > 1e-12) return +1;
        if (p.a < -1e-12) return -1;
        return 0;
    };
    auto push = [&](double t, double v) {
        if (!out.points.empty() && std::abs(out.points.back().first - t) <= ttol) return;
        out.points.push_back({t, v});
    };

    for (std::size_t i = 0; i < ps.size(); ++i) {
        const QuadPiece& p = ps[i];
        if (i == 0) {
            if (side_class(p, p.lo, +1) == +1) push(p.lo, p.eval(p.lo));
        }
        // interior parabola vertex
        if (p.a > 1e-12) {
            double v = -p.b / (2.0 * p.a);
            if (v > p.lo + ttol && v < p.hi - ttol) push(v, p.eval(v));
        }
        // breakpoint between piece i and i+1 (or right domain endpoint)
        double t = p.hi;
        int left = side_class(p, t, -1);
        if (i + 1 < ps.size()) {
            int right = side_class(ps[i + 1], t, +1);
            if (left >= 0 && right >= 0 && (left == +1 || right == +1)) push(t, p.eval(t));
        } else {
            if (left == +1) push(t, p.eval(t));
        }
    }
    return out;
}

inline std::string dump_json(const PiecewiseQuadratic& f) {
    std::ostringstream os;
    os.precision(17);
    os << "{\"breakpoints\":[";
    auto bps = f.breakpoints();
    for (std::size_t i = 0; i < bps.size(); ++i) os << (i ? "," : "") << bps[i];
    os << "],\"pieces\":[";
    for (std::size_t i = 0; i < f.pieces().size(); ++i) {
        const auto& p = f.pieces()[i];
        os << (i ? "," : "") << "[" << p.a << "," << p.b << "," << p.c << "]";
    }
    os << "]}";
    return os.str();
}

}  // namespace cdtw
