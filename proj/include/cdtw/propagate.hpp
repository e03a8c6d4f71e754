#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "cell.hpp"
#include "geometry.hpp"
#include "norms.hpp"
#include "oracle.hpp"
#include "pwq.hpp"

namespace cdtw {

// ---------------------------------------------------------------------------
// Border bookkeeping

enum class Side { N, E };

struct BorderRef {
    std::size_t i{0}, j{0};  // owning cell; base borders use the virtual row/column
    Side side{Side::N};
    bool base{false};
};

struct BorderState {
    BorderRef ref;
    PiecewiseQuadratic apx;
    int rank{0};
    std::size_t candidate_count{0};  // |S*| recorded when consumed as an input border
};

// How a piece of some border's cost function is realized by a path.
enum class PathKind {
    Base,       // straight along the bottom/left boundary from the origin
    Corner,     // from the fixed corner start of the owning cell
    Adjoining,  // from a fixed start on the adjoining input border
    OppFixed,   // from a fixed start on the opposing input border
    OppDiag     // straight crossing from the opposing border at the same parameter
};

struct Provenance {
    PathKind kind;
    std::size_t i{0}, j{0};  // owning cell of the output border
    Side side{Side::N};
    double s_start{0};  // start parameter on the source border (Adjoining/OppFixed)
};

struct ParentCandidates {
    std::vector<double> values;  // ascending
    double best_s{0};
    double best_h{0};
};

// S*: semistrict local minima of the best-path objective F, plus the global
// minimum (smallest argmin on ties).
inline ParentCandidates parent_candidates(const PiecewiseQuadratic& F) {
    ParentCandidates out;
    MinimaSet mins = semistrict_local_minima(F);
    for (auto& [t, v] : mins.points) out.values.push_back(t);
    auto [bt, bv] = F.global_min();
    out.best_s = bt;
    out.best_h = bv;
    double tol = F.domain_tol();
    bool present = false;
    for (double s : out.values) present = present || std::abs(s - bt) <= tol;
    if (!present) {
        out.values.push_back(bt);
        std::sort(out.values.begin(), out.values.end());
    }
    return out;
}

// Best-path objectives of Algorithm 1 lines 8-9: input border cost plus the
// optimal continuation to the NE corner.
inline PiecewiseQuadratic best_path_objective_south(const Cell& c, const PiecewiseQuadratic& A) {
    return add(A, fixed_end_from_south(c, c.ne(), c.sx0, c.sx1));
}
inline PiecewiseQuadratic best_path_objective_west(const Cell& c, const PiecewiseQuadratic& A) {
    return add(A, fixed_end_from_west(c, c.ne(), c.sy0, c.sy1));
}

enum class CornerSource { NW, SE };

// Initial output-border cost from the fixed corner start (Alg. 1 lines 6-7).
inline PiecewiseQuadratic propagate_corner(const Cell& c, CornerSource src, double h) {
    if (src == CornerSource::NW)
        return fixed_start_to_north(c, {c.sx0, c.sy1}, c.sx0, c.sx1).add_quadratic(0.0, 0.0, h);
    return fixed_start_to_east(c, {c.sx1, c.sy0}, c.sy0, c.sy1).add_quadratic(0.0, 0.0, h);
}

// apx_{<= s*} via the single bottom-up active-function sweep (south -> north
// orientation; pass the transposed cell for west -> east).  stars must be the
// ascending parent candidates with s <= s*, ending at s* itself.
template <class FixedTagFn>
inline PiecewiseQuadratic opposing_apx(const Cell& c, const PiecewiseQuadratic& Aapx,
                                       const std::vector<double>& stars, std::int64_t diag_tag,
                                       FixedTagFn&& fixed_tag) {
    const double lo = c.sx0, hi = c.sx1;
    const double tol = 1e-9 * (1.0 + std::abs(lo) + std::abs(hi));
    if (stars.empty()) throw std::invalid_argument("opposing_apx: no parent candidates");

    PiecewiseQuadratic diag = add(Aapx, south_north_crossing(c));
    diag.set_all_tags(diag_tag);

    // tau_k: diagonal starts on S_k = (s*_{k-1}, s*_k], fixed start s*_k beyond
    auto make_tau = [&](double seg_lo, double s_star) {
        std::vector<PiecewiseQuadratic> parts;
        if (s_star - seg_lo > tol)
            parts.push_back(diag.compose_affine(0.0, 1.0, seg_lo, std::min(s_star, hi)));
        if (hi - s_star > tol) {
            PiecewiseQuadratic f =
                fixed_start_to_north(c, {s_star, c.sy0}, std::max(s_star, lo), hi)
                    .add_quadratic(0.0, 0.0, Aapx.eval(s_star));
            f.set_all_tags(fixed_tag(s_star));
            parts.push_back(f);
        }
        return PiecewiseQuadratic::concat(parts);
    };

    // active-function sweep: emit the active tau until the first point where
    // the next tau undercuts it; switch points never move backwards
    std::vector<PiecewiseQuadratic> emitted;
    double cursor = lo;
    PiecewiseQuadratic active = make_tau(lo, stars[0]);
    double prev_star = stars[0];
    for (std::size_t k = 1; k < stars.size(); ++k) {
        double seg_lo = prev_star, s_star = stars[k];
        prev_star = s_star;
        if (s_star - seg_lo <= tol) continue;
        PiecewiseQuadratic tau = make_tau(seg_lo, s_star);
        double a = std::max(cursor, seg_lo), b = std::min(s_star, hi);
        if (b - a <= tol) continue;
        std::optional<double> sw = detail::earliest_undercut(active, tau, a, b);
        if (!sw) continue;
        double cpt = std::max(*sw, cursor);
        if (cpt < cursor - tol) throw std::logic_error("opposing sweep moved backwards");
        if (cpt - cursor > tol) emitted.push_back(active.compose_affine(0.0, 1.0, cursor, cpt));
        cursor = cpt;
        active = std::move(tau);
    }
    if (hi - cursor > tol) emitted.push_back(active.compose_affine(0.0, 1.0, cursor, hi));
    if (emitted.empty()) emitted.push_back(active);
    PiecewiseQuadratic env = PiecewiseQuadratic::concat(emitted);
    env.repair_continuity(1e-6);
    return env;
}

inline PiecewiseQuadratic opposing_apx(const Cell& c, const PiecewiseQuadratic& Aapx,
                                       const std::vector<double>& stars) {
    return opposing_apx(c, Aapx, stars, -1, [](double) { return std::int64_t(-1); });
}

struct BorderReport {
    std::size_t i, j;
    Side side;
    int rank;
    std::size_t pieces;
    std::size_t candidates;
};

struct Diagnostics {
    double value{0};
    std::size_t total_pieces{0};
    int max_rank{0};
    std::vector<BorderReport> per_border;
};

// ---------------------------------------------------------------------------
// Full run state (kept for diagnostics and witness reconstruction)

class ApproxRun {
public:
    ApproxRun(const PolygonalCurve& P, const PolygonalCurve& Q, const NormHandle& norm);

    double value() const { return value_; }
    bool swapped() const { return swapped_; }
    const PolygonalCurve& first() const { return P_; }   // canonical order
    const PolygonalCurve& second() const { return Q_; }
    Diagnostics diagnostics() const;
    MonotonePath witness() const;  // in the caller's original curve order

    std::size_t rows() const { return n_; }
    std::size_t cols() const { return m_; }
    const BorderState& north_border(std::size_t i, std::size_t j) const {
        return northB_[bidx(i, j)];
    }
    const BorderState& east_border(std::size_t i, std::size_t j) const {
        return eastB_[bidx(i, j)];
    }
    double corner_cost(std::size_t i, std::size_t j) const { return h_[hidx(i, j)]; }
    Cell cell(std::size_t i, std::size_t j) const { return cell_at(i, j); }

private:
    PolygonalCurve P_, Q_;
    bool swapped_;
    NormHandle norm_;
    GaugePolygon K_;
    ArcTable tp_, tq_;
    std::size_t n_, m_;
    std::vector<BorderState> northB_, eastB_;  // n*m each
    std::vector<BorderState> baseN_, baseE_;   // virtual row 0 / column 0
    std::vector<double> h_;                    // (n+1)*(m+1) corner costs
    struct CornerFrom {
        int side{-1};  // 0 = south input, 1 = west input, -1 = base boundary
        double s{0};
    };
    std::vector<CornerFrom> corner_from_;
    std::vector<Provenance> prov_;
    double value_{0};

    std::size_t bidx(std::size_t i, std::size_t j) const { return i * m_ + j; }
    std::size_t hidx(std::size_t i, std::size_t j) const { return i * (m_ + 1) + j; }
    std::int64_t new_tag(Provenance p) {
        prov_.push_back(p);
        return std::int64_t(prov_.size() - 1);
    }

    Cell cell_at(std::size_t i, std::size_t j) const {
        return make_cell(P_, Q_, tp_, tq_, i, j, K_);
    }
    const BorderState& south_input(std::size_t i, std::size_t j) const {
        return j == 0 ? baseN_[i] : northB_[bidx(i, j - 1)];
    }
    const BorderState& west_input(std::size_t i, std::size_t j) const {
        return i == 0 ? baseE_[j] : eastB_[bidx(i - 1, j)];
    }

    void run();
    PiecewiseQuadratic opposing_envelope(const Cell& c, const PiecewiseQuadratic& Aapx,
                                         const ParentCandidates& cand, std::size_t i,
                                         std::size_t j, Side out);
    void border_path(std::size_t i, std::size_t j, int in_side, double coord,
                     std::vector<Point2>& out) const;
    void corner_path(std::size_t ci, std::size_t cj, std::vector<Point2>& out) const;
};

// ---------------------------------------------------------------------------
// Construction / canonical input order

namespace detail {

inline bool curve_lex_less(const PolygonalCurve& a, const PolygonalCurve& b) {
    std::size_t k = std::min(a.segments(), b.segments()) + 1;
    for (std::size_t v = 0; v < k; ++v) {
        Point2 p = a.vertex(v), q = b.vertex(v);
        if (p.x != q.x) return p.x < q.x;
        if (p.y != q.y) return p.y < q.y;
    }
    return a.segments() < b.segments();
}

inline bool should_swap(const PolygonalCurve& P, const PolygonalCurve& Q) {
    if (P.segments() != Q.segments()) return P.segments() < Q.segments();
    return curve_lex_less(Q, P);
}

}  // namespace detail

inline ApproxRun::ApproxRun(const PolygonalCurve& P, const PolygonalCurve& Q,
                            const NormHandle& norm)
    : P_(P), Q_(Q), swapped_(detail::should_swap(P, Q)), norm_(norm) {
    if (!norm_.is_polygonal())
        throw std::invalid_argument(
            "cdtw_approx: norm is not polygonal; apply approximate_norm(eps) first");
    if (swapped_) std::swap(P_, Q_);
    K_ = norm_.as_polygon();
    tp_ = build_arc_table(P_, norm_);
    tq_ = build_arc_table(Q_, norm_);
    n_ = P_.segments();
    m_ = Q_.segments();
    run();
}

// ---------------------------------------------------------------------------
// Dynamic program

inline void ApproxRun::run() {
    const GaugePolygon& K = K_;
    northB_.resize(n_ * m_);
    eastB_.resize(n_ * m_);
    baseN_.resize(n_);
    baseE_.resize(m_);
    h_.assign((n_ + 1) * (m_ + 1), 0.0);
    corner_from_.assign((n_ + 1) * (m_ + 1), {});

    // base case: straight travel along the bottom and left boundaries
    auto base_border = [&](const PolygonalCurve& C, const ArcTable& tab, Point2 fixed,
                           std::size_t seg, double acc, bool swap_diff) {
        double s0 = tab.prefix[seg], s1 = tab.prefix[seg + 1];
        Point2 d = C.segment_dir(seg) * (1.0 / (s1 - s0));
        Point2 z0 = (C.vertex(seg) - fixed) - s0 * d;
        if (swap_diff) { z0 = -z0; d = -d; }
        PiecewiseQuadratic F = integrate_norm_affine(K, z0, d, s0, s1, 1.0);
        return F.add_quadratic(0.0, 0.0, acc - F.eval(s0));
    };
    double acc = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
        BorderState& b = baseN_[i];
        b.ref = {i, 0, Side::N, true};
        b.apx = base_border(P_, tp_, Q_.vertex(0), i, acc, false);
        b.apx.set_all_tags(new_tag({PathKind::Base, i, 0, Side::N, 0.0}));
        acc = b.apx.eval(tp_.prefix[i + 1]);
        h_[hidx(i + 1, 0)] = acc;
        corner_from_[hidx(i + 1, 0)] = {-1, 0.0};
    }
    acc = 0.0;
    for (std::size_t j = 0; j < m_; ++j) {
        BorderState& b = baseE_[j];
        b.ref = {0, j, Side::E, true};
        b.apx = base_border(Q_, tq_, P_.vertex(0), j, acc, true);
        b.apx.set_all_tags(new_tag({PathKind::Base, 0, j, Side::E, 0.0}));
        acc = b.apx.eval(tq_.prefix[j + 1]);
        h_[hidx(0, j + 1)] = acc;
        corner_from_[hidx(0, j + 1)] = {-1, 0.0};
    }

    for (std::size_t l = 0; l + 2 <= n_ + m_; ++l) {
        for (std::size_t i = 0; i < n_; ++i) {
            if (l < i) break;
            std::size_t j = l - i;
            if (j >= m_) continue;
            Cell c = cell_at(i, j);
            BorderState& S = j == 0 ? baseN_[i] : northB_[bidx(i, j - 1)];
            BorderState& W = i == 0 ? baseE_[j] : eastB_[bidx(i - 1, j)];

            BorderState& N = northB_[bidx(i, j)];
            BorderState& E = eastB_[bidx(i, j)];
            N.ref = {i, j, Side::N, false};
            E.ref = {i, j, Side::E, false};

            // corner propagation: straight continuations from NW and SE
            N.apx = propagate_corner(c, CornerSource::NW, h_[hidx(i, j + 1)]);
            N.apx.set_all_tags(new_tag({PathKind::Corner, i, j, Side::N, 0.0}));
            E.apx = propagate_corner(c, CornerSource::SE, h_[hidx(i + 1, j)]);
            E.apx.set_all_tags(new_tag({PathKind::Corner, i, j, Side::E, 0.0}));

            // best paths from the two input borders to the NE corner
            PiecewiseQuadratic FS = best_path_objective_south(c, S.apx);
            PiecewiseQuadratic FW = best_path_objective_west(c, W.apx);
            ParentCandidates CS = parent_candidates(FS);
            ParentCandidates CW = parent_candidates(FW);
            S.candidate_count = CS.values.size();
            W.candidate_count = CW.values.size();

            // adjoining propagation: W -> N and S -> E, fixed start s* only
            {
                PiecewiseQuadratic f =
                    fixed_start_to_north(c, {c.sx0, CW.best_s}, c.sx0, c.sx1)
                        .add_quadratic(0.0, 0.0, W.apx.eval(CW.best_s));
                f.set_all_tags(new_tag({PathKind::Adjoining, i, j, Side::N, CW.best_s}));
                N.apx = lower_envelope(N.apx, f);
            }
            {
                PiecewiseQuadratic f =
                    fixed_start_to_east(c, {CS.best_s, c.sy0}, c.sy0, c.sy1)
                        .add_quadratic(0.0, 0.0, S.apx.eval(CS.best_s));
                f.set_all_tags(new_tag({PathKind::Adjoining, i, j, Side::E, CS.best_s}));
                E.apx = lower_envelope(E.apx, f);
            }

            // opposing propagation only for the strictly dominating input
            if (CS.best_h < CW.best_h) {
                PiecewiseQuadratic env = opposing_envelope(c, S.apx, CS, i, j, Side::N);
                N.apx = lower_envelope(N.apx, env);
                N.rank = S.rank + 1;
            } else if (CW.best_h < CS.best_h) {
                PiecewiseQuadratic env =
                    opposing_envelope(transposed(c), W.apx, CW, i, j, Side::E);
                E.apx = lower_envelope(E.apx, env);
                E.rank = W.rank + 1;
            }

            for (BorderState* b : {&N, &E}) {
                b->apx.repair_continuity(1e-7);
                b->apx.clamp_nonnegative(1e-9 * (1.0 + b->apx.value_scale()));
            }

            h_[hidx(i + 1, j + 1)] = std::min(CS.best_h, CW.best_h);
            corner_from_[hidx(i + 1, j + 1)] =
                (CS.best_h <= CW.best_h) ? CornerFrom{0, CS.best_s} : CornerFrom{1, CW.best_s};
        }
    }
    value_ = h_[hidx(n_, m_)];
}

// ---------------------------------------------------------------------------
// Single-pass opposing propagation (south -> north orientation; west -> east
// passes the transposed cell)

inline PiecewiseQuadratic ApproxRun::opposing_envelope(const Cell& c,
                                                       const PiecewiseQuadratic& Aapx,
                                                       const ParentCandidates& cand,
                                                       std::size_t i, std::size_t j, Side out) {
    const double tol = 1e-9 * (1.0 + std::abs(c.sx0) + std::abs(c.sx1));
    std::vector<double> stars;
    for (double s : cand.values)
        if (s <= cand.best_s + tol) stars.push_back(std::min(s, cand.best_s));
    stars.erase(std::unique(stars.begin(), stars.end(),
                            [&](double a, double b) { return std::abs(a - b) <= tol; }),
                stars.end());
    if (stars.empty() || std::abs(stars.back() - cand.best_s) > tol)
        stars.push_back(cand.best_s);
    std::int64_t diag_tag = new_tag({PathKind::OppDiag, i, j, out, 0.0});
    return opposing_apx(c, Aapx, stars, diag_tag, [&](double s_star) {
        return new_tag({PathKind::OppFixed, i, j, out, s_star});
    });
}

// ---------------------------------------------------------------------------
// Diagnostics

inline Diagnostics ApproxRun::diagnostics() const {
    Diagnostics d;
    d.value = value_;
    auto account = [&](const BorderState& b) {
        d.per_border.push_back(
            {b.ref.i, b.ref.j, b.ref.side, b.rank, b.apx.size(), b.candidate_count});
        d.total_pieces += b.apx.size();
        d.max_rank = std::max(d.max_rank, b.rank);
    };
    for (const auto& b : baseN_) account(b);
    for (const auto& b : baseE_) account(b);
    for (const auto& b : northB_) account(b);
    for (const auto& b : eastB_) account(b);
    return d;
}

// ---------------------------------------------------------------------------
// Witness reconstruction

inline void ApproxRun::corner_path(std::size_t ci, std::size_t cj,
                                   std::vector<Point2>& out) const {
    if (ci == 0 || cj == 0) {
        out.push_back({0.0, 0.0});
        if (ci > 0) out.push_back({tp_.prefix[ci], 0.0});
        if (cj > 0) out.push_back({0.0, tq_.prefix[cj]});
        return;
    }
    const CornerFrom& cf = corner_from_[hidx(ci, cj)];
    std::size_t i = ci - 1, j = cj - 1;
    Cell c = cell_at(i, j);
    if (cf.side == 0) {
        border_path(i, j, 0, cf.s, out);
        for (Point2 p : opt_path(c, {cf.s, c.sy0}, c.ne())) out.push_back(p);
    } else {
        border_path(i, j, 1, cf.s, out);
        for (Point2 p : opt_path(c, {c.sx0, cf.s}, c.ne())) out.push_back(p);
    }
}

// Path from the origin to the given point of cell (i,j)'s south (in_side=0)
// or west (in_side=1) input border.
inline void ApproxRun::border_path(std::size_t i, std::size_t j, int in_side, double coord,
                                   std::vector<Point2>& out) const {
    const BorderState& b = in_side == 0 ? south_input(i, j) : west_input(i, j);
    std::int64_t tag = b.apx.tag_at(coord);
    if (tag < 0 || std::size_t(tag) >= prov_.size())
        throw std::logic_error("witness: piece without provenance");
    const Provenance& p = prov_[std::size_t(tag)];
    if (p.kind == PathKind::Base) {
        out.push_back({0.0, 0.0});
        if (in_side == 0)
            out.push_back({coord, 0.0});
        else
            out.push_back({0.0, coord});
        return;
    }
    Cell c = cell_at(p.i, p.j);
    Point2 target = (p.side == Side::N) ? Point2{coord, c.sy1} : Point2{c.sx1, coord};
    switch (p.kind) {
        case PathKind::Corner: {
            if (p.side == Side::N) {
                corner_path(p.i, p.j + 1, out);
                for (Point2 q : opt_path(c, {c.sx0, c.sy1}, target)) out.push_back(q);
            } else {
                corner_path(p.i + 1, p.j, out);
                for (Point2 q : opt_path(c, {c.sx1, c.sy0}, target)) out.push_back(q);
            }
            break;
        }
        case PathKind::Adjoining: {
            if (p.side == Side::N) {
                border_path(p.i, p.j, 1, p.s_start, out);
                for (Point2 q : opt_path(c, {c.sx0, p.s_start}, target)) out.push_back(q);
            } else {
                border_path(p.i, p.j, 0, p.s_start, out);
                for (Point2 q : opt_path(c, {p.s_start, c.sy0}, target)) out.push_back(q);
            }
            break;
        }
        case PathKind::OppFixed: {
            if (p.side == Side::N) {
                border_path(p.i, p.j, 0, p.s_start, out);
                for (Point2 q : opt_path(c, {p.s_start, c.sy0}, target)) out.push_back(q);
            } else {
                border_path(p.i, p.j, 1, p.s_start, out);
                for (Point2 q : opt_path(c, {c.sx0, p.s_start}, target)) out.push_back(q);
            }
            break;
        }
        case PathKind::OppDiag: {
            if (p.side == Side::N) {
                border_path(p.i, p.j, 0, coord, out);
                out.push_back({coord, c.sy0});
                out.push_back({coord, c.sy1});
            } else {
                border_path(p.i, p.j, 1, coord, out);
                out.push_back({c.sx0, coord});
                out.push_back({c.sx1, coord});
            }
            break;
        }
        default:
            throw std::logic_error("witness: unknown provenance");
    }
}

inline MonotonePath ApproxRun::witness() const {
    std::vector<Point2> raw;
    corner_path(n_, m_, raw);
    // clean: drop duplicates, clamp the tiny backward jitters of reconstruction
    std::vector<Point2> wp;
    double tol = 1e-9 * (1.0 + tp_.total() + tq_.total());
    for (Point2 p : raw) {
        if (!wp.empty()) {
            p.x = std::max(p.x, wp.back().x);
            p.y = std::max(p.y, wp.back().y);
            if (std::abs(p.x - wp.back().x) <= tol && std::abs(p.y - wp.back().y) <= tol)
                continue;
        }
        wp.push_back(p);
    }
    if (swapped_)
        for (Point2& p : wp) std::swap(p.x, p.y);
    return {std::move(wp)};
}

// ---------------------------------------------------------------------------
// Entry points

struct ApproxResult {
    double value;
    Diagnostics diagnostics;
};

inline ApproxResult cdtw_approx(const PolygonalCurve& P, const PolygonalCurve& Q,
                                const NormHandle& norm) {
    ApproxRun run(P, Q, norm);
    return {run.value(), run.diagnostics()};
}

}  // namespace cdtw
