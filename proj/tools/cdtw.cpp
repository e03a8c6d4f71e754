// command-line front end: compute / oracle / check / plot / bench
#include <CLI11.hpp>
#include <json.hpp>

#include <cdtw/harness.hpp>
#include <cdtw/oracle.hpp>
#include <cdtw/propagate.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

using json = nlohmann::json;
using namespace cdtw;

namespace {

struct ParseFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct PropertyFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

PolygonalCurve curve_from_json(const json& j, const std::string& where) {
    if (!j.contains("vertices") || !j["vertices"].is_array())
        throw ParseFailure(where + ": expected {\"vertices\": [[x,y],...]}");
    std::vector<Point2> vs;
    for (const auto& v : j["vertices"]) {
        if (!v.is_array() || v.size() != 2)
            throw ParseFailure(where + ": vertex entries must be [x,y] pairs");
        vs.push_back({v[0].get<double>(), v[1].get<double>()});
    }
    return PolygonalCurve(vs);
}

PolygonalCurve load_curve(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseFailure(path + ": cannot open file");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::size_t first = text.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) throw ParseFailure(path + ": empty file");
    if (text[first] == '{') {
        try {
            return curve_from_json(json::parse(text), path);
        } catch (const json::exception& e) {
            throw ParseFailure(path + ": " + e.what());
        }
    }
    std::vector<Point2> vs;
    std::istringstream ss(text);
    std::string line;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        double x, y;
        char extra;
        if (std::sscanf(line.c_str(), " %lf , %lf %c", &x, &y, &extra) != 2)
            throw ParseFailure(path + ":" + std::to_string(lineno) +
                               ": expected \"x,y\", got \"" + line + "\"");
        vs.push_back({x, y});
    }
    try {
        return PolygonalCurve(vs);
    } catch (const std::exception& e) {
        throw ParseFailure(path + ": " + e.what());
    }
}

struct ResolvedNorm {
    NormHandle handle;
    json description;
    double factor_bound{5.0};
};

NormHandle base_norm(const std::string& name) {
    if (name == "l1") return NormHandle::l1();
    if (name == "l2") return NormHandle::l2();
    if (name == "linf") return NormHandle::linf();
    throw ParseFailure("unknown norm name: " + name);
}

// Accepts "l1"/"l2"/"linf", inline JSON, or a path to a JSON file.
ResolvedNorm resolve_norm(const std::string& spec, double epsilon) {
    std::string text = spec;
    if (!spec.empty() && spec[0] != '{' && spec != "l1" && spec != "l2" && spec != "linf") {
        std::ifstream in(spec);
        if (!in) throw ParseFailure(spec + ": not a norm name and not a readable file");
        text.assign((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    }
    NormHandle h;
    json desc;
    if (!text.empty() && text.find_first_not_of(" \t\r\n") != std::string::npos &&
        text[text.find_first_not_of(" \t\r\n")] == '{') {
        json j;
        try {
            j = json::parse(text);
        } catch (const json::exception& e) {
            throw ParseFailure(std::string("norm spec: ") + e.what());
        }
        std::string type = j.value("type", "");
        if (type == "l1" || type == "l2" || type == "linf") {
            h = base_norm(type);
            desc = {{"type", type}};
        } else if (type == "polygon") {
            std::vector<Point2> vs;
            for (const auto& v : j.at("vertices")) vs.push_back({v[0].get<double>(), v[1].get<double>()});
            try {
                h = NormHandle::gauge(GaugePolygon(vs));
            } catch (const std::exception& e) {
                throw ParseFailure(std::string("norm spec: ") + e.what());
            }
            desc = {{"type", "polygon"}, {"cones", h.polygon.cone_count()}};
        } else if (type == "approx") {
            double eps = j.value("epsilon", epsilon);
            NormHandle base = base_norm(j.value("base", "l2"));
            h = NormHandle::gauge(approximate_norm(base, {eps}));
            return {h,
                    {{"type", "approx"}, {"base", j.value("base", "l2")}, {"epsilon", eps},
                     {"cones", h.polygon.cone_count()}},
                    5.0 * (1.0 + eps)};
        } else {
            throw ParseFailure("norm spec: unknown type \"" + type + "\"");
        }
    } else {
        h = base_norm(spec);
        desc = {{"type", spec}};
    }
    if (!h.is_polygonal()) {
        // auto-approximate non-polygonal norms
        NormHandle g = NormHandle::gauge(approximate_norm(h, {epsilon}));
        return {g,
                {{"type", "approx"}, {"base", "l2"}, {"epsilon", epsilon},
                 {"cones", g.polygon.cone_count()}},
                5.0 * (1.0 + epsilon)};
    }
    return {h, desc, 5.0};
}

json diagnostics_json(const Diagnostics& d, bool per_border) {
    json out = {{"value", d.value}, {"total_pieces", d.total_pieces}, {"max_rank", d.max_rank}};
    if (per_border) {
        json rows = json::array();
        for (const auto& b : d.per_border)
            rows.push_back({{"i", b.i}, {"j", b.j}, {"side", b.side == Side::N ? "N" : "E"},
                            {"rank", b.rank}, {"pieces", b.pieces}, {"candidates", b.candidates}});
        out["per_border"] = rows;
    }
    return out;
}

json curve_json(const PolygonalCurve& c) {
    json vs = json::array();
    for (std::size_t i = 0; i + 1 <= c.segments(); ++i)
        vs.push_back({c.vertex(i).x, c.vertex(i).y});
    vs.push_back({c.vertex(c.segments()).x, c.vertex(c.segments()).y});
    return {{"vertices", vs}};
}

double loglog_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t n = xs.size();
    for (std::size_t k = 0; k < n; ++k) {
        double lx = std::log(xs[k]), ly = std::log(std::max(ys[k], 1e-9));
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    double den = double(n) * sxx - sx * sx;
    return den == 0.0 ? 0.0 : (double(n) * sxy - sx * sy) / den;
}

// ---------------------------------------------------------------------------

int cmd_compute(const std::string& p, const std::string& q, const std::string& norm_spec,
                double epsilon, bool diagnostics) {
    PolygonalCurve P = load_curve(p), Q = load_curve(q);
    ResolvedNorm nm = resolve_norm(norm_spec, epsilon);
    ApproxRun run(P, Q, nm.handle);
    json out = {{"value", run.value()},
                {"factor_bound", nm.factor_bound},
                {"norm", nm.description},
                {"diagnostics", diagnostics_json(run.diagnostics(), diagnostics)}};
    std::cout << out.dump(2) << "\n";
    std::cerr << "cdtw approx value " << run.value() << " (factor bound " << nm.factor_bound
              << ")\n";
    return 0;
}

int cmd_oracle(const std::string& p, const std::string& q, const std::string& norm_spec,
               double epsilon, int grid) {
    PolygonalCurve P = load_curve(p), Q = load_curve(q);
    ResolvedNorm nm = resolve_norm(norm_spec, epsilon);
    GridResult r = grid_cdtw(P, Q, nm.handle, {grid});
    json out = {{"value", r.value}, {"lower_hint", r.lower_hint}, {"grid", grid},
                {"norm", nm.description}};
    std::cout << out.dump(2) << "\n";
    return 0;
}

int cmd_check_lemma1(int trials, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    double lo = 1e18, hi = -1e18;
    const double PHI = 0.5 * (1.0 + std::sqrt(5.0));
    int done = 0;
    std::vector<NormHandle> norms{NormHandle::l1(), NormHandle::linf()};
    for (int k = 0; k < 5; ++k) norms.push_back(NormHandle::gauge(random_gauge(rng, 3 + k)));
    while (done < trials) {
        PolygonalCurve P = random_curve(rng, 1), Q = random_curve(rng, 1);
        const NormHandle& norm = norms[done % norms.size()];
        ArcTable tp = build_arc_table(P, norm), tq = build_arc_table(Q, norm);
        double a = U(rng) * tp.total(), b = U(rng) * tp.total();
        double c = U(rng) * tq.total(), d = U(rng) * tq.total();
        Point2 x{std::min(a, b), std::min(c, d)}, y{std::max(a, b), std::max(c, d)};
        double ratio;
        try {
            ratio = lemma1_ratio(P, Q, x, y, norm, {2048});
        } catch (const std::domain_error&) {
            continue;  // degenerate pair, resample
        }
        ++done;
        lo = std::min(lo, ratio);
        hi = std::max(hi, ratio);
        if (ratio < 0.2 - 1e-6 || ratio > 5.0 + 1e-6) {
            json bad = {{"mode", "lemma1"}, {"trial", done}, {"ratio", ratio},
                        {"P", curve_json(P)}, {"Q", curve_json(Q)},
                        {"x", {x.x, x.y}}, {"y", {y.x, y.y}}};
            std::cout << bad.dump(2) << "\n";
            std::cerr << "lemma1 ratio out of [1/5, 5]: " << ratio << "\n";
            return 3;
        }
    }
    // golden-ratio fixture pins the known extreme value
    PolygonalCurve GP({{0, 0}, {PHI + 1, 0}}), GQ({{PHI, 0}, {2 * PHI + 1, 0}});
    double golden = lemma1_ratio(GQ, GP, {0, 0}, {PHI + 1, PHI + 1}, NormHandle::l1(), {20000});
    hi = std::max(hi, golden);
    json out = {{"mode", "lemma1"}, {"trials", trials}, {"min_ratio", lo}, {"max_ratio", hi},
                {"golden_fixture_ratio", golden}, {"ok", true}};
    std::cout << out.dump(2) << "\n";
    return 0;
}

int cmd_check(const std::string& norm_spec, double epsilon, int trials, unsigned seed, int n,
              int m) {
    ResolvedNorm nm = resolve_norm(norm_spec, epsilon);
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    int max_rank_seen = 0;
    for (int trial = 0; trial < trials; ++trial) {
        PolygonalCurve P = random_curve(rng, n), Q = random_curve(rng, m);
        auto fail = [&](const std::string& what, json extra) -> int {
            extra["property"] = what;
            extra["trial"] = trial;
            extra["seed"] = seed;
            extra["P"] = curve_json(P);
            extra["Q"] = curve_json(Q);
            std::cout << extra.dump(2) << "\n";
            std::cerr << "check failed: " << what << " (trial " << trial << ")\n";
            return 3;
        };
        ApproxRun run(P, Q, nm.handle);
        double v = run.value();
        GridResult g = grid_cdtw(P, Q, nm.handle, {64});
        if (v < g.lower_hint - 1e-3 || v > 5.0 * (g.value + 1e-3))
            return fail("sandwich",
                        {{"value", v}, {"lower_hint", g.lower_hint}, {"grid_value", g.value}});
        ApproxRun rev(Q, P, nm.handle);
        if (std::abs(rev.value() - v) > 1e-7 * (1.0 + std::abs(v)))
            return fail("symmetry", {{"value", v}, {"swapped_value", rev.value()}});
        MonotonePath w = run.witness();
        double wc = path_cost_numeric(P, Q, w, nm.handle, {4096});
        if (std::abs(wc - v) > 1e-5 * (1.0 + std::abs(v)))
            return fail("witness", {{"value", v}, {"witness_cost", wc}});
        Diagnostics d = run.diagnostics();
        max_rank_seen = std::max(max_rank_seen, d.max_rank);
        if (d.max_rank > int(std::max(run.rows(), run.cols())))
            return fail("rank_bound", {{"max_rank", d.max_rank}});
        // border-travel probes on a few random borders
        for (int probe = 0; probe < 4; ++probe) {
            std::size_t i = rng() % run.rows(), j = rng() % run.cols();
            Cell c = run.cell(i, j);
            const PiecewiseQuadratic& apx =
                (rng() % 2) ? run.north_border(i, j).apx : run.east_border(i, j).apx;
            bool north = &apx == &run.north_border(i, j).apx;
            double lo = apx.domain_lo(), hi2 = apx.domain_hi();
            for (int k = 0; k < 10; ++k) {
                double t = lo + (hi2 - lo) * U(rng);
                double t2 = t + (hi2 - t) * U(rng);
                Point2 a = north ? Point2{t, c.sy1} : Point2{c.sx1, t};
                Point2 b = north ? Point2{t2, c.sy1} : Point2{c.sx1, t2};
                if (apx.eval(t) + straight_cost(c, a, b) < apx.eval(t2) - 1e-6)
                    return fail("border_travel", {{"i", i}, {"j", j}, {"t", t}, {"t2", t2}});
                if (apx.max_discontinuity() > 1e-7)
                    return fail("continuity", {{"i", i}, {"j", j},
                                               {"jump", apx.max_discontinuity()}});
            }
        }
    }
    json out = {{"trials", trials}, {"seed", seed}, {"failures", 0},
                {"max_rank_seen", max_rank_seen}, {"norm", nm.description}, {"ok", true}};
    std::cout << out.dump(2) << "\n";
    return 0;
}

int cmd_plot(const std::string& p, const std::string& q, const std::string& norm_spec,
             double epsilon, const std::string& out_path) {
    PolygonalCurve P = load_curve(p), Q = load_curve(q);
    ResolvedNorm nm = resolve_norm(norm_spec, epsilon);
    ApproxRun run(P, Q, nm.handle);
    MonotonePath w = run.witness();

    GaugePolygon K = nm.handle.as_polygon();
    ArcTable tp = build_arc_table(P, nm.handle), tq = build_arc_table(Q, nm.handle);
    double W = tp.total(), H = tq.total();
    double scale = 600.0 / std::max(W, H);
    auto X = [&](double s) { return s * scale; };
    auto Y = [&](double t) { return (H - t) * scale; };  // flip so t grows upward

    std::ostringstream svg;
    char buf[256];
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << int(W * scale) + 1
        << "\" height=\"" << int(H * scale) + 1 << "\" viewBox=\"0 0 " << W * scale << " "
        << H * scale << "\">\n";

    // distance heatmap, sampled
    const int R = 80;
    double dmax = 1e-12;
    std::vector<double> dist((R + 1) * (R + 1));
    for (int a = 0; a <= R; ++a)
        for (int b = 0; b <= R; ++b) {
            Point2 pp = point_at(P, tp, W * a / R), qq = point_at(Q, tq, H * b / R);
            double dv = norm_eval(nm.handle, pp - qq);
            dist[a * (R + 1) + b] = dv;
            dmax = std::max(dmax, dv);
        }
    for (int a = 0; a < R; ++a)
        for (int b = 0; b < R; ++b) {
            double dv = dist[a * (R + 1) + b] / dmax;
            int shade = int(255.0 * (1.0 - 0.8 * dv));
            std::snprintf(buf, sizeof buf,
                          "<rect class=\"heat\" x=\"%.4f\" y=\"%.4f\" width=\"%.4f\" "
                          "height=\"%.4f\" fill=\"rgb(%d,%d,255)\"/>\n",
                          X(W * a / R), Y(H * (b + 1) / R), W * scale / R, H * scale / R, shade,
                          shade);
            svg << buf;
        }

    // cell grid and valley lines
    for (std::size_t i = 0; i < P.segments(); ++i)
        for (std::size_t j = 0; j < Q.segments(); ++j) {
            Cell c = make_cell(P, Q, tp, tq, i, j, K);
            std::snprintf(buf, sizeof buf,
                          "<rect class=\"cell\" x=\"%.4f\" y=\"%.4f\" width=\"%.4f\" "
                          "height=\"%.4f\" fill=\"none\" stroke=\"black\"/>\n",
                          X(c.sx0), Y(c.sy1), (c.sx1 - c.sx0) * scale, (c.sy1 - c.sy0) * scale);
            svg << buf;
            // clip t = m*s + c to the cell box
            double m = c.valley.m, cc = c.valley.c;
            double s0 = c.sx0, s1 = c.sx1;
            if (m > 0) {
                s0 = std::max(s0, (c.sy0 - cc) / m);
                s1 = std::min(s1, (c.sy1 - cc) / m);
            }
            if (s1 > s0) {
                std::snprintf(buf, sizeof buf,
                              "<line class=\"valley\" x1=\"%.4f\" y1=\"%.4f\" x2=\"%.4f\" "
                              "y2=\"%.4f\" stroke=\"orange\"/>\n",
                              X(s0), Y(m * s0 + cc), X(s1), Y(m * s1 + cc));
                svg << buf;
            }
        }

    svg << "<polyline class=\"witness\" fill=\"none\" stroke=\"red\" stroke-width=\"2\" "
           "points=\"";
    for (const Point2& pt : w.waypoints) {
        std::snprintf(buf, sizeof buf, "%.6f,%.6f ", X(pt.x), Y(pt.y));
        svg << buf;
    }
    svg << "\"/>\n</svg>\n";

    std::ofstream out(out_path);
    if (!out) throw ParseFailure(out_path + ": cannot open for writing");
    out << svg.str();
    std::cerr << "wrote " << out_path << " (value " << run.value() << ")\n";
    return 0;
}

int cmd_bench(const std::string& norm_spec, double epsilon, const std::string& sizes_csv,
              const std::string& gauge_k_csv, int fixed_n, unsigned seed) {
    ResolvedNorm nm = resolve_norm(norm_spec, epsilon);
    auto parse_list = [](const std::string& s) {
        std::vector<int> out;
        std::istringstream ss(s);
        std::string tok;
        while (std::getline(ss, tok, ','))
            if (!tok.empty()) out.push_back(std::stoi(tok));
        if (out.empty()) throw ParseFailure("empty size list");
        return out;
    };
    auto time_run = [](const PolygonalCurve& P, const PolygonalCurve& Q, const NormHandle& h,
                       std::size_t& pieces) {
        auto t0 = std::chrono::steady_clock::now();
        ApproxRun run(P, Q, h);
        auto t1 = std::chrono::steady_clock::now();
        pieces = run.diagnostics().total_pieces;
        return std::chrono::duration<double, std::milli>(t1 - t0).count();
    };

    json out;
    std::vector<double> ns, ts, ps;
    json rows = json::array();
    for (int n : parse_list(sizes_csv)) {
        std::mt19937 rng(seed + unsigned(n));
        PolygonalCurve P = random_curve(rng, n), Q = random_curve(rng, n);
        std::size_t pieces = 0;
        double ms = time_run(P, Q, nm.handle, pieces);
        rows.push_back({{"n", n}, {"ms", ms}, {"pieces", pieces}});
        std::cerr << "n=" << n << "  " << ms << " ms  " << pieces << " pieces\n";
        ns.push_back(n);
        ts.push_back(ms);
        ps.push_back(double(pieces));
    }
    out["rows"] = rows;
    out["time_slope"] = loglog_slope(ns, ts);
    out["piece_slope"] = loglog_slope(ns, ps);

    if (!gauge_k_csv.empty()) {
        std::vector<double> ks, kts;
        json grows = json::array();
        for (int k : parse_list(gauge_k_csv)) {
            std::mt19937 rng(seed + 1000u + unsigned(k));
            NormHandle h = NormHandle::gauge(random_gauge(rng, std::max(2, k / 2)));
            PolygonalCurve P = random_curve(rng, fixed_n), Q = random_curve(rng, fixed_n);
            std::size_t pieces = 0;
            double ms = time_run(P, Q, h, pieces);
            grows.push_back({{"k", int(h.polygon.cone_count())}, {"ms", ms}, {"pieces", pieces}});
            std::cerr << "k=" << h.polygon.cone_count() << "  " << ms << " ms\n";
            ks.push_back(double(h.polygon.cone_count()));
            kts.push_back(ms);
        }
        out["gauge"] = {{"n", fixed_n}, {"rows", grows}, {"time_slope", loglog_slope(ks, kts)}};
    }
    std::cout << out.dump(2) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"continuous dynamic time warping, constant-factor approximation"};
    app.require_subcommand(1);

    std::string p_path, q_path, norm_spec = "l1", out_path = "out.svg";
    std::string sizes = "5,10,20,40", gauge_k;
    double epsilon = 0.01;
    int grid = 64, trials = 20, nseg = 4, mseg = 4, fixed_n = 8;
    unsigned seed = 0;
    bool diagnostics = false, lemma1 = false;

    auto* compute = app.add_subcommand("compute", "approximate CDTW of two curves");
    compute->add_option("--p", p_path, "curve P (CSV or JSON)")->required();
    compute->add_option("--q", q_path, "curve Q (CSV or JSON)")->required();
    compute->add_option("--norm", norm_spec, "norm: l1|l2|linf, inline JSON, or JSON file");
    compute->add_option("--epsilon", epsilon, "approximation epsilon for non-polygonal norms");
    compute->add_flag("--diagnostics", diagnostics, "include per-border diagnostics");

    auto* oracle = app.add_subcommand("oracle", "grid-DP reference value");
    oracle->add_option("--p", p_path)->required();
    oracle->add_option("--q", q_path)->required();
    oracle->add_option("--norm", norm_spec);
    oracle->add_option("--epsilon", epsilon);
    oracle->add_option("--grid", grid, "grid points per cell side");

    auto* check = app.add_subcommand("check", "randomized property checks");
    check->add_option("--trials", trials);
    check->add_option("--seed", seed);
    check->add_flag("--lemma1", lemma1, "two-bend path ratio sweep instead of sandwich checks");
    check->add_option("--n", nseg, "segments of P");
    check->add_option("--m", mseg, "segments of Q");
    check->add_option("--norm", norm_spec);
    check->add_option("--epsilon", epsilon);

    auto* plot = app.add_subcommand("plot", "SVG of cells, valleys, heatmap, witness");
    plot->add_option("--p", p_path)->required();
    plot->add_option("--q", q_path)->required();
    plot->add_option("--norm", norm_spec);
    plot->add_option("--epsilon", epsilon);
    plot->add_option("--out", out_path, "output SVG path");

    auto* bench = app.add_subcommand("bench", "timing ladder and scaling slopes");
    bench->add_option("--norm", norm_spec);
    bench->add_option("--epsilon", epsilon);
    bench->add_option("--sizes", sizes, "comma-separated segment counts");
    bench->add_option("--gauge-k", gauge_k, "comma-separated gauge cone counts at fixed n");
    bench->add_option("--n", fixed_n, "fixed curve size for the gauge ladder");
    bench->add_option("--seed", seed);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*compute) return cmd_compute(p_path, q_path, norm_spec, epsilon, diagnostics);
        if (*oracle) return cmd_oracle(p_path, q_path, norm_spec, epsilon, grid);
        if (*check)
            return lemma1 ? cmd_check_lemma1(trials, seed)
                          : cmd_check(norm_spec, epsilon, trials, seed, nseg, mseg);
        if (*plot) return cmd_plot(p_path, q_path, norm_spec, epsilon, out_path);
        if (*bench) return cmd_bench(norm_spec, epsilon, sizes, gauge_k, fixed_n, seed);
    } catch (const PropertyFailure& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const ParseFailure& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "numeric guard: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
