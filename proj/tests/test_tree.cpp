#include <catch2/catch_amalgamated.hpp>

#include <optional>
#include <random>
#include <set>

#include "treeforms/tree.hpp"

using namespace treeforms;

namespace {

// Exact Moebius action on P^1(Q); nullopt encodes the point at infinity.
std::optional<mpq_class> mobius(const QMat& g, const std::optional<mpq_class>& x) {
    if (!x.has_value()) {
        if (g[1][0] == 0) return std::nullopt;
        return g[0][0] / g[1][0];
    }
    mpq_class den = g[1][0] * *x + g[1][1];
    if (den == 0) return std::nullopt;
    return (g[0][0] * *x + g[0][1]) / den;
}

bool ball_contains(const Ball& b, const std::optional<mpq_class>& x) {
    return x.has_value() ? b.contains(*x) : b.contains_infinity();
}

QMat random_glq(std::mt19937& rng, long p) {
    std::uniform_int_distribution<long> num(-40, 40), pw(0, 2);
    for (;;) {
        QMat g;
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                g[i][j] = mpq_class(num(rng)) / mpq_class(pow_z(p, pw(rng)));
        if (g[0][0] * g[1][1] - g[0][1] * g[1][0] != 0) return g;
    }
}

} // namespace

TEST_CASE("vertex normal form is canonical", "[tree]") {
    long p = 3;
    QMat id{{{mpq_class(1), mpq_class(0)}, {mpq_class(0), mpq_class(1)}}};
    CHECK(normalize(p, id) == Vertex::base(p));

    // Column operations over Z_p do not move the vertex; a residue change
    // does exactly when it survives mod p^a.
    QMat g1{{{mpq_class(3), mpq_class(0)}, {mpq_class(0), mpq_class(1)}}};
    QMat g2{{{mpq_class(3), mpq_class(3)}, {mpq_class(0), mpq_class(1)}}};
    QMat g3{{{mpq_class(3), mpq_class(1)}, {mpq_class(0), mpq_class(1)}}};
    CHECK(normalize(p, g1) == normalize(p, g2));
    CHECK(normalize(p, g1) != normalize(p, g3));
    CHECK(normalize(p, g3) == Vertex(p, 1, mpq_class(1)));

    // Homothety is divided out: [[p^2,0],[0,p]] is p * [[p,0],[0,1]].
    QMat g4{{{mpq_class(9), mpq_class(0)}, {mpq_class(0), mpq_class(3)}}};
    CHECK(normalize(p, g4) == Vertex(p, 1, mpq_class(0)));

    // Idempotence: renormalizing a normal form returns the same vertex.
    Vertex v(p, 2, mpq_class(5));
    QMat rep{{{mpq_class(9), mpq_class(5)}, {mpq_class(0), mpq_class(1)}}};
    CHECK(normalize(p, rep) == v);

    // Rational residues with prime-to-p denominators are legal: 1/2 = 5 mod 9.
    CHECK(Vertex(p, 2, mpq_class(1, 2)) == Vertex(p, 2, mpq_class(5)));

    QMat sing{{{mpq_class(1), mpq_class(2)}, {mpq_class(2), mpq_class(4)}}};
    CHECK_THROWS_AS(normalize(p, sing), SingularMatrix);
}

TEST_CASE("capped-precision normalization tracks digits honestly", "[tree]") {
    PadicContext ctx(3, -1, 12);
    QMat g{{{mpq_class(3), mpq_class(1)}, {mpq_class(0), mpq_class(1)}}};
    CHECK(normalize(embed_matrix(ctx, g)) == normalize(3, g));

    // A bottom row of capped zeros cannot be certified invertible.
    QpMat foggy;
    foggy[0][0] = ctx.q(1);
    foggy[0][1] = ctx.q(0);
    foggy[1][0] = Qp::zero_to(3, 12);
    foggy[1][1] = Qp::zero_to(3, 12);
    CHECK_THROWS_AS(normalize(foggy), PrecisionLoss);

    QpMat sing;
    sing[0][0] = ctx.q(1);
    sing[0][1] = ctx.q(2);
    sing[1][0] = Qp::exact_zero(3);
    sing[1][1] = Qp::exact_zero(3);
    CHECK_THROWS_AS(normalize(sing), SingularMatrix);

    // Residue digits beyond the matrix precision must not be fabricated.
    PadicContext tiny(3, -1, 2);
    QMat deep{{{mpq_class(81), mpq_class(5)}, {mpq_class(0), mpq_class(1)}}};
    CHECK_THROWS_AS(normalize(embed_matrix(tiny, deep)), PrecisionLoss);
}

TEST_CASE("the tree is (p+1)-regular with symmetric adjacency", "[tree]") {
    for (long p : {3L, 5L}) {
        Vertex v0 = Vertex::base(p);
        auto ns = neighbors(v0);
        CHECK(static_cast<long>(ns.size()) == p + 1);
        std::set<Vertex> distinct(ns.begin(), ns.end());
        CHECK(distinct.size() == ns.size());
        for (const auto& w : ns) {
            CHECK(distance(v0, w) == 1);
            auto back = neighbors(w);
            CHECK(std::count(back.begin(), back.end(), v0) == 1);
        }
    }
    // At p=3 the four directions at v0 are labeled by P^1(F_3): 0,1,2,inf.
    auto ns = neighbors(Vertex::base(3));
    CHECK(ns[0] == Vertex(3, 1, mpq_class(0)));
    CHECK(ns[1] == Vertex(3, 1, mpq_class(1)));
    CHECK(ns[2] == Vertex(3, 1, mpq_class(2)));
    CHECK(ns[3] == Vertex(3, -1, mpq_class(0)));
}

TEST_CASE("BFS ball sizes match tree regularity", "[tree]") {
    long p = 3;
    std::set<Vertex> seen{Vertex::base(p)};
    std::vector<Vertex> frontier{Vertex::base(p)};
    for (long m = 1; m <= 4; ++m) {
        std::vector<Vertex> next;
        for (const auto& v : frontier)
            for (const auto& w : neighbors(v))
                if (seen.insert(w).second) next.push_back(w);
        frontier = std::move(next);
        CHECK(static_cast<long>(frontier.size()) == (p + 1) * pow_z(p, m - 1).get_si());
        for (const auto& v : frontier) CHECK(distance(Vertex::base(p), v) == m);
    }
}

TEST_CASE("edge-ball dictionary at the base vertex", "[tree]") {
    long p = 3;
    Vertex v0 = Vertex::base(p);
    auto ns = neighbors(v0);
    for (long t = 0; t < p; ++t) {
        Ball b = ball_of_edge(DirEdge(v0, ns[static_cast<size_t>(t)]));
        CHECK(b == Ball(BallKind::finite, p, mpq_class(t), 1));
        CHECK(b.contains(mpq_class(t)));
        CHECK(b.contains(mpq_class(t + 3)));
        CHECK_FALSE(b.contains(mpq_class(t + 1)));
        CHECK_FALSE(b.contains_infinity());
    }
    Ball binf = ball_of_edge(DirEdge(v0, ns[3]));
    CHECK(binf == Ball(BallKind::complement, p, mpq_class(0), 0));
    CHECK(binf.contains_infinity());
    CHECK(binf.contains(mpq_class(1, 3)));
    CHECK_FALSE(binf.contains(mpq_class(7)));

    // U(e) and U(reverse e) tile P^1: checked on a spread of sample points.
    std::vector<std::optional<mpq_class>> samples = {
        mpq_class(0), mpq_class(1), mpq_class(2), mpq_class(5), mpq_class(1, 3),
        mpq_class(4, 9), mpq_class(-7, 2), mpq_class(27), std::nullopt};
    for (const auto& w : ns) {
        DirEdge e(v0, w);
        Ball b = ball_of_edge(e), br = ball_of_edge(e.reverse());
        for (const auto& x : samples)
            CHECK(ball_contains(b, x) != ball_contains(br, x));
    }
}

TEST_CASE("subdivision partitions the edge ball", "[tree]") {
    long p = 3;
    Vertex v0 = Vertex::base(p);
    std::vector<std::optional<mpq_class>> samples;
    for (long n = -8; n <= 8; ++n) samples.push_back(mpq_class(n));
    samples.push_back(mpq_class(1, 3));
    samples.push_back(mpq_class(5, 9));
    samples.push_back(mpq_class(7, 2));
    samples.push_back(std::nullopt);

    for (const auto& w : neighbors(v0)) {
        DirEdge e(v0, w);
        auto children = subdivide(e);
        CHECK(static_cast<long>(children.size()) == p);
        for (const auto& x : samples) {
            long inside = ball_contains(ball_of_edge(e), x) ? 1 : 0;
            long count = 0;
            for (const auto& c : children)
                if (ball_contains(ball_of_edge(c), x)) ++count;
            CHECK(count == inside);
        }
        if (e.downward())
            for (const auto& c : children)
                CHECK(ball_of_edge(c).depth() == ball_of_edge(e).depth() + 1);
    }

    // Repeated subdivision from the p+1 root edges: (p+1)p^(m-1) edges.
    std::vector<DirEdge> level;
    for (const auto& w : neighbors(v0)) level.emplace_back(v0, w);
    for (long m = 1; m <= 4; ++m) {
        CHECK(static_cast<long>(level.size()) == (p + 1) * pow_z(p, m - 1).get_si());
        for (const auto& x : samples) {
            long count = 0;
            for (const auto& e : level)
                if (ball_contains(ball_of_edge(e), x)) ++count;
            CHECK(count == 1); // the balls tile P^1(Q_p)
        }
        std::vector<DirEdge> next;
        for (const auto& e : level)
            for (auto& c : subdivide(e)) next.push_back(std::move(c));
        level = std::move(next);
    }
}

TEST_CASE("matrix action on vertices and edges", "[tree]") {
    long p = 3;
    PadicContext ctx(3, -1, 16);
    Vertex v0 = Vertex::base(p);

    QMat id{{{mpq_class(1), mpq_class(0)}, {mpq_class(0), mpq_class(1)}}};
    QMat diag{{{mpq_class(3), mpq_class(0)}, {mpq_class(0), mpq_class(1)}}};
    CHECK(act(id, v0) == v0);
    CHECK(act(diag, v0) == Vertex(p, 1, mpq_class(0)));

    // Scalars act trivially (the action factors through PGL_2).
    QMat diag5{{{mpq_class(15), mpq_class(0)}, {mpq_class(0), mpq_class(5)}}};
    Vertex deep(p, 2, mpq_class(7));
    CHECK(act(diag5, deep) == act(diag, deep));

    std::mt19937 rng(20260816);
    for (int trial = 0; trial < 50; ++trial) {
        QMat g = random_glq(rng, p), h = random_glq(rng, p);
        Vertex v(p, static_cast<long>(trial % 3), mpq_class(trial % 9));
        QMat gh;
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                gh[i][j] = g[i][0] * h[0][j] + g[i][1] * h[1][j];
        CHECK(act(gh, v) == act(g, act(h, v)));
        // Adjacency is preserved: images of an edge stay adjacent.
        DirEdge e(v, neighbors(v)[static_cast<size_t>(trial % 4)]);
        DirEdge img = act(g, e);
        CHECK(distance(img.origin(), img.target()) == 1);
        // Capped and exact actions agree when precision suffices.
        CHECK(act(embed_matrix(ctx, g), v) == act(g, v));
    }

    // Low precision is rejected rather than silently wrong.
    PadicContext tiny(3, -1, 3);
    QMat g{{{mpq_class(1), mpq_class(0)}, {mpq_class(0), mpq_class(1)}}};
    CHECK_THROWS_AS(act(embed_matrix(tiny, g), Vertex(p, 5, mpq_class(11))),
                    PrecisionLoss);
}

TEST_CASE("edge balls transform equivariantly", "[tree]") {
    long p = 3;
    Vertex v0 = Vertex::base(p);
    std::mt19937 rng(77);
    std::vector<std::optional<mpq_class>> samples = {
        mpq_class(0),     mpq_class(1),     mpq_class(2),      mpq_class(-1),
        mpq_class(4),     mpq_class(1, 3),  mpq_class(2, 9),   mpq_class(9),
        mpq_class(14, 5), mpq_class(-8, 3), std::nullopt};
    for (int trial = 0; trial < 100; ++trial) {
        QMat g = random_glq(rng, p);
        Vertex v(p, static_cast<long>(trial % 4) - 1, mpq_class(trial % 27));
        DirEdge e(v, neighbors(v)[static_cast<size_t>(trial) % 4]);
        Ball before = ball_of_edge(e);
        Ball after = ball_of_edge(act(g, e));
        for (const auto& x : samples)
            CHECK(ball_contains(after, mobius(g, x)) == ball_contains(before, x));
    }
}

TEST_CASE("reverse is a fixed-point-free involution", "[tree]") {
    long p = 3;
    std::vector<DirEdge> level;
    for (const auto& w : neighbors(Vertex::base(p))) level.emplace_back(Vertex::base(p), w);
    for (long m = 0; m < 3; ++m) {
        std::vector<DirEdge> next;
        for (const auto& e : level) {
            CHECK(e.reverse().reverse() == e);
            CHECK(e.reverse() != e);
            CHECK(e.reverse().origin() == e.target());
            for (auto& c : subdivide(e)) next.push_back(std::move(c));
        }
        level = std::move(next);
    }
}

TEST_CASE("geodesics: distance and stepping", "[tree]") {
    long p = 3;
    Vertex v0 = Vertex::base(p);
    CHECK(distance(v0, v0) == 0);
    CHECK(distance(v0, Vertex(p, 1, mpq_class(0))) == 1);
    // Siblings are two apart; deep residue agreements shorten paths.
    CHECK(distance(Vertex(p, 1, mpq_class(0)), Vertex(p, 1, mpq_class(1))) == 2);
    CHECK(distance(Vertex(p, 2, mpq_class(3)), Vertex(p, 1, mpq_class(0))) == 1);
    // (-2,0) lies on the ancestor chain of (2,5): four steps straight down.
    CHECK(distance(Vertex(p, -2, mpq_class(0)), Vertex(p, 2, mpq_class(5))) == 4);
    CHECK(distance(Vertex(p, 1, mpq_class(1)), Vertex(p, 2, mpq_class(5))) == 3);

    // Walking step_toward from v to w takes exactly distance(v,w) steps and
    // satisfies the triangle equality along the way.
    std::mt19937 rng(5);
    std::uniform_int_distribution<long> sc(-2, 3), res(0, 80);
    for (int trial = 0; trial < 30; ++trial) {
        Vertex v(p, sc(rng), mpq_class(res(rng)));
        Vertex w(p, sc(rng), mpq_class(res(rng)) / mpq_class(pow_z(p, 2)));
        long d = distance(v, w);
        Vertex cur = v;
        long steps = 0;
        while (cur != w) {
            Vertex nxt = step_toward(cur, w);
            CHECK(distance(cur, nxt) == 1);
            CHECK(distance(nxt, w) == d - steps - 1);
            cur = nxt;
            ++steps;
        }
        CHECK(steps == d);
    }
}

TEST_CASE("subtree rendering is indented text", "[tree]") {
    std::string out = render_subtree(Vertex::base(3), 1);
    CHECK(out.find("(0, 0)") != std::string::npos);
    CHECK(out.find("  (1, 0)") != std::string::npos);
    CHECK(out.find("  (-1, 0)") != std::string::npos);
}
