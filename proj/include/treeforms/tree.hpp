#pragma once

// The (p+1)-regular tree of lattice classes for GL_2(Q_p). A vertex is the
// homothety class with upper-triangular representative [[p^a, b],[0,1]],
// b a canonical digit lift mod p^a (p-power denominator, 0 <= b < p^a).
// Directed edges carry the dictionary to compact open subsets of P^1(Q_p):
// a ball b + p^d Z_p, or the complement of one (the chart around infinity).

#include <gmpxx.h>

#include <array>
#include <string>
#include <vector>

#include "treeforms/arith.hpp"
#include "treeforms/errors.hpp"
#include "treeforms/padic.hpp"

namespace treeforms {

// Canonical lift of b mod p^a: the unique rational in [0, p^a) with p-power
// denominator congruent to b. Requires b itself to have p-power denominator.
inline mpq_class residue_lift(const mpq_class& b, long p, long a) {
    if (b == 0) return mpq_class(0);
    long v = vp(b, p);
    if (v >= a) return mpq_class(0);
    long k = v < 0 ? -v : 0;
    mpq_class scaled = b * mpq_class(pow_z(p, k));
    mpz_class M = pow_z(p, a + k);
    // The prime-to-p part of the denominator inverts mod p^(a+k).
    mpz_class num = mpz_class(scaled.get_num()) * invmod(mpz_class(scaled.get_den()), M);
    mpq_class out = mpq_class(mod_lift(num, M)) / mpq_class(pow_z(p, k));
    out.canonicalize();
    return out;
}

class Vertex {
public:
    Vertex() : p_(0), a_(0) {}
    Vertex(long p, long a, const mpq_class& b) : p_(p), a_(a), b_(residue_lift(b, p, a)) {}

    static Vertex base(long p) { return Vertex(p, 0, mpq_class(0)); }

    long prime() const { return p_; }
    long scale() const { return a_; }
    const mpq_class& residue() const { return b_; }

    friend bool operator==(const Vertex& v, const Vertex& w) {
        return v.p_ == w.p_ && v.a_ == w.a_ && v.b_ == w.b_;
    }
    friend bool operator!=(const Vertex& v, const Vertex& w) { return !(v == w); }
    friend bool operator<(const Vertex& v, const Vertex& w) {
        if (v.a_ != w.a_) return v.a_ < w.a_;
        return cmp(v.b_, w.b_) < 0;
    }

    std::string str() const {
        return "(" + std::to_string(a_) + ", " + b_.get_str() + ")";
    }

private:
    long p_;
    long a_;
    mpq_class b_;
};

// Graph distance: both endpoints climb to the deepest common ancestor,
// which sits at scale min(a_v, a_w, v_p(b_v - b_w)).
inline long distance(const Vertex& v, const Vertex& w) {
    if (v.prime() != w.prime()) throw ConfigError("distance: different primes");
    long meet = std::min(v.scale(), w.scale());
    if (v.residue() != w.residue())
        meet = std::min(meet, vp(v.residue() - w.residue(), v.prime()));
    return (v.scale() - meet) + (w.scale() - meet);
}

// The neighbour of v one step up (smaller scale).
inline Vertex parent(const Vertex& v) {
    return Vertex(v.prime(), v.scale() - 1, v.residue());
}

// The p+1 neighbours: children t = 0..p-1 (matching the labeling of the
// edges at v by P^1(F_p)), then the parent as the direction "infinity".
inline std::vector<Vertex> neighbors(const Vertex& v) {
    long p = v.prime();
    std::vector<Vertex> out;
    out.reserve(static_cast<size_t>(p) + 1);
    mpq_class step = pow_q(p, v.scale());
    for (long t = 0; t < p; ++t)
        out.emplace_back(p, v.scale() + 1, v.residue() + t * step);
    out.push_back(parent(v));
    return out;
}

class DirEdge {
public:
    DirEdge() = default;
    DirEdge(Vertex origin, Vertex target)
        : origin_(std::move(origin)), target_(std::move(target)) {
        if (distance(origin_, target_) != 1)
            throw ConfigError("DirEdge: endpoints are not adjacent");
    }

    const Vertex& origin() const { return origin_; }
    const Vertex& target() const { return target_; }
    bool downward() const { return target_.scale() == origin_.scale() + 1; }

    DirEdge reverse() const { return DirEdge(target_, origin_); }

    friend bool operator==(const DirEdge& e, const DirEdge& f) {
        return e.origin_ == f.origin_ && e.target_ == f.target_;
    }
    friend bool operator!=(const DirEdge& e, const DirEdge& f) { return !(e == f); }
    friend bool operator<(const DirEdge& e, const DirEdge& f) {
        if (e.origin_ != f.origin_) return e.origin_ < f.origin_;
        return e.target_ < f.target_;
    }

    std::string str() const { return origin_.str() + " -> " + target_.str(); }

private:
    Vertex origin_, target_;
};

enum class BallKind { finite, complement };

// center + p^depth Z_p, or its complement in P^1(Q_p) (which contains the
// point at infinity).
class Ball {
public:
    Ball(BallKind kind, long p, const mpq_class& center, long depth)
        : kind_(kind), p_(p), depth_(depth), center_(residue_lift(center, p, depth)) {}

    BallKind kind() const { return kind_; }
    long prime() const { return p_; }
    long depth() const { return depth_; }
    const mpq_class& center() const { return center_; }

    friend bool operator==(const Ball& u, const Ball& w) {
        return u.kind_ == w.kind_ && u.p_ == w.p_ && u.depth_ == w.depth_ &&
               u.center_ == w.center_;
    }
    friend bool operator!=(const Ball& u, const Ball& w) { return !(u == w); }

    bool contains(const mpq_class& x) const {
        bool in_disc = (x == center_) || vp(x - center_, p_) >= depth_;
        return kind_ == BallKind::finite ? in_disc : !in_disc;
    }
    bool contains_infinity() const { return kind_ == BallKind::complement; }

    std::string str() const {
        std::string core = center_.get_str() + " + " + std::to_string(p_) + "^" +
                           std::to_string(depth_) + "*Zp";
        return kind_ == BallKind::finite ? core : "P1 minus (" + core + ")";
    }

private:
    BallKind kind_;
    long p_;
    long depth_;
    mpq_class center_;
};

// U(e): the ends through e. Downward edges give the finite ball of the
// target; upward edges give the complement of the origin's ball.
inline Ball ball_of_edge(const DirEdge& e) {
    long p = e.origin().prime();
    if (e.downward())
        return Ball(BallKind::finite, p, e.target().residue(), e.target().scale());
    return Ball(BallKind::complement, p, e.origin().residue(), e.origin().scale());
}

// The p outgoing edges at target(e) other than the reversal. Their balls
// partition U(e).
inline std::vector<DirEdge> subdivide(const DirEdge& e) {
    std::vector<DirEdge> out;
    for (const Vertex& w : neighbors(e.target())) {
        if (w == e.origin()) continue;
        out.emplace_back(e.target(), w);
    }
    return out;
}

using QpMat = std::array<std::array<Qp, 2>, 2>;
using QMat = std::array<std::array<mpq_class, 2>, 2>;

inline QpMat embed_matrix(const PadicContext& ctx, const QMat& g) {
    QpMat out;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) out[i][j] = ctx.q(g[i][j]);
    return out;
}

// Column Hermite reduction of an invertible capped matrix to
// [[p^alpha, beta],[0, p^gamma]] modulo units, then quotient by homothety:
// vertex scale a = alpha - gamma, residue = beta / p^gamma mod p^a.
inline Vertex normalize(const QpMat& g) {
    long p = g[0][0].prime();
    std::array<Qp, 2> top = {g[0][0], g[0][1]};
    std::array<Qp, 2> bot = {g[1][0], g[1][1]};
    if (bot[0].is_zero() && bot[1].is_zero()) {
        if (bot[0].is_exact_zero() && bot[1].is_exact_zero())
            throw SingularMatrix("normalize: bottom row is zero");
        throw PrecisionLoss("normalize: bottom row indistinguishable from zero");
    }
    // Pivot on the provably-nonzero bottom entry of smaller valuation.
    long v0 = bot[0].is_zero() ? VAL_INF : bot[0].val();
    long v1 = bot[1].is_zero() ? VAL_INF : bot[1].val();
    if (v0 < v1) {
        std::swap(top[0], top[1]);
        std::swap(bot[0], bot[1]);
    }
    Qp X = top[0], Y = top[1], Z = bot[1];
    // Capped zeros propagate their uncertainty into X honestly.
    if (!bot[0].is_exact_zero()) X = X - (bot[0] / Z) * Y;
    if (X.is_zero()) {
        if (X.is_exact_zero()) throw SingularMatrix("normalize: zero determinant");
        throw PrecisionLoss("normalize: pivot indistinguishable from zero");
    }
    long a = X.val() - Z.val();
    Qp w = Y / Z;
    if (!w.is_exact_zero() && w.absprec() < a)
        throw PrecisionLoss("normalize: residue digits exceed matrix precision");
    return Vertex(p, a, w.is_exact_zero() ? mpq_class(0) : w.lift_rational(a));
}

inline Vertex normalize(long p, const QMat& g) {
    mpq_class d = g[0][0] * g[1][1] - g[0][1] * g[1][0];
    if (d == 0) throw SingularMatrix("normalize: zero determinant");
    mpq_class X = g[0][0], Y = g[0][1], Z = g[1][1];
    mpq_class C = g[1][0];
    long vC = C == 0 ? VAL_INF : vp(C, p);
    long vD = Z == 0 ? VAL_INF : vp(Z, p);
    if (vC < vD) {
        std::swap(X, Y);
        std::swap(C, Z);
    }
    if (C != 0) X = X - (C / Z) * Y;
    long a = vp(X, p) - vp(Z, p);
    return Vertex(p, a, residue_lift(Y / Z, p, a));
}

namespace detail {

inline void act_precision_check(const QpMat& g, long scale) {
    long need = (scale < 0 ? -scale : scale) + 2;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            const Qp& x = g[i][j];
            if (!x.is_exact_zero() && x.relprec() < need)
                throw PrecisionLoss("act: matrix precision below vertex scale bound");
        }
}

} // namespace detail

// g . v: apply g to the representative lattice and renormalize. Capped
// entries must carry more digits than the vertex scale, or the reduction
// is not determined.
inline Vertex act(const QpMat& g, const Vertex& v) {
    detail::act_precision_check(g, v.scale());
    long p = v.prime();
    // Columns of g * [[p^a, b],[0,1]].
    mpq_class pa_q = pow_q(p, v.scale());
    QpMat m;
    m[0][0] = g[0][0].mul_rational(pa_q);
    m[1][0] = g[1][0].mul_rational(pa_q);
    m[0][1] = g[0][0].mul_rational(v.residue()) + g[0][1];
    m[1][1] = g[1][0].mul_rational(v.residue()) + g[1][1];
    return normalize(m);
}

inline Vertex act(const QMat& g, const Vertex& v) {
    long p = v.prime();
    mpq_class pa = pow_q(p, v.scale());
    QMat m;
    m[0][0] = g[0][0] * pa;
    m[1][0] = g[1][0] * pa;
    m[0][1] = g[0][0] * v.residue() + g[0][1];
    m[1][1] = g[1][0] * v.residue() + g[1][1];
    return normalize(p, m);
}

template <class MatT>
inline DirEdge act(const MatT& g, const DirEdge& e) {
    return DirEdge(act(g, e.origin()), act(g, e.target()));
}

// First step of the geodesic from v toward w.
inline Vertex step_toward(const Vertex& v, const Vertex& w) {
    if (v == w) throw ConfigError("step_toward: endpoints coincide");
    long meet = std::min(v.scale(), w.scale());
    if (v.residue() != w.residue())
        meet = std::min(meet, vp(v.residue() - w.residue(), v.prime()));
    if (v.scale() > meet) return parent(v);
    return Vertex(v.prime(), v.scale() + 1, w.residue());
}

// Indented rendering of the BFS tree around v to the given radius.
inline std::string render_subtree(const Vertex& v, long radius) {
    std::string out;
    struct Item { Vertex vert; Vertex from; long depth; bool has_from; };
    std::vector<Item> stack{{v, v, 0, false}};
    while (!stack.empty()) {
        Item it = stack.back();
        stack.pop_back();
        out.append(static_cast<size_t>(2 * it.depth), ' ');
        out += it.vert.str();
        out += '\n';
        if (it.depth == radius) continue;
        auto ns = neighbors(it.vert);
        for (auto rit = ns.rbegin(); rit != ns.rend(); ++rit) {
            if (it.has_from && *rit == it.from) continue;
            stack.push_back({*rit, it.vert, it.depth + 1, true});
        }
    }
    return out;
}

} // namespace treeforms
