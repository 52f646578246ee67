#pragma once

// Boundary distributions attached to harmonic cocycles: exact moments on
// the compact opens U(e), depth-m Riemann integration of locally analytic
// integrands with degree-n Taylor correction, Poisson evaluation of the
// rigid form, and line integrals of f(z) P(z) dz between points of the
// p-adic upper half plane.
//
// Chart rule: on the finite ball b + p^a Z_p the integrand is expanded as
// phi(b + y) around y = 0 and paired with the exact centered moments
// mu((x-b)^k chi); on a complement chart the transport y^n phi(b + 1/y) is
// expanded instead, and the dual basis transports to (x-b)^(n-k), so the
// same centered moments serve with reversed index.

#include <functional>
#include <optional>
#include <vector>

#include "treeforms/cocycle.hpp"
#include "treeforms/poly.hpp"

namespace treeforms {

// The depth-m covering of P^1(Q_p): the (p+1) p^(m-1) directed edges at
// tree distance m from the base vertex, pointing away from it, in a fixed
// breadth-first order.
inline std::vector<DirEdge> boundary_cover(long p, long depth) {
    if (depth < 1) throw ConfigError("boundary_cover: depth must be >= 1");
    std::vector<DirEdge> level;
    Vertex v0 = Vertex::base(p);
    for (const Vertex& w : neighbors(v0)) level.emplace_back(v0, w);
    for (long m = 1; m < depth; ++m) {
        std::vector<DirEdge> next;
        next.reserve(level.size() * static_cast<size_t>(p));
        for (const DirEdge& e : level)
            for (const Vertex& x : neighbors(e.target()))
                if (!(x == e.origin())) next.emplace_back(e.target(), x);
        level = std::move(next);
    }
    return level;
}

// A locally analytic integrand on P^1(Q_p) with pole order <= n at
// infinity, described by its transported Taylor data on chart balls.
struct LocAnalytic {
    long n = 0;          // Taylor rule order: n+1 coefficients per chart
    long pole_order = 0; // declared pole order at infinity, <= n

    // First n+1 coefficients of phi(b + y) on a finite ball, or of
    // y^n phi(b + 1/y) on a complement chart, both around y = 0; throws
    // BoundaryPoint when the expansion does not converge on the chart.
    std::function<std::vector<Qp2>(const Ball&)> chart_taylor;

    // Set when phi is globally a polynomial of degree <= n; integration
    // then pairs it with exact total moments.
    std::optional<Poly<Qp2>> global_poly;
};

struct Integral {
    Qp2 value;
    long err_exponent; // heuristic valuation of the truncation error
};

class TeitelbaumMeasure {
public:
    explicit TeitelbaumMeasure(const HarmonicCocycle& c) : c_(&c) {
        if (c.n() % 2 != 0) throw ConfigError("TeitelbaumMeasure: weight index must be even");
    }

    const HarmonicCocycle& cocycle() const { return *c_; }
    long n() const { return c_->n(); }
    const PadicContext& context() const { return c_->graph().context(); }
    long prime() const { return context().p; }

    // Exact <mu, x^i chi_U(e)> = c_f(e)(x^i).
    QuadRat moment(const DirEdge& e, long i) const {
        if (i < 0 || i > n()) throw IndexOutOfRange("moment: need 0 <= i <= n");
        return transported(e)[static_cast<size_t>(i)];
    }

    // Exact <mu, (x-b)^k chi_U(e)>.
    QuadRat centered_moment(const DirEdge& e, const mpq_class& b, long k) const {
        if (k < 0 || k > n()) throw IndexOutOfRange("centered_moment: need 0 <= k <= n");
        const VnElem<QuadRat> v = transported(e);
        QuadRat acc(0);
        QuadRat pw(1);
        // (x-b)^k = sum_j C(k,j) (-b)^(k-j) x^j, accumulated from j = k down.
        for (long j = k; j >= 0; --j) {
            acc = acc + QuadRat(mpq_class(binom(k, j))) * pw * v[static_cast<size_t>(j)];
            pw = pw * QuadRat(mpq_class(-b));
        }
        return acc;
    }

    // Pairing of chart Taylor coefficients with the measure on U(e).
    Qp2 chart_pairing(const DirEdge& e, const std::vector<Qp2>& taylor) const {
        const Ball ball = ball_of_edge(e);
        const SplitEmbedding& emb = c_->graph().splitting().field();
        const PadicContext& ctx = context();
        Qp2 acc = Qp2::exact_zero(ctx.p, ctx.r);
        for (long i = 0; i <= n(); ++i) {
            long k = ball.kind() == BallKind::finite ? i : n() - i;
            QuadRat cm = centered_moment(e, ball.center(), k);
            if (cm.is_zero()) continue;
            acc = acc + taylor[static_cast<size_t>(i)] * emb.embed2(cm);
        }
        return acc;
    }

private:
    VnElem<QuadRat> transported(const DirEdge& e) const {
        try {
            return c_->evaluate(e);
        } catch (const NotFound&) {
            throw UnreducedEdge("measure: edge does not reduce to the stored orbits");
        }
    }

    const HarmonicCocycle* c_;
};

// Depth-m Riemann sum with degree-n Taylor correction. Polynomial
// integrands take the exact path: the total moments over any depth cover
// vanish identically (harmonicity), so the result is an exact zero.
inline Integral integrate(const TeitelbaumMeasure& m, const LocAnalytic& phi, long depth) {
    if (depth < 1) throw ConfigError("integrate: depth must be >= 1");
    if (phi.n != m.n()) throw WeightMismatch("integrate: integrand order != weight index");
    const PadicContext& ctx = m.context();
    std::vector<DirEdge> cover = boundary_cover(ctx.p, depth);

    if (phi.global_poly) {
        const Poly<Qp2>& poly = *phi.global_poly;
        const SplitEmbedding& emb = m.cocycle().graph().splitting().field();
        Qp2 acc = Qp2::exact_zero(ctx.p, ctx.r);
        for (long i = 0; i <= m.n(); ++i) {
            QuadRat total(0);
            for (const DirEdge& e : cover) total = total + m.moment(e, i);
            if (total.is_zero()) continue;
            acc = acc + poly.coeff_or_zero(i) * emb.embed2(total);
        }
        return Integral{acc, VAL_INF};
    }

    Qp2 acc = Qp2::exact_zero(ctx.p, ctx.r);
    for (const DirEdge& e : cover) {
        std::vector<Qp2> taylor = phi.chart_taylor(ball_of_edge(e));
        if (static_cast<long>(taylor.size()) != m.n() + 1)
            throw ConfigError("integrate: chart_taylor returned wrong length");
        acc = acc + m.chart_pairing(e, taylor);
    }
    // Heuristic: the slope-(n/2) growth of the distribution against the
    // p^-(n+1)-per-depth shrinkage of the discarded Taylor tail gains
    // (n+2)/2 digits per depth on a unit-normalized cocycle.
    long err = depth * (m.n() + 2) / 2;
    if (!acc.is_exact_zero() && acc.absprec() < err)
        throw PrecisionLoss("integrate: working precision below the error estimate");
    return Integral{acc, err};
}

namespace detail {

inline Qp2 qp2_rat(const PadicContext& ctx, const mpq_class& q) {
    return Qp2::from_rationals(ctx.p, ctx.r, q, 0, ctx.prec);
}

// Coefficients of poly(b + y), truncated to degree n.
inline Poly<Qp2> shift_poly(const Poly<Qp2>& poly, const mpq_class& b, long n,
                            const PadicContext& ctx) {
    Qp2 zero = Qp2::exact_zero(ctx.p, ctx.r);
    Vec<Qp2> out(static_cast<size_t>(n + 1), zero);
    for (long i = 0; i <= poly.degree() && i <= n; ++i) {
        Qp2 pw = Qp2::from_rationals(ctx.p, ctx.r, 1, 0, ctx.prec);
        // contribute P_i C(i,k) b^(i-k) to coefficient k, from k = i down.
        for (long k = i; k >= 0; --k) {
            out[static_cast<size_t>(k)] =
                out[static_cast<size_t>(k)] +
                poly.coeff_or_zero(i).mul_rational(mpq_class(binom(i, k))) * pw;
            pw = pw.mul_rational(b);
        }
    }
    return Poly<Qp2>(std::move(out));
}

// G(y) = y^n poly(b + 1/y) = sum_i P_i y^(n-i) (b y + 1)^i, degree <= n.
inline Poly<Qp2> complement_transport(const Poly<Qp2>& poly, const mpq_class& b, long n,
                                      const PadicContext& ctx) {
    Qp2 zero = Qp2::exact_zero(ctx.p, ctx.r);
    Vec<Qp2> out(static_cast<size_t>(n + 1), zero);
    for (long i = 0; i <= poly.degree() && i <= n; ++i) {
        // (b y + 1)^i shifted by y^(n-i): coefficient of y^(n-i+j) is C(i,j) b^j.
        Qp2 pw = Qp2::from_rationals(ctx.p, ctx.r, 1, 0, ctx.prec);
        for (long j = 0; j <= i; ++j) {
            out[static_cast<size_t>(n - i + j)] =
                out[static_cast<size_t>(n - i + j)] +
                poly.coeff_or_zero(i).mul_rational(mpq_class(binom(i, j))) * pw;
            pw = pw.mul_rational(b);
        }
    }
    return Poly<Qp2>(std::move(out));
}

inline std::vector<Qp2> poly_coeff_vector(const Poly<Qp2>& poly, long n,
                                          const PadicContext& ctx) {
    std::vector<Qp2> out;
    out.reserve(static_cast<size_t>(n + 1));
    for (long i = 0; i <= n; ++i) {
        Qp2 c = poly.coeff_or_zero(i);
        out.push_back(c.is_exact_zero() ? Qp2::exact_zero(ctx.p, ctx.r) : c);
    }
    return out;
}

inline void require_upper_half(const Qp2& z, const char* who) {
    if (z.im().is_zero())
        throw BoundaryPoint(std::string(who) + ": point has no imaginary part");
}

// Taylor coefficients of log_iw((z2 - x)/(z1 - x)) on a chart, around the
// center in the chart coordinate. Finite chart (x = b + y):
// L_0 = log(w2/w1), L_k = (w1^-k - w2^-k)/k; complement (x = b + 1/y):
// M_0 = 0, M_k = (w1^k - w2^k)/k, where w_i = z_i - b.
inline std::vector<Qp2> log_ratio_coeffs(const Qp2& z1, const Qp2& z2, const Ball& ball,
                                         long n, const PadicContext& ctx) {
    Qp2 w1 = z1 - qp2_rat(ctx, ball.center());
    Qp2 w2 = z2 - qp2_rat(ctx, ball.center());
    std::vector<Qp2> lcoef(static_cast<size_t>(n + 1), Qp2::exact_zero(ctx.p, ctx.r));
    if (ball.kind() == BallKind::finite) {
        if (w1.is_zero() || w1.val() >= ball.depth() || w2.is_zero() ||
            w2.val() >= ball.depth())
            throw BoundaryPoint("log chart: branch point inside the ball");
        lcoef[0] = log_iw(w2 * w1.inv());
        Qp2 p1 = w1.inv(), p2 = w2.inv();
        Qp2 a1 = p1, a2 = p2;
        for (long k = 1; k <= n; ++k) {
            lcoef[static_cast<size_t>(k)] = (a1 - a2).mul_rational(mpq_class(1, k));
            a1 = a1 * p1;
            a2 = a2 * p2;
        }
    } else {
        if ((!w1.is_zero() && w1.val() < ball.depth()) ||
            (!w2.is_zero() && w2.val() < ball.depth()))
            throw BoundaryPoint("log chart: branch point outside the complement");
        Qp2 a1 = w1, a2 = w2;
        for (long k = 1; k <= n; ++k) {
            lcoef[static_cast<size_t>(k)] = (a1 - a2).mul_rational(mpq_class(1, k));
            a1 = a1 * w1;
            a2 = a2 * w2;
        }
    }
    return lcoef;
}

} // namespace detail

// phi = P(x), a global polynomial of degree <= n.
inline LocAnalytic make_poly_integrand(const Poly<Qp2>& poly, long n, const PadicContext& ctx) {
    long deg = 0;
    for (long i = 0; i <= poly.degree(); ++i)
        if (!poly.coeff_or_zero(i).is_zero()) deg = i;
    if (poly.degree() > n && deg > n)
        throw ConfigError("make_poly_integrand: degree exceeds n");
    LocAnalytic out;
    out.n = n;
    out.pole_order = deg;
    out.global_poly = poly;
    out.chart_taylor = [poly, n, ctx](const Ball& ball) {
        Poly<Qp2> t = ball.kind() == BallKind::finite
                          ? detail::shift_poly(poly, ball.center(), n, ctx)
                          : detail::complement_transport(poly, ball.center(), n, ctx);
        return detail::poly_coeff_vector(t, n, ctx);
    };
    return out;
}

// phi = g(x) / (z - x) for z in the upper half plane, deg g <= n.
inline LocAnalytic make_poisson_integrand(const Poly<Qp2>& g, const Qp2& z, long n,
                                          const PadicContext& ctx) {
    detail::require_upper_half(z, "make_poisson_integrand");
    if (g.degree() > n) throw ConfigError("make_poisson_integrand: numerator degree exceeds n");
    LocAnalytic out;
    out.n = n;
    out.pole_order = std::max(g.degree() - 1, 0L);
    out.chart_taylor = [g, z, n, ctx](const Ball& ball) {
        Qp2 w = z - detail::qp2_rat(ctx, ball.center());
        std::vector<Qp2> t(static_cast<size_t>(n + 1), Qp2::exact_zero(ctx.p, ctx.r));
        if (ball.kind() == BallKind::finite) {
            // 1/(z - x) = sum_k y^k / w^(k+1) needs the singularity outside:
            // val(w) < chart depth.
            if (w.is_zero() || w.val() >= ball.depth())
                throw BoundaryPoint("poisson chart: kernel point inside the ball");
            Poly<Qp2> gs = detail::shift_poly(g, ball.center(), n, ctx);
            Qp2 winv = w.inv();
            std::vector<Qp2> kernel(static_cast<size_t>(n + 1), winv);
            for (long k = 1; k <= n; ++k)
                kernel[static_cast<size_t>(k)] = kernel[static_cast<size_t>(k - 1)] * winv;
            for (long i = 0; i <= n; ++i)
                for (long u = 0; u <= i; ++u)
                    t[static_cast<size_t>(i)] =
                        t[static_cast<size_t>(i)] +
                        gs.coeff_or_zero(u) * kernel[static_cast<size_t>(i - u)];
        } else {
            // y^n g(b + 1/y)/(z - b - 1/y) = -G(y) sum_k w^k y^(k+1) needs
            // val(w y) > 0 on val(y) >= 1 - depth: val(w) >= depth.
            if (!w.is_zero() && w.val() < ball.depth())
                throw BoundaryPoint("poisson chart: kernel point outside the complement");
            Poly<Qp2> gc = detail::complement_transport(g, ball.center(), n, ctx);
            std::vector<Qp2> wpow(static_cast<size_t>(n + 1),
                                  Qp2::from_rationals(ctx.p, ctx.r, 1, 0, ctx.prec));
            for (long k = 1; k <= n; ++k)
                wpow[static_cast<size_t>(k)] = wpow[static_cast<size_t>(k - 1)] * w;
            for (long i = 1; i <= n; ++i)
                for (long v = 0; v < i; ++v)
                    t[static_cast<size_t>(i)] =
                        t[static_cast<size_t>(i)] -
                        gc.coeff_or_zero(i - 1 - v) * wpow[static_cast<size_t>(v)];
        }
        return t;
    };
    return out;
}

// phi = Q(x) log_iw((z2 - x)/(z1 - x)), deg Q <= n.
inline LocAnalytic make_log_ratio_integrand(const Poly<Qp2>& q, const Qp2& z1, const Qp2& z2,
                                            long n, const PadicContext& ctx) {
    detail::require_upper_half(z1, "make_log_ratio_integrand");
    detail::require_upper_half(z2, "make_log_ratio_integrand");
    if (q.degree() > n) throw ConfigError("make_log_ratio_integrand: degree exceeds n");
    LocAnalytic out;
    out.n = n;
    out.pole_order = std::max(q.degree(), 0L);
    out.chart_taylor = [q, z1, z2, n, ctx](const Ball& ball) {
        std::vector<Qp2> lcoef = detail::log_ratio_coeffs(z1, z2, ball, n, ctx);
        std::vector<Qp2> t(static_cast<size_t>(n + 1), Qp2::exact_zero(ctx.p, ctx.r));
        if (ball.kind() == BallKind::finite) {
            Poly<Qp2> qs = detail::shift_poly(q, ball.center(), n, ctx);
            for (long i = 0; i <= n; ++i)
                for (long u = 0; u <= i; ++u)
                    t[static_cast<size_t>(i)] =
                        t[static_cast<size_t>(i)] +
                        qs.coeff_or_zero(u) * lcoef[static_cast<size_t>(i - u)];
        } else {
            Poly<Qp2> qc = detail::complement_transport(q, ball.center(), n, ctx);
            for (long i = 1; i <= n; ++i)
                for (long v = 1; v <= i; ++v)
                    t[static_cast<size_t>(i)] =
                        t[static_cast<size_t>(i)] +
                        qc.coeff_or_zero(i - v) * lcoef[static_cast<size_t>(v)];
        }
        return t;
    };
    return out;
}

// Pointwise sum of integrands of the same order.
inline LocAnalytic make_sum_integrand(const LocAnalytic& a, const LocAnalytic& b) {
    if (a.n != b.n) throw WeightMismatch("make_sum_integrand: mixed orders");
    LocAnalytic out;
    out.n = a.n;
    out.pole_order = std::max(a.pole_order, b.pole_order);
    auto ta = a.chart_taylor, tb = b.chart_taylor;
    out.chart_taylor = [ta, tb](const Ball& ball) {
        std::vector<Qp2> x = ta(ball), y = tb(ball);
        for (size_t i = 0; i < x.size(); ++i) x[i] = x[i] + y[i];
        return x;
    };
    if (a.global_poly && b.global_poly) out.global_poly = *a.global_poly + *b.global_poly;
    return out;
}

// f(z) := integral of 1/(z - t) dmu(t): the rigid form by Poisson kernel.
inline Qp2 poisson_eval(const TeitelbaumMeasure& m, const Qp2& z, long depth) {
    detail::require_upper_half(z, "poisson_eval");
    const PadicContext& ctx = m.context();
    Poly<Qp2> one(Vec<Qp2>{Qp2::from_rationals(ctx.p, ctx.r, 1, 0, ctx.prec)});
    return integrate(m, make_poisson_integrand(one, z, m.n(), ctx), depth).value;
}

// Line integral of f(z) P(z) dz from z1 to z2, reduced to the boundary:
// integral of [S(z2,x) - S(z1,x) + P(x) log_iw((z2-x)/(z1-x))] dmu(x),
// where S(z,x) = sum_i a_i sum_{k<i} z^(i-1-k) x^k is the polynomial part
// of P(z)/(z-x). Path independence is built into the formula.
inline Qp2 coleman_line_integral(const TeitelbaumMeasure& m, const Poly<Qp2>& poly,
                                 const Qp2& z1, const Qp2& z2, long depth) {
    detail::require_upper_half(z1, "coleman_line_integral");
    detail::require_upper_half(z2, "coleman_line_integral");
    if (poly.degree() > m.n())
        throw ConfigError("coleman_line_integral: polynomial degree exceeds n");
    const PadicContext& ctx = m.context();
    long n = m.n();

    // Coefficient of x^k in S(z, x) is sum_{i > k} a_i z^(i-1-k).
    auto s_poly = [&](const Qp2& z) {
        Vec<Qp2> coeffs(static_cast<size_t>(std::max(n, 1L)), Qp2::exact_zero(ctx.p, ctx.r));
        for (long k = 0; k < n; ++k) {
            Qp2 acc = Qp2::exact_zero(ctx.p, ctx.r);
            Qp2 zp = Qp2::from_rationals(ctx.p, ctx.r, 1, 0, ctx.prec);
            // i = k+1 gives z^0; walk upward multiplying by z.
            for (long i = k + 1; i <= poly.degree(); ++i) {
                acc = acc + poly.coeff_or_zero(i) * zp;
                zp = zp * z;
            }
            coeffs[static_cast<size_t>(k)] = acc;
        }
        return Poly<Qp2>(std::move(coeffs));
    };
    Poly<Qp2> ds = s_poly(z2) - s_poly(z1);
    LocAnalytic integrand = make_sum_integrand(make_poly_integrand(ds, n, ctx),
                                               make_log_ratio_integrand(poly, z1, z2, n, ctx));
    // The polynomial part integrates to an exact zero on its own; the sum
    // must take the chart path for the log part.
    integrand.global_poly.reset();
    return integrate(m, integrand, depth).value;
}

} // namespace treeforms
