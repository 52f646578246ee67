#pragma once
// Optimal embeddings of an imaginary quadratic field into the definite
// quaternion algebra, their fixed points on the p-adic upper half plane, the
// norm-one torus parametrization of the boundary, and the special values
// built on the boundary measure: interpolation-point vanishing, derivative
// values, the cross-check against the Coleman line integral, and the
// normalized Abel-Jacobi value.

#include "treeforms/measure.hpp"

#include <algorithm>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace treeforms {

// Optimal embedding of K = Q(sqrt(-d_k)), presented by the image of
// sqrt(-d_k) together with its exact splitting and the two fixed points of
// the induced torus on the upper half plane.
struct EmbeddingData {
    long d_k;       // positive squarefree radicand of K
    Quat sqrt_img;  // image of sqrt(-d_k): trace 0, reduced norm d_k
    Mat<QuadRat> u; // exact 2x2 splitting of sqrt_img
    QuadRat c_lead; // lower-left entry of u
    Qp2 z0;         // fixed point singled out by the square-root branch
    Qp2 zbar0;      // its conjugate, z0.frobenius()
};

namespace detail {

// Field discriminant of Q(sqrt(-d)) for squarefree d > 0.
inline mpz_class quad_field_disc(long d) {
    mpz_class m(-d);
    if (((m % 4) + 4) % 4 == 1) return m;
    return 4 * m;
}

inline bool is_squarefree(long d) {
    for (long q = 2; q * q <= d; ++q)
        if (d % (q * q) == 0) return false;
    return true;
}

// Splitting type of q in the field of discriminant disc:
// -1 inert, 0 ramified, +1 split.
inline int prime_split_type(const mpz_class& disc, long q) {
    if (disc % q == 0) return 0;
    if (q == 2) return ((disc % 8) + 8) % 8 == 1 ? 1 : -1;
    return legendre(disc, q);
}

inline std::vector<long> prime_factors(long x) {
    std::vector<long> out;
    for (long q = 2; q * q <= x; ++q) {
        if (x % q) continue;
        out.push_back(q);
        while (x % q == 0) x /= q;
    }
    if (x > 1) out.push_back(x);
    return out;
}

} // namespace detail

// Hypotheses on K = Q(sqrt(-d_k)) against the algebra data: p and the
// ramified primes inert, the level primes split. Inert and split both force
// the prime off the field discriminant, so coprimality to p N- N+ follows.
inline void check_heegner(const AlgebraData& data, long d_k) {
    if (d_k < 1 || !detail::is_squarefree(d_k))
        throw HypothesisViolation("check_heegner: radicand must be positive and squarefree");
    mpz_class disc = detail::quad_field_disc(d_k);
    if (detail::prime_split_type(disc, data.p) != -1)
        throw HypothesisViolation("check_heegner: p must be inert in the field");
    for (long q : detail::prime_factors(data.n_minus))
        if (detail::prime_split_type(disc, q) != -1)
            throw HypothesisViolation("check_heegner: ramified primes must be inert in the field");
    for (long q : detail::prime_factors(data.n_plus))
        if (detail::prime_split_type(disc, q) != 1)
            throw HypothesisViolation("check_heegner: level primes must split in the field");
}

// Membership in the Z[1/p]-span of an order: coordinates may carry p-power
// denominators only.
inline bool order_contains_up_to_p(const Order& ord, long p, const Quat& q) {
    for (const mpq_class& c : ord.coords(q)) {
        mpz_class den = c.get_den();
        while (den % p == 0) den /= p;
        if (den != 1) return false;
    }
    return true;
}

namespace detail {

// Optimality of the embedding sending sqrt(-d_k) to x: the preimage of the
// Z[1/p]-order must be the maximal order of K. When -d_k = 1 mod 4 this
// requires (1 + x)/2 in the order; the divisor test x/m can only trip for a
// non-integral candidate once d_k is squarefree and is kept as verification.
inline bool optimal_image(const Order& ord, long p, const Quat& x, long d_k) {
    for (long m = 2; m <= d_k; ++m) {
        if (d_k % m != 0) continue;
        if (order_contains_up_to_p(ord, p, mpq_class(1, m) * x)) return false;
    }
    if (d_k % 4 == 3) {
        Quat w = mpq_class(1, 2) * (Quat(1, 0, 0, 0) + x);
        if (!order_contains_up_to_p(ord, p, w)) return false;
    }
    return true;
}

} // namespace detail

// Search the order for a trace-zero element of reduced norm d_k p^{2k},
// k = 0, 1, 2, yielding an optimal image x = y / p^k of sqrt(-d_k). The
// enumeration is sorted, so the chosen embedding is deterministic, and the
// square-root branch rule fixes the labeling of the two fixed points.
inline EmbeddingData find_embedding(const QuotientGraph& graph, long d_k) {
    const AlgebraData& data = graph.algebra_data();
    check_heegner(data, d_k);
    const SplitEmbedding& emb = graph.splitting().field();
    const PadicContext& ctx = graph.context();
    mpz_class pk(1);
    for (long k = 0; k <= 2; ++k, pk *= data.p) {
        for (const Quat& y : enumerate_norm(data.order, mpz_class(d_k) * pk * pk)) {
            if (data.algebra.trd(y) != 0) continue;
            // Images divisible by p were already seen at a smaller k.
            if (k > 0 && data.order.contains(mpq_class(1, data.p) * y)) continue;
            Quat x = mpq_class(mpz_class(1), pk) * y;
            if (!detail::optimal_image(data.order, data.p, x, d_k)) continue;
            Mat<QuadRat> u = graph.splitting().exact(x);
            Mat<QuadRat> uu = u * u;
            QuadRat md(mpq_class(-d_k));
            if (!(uu.at(0, 0) == md) || !(uu.at(1, 1) == md) || !uu.at(0, 1).is_zero() ||
                !uu.at(1, 0).is_zero())
                throw HypothesisViolation("find_embedding: splitting does not square to -d_k");
            const QuadRat& c = u.at(1, 0);
            // A triangular image puts a fixed point at infinity; try the
            // next candidate.
            if (c.is_zero()) continue;
            Qp2 a2 = emb.embed2(u.at(0, 0));
            Qp2 b2 = emb.embed2(u.at(0, 1));
            Qp2 c2 = emb.embed2(u.at(1, 0));
            Qp2 d2 = emb.embed2(u.at(1, 1));
            // The fixed quadratic c z^2 + (d - a) z - b has discriminant
            // (d - a)^2 + 4 b c = -4 d_k since u is traceless of norm d_k.
            Qp2 s = sqrt(ctx.q2(mpq_class(-4 * d_k), 0));
            Qp2 z0 = (a2 - d2 + s) / (c2 + c2);
            Qp2 zbar0 = z0.frobenius();
            if (!((a2 - d2 - s) / (c2 + c2) - zbar0).is_zero())
                throw HypothesisViolation("find_embedding: roots are not conjugate");
            if (z0.im().is_zero())
                throw HypothesisViolation("find_embedding: fixed point fell on the boundary");
            if (!(c2 * z0 * z0 + (d2 - a2) * z0 - b2).is_zero())
                throw HypothesisViolation("find_embedding: fixed point equation failed");
            return EmbeddingData{d_k, x, u, c, z0, zbar0};
        }
    }
    throw NotFound("find_embedding: no optimal trace-zero image within the search bound");
}

// Relabel the two fixed points: a pure sigma-conjugation of the data.
inline EmbeddingData swap_fixed_points(EmbeddingData e) {
    std::swap(e.z0, e.zbar0);
    return e;
}

// Replace the embedding by its negative, sending sqrt(-d_k) to -x. The
// fixed quadratic keeps its discriminant, so under the same square-root
// branch the labels of the two fixed points swap.
inline EmbeddingData negate_embedding(const EmbeddingData& e) {
    return EmbeddingData{e.d_k,          -e.sqrt_img, QuadRat(-1) * e.u,
                         -e.c_lead,      e.zbar0,     e.z0};
}

// Eigenform together with the optimal embeddings of K = Q(sqrt(-d_k)): one
// embedding per ideal class. The built-in search covers class number one;
// callers append further representatives themselves.
class LfunConfig {
public:
    LfunConfig(const HarmonicCocycle& f, long d_k) : f_(&f), d_(d_k) {
        if (f.n() == 0) throw ConfigError("LfunConfig: weight two is excluded");
        if (f.n() % 2 != 0) throw ConfigError("LfunConfig: the weight must be even");
        embeddings_.push_back(find_embedding(f.graph(), d_k));
    }

    const HarmonicCocycle& form() const { return *f_; }
    long n() const { return f_->n(); }
    long d_k() const { return d_; }
    const std::vector<EmbeddingData>& embeddings() const { return embeddings_; }
    void add_embedding(EmbeddingData e) { embeddings_.push_back(std::move(e)); }

private:
    const HarmonicCocycle* f_;
    long d_;
    std::vector<EmbeddingData> embeddings_;
};

// Torus parametrization of the boundary: alpha on the norm-one torus maps to
// (z0 alpha - zbar0)/(alpha - 1), with alpha = 1 landing on the base point
// at infinity. A boundary point is an optional rational coordinate, empty
// for infinity.
inline std::optional<Qp> eta(const EmbeddingData& e, const Qp2& alpha) {
    Qp2 nm = alpha * alpha.frobenius();
    if (nm.is_zero()) throw NormNotOne("eta: alpha must be a unit on the torus");
    long rel = std::max(1L, nm.absprec() - nm.val());
    Qp2 one = Qp2::from_rationals(alpha.prime(), alpha.rparam(), 1, 0, rel);
    if (!(nm - one).is_zero()) throw NormNotOne("eta: alpha does not have norm one");
    Qp2 den = alpha - one;
    if (den.is_zero()) return std::nullopt;
    Qp2 z = (e.z0 * alpha - e.zbar0) * den.inv();
    if (!z.im().is_zero()) throw PrecisionLoss("eta: boundary image has an irrational part");
    return z.re();
}

// Inverse parametrization (x - zbar0)/(x - z0), norm one by conjugation.
inline Qp2 eta_inv(const EmbeddingData& e, const std::optional<Qp>& x) {
    if (!x.has_value()) {
        long rel = std::max(1L, e.z0.absprec() - e.z0.val());
        return Qp2::from_rationals(e.z0.prime(), e.z0.rparam(), 1, 0, rel);
    }
    Qp2 xx = Qp2::from_qp(*x, e.z0.rparam());
    Qp2 den = xx - e.z0;
    if (den.is_zero())
        throw PrecisionLoss("eta_inv: point indistinguishable from the fixed point");
    return (xx - e.zbar0) * den.inv();
}

// Affine quadratic of the embedding, (1, -t) u (t, 1)^T: leading coefficient
// -c, roots exactly the two fixed points.
inline Poly<QuadRat> embedding_quadratic(const EmbeddingData& e) {
    return Poly<QuadRat>(
        std::vector<QuadRat>{e.u.at(0, 1), e.u.at(0, 0) - e.u.at(1, 1), -e.u.at(1, 0)});
}

namespace detail {

inline Poly<Qp2> embed_poly(const Poly<QuadRat>& q, const SplitEmbedding& emb) {
    std::vector<Qp2> cs;
    for (long i = 0; i <= q.degree(); ++i) cs.push_back(emb.embed2(q.coeff_or_zero(i)));
    return Poly<Qp2>(cs);
}

// Synthetic division by the monic factor (x - root); the remainder must
// vanish to working precision.
inline Poly<Qp2> divide_linear(const Poly<Qp2>& f, const Qp2& root, const char* who) {
    long deg = f.degree();
    if (deg < 1) throw ConfigError(std::string(who) + ": nothing to divide");
    std::vector<Qp2> out(static_cast<size_t>(deg), Qp2::exact_zero(root.prime(), root.rparam()));
    Qp2 carry = f.coeff_or_zero(deg);
    for (long k = deg - 1; k >= 0; --k) {
        out[static_cast<size_t>(k)] = carry;
        carry = f.coeff_or_zero(k) + root * carry;
    }
    if (!carry.is_zero())
        throw PrecisionLoss(std::string(who) + ": linear division left a remainder");
    return Poly<Qp2>(out);
}

inline Poly<Qp2> times_linear(const Poly<Qp2>& f, const Qp2& root, const PadicContext& ctx) {
    return f * Poly<Qp2>(std::vector<Qp2>{ctx.zero2() - root, ctx.q2(1, 0)});
}

// (-c)^{n/2} (x - z0)^{e0} (x - zbar0)^{n - e0}, assembled from the embedded
// power of the embedding quadratic by moving factors between the two roots.
inline Poly<Qp2> interpolation_poly(const EmbeddingData& e, long n, long e0,
                                    const SplitEmbedding& emb) {
    const PadicContext& ctx = emb.context();
    Poly<Qp2> q = embed_poly(embedding_quadratic(e).pow(n / 2), emb);
    for (long have = n / 2; have < e0; ++have)
        q = times_linear(divide_linear(q, e.zbar0, "interpolation_poly"), e.z0, ctx);
    for (long have = n / 2; have > e0; --have)
        q = times_linear(divide_linear(q, e.z0, "interpolation_poly"), e.zbar0, ctx);
    return q;
}

} // namespace detail

// Interpolation value at a critical integer s in 1..n+1: the boundary
// integrand collapses to the degree-n polynomial
// (-c)^{n/2} (x - z0)^{n+1-s} (x - zbar0)^{s-1}, whose total moments vanish
// edge-by-edge, so the value is an exact zero at every depth.
inline Qp2 partial_lfun(const LfunConfig& cfg, const EmbeddingData& psi, long s, long depth) {
    long n = cfg.n();
    if (s < 1 || s > n + 1) throw ConfigError("partial_lfun: s must lie in 1..n+1");
    const SplitEmbedding& emb = cfg.form().graph().splitting().field();
    Poly<Qp2> q = detail::interpolation_poly(psi, n, n + 1 - s, emb);
    TeitelbaumMeasure m(cfg.form());
    return integrate(m, make_poly_integrand(q, n, emb.context()), depth).value;
}

// Derivative value at j in 0..n: the integrand gains the Iwasawa logarithm
// of the torus coordinate, pairing the polynomial
// (-c)^{n/2} (x - z0)^j (x - zbar0)^{n-j} with log((x - z0)/(x - zbar0)).
inline Qp2 partial_lderiv(const LfunConfig& cfg, const EmbeddingData& psi, long j, long depth) {
    long n = cfg.n();
    if (j < 0 || j > n) throw ConfigError("partial_lderiv: j must lie in 0..n");
    const SplitEmbedding& emb = cfg.form().graph().splitting().field();
    Poly<Qp2> q = detail::interpolation_poly(psi, n, j, emb);
    LocAnalytic phi = make_log_ratio_integrand(q, psi.zbar0, psi.z0, n, emb.context());
    TeitelbaumMeasure m(cfg.form());
    return integrate(m, phi, depth).value;
}

// Two routes to the derivative value: the boundary pairing above, and the
// line integral between the fixed points of the monic product
// P_j(x) = (x - z0)^j (x - zbar0)^{n-j}. The routes share the boundary
// measure but assemble their integrands independently; the leading constant
// (-c)^{n/2} between them is reported, never normalized away.
struct TheoremCheck {
    Qp2 lhs;
    Qp2 rhs;
    Qp2 constant;
    long agreement_valuation;
};

inline TheoremCheck theorem_check(const LfunConfig& cfg, const EmbeddingData& psi, long j,
                                  long depth) {
    long n = cfg.n();
    if (j < 0 || j > n) throw ConfigError("theorem_check: j must lie in 0..n");
    const SplitEmbedding& emb = cfg.form().graph().splitting().field();
    const PadicContext& ctx = emb.context();
    Qp2 lhs = partial_lderiv(cfg, psi, j, depth);
    Poly<Qp2> pj(ctx.q2(1, 0));
    for (long i = 0; i < j; ++i) pj = detail::times_linear(pj, psi.z0, ctx);
    for (long i = 0; i < n - j; ++i) pj = detail::times_linear(pj, psi.zbar0, ctx);
    TeitelbaumMeasure m(cfg.form());
    Qp2 rhs = coleman_line_integral(m, pj, psi.zbar0, psi.z0, depth);
    QuadRat cpow(1);
    for (long i = 0; i < n / 2; ++i) cpow = cpow * (-psi.c_lead);
    Qp2 constant = emb.embed2(cpow);
    Qp2 diff = lhs - constant * rhs;
    long agreement;
    if (diff.is_exact_zero()) agreement = VAL_INF;
    else if (diff.is_zero()) agreement = diff.absprec();
    else agreement = diff.val();
    return TheoremCheck{lhs, rhs, constant, agreement};
}

// Normalized derivative value Omega^{j-n} L'(f, K, j+1), with
// Omega = z0 - zbar0 taken from the first embedding and the partial values
// summed over the embedding list. lambda exercises the period-rescaling
// ambiguity: the reported value scales by lambda^{2j-n}, hence is invariant
// at the central point j = n/2.
inline Qp2 aj_value(const LfunConfig& cfg, long j, long depth,
                    const mpq_class& lambda = mpq_class(1)) {
    long n = cfg.n();
    if (j < 0 || j > n) throw ConfigError("aj_value: j must lie in 0..n");
    if (lambda == 0) throw ConfigError("aj_value: the rescaling must be nonzero");
    const EmbeddingData& first = cfg.embeddings().front();
    Qp2 omega = first.z0 - first.zbar0;
    if (omega.is_zero()) throw HypothesisViolation("aj_value: degenerate period");
    const PadicContext& ctx = cfg.form().graph().context();
    Qp2 total = ctx.zero2();
    for (const EmbeddingData& e : cfg.embeddings())
        total = total + partial_lderiv(cfg, e, j, depth);
    Qp2 value = total * omega.pow(n - j).inv();
    mpq_class scale(1);
    for (long i = 0; i < 2 * j - n; ++i) scale *= lambda;
    for (long i = 0; i < n - 2 * j; ++i) scale /= lambda;
    return value.mul_rational(scale);
}

// Locally analytic integrand alpha(x)^t P(x), with alpha the norm-one torus
// coordinate (x - zbar0)/(x - z0). On each chart the power is
// exp(t log alpha), expanded from the logarithm coefficients; every term
// t L_k y^k must land inside the exponential disc val >= 1, else the chart
// is rejected. For val(t) >= 0 all charts pass, since
// val(L_k) + k (chart scale) >= k - val_p(k) >= 1.
//
// The log uses the branch that kills p-powers and roots of unity, so the
// power computed here is the principal-unit branch <alpha>^t. At a nonzero
// integer t this differs from the literal rational power alpha^t by the
// Teichmueller part of alpha; only t = 0 reproduces the exact polynomial
// integrand.
inline LocAnalytic make_torus_power_integrand(const EmbeddingData& e, const Qp& t,
                                              const Poly<Qp2>& scale_poly, long n,
                                              const PadicContext& ctx) {
    if (scale_poly.degree() > n)
        throw ConfigError("make_torus_power_integrand: degree exceeds n");
    detail::require_upper_half(e.z0, "make_torus_power_integrand");
    detail::require_upper_half(e.zbar0, "make_torus_power_integrand");
    LocAnalytic out;
    out.n = n;
    out.pole_order = std::max(scale_poly.degree(), 0L);
    Qp2 z0 = e.z0, zbar0 = e.zbar0;
    out.chart_taylor = [z0, zbar0, t, scale_poly, n, ctx](const Ball& ball) {
        Poly<Qp2> ppart_only = ball.kind() == BallKind::finite
                                   ? detail::shift_poly(scale_poly, ball.center(), n, ctx)
                                   : detail::complement_transport(scale_poly, ball.center(), n, ctx);
        // An exactly-zero exponent makes the power identically one.
        if (t.is_exact_zero()) return detail::poly_coeff_vector(ppart_only, n, ctx);
        // alpha = (zbar0 - x)/(z0 - x): branch points in the order
        // (z0, zbar0) for the shared log-coefficient rule.
        std::vector<Qp2> lc = detail::log_ratio_coeffs(z0, zbar0, ball, n, ctx);
        Qp2 t2 = ctx.lift(t);
        long ybound = ball.kind() == BallKind::finite ? ball.depth() : 1 - ball.depth();
        std::vector<Qp2> s(static_cast<size_t>(n + 1), ctx.zero2());
        for (long k = 0; k <= n; ++k) s[static_cast<size_t>(k)] = t2 * lc[static_cast<size_t>(k)];
        for (long k = 1; k <= n; ++k) {
            // For a capped zero val() is the cap, still a sound lower bound.
            const Qp2& sk = s[static_cast<size_t>(k)];
            if (!sk.is_exact_zero() && sk.val() + k * ybound < 1)
                throw ExpDivergence("torus power: chart escapes the exponential disc");
        }
        // E = exp(sum s_k y^k) by i E_i = sum_k k s_k E_{i-k}; the constant
        // term folds into E_0. An exactly-zero constant keeps full precision.
        std::vector<Qp2> E(static_cast<size_t>(n + 1), ctx.zero2());
        E[0] = s[0].is_exact_zero() ? ctx.q2(1, 0) : exp_p(s[0]);
        for (long i = 1; i <= n; ++i) {
            Qp2 acc = ctx.zero2();
            for (long k = 1; k <= i; ++k) {
                mpq_class w(k, i);
                w.canonicalize();
                acc = acc + (s[static_cast<size_t>(k)] * E[static_cast<size_t>(i - k)])
                                .mul_rational(w);
            }
            E[static_cast<size_t>(i)] = acc;
        }
        const Poly<Qp2>& ppart = ppart_only;
        std::vector<Qp2> tay(static_cast<size_t>(n + 1), ctx.zero2());
        for (long i = 0; i <= n; ++i)
            for (long u = 0; u <= i; ++u)
                tay[static_cast<size_t>(i)] =
                    tay[static_cast<size_t>(i)] +
                    ppart.coeff_or_zero(u) * E[static_cast<size_t>(i - u)];
        return tay;
    };
    return out;
}

// Evaluation at a general s in Z_p, with t = s - (n+2)/2: the integrand is
// <alpha>^t P^{n/2} built on the principal-unit power (see the integrand
// above). Smoke-level support; the exponential expansion restricts the
// domain to val(t) >= 0, which covers all of Z_p. The center s = (n+2)/2
// reproduces the exact critical vanishing; away from the center the values
// are the analytic family's, twisted off the literal rational powers by the
// Teichmueller character.
inline Qp2 lfun_value(const LfunConfig& cfg, const EmbeddingData& psi, const Qp& s,
                      long depth) {
    long n = cfg.n();
    const SplitEmbedding& emb = cfg.form().graph().splitting().field();
    const PadicContext& ctx = emb.context();
    Qp t = s - ctx.q(mpq_class((n + 2) / 2));
    Poly<Qp2> base = detail::embed_poly(embedding_quadratic(psi).pow(n / 2), emb);
    LocAnalytic phi = make_torus_power_integrand(psi, t, base, n, ctx);
    TeitelbaumMeasure m(cfg.form());
    return integrate(m, phi, depth).value;
}

} // namespace treeforms
