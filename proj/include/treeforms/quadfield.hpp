#pragma once

// Exact arithmetic in a quadratic field Q(sqrt(m)), m a non-square integer
// (positive or negative), plus the embedding into Q_p when m is a square
// mod p. Used to keep linear algebra exact where capped p-adic arithmetic
// would have to guess: p-adic digits are produced only at evaluation time.

#include <gmpxx.h>

#include <string>
#include <utility>

#include "treeforms/arith.hpp"
#include "treeforms/errors.hpp"
#include "treeforms/padic.hpp"

namespace treeforms {

class QuadRat {
public:
    QuadRat() : m_(0) {}
    QuadRat(long x) : x_(x), m_(0) {}
    QuadRat(const mpq_class& x) : x_(x), m_(0) {}
    QuadRat(mpq_class x, mpq_class y, long m) : x_(std::move(x)), y_(std::move(y)), m_(m) {
        if (y_ == 0) m_ = 0;
    }

    const mpq_class& rat() const { return x_; }
    const mpq_class& irr() const { return y_; }
    long mparam() const { return m_; }

    bool is_zero() const { return x_ == 0 && y_ == 0; }
    bool is_rational() const { return y_ == 0; }

    friend bool operator==(const QuadRat& a, const QuadRat& b) {
        return a.x_ == b.x_ && a.y_ == b.y_ && (a.y_ == 0 || a.m_ == b.m_);
    }
    friend bool operator!=(const QuadRat& a, const QuadRat& b) { return !(a == b); }

    QuadRat operator-() const { return QuadRat(-x_, -y_, m_); }
    QuadRat conj() const { return QuadRat(x_, -y_, m_); }
    mpq_class norm() const { return x_ * x_ - mpq_class(m_) * y_ * y_; }
    mpq_class trace() const { return 2 * x_; }

    friend QuadRat operator+(const QuadRat& a, const QuadRat& b) {
        return QuadRat(a.x_ + b.x_, a.y_ + b.y_, joint(a, b));
    }
    friend QuadRat operator-(const QuadRat& a, const QuadRat& b) { return a + (-b); }

    friend QuadRat operator*(const QuadRat& a, const QuadRat& b) {
        long m = joint(a, b);
        return QuadRat(a.x_ * b.x_ + mpq_class(m) * a.y_ * b.y_,
                       a.x_ * b.y_ + a.y_ * b.x_, m);
    }

    QuadRat inv() const {
        mpq_class n = norm();
        if (n == 0) throw DivisionByZero("QuadRat: inverse of zero");
        return QuadRat(x_ / n, -y_ / n, m_);
    }

    friend QuadRat operator/(const QuadRat& a, const QuadRat& b) { return a * b.inv(); }

    QuadRat pow(long e) const {
        if (e < 0) return inv().pow(-e);
        QuadRat acc(1), base = *this;
        while (e > 0) {
            if (e & 1) acc = acc * base;
            base = base * base;
            e >>= 1;
        }
        return acc;
    }

    std::string str() const {
        if (y_ == 0) return x_.get_str();
        return x_.get_str() + " + " + y_.get_str() + "*sqrt(" + std::to_string(m_) + ")";
    }

private:
    static long joint(const QuadRat& a, const QuadRat& b) {
        if (a.y_ != 0 && b.y_ != 0 && a.m_ != b.m_)
            throw ConfigError("QuadRat: mixing different quadratic fields");
        return a.y_ != 0 ? a.m_ : b.m_;
    }

    mpq_class x_, y_;
    long m_;
};

// Q(sqrt(m)) -> Q_p for (m/p) = 1: sqrt(m) goes to its canonical p-adic
// root (the branch rule of padic sqrt), fixed per field instance.
class SplitEmbedding {
public:
    SplitEmbedding(long m, const PadicContext& ctx)
        : m_(m), ctx_(ctx), theta_(make_theta(m, ctx)) {}

    long mparam() const { return m_; }
    const PadicContext& context() const { return ctx_; }
    const Qp& theta() const { return theta_; }

    Qp embed(const QuadRat& q) const {
        check(q);
        Qp out = Qp::from_rational(ctx_.p, q.rat(), ctx_.prec);
        if (q.irr() != 0)
            out = out + theta_.mul_rational(q.irr());
        return out;
    }

    Qp2 embed2(const QuadRat& q) const { return ctx_.lift(embed(q)); }

    // Exact valuation, independent of the working precision: recompute at
    // increasing precision until the leading digit is pinned down (always
    // terminates for nonzero input).
    long val(const QuadRat& q) const {
        check(q);
        if (q.is_zero()) return VAL_INF;
        if (q.irr() == 0) return vp(q.rat(), ctx_.p);
        if (q.rat() == 0) return vp(q.irr(), ctx_.p);
        long lo = std::min(vp(q.rat(), ctx_.p), vp(q.irr(), ctx_.p));
        for (long extra = 8;; extra *= 2) {
            long k = vp(q.norm(), ctx_.p) - lo + extra;
            Qp th = sqrt(Qp::from_int(ctx_.p, m_, k), ctx_.r);
            Qp e = Qp::from_rational(ctx_.p, q.rat(), k) + th.mul_rational(q.irr());
            if (!e.is_zero()) return e.val();
            if (extra > (1L << 24)) throw PrecisionLoss("SplitEmbedding::val: no convergence");
        }
    }

private:
    static Qp make_theta(long m, const PadicContext& ctx) {
        if (legendre(mpz_class(m), ctx.p) != 1)
            throw ConfigError("SplitEmbedding: m must be a nonzero square mod p");
        return sqrt(Qp::from_int(ctx.p, m, ctx.prec), ctx.r);
    }

    void check(const QuadRat& q) const {
        if (!q.is_rational() && q.mparam() != m_)
            throw ConfigError("SplitEmbedding: element from a different field");
    }

    long m_;
    PadicContext ctx_;
    Qp theta_;
};

} // namespace treeforms
