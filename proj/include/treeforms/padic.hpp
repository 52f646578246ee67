#pragma once

// Capped-precision arithmetic in Q_p and its unramified quadratic extension
// Q_{p^2} = Q_p(w), w^2 = r for a fixed non-residue lift r.
//
// Precision model: every element carries its provable precision and the
// arithmetic only ever narrows it (abs precision of a sum = min of abs
// precisions, rel precision of a product = min of rel precisions). Exact
// zero is a distinguished state. No digit beyond the provable precision is
// ever reported.

#include <gmpxx.h>

#include <algorithm>
#include <cstdlib>
#include <string>
#include <vector>

#include "treeforms/arith.hpp"
#include "treeforms/errors.hpp"

namespace treeforms {

class Qp {
public:
    Qp() : p_(0), v_(VAL_INF), m_(0), u_(0) {}

    static Qp exact_zero(long p) { return Qp(p, VAL_INF, 0, 0); }

    // Zero known only up to O(p^absprec).
    static Qp zero_to(long p, long absprec) { return Qp(p, absprec, 0, 0); }

    // q with relprec known digits above its valuation.
    static Qp from_rational(long p, const mpq_class& q, long relprec) {
        if (q == 0) return exact_zero(p);
        if (relprec <= 0) throw PrecisionLoss("from_rational: relprec must be >= 1");
        PSplit s = p_split(q, p);
        return Qp(p, s.v, relprec, rational_mod_pk(s.unit, p, relprec));
    }

    static Qp from_int(long p, long x, long relprec) {
        return from_rational(p, mpq_class(x), relprec);
    }

    long prime() const { return p_; }
    // Valuation floor: exact valuation when rel precision > 0, the absolute
    // precision bound for an indistinguishable-from-zero element, VAL_INF for
    // exact zero.
    long val() const { return v_; }
    long relprec() const { return m_; }
    long absprec() const { return v_ >= VAL_INF ? VAL_INF : v_ + m_; }
    bool is_exact_zero() const { return v_ >= VAL_INF; }
    // True when no nonzero digit is known (exact zero or O(p^k)).
    bool is_zero() const { return m_ == 0; }
    const mpz_class& unit() const { return u_; }

    Qp operator-() const {
        if (m_ == 0) return *this;
        return Qp(p_, v_, m_, pow_z(p_, m_) - u_);
    }

    friend Qp operator+(const Qp& x, const Qp& y) {
        x.check_same(y);
        if (x.is_exact_zero()) return y;
        if (y.is_exact_zero()) return x;
        long N = std::min(x.absprec(), y.absprec());
        long w = std::min(x.v_, y.v_);
        if (N - w <= 0) return zero_to(x.p_, N);
        mpz_class mod = pow_z(x.p_, N - w);
        mpz_class s = 0;
        if (x.m_ > 0) s += x.u_ * pow_z(x.p_, x.v_ - w);
        if (y.m_ > 0) s += y.u_ * pow_z(x.p_, y.v_ - w);
        s = mod_lift(s, mod);
        if (s == 0) return zero_to(x.p_, N);
        long dv = vp(s, x.p_);
        return Qp(x.p_, w + dv, N - w - dv, s / pow_z(x.p_, dv));
    }

    friend Qp operator-(const Qp& x, const Qp& y) { return x + (-y); }

    friend Qp operator*(const Qp& x, const Qp& y) {
        x.check_same(y);
        if (x.is_exact_zero() || y.is_exact_zero()) return exact_zero(x.p_);
        long v = x.v_ + y.v_;
        long m = std::min(x.m_, y.m_);
        if (m == 0) return zero_to(x.p_, v);
        return Qp(x.p_, v, m, mod_lift(x.u_ * y.u_, pow_z(x.p_, m)));
    }

    Qp inv() const {
        if (m_ == 0)
            throw DivisionByZero("Qp: division by an element indistinguishable from 0");
        return Qp(p_, -v_, m_, invmod(u_, pow_z(p_, m_)));
    }

    friend Qp operator/(const Qp& x, const Qp& y) { return x * y.inv(); }

    // Exact scaling by a nonzero integer or rational: no precision loss.
    Qp mul_int(long c) const {
        if (c == 0) return exact_zero(p_);
        return mul_rational(mpq_class(c));
    }

    Qp mul_rational(const mpq_class& c) const {
        if (c == 0) return exact_zero(p_);
        if (is_exact_zero()) return *this;
        PSplit s = p_split(c, p_);
        if (m_ == 0) return zero_to(p_, v_ + s.v);
        mpz_class cu = rational_mod_pk(s.unit, p_, m_);
        return Qp(p_, v_ + s.v, m_, mod_lift(u_ * cu, pow_z(p_, m_)));
    }

    // Multiply by p^k (exact).
    Qp shift(long k) const {
        if (is_exact_zero()) return *this;
        return Qp(p_, v_ + k, m_, u_);
    }

    Qp pow(long e) const {
        if (e == 0) {
            long m = m_ > 0 ? m_ : 1;
            return from_int(p_, 1, m);
        }
        if (e < 0) return inv().pow(-e);
        Qp acc = from_int(p_, 1, m_ > 0 ? m_ : 1);
        Qp base = *this;
        long k = e;
        while (k > 0) {
            if (k & 1) acc = acc * base;
            base = base * base;
            k >>= 1;
        }
        return acc;
    }

    // Truncate to absolute precision k (no-op if already coarser).
    Qp cap_absprec(long k) const {
        if (is_exact_zero() || absprec() <= k) {
            if (is_exact_zero()) return zero_to(p_, k);
            return *this;
        }
        if (v_ >= k) return zero_to(p_, k);
        long m = k - v_;
        mpz_class u = mod_lift(u_, pow_z(p_, m));
        if (u == 0) return zero_to(p_, k);
        long dv = vp(u, p_);
        return Qp(p_, v_ + dv, m - dv, u / pow_z(p_, dv));
    }

    // Rational representative (p-power denominator allowed) of the value
    // modulo p^k. Requires k digits to be provable.
    mpq_class lift_rational(long k) const {
        if (absprec() < k)
            throw PrecisionLoss("Qp: lift beyond provable precision");
        if (m_ == 0 || v_ >= k) return mpq_class(0);
        mpz_class res = mod_lift(u_, pow_z(p_, k - v_));
        mpq_class out(res);
        if (v_ >= 0) out *= mpq_class(pow_z(p_, v_));
        else out /= mpq_class(pow_z(p_, -v_));
        out.canonicalize();
        return out;
    }

    // Least non-negative integer representative mod p^k; valuation must be >= 0.
    mpz_class lift_mod(long k) const {
        if (!is_exact_zero() && v_ < 0)
            throw PrecisionLoss("Qp: integer lift of negative-valuation element");
        mpq_class q = lift_rational(k);
        return mpz_class(q.get_num());
    }

    bool same_value_to(const Qp& y, long k) const {
        Qp d = *this - y;
        return d.is_exact_zero() || d.val() >= k;
    }

    std::string to_string() const {
        if (is_exact_zero()) return "0";
        std::string out;
        mpz_class u = u_;
        for (long k = v_; k < absprec(); ++k) {
            long d = mpz_class(u % p_).get_si();
            u /= p_;
            if (d == 0) continue;
            if (!out.empty()) out += " + ";
            out += std::to_string(d);
            if (k == 1) out += "*" + std::to_string(p_);
            else if (k != 0) out += "*" + std::to_string(p_) + "^" + std::to_string(k);
        }
        if (!out.empty()) out += " + ";
        out += "O(" + std::to_string(p_) + "^" + std::to_string(absprec()) + ")";
        return out;
    }

    static Qp parse(long p, const std::string& text);

private:
    Qp(long p, long v, long m, mpz_class u) : p_(p), v_(v), m_(m), u_(std::move(u)) {}

    void check_same(const Qp& y) const {
        if (p_ != y.p_) throw ConfigError("Qp: mixed primes");
    }

    long p_;
    long v_;
    long m_;
    mpz_class u_;
};

// --- textual format ---------------------------------------------------------
// Digit expansions like "2 + 1*3 + 2*3^2 + O(3^10)"; parse/print round-trip
// exactly on the emitted canonical form.

namespace detail {

inline std::string strip(const std::string& s) {
    size_t a = s.find_first_not_of(" \t");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t");
    return s.substr(a, b - a + 1);
}

// Index of the ')' matching the '(' at position open.
inline size_t match_paren(const std::string& s, size_t open) {
    int depth = 0;
    for (size_t i = open; i < s.size(); ++i) {
        if (s[i] == '(') ++depth;
        if (s[i] == ')' && --depth == 0) return i;
    }
    throw ParseError("unbalanced parentheses in '" + s + "'");
}

inline std::vector<std::string> split_top(const std::string& s, char sep) {
    std::vector<std::string> out;
    int depth = 0;
    std::string cur;
    for (char c : s) {
        if (c == '(') ++depth;
        if (c == ')') --depth;
        if (c == sep && depth == 0) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

} // namespace detail

inline Qp Qp::parse(long p, const std::string& text) {
    std::string t = detail::strip(text);
    if (t == "0") return Qp::exact_zero(p);
    bool have_prec = false;
    long absprec = 0;
    mpq_class value(0);
    long minv = VAL_INF;
    for (const std::string& raw : detail::split_top(t, '+')) {
        std::string tok = detail::strip(raw);
        if (tok.empty()) throw ParseError("Qp::parse: empty term in '" + text + "'");
        if (tok.rfind("O(", 0) == 0) {
            if (tok.back() != ')') throw ParseError("Qp::parse: bad O() term");
            std::string inner = tok.substr(2, tok.size() - 3);
            size_t caret = inner.find('^');
            long base, k;
            if (caret == std::string::npos) {
                base = std::atol(inner.c_str());
                k = 1;
            } else {
                base = std::atol(inner.substr(0, caret).c_str());
                k = std::atol(inner.substr(caret + 1).c_str());
            }
            if (base != p) throw ParseError("Qp::parse: wrong prime in O() term");
            have_prec = true;
            absprec = k;
            continue;
        }
        size_t star = tok.find('*');
        long digit, k;
        if (star == std::string::npos) {
            digit = std::atol(tok.c_str());
            k = 0;
        } else {
            digit = std::atol(tok.substr(0, star).c_str());
            std::string powpart = tok.substr(star + 1);
            size_t caret = powpart.find('^');
            long base;
            if (caret == std::string::npos) {
                base = std::atol(powpart.c_str());
                k = 1;
            } else {
                base = std::atol(powpart.substr(0, caret).c_str());
                k = std::atol(powpart.substr(caret + 1).c_str());
            }
            if (base != p) throw ParseError("Qp::parse: wrong prime in digit term");
        }
        if (digit <= 0 || digit >= p) throw ParseError("Qp::parse: digit out of range");
        mpq_class term(digit);
        if (k >= 0) term *= mpq_class(pow_z(p, k));
        else term /= mpq_class(pow_z(p, -k));
        value += term;
        minv = std::min(minv, k);
    }
    if (!have_prec) throw ParseError("Qp::parse: missing O() precision term");
    if (value == 0) return Qp::zero_to(p, absprec);
    return Qp::from_rational(p, value, absprec - vp(value, p));
}

// Unramified quadratic extension element a + b*w with w^2 = r.
class Qp2 {
public:
    Qp2() : r_(0) {}
    Qp2(Qp a, Qp b, long r) : a_(std::move(a)), b_(std::move(b)), r_(r) {
        if (a_.prime() != b_.prime()) throw ConfigError("Qp2: mixed primes");
    }

    static Qp2 from_qp(const Qp& a, long r) {
        return Qp2(a, Qp::exact_zero(a.prime()), r);
    }

    static Qp2 exact_zero(long p, long r) {
        return Qp2(Qp::exact_zero(p), Qp::exact_zero(p), r);
    }

    static Qp2 omega(long p, long r, long relprec) {
        return Qp2(Qp::exact_zero(p), Qp::from_int(p, 1, relprec), r);
    }

    static Qp2 from_rationals(long p, long r, const mpq_class& qa, const mpq_class& qb,
                              long relprec) {
        return Qp2(Qp::from_rational(p, qa, relprec), Qp::from_rational(p, qb, relprec), r);
    }

    const Qp& re() const { return a_; }
    const Qp& im() const { return b_; }
    long prime() const { return a_.prime(); }
    long rparam() const { return r_; }

    bool is_exact_zero() const { return a_.is_exact_zero() && b_.is_exact_zero(); }
    bool is_zero() const { return a_.is_zero() && b_.is_zero(); }
    bool is_rational() const { return b_.is_zero(); }

    // Valuation floor (exact when some component has a known digit there).
    long val() const { return std::min(a_.val(), b_.val()); }
    long absprec() const { return std::min(a_.absprec(), b_.absprec()); }

    Qp2 operator-() const { return Qp2(-a_, -b_, r_); }

    friend Qp2 operator+(const Qp2& x, const Qp2& y) {
        x.check_same(y);
        return Qp2(x.a_ + y.a_, x.b_ + y.b_, x.r_);
    }
    friend Qp2 operator-(const Qp2& x, const Qp2& y) { return x + (-y); }

    friend Qp2 operator*(const Qp2& x, const Qp2& y) {
        x.check_same(y);
        return Qp2(x.a_ * y.a_ + (x.b_ * y.b_).mul_int(x.r_),
                   x.a_ * y.b_ + x.b_ * y.a_, x.r_);
    }

    Qp2 frobenius() const { return Qp2(a_, -b_, r_); }

    // x * sigma(x) = a^2 - r b^2, an element of Q_p.
    Qp norm() const { return a_ * a_ - (b_ * b_).mul_int(r_); }

    Qp trace() const { return a_.mul_int(2); }

    Qp2 inv() const {
        Qp n = norm();
        if (n.is_zero())
            throw DivisionByZero("Qp2: division by an element indistinguishable from 0");
        Qp ninv = n.inv();
        return Qp2(a_ * ninv, -(b_ * ninv), r_);
    }

    friend Qp2 operator/(const Qp2& x, const Qp2& y) { return x * y.inv(); }

    Qp2 mul_int(long c) const { return Qp2(a_.mul_int(c), b_.mul_int(c), r_); }
    Qp2 mul_rational(const mpq_class& c) const {
        return Qp2(a_.mul_rational(c), b_.mul_rational(c), r_);
    }
    Qp2 shift(long k) const { return Qp2(a_.shift(k), b_.shift(k), r_); }

    Qp2 pow(long e) const {
        if (e == 0) return from_qp(Qp::from_int(prime(), 1, std::max(1L, relprec_floor())), r_);
        if (e < 0) return inv().pow(-e);
        Qp2 acc = from_qp(Qp::from_int(prime(), 1, std::max(1L, relprec_floor())), r_);
        Qp2 base = *this;
        long k = e;
        while (k > 0) {
            if (k & 1) acc = acc * base;
            base = base * base;
            k >>= 1;
        }
        return acc;
    }

    Qp2 cap_absprec(long k) const { return Qp2(a_.cap_absprec(k), b_.cap_absprec(k), r_); }

    bool same_value_to(const Qp2& y, long k) const {
        return a_.same_value_to(y.a_, k) && b_.same_value_to(y.b_, k);
    }

    std::string to_string() const {
        if (b_.is_exact_zero()) return a_.to_string();
        return "(" + a_.to_string() + ") + (" + b_.to_string() + ")*w";
    }

    static Qp2 parse(long p, long r, const std::string& text) {
        std::string t = detail::strip(text);
        if (t.size() < 2 || t.substr(t.size() - 2) != "*w")
            return from_qp(Qp::parse(p, t), r);
        // canonical form: (A) + (B)*w, with parens balanced inside A and B
        if (t.front() != '(') throw ParseError("Qp2::parse: malformed extension element");
        size_t aclose = detail::match_paren(t, 0);
        std::string apart = t.substr(1, aclose - 1);
        size_t bopen = t.find('(', aclose + 1);
        if (bopen == std::string::npos || t.substr(aclose + 1, bopen - aclose - 1) != " + ")
            throw ParseError("Qp2::parse: malformed extension element");
        size_t bclose = detail::match_paren(t, bopen);
        if (t.substr(bclose + 1) != "*w")
            throw ParseError("Qp2::parse: malformed extension element");
        std::string bpart = t.substr(bopen + 1, bclose - bopen - 1);
        return Qp2(Qp::parse(p, apart), Qp::parse(p, bpart), r);
    }

private:
    long relprec_floor() const { return std::max(a_.relprec(), b_.relprec()); }
    void check_same(const Qp2& y) const {
        if (prime() != y.prime() || r_ != y.r_)
            throw ConfigError("Qp2: mixed extensions");
    }

    Qp a_, b_;
    long r_;
};

// --- transcendental kernel --------------------------------------------------

// Teichmueller representative of a unit: the root of unity congruent to x,
// computed as the limit of x^(p^2)^k (fixed by the q-power map, q = p^2).
inline Qp2 teichmuller(const Qp2& x) {
    if (x.is_zero() || x.val() != 0)
        throw PrecisionLoss("teichmuller: input must be a provable unit");
    long m = x.absprec();
    Qp2 z = x;
    long q = x.prime() * x.prime();
    for (long i = 0; i < m + 1; ++i) z = z.pow(q);
    return z;
}

// Iwasawa branch of log: log(p) = 0, roots of unity killed, alternating
// series on the 1-unit part.
inline Qp2 log_iw(const Qp2& x) {
    if (x.is_zero())
        throw DivisionByZero("log_iw: argument indistinguishable from 0");
    long p = x.prime();
    Qp2 u = x.shift(-x.val());
    if (u.val() != 0) throw PrecisionLoss("log_iw: unit part not determined");
    Qp2 zeta = teichmuller(u);
    Qp2 one = Qp2::from_qp(Qp::from_int(p, 1, u.absprec()), x.rparam());
    Qp2 t = u / zeta - one;
    if (t.is_zero()) return Qp2::exact_zero(p, x.rparam()).cap_absprec(u.absprec());
    long target = t.absprec();
    long vt = t.val();
    Qp2 acc = Qp2::exact_zero(p, x.rparam());
    Qp2 power = t;
    for (long k = 1; k < 100000; ++k) {
        Qp2 term = power.mul_rational(mpq_class((k % 2 == 1) ? 1 : -1, k));
        acc = acc + term;
        power = power * t;
        // remaining terms have val >= (k+1)vt - log_p(k+1) and the bound is
        // increasing, so stop once it clears the target precision
        long lg = 0;
        for (long q = k + 1; q >= p; q /= p) ++lg;
        if ((k + 1) * vt - lg >= target) break;
    }
    return acc.cap_absprec(target);
}

// exp on the convergence domain val > 1/(p-1).
inline Qp2 exp_p(const Qp2& x) {
    long p = x.prime();
    if (x.is_exact_zero())
        return Qp2::from_qp(Qp::from_int(p, 1, 1), x.rparam());
    long need = (p == 2) ? 2 : 1;
    if (x.val() < need)
        throw ExpDivergence("exp_p: argument valuation <= 1/(p-1)");
    long target = x.absprec();
    long v = x.val();
    Qp2 acc = Qp2::from_qp(Qp::from_int(p, 1, target), x.rparam());
    Qp2 term = acc;
    for (long k = 1; k < 100000; ++k) {
        term = (term * x).mul_rational(mpq_class(1, k));
        acc = acc + term;
        // tail bound: val(x^j / j!) >= j*v - (j-1)/(p-1) - 1, increasing in j
        long j = k + 1;
        if (j * v - (j - 1) / (p - 1) - 1 >= target) break;
    }
    return acc.cap_absprec(target);
}

// x^s := exp(s log x); for non-integer s this is the principal-unit power
// (the Teichmueller part of x is projected away by log_iw).
inline Qp2 pow_s(const Qp2& x, const Qp& s) {
    Qp2 slog = log_iw(x) * Qp2::from_qp(s, x.rparam());
    return exp_p(slog);
}

namespace detail {

// Square root in F_{p^2} = F_p(w), w^2 = r, by exhaustive search; the primes
// in scope are single digit, so p^2 candidates is the right tool.
inline bool fp2_sqrt(long p, long r, long a, long b, long* sa, long* sb) {
    long rr = ((r % p) + p) % p;
    for (long x = 0; x < p; ++x)
        for (long y = 0; y < p; ++y) {
            long na = (x * x + rr * y * y) % p;
            long nb = (2 * x * y) % p;
            if (na == a && nb == b) {
                *sa = x;
                *sb = y;
                return true;
            }
        }
    return false;
}

} // namespace detail

// Canonical square root. Branch rule: of the two roots +-s, return the one
// whose leading digit pair (a0, b0) in {0..p-1}^2 is lexicographically
// smaller; for odd p exactly one of the pair {s, -s} wins.
inline Qp2 sqrt(const Qp2& x) {
    long p = x.prime();
    if (p == 2) throw BadPrime("sqrt: p = 2 not supported");
    if (x.is_exact_zero()) return x;
    if (x.is_zero()) throw PrecisionLoss("sqrt: argument has no known digit");
    long v = x.val();
    if (v % 2 != 0)
        throw NoSquareRoot("sqrt: odd valuation has no square root in the unramified extension");
    Qp2 u = x.shift(-v);
    long m = u.absprec();
    long a0 = u.re().val() == 0 ? mpz_class(u.re().unit() % p).get_si() : 0;
    long b0 = u.im().val() == 0 ? mpz_class(u.im().unit() % p).get_si() : 0;
    long sa, sb;
    if (!detail::fp2_sqrt(p, x.rparam(), a0, b0, &sa, &sb))
        throw NoSquareRoot("sqrt: non-square residue");
    Qp2 s = Qp2::from_rationals(p, x.rparam(), mpq_class(sa), mpq_class(sb), m);
    Qp2 half = Qp2::from_rationals(p, x.rparam(), mpq_class(1, 2), mpq_class(0), m);
    long iters = 1;
    while ((1L << iters) < m + 2) ++iters;
    for (long i = 0; i <= iters; ++i) s = (s + u / s) * half;
    s = s.cap_absprec(m);
    long ra = s.re().val() == 0 ? mpz_class(s.re().unit() % p).get_si() : 0;
    long rb = s.im().val() == 0 ? mpz_class(s.im().unit() % p).get_si() : 0;
    long na = ra == 0 ? 0 : p - ra;
    long nb = rb == 0 ? 0 : p - rb;
    if (std::make_pair(na, nb) < std::make_pair(ra, rb)) s = -s;
    return s.shift(v / 2);
}

inline Qp sqrt(const Qp& x, long r) {
    Qp2 y = sqrt(Qp2::from_qp(x, r));
    if (!y.im().is_zero())
        throw NoSquareRoot("sqrt: square root lies outside Q_p");
    return y.re();
}

// Session context: prime, extension parameter, default working precision.
struct PadicContext {
    long p;
    long r;    // lift of a quadratic non-residue mod p; w^2 = r
    long prec; // default relative precision (digits)

    PadicContext(long p_, long prec_) : p(p_), r(smallest_nonresidue(p_)), prec(prec_) {}
    PadicContext(long p_, long r_, long prec_) : p(p_), r(r_), prec(prec_) {
        if (legendre(mpz_class(r_), p_) != -1)
            throw ConfigError("PadicContext: r must be a non-residue mod p");
    }

    Qp q(const mpq_class& x) const { return Qp::from_rational(p, x, prec); }
    Qp q(long x) const { return Qp::from_int(p, x, prec); }
    Qp zero() const { return Qp::exact_zero(p); }
    Qp2 q2(const mpq_class& a, const mpq_class& b) const {
        return Qp2::from_rationals(p, r, a, b, prec);
    }
    Qp2 q2(long a) const { return Qp2::from_qp(q(a), r); }
    Qp2 lift(const Qp& a) const { return Qp2::from_qp(a, r); }
    Qp2 omega() const { return Qp2::omega(p, r, prec); }
    Qp2 zero2() const { return Qp2::exact_zero(p, r); }
};

} // namespace treeforms
