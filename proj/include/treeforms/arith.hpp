#pragma once

// Small exact-arithmetic helpers on top of GMP: p-adic valuations of
// integers and rationals, powers, binomials, modular lifts and inverses,
// quadratic residue utilities.

#include <gmpxx.h>

#include <limits>
#include <string>

#include "treeforms/errors.hpp"

namespace treeforms {

// Sentinel for the valuation of zero; large enough that sums of a few
// valuations never overflow.
inline constexpr long VAL_INF = std::numeric_limits<long>::max() / 8;

inline mpz_class pow_z(long base, long e) {
    if (e < 0) throw IndexOutOfRange("pow_z: negative exponent");
    mpz_class r;
    mpz_ui_pow_ui(r.get_mpz_t(), static_cast<unsigned long>(base),
                  static_cast<unsigned long>(e));
    return r;
}

// base^e as a rational, any sign of e.
inline mpq_class pow_q(long base, long e) {
    if (e >= 0) return mpq_class(pow_z(base, e));
    return mpq_class(1) / mpq_class(pow_z(base, -e));
}

inline long vp(const mpz_class& x, long p) {
    if (x == 0) return VAL_INF;
    mpz_class q, r = x;
    long v = 0;
    while (true) {
        mpz_class rem;
        mpz_fdiv_qr_ui(q.get_mpz_t(), rem.get_mpz_t(), r.get_mpz_t(),
                       static_cast<unsigned long>(p));
        if (rem != 0) break;
        r = q;
        ++v;
    }
    return v;
}

inline long vp(const mpq_class& x, long p) {
    if (x == 0) return VAL_INF;
    return vp(mpz_class(x.get_num()), p) - vp(mpz_class(x.get_den()), p);
}

// Least non-negative representative of x mod m (m > 0).
inline mpz_class mod_lift(const mpz_class& x, const mpz_class& m) {
    mpz_class r;
    mpz_fdiv_r(r.get_mpz_t(), x.get_mpz_t(), m.get_mpz_t());
    return r;
}

inline mpz_class invmod(const mpz_class& x, const mpz_class& m) {
    mpz_class r;
    if (mpz_invert(r.get_mpz_t(), x.get_mpz_t(), m.get_mpz_t()) == 0)
        throw DivisionByZero("invmod: argument not invertible");
    return r;
}

inline mpz_class binom(long n, long k) {
    if (k < 0 || n < 0 || k > n) return 0;
    mpz_class r;
    mpz_bin_uiui(r.get_mpz_t(), static_cast<unsigned long>(n),
                 static_cast<unsigned long>(k));
    return r;
}

inline int legendre(const mpz_class& a, long p) {
    mpz_class pz(p);
    return mpz_legendre(a.get_mpz_t(), pz.get_mpz_t());
}

inline long smallest_nonresidue(long p) {
    for (long r = 2; r < p; ++r)
        if (legendre(r, p) == -1) return r;
    throw BadPrime("smallest_nonresidue: no non-residue below p (p must be an odd prime > 2)");
}

// Rational q as num/den with the p-part moved into an explicit exponent:
// q = u/w * p^v with p coprime to u, w.  Returns {u*invmod(w), v} mod p^k
// style reductions are built on top of this in the p-adic layer.
struct PSplit {
    long v;
    mpq_class unit; // p-free rational
};

inline PSplit p_split(const mpq_class& q, long p) {
    if (q == 0) return {VAL_INF, mpq_class(0)};
    long vn = vp(mpz_class(q.get_num()), p);
    long vd = vp(mpz_class(q.get_den()), p);
    mpq_class unit = q;
    if (vn > 0) unit /= mpq_class(pow_z(p, vn));
    if (vd > 0) unit *= mpq_class(pow_z(p, vd));
    unit.canonicalize();
    return {vn - vd, unit};
}

// Value of a p-free rational mod p^k, lifted to [0, p^k).
inline mpz_class rational_mod_pk(const mpq_class& q, long p, long k) {
    mpz_class m = pow_z(p, k);
    mpz_class num = mod_lift(q.get_num(), m);
    mpz_class den = invmod(q.get_den(), m);
    return mod_lift(num * den, m);
}

inline std::string q_str(const mpq_class& q) { return q.get_str(); }

} // namespace treeforms
