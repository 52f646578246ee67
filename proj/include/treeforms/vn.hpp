#pragma once

// The coefficient modules V_n: duals of polynomials of degree <= n, stored
// by moments (values on 1, x, ..., x^n). Polynomials carry the right
// weight-n action P.g = (cx+d)^n P((ax+b)/(cx+d)); V_n carries the dual
// left action (g.v)(P) = v(P.g). The pairing is the Sym^n extension of
// <a w0 + b w1 + c w2, a' w0 + b' w1 + c' w2> = 2bb' - a'c - ac'.

#include <vector>

#include "treeforms/arith.hpp"
#include "treeforms/errors.hpp"
#include "treeforms/linalg.hpp"
#include "treeforms/poly.hpp"

namespace treeforms {

template <class K>
struct VnElem {
    long n = 0;
    Vec<K> moments; // moments[i] = value on x^i

    VnElem() = default;
    VnElem(long n_, Vec<K> m) : n(n_), moments(std::move(m)) {
        if (static_cast<long>(moments.size()) != n + 1)
            throw ConfigError("VnElem: expected n+1 moments");
    }
    static VnElem zero(long n, const K& like) {
        return VnElem(n, Vec<K>(static_cast<size_t>(n + 1), FieldOps<K>::zero(like)));
    }
    const K& operator[](size_t i) const { return moments.at(i); }
    K& operator[](size_t i) { return moments.at(i); }

    friend VnElem operator+(const VnElem& a, const VnElem& b) {
        if (a.n != b.n) throw WeightMismatch("VnElem: mixed weights");
        VnElem out = a;
        for (size_t i = 0; i < out.moments.size(); ++i)
            out.moments[i] = out.moments[i] + b.moments[i];
        return out;
    }
    friend VnElem operator-(const VnElem& a, const VnElem& b) {
        if (a.n != b.n) throw WeightMismatch("VnElem: mixed weights");
        VnElem out = a;
        for (size_t i = 0; i < out.moments.size(); ++i)
            out.moments[i] = out.moments[i] - b.moments[i];
        return out;
    }
    friend VnElem operator-(const VnElem& a) {
        VnElem out = a;
        for (auto& m : out.moments) m = -m;
        return out;
    }
    friend VnElem operator*(const K& c, const VnElem& a) {
        VnElem out = a;
        for (auto& m : out.moments) m = c * m;
        return out;
    }
    friend bool operator==(const VnElem& a, const VnElem& b) {
        return a.n == b.n && a.moments == b.moments;
    }
    bool is_zero() const {
        for (const auto& m : moments)
            if (!FieldOps<K>::is_zero(m)) return false;
        return true;
    }
    // Apply the functional to a polynomial of degree <= n.
    K eval(const Poly<K>& poly) const {
        if (poly.degree() > n) throw WeightMismatch("VnElem: polynomial degree exceeds n");
        K acc = FieldOps<K>::zero(moments[0]);
        for (long i = 0; i <= poly.degree(); ++i) acc = acc + poly[i] * moments[static_cast<size_t>(i)];
        return acc;
    }
};

// Matrix of the right weight-n action on coefficient vectors: column k
// holds the coefficients of (x^k).g = (ax+b)^k (cx+d)^(n-k).
template <class K>
Mat<K> weight_matrix(const Mat<K>& g, long n) {
    if (g.rows() != 2 || g.cols() != 2) throw ConfigError("weight_matrix: need 2x2");
    const K &a = g.at(0, 0), &b = g.at(0, 1), &c = g.at(1, 0), &d = g.at(1, 1);
    if (FieldOps<K>::is_zero(a * d - b * c))
        throw SingularMatrix("weight_matrix: matrix not invertible");
    K zero = FieldOps<K>::zero(a), one = FieldOps<K>::one(a);
    Poly<K> lin_ab(Vec<K>{b, a}), lin_cd(Vec<K>{d, c});
    Mat<K> w(n + 1, n + 1, zero);
    for (long k = 0; k <= n; ++k) {
        Poly<K> col = Poly<K>::monomial(one, 0) * lin_ab.pow(k) * lin_cd.pow(n - k);
        for (long i = 0; i <= n; ++i) w.at(i, k) = col.coeff_or_zero(i);
    }
    return w;
}

// Right action on polynomials of degree <= n.
template <class K>
Poly<K> poly_weight_action(const Poly<K>& poly, const Mat<K>& g, long n) {
    if (poly.degree() > n) throw WeightMismatch("poly_weight_action: degree exceeds n");
    Mat<K> w = weight_matrix(g, n);
    Vec<K> coeffs(static_cast<size_t>(n + 1), FieldOps<K>::zero(w.at(0, 0)));
    for (long i = 0; i <= poly.degree(); ++i) coeffs[static_cast<size_t>(i)] = poly[i];
    Vec<K> out = w * coeffs;
    return Poly<K>(std::move(out));
}

// Dual left action on V_n: (g.v)(P) = v(P.g), i.e. moments -> W(g)^T moments.
template <class K>
VnElem<K> vn_act(const Mat<K>& g, const VnElem<K>& v) {
    Mat<K> wt = weight_matrix(g, v.n).transpose();
    return VnElem<K>(v.n, wt * v.moments);
}

// Sym^n pairing in moment coordinates; reduces to 2bb' - a'c - ac' on V_2.
template <class K>
K vn_pair(const VnElem<K>& x, const VnElem<K>& y) {
    if (x.n != y.n) throw WeightMismatch("vn_pair: mixed weights");
    long n = x.n;
    K acc = FieldOps<K>::zero(x.moments[0]);
    for (long i = 0; i <= n; ++i) {
        K term = FieldOps<K>::from_int(acc, binom(n, i).get_si()) *
                 x.moments[static_cast<size_t>(i)] * y.moments[static_cast<size_t>(n - i)];
        if (i % 2 == 0)
            acc = acc - term;
        else
            acc = acc + term;
    }
    return acc;
}

// P_u(x) = (1,-x) u (x,1)^T = -c x^2 + (a-d) x + b for traceless u.
template <class K>
Poly<K> poly_from_traceless(const Mat<K>& u) {
    if (u.rows() != 2 || u.cols() != 2) throw ConfigError("poly_from_traceless: need 2x2");
    if (!FieldOps<K>::is_zero(u.at(0, 0) + u.at(1, 1)))
        throw NonTraceless("poly_from_traceless: nonzero trace");
    return Poly<K>(Vec<K>{u.at(0, 1), u.at(0, 0) - u.at(1, 1), -u.at(1, 0)});
}

// P_{i,j,n}(X,Y) = sum_k C(j,k) C(n-j, k+i-j) (-1)^(n-i) X^k Y^(n-i-k):
// the z^i coefficient of (z-X)^j (z-Y)^(n-j).
template <class K>
K pijn(long i, long j, long n, const K& x, const K& y) {
    if (n < 0 || i < 0 || i > n || j < 0 || j > n)
        throw IndexOutOfRange("pijn: need 0 <= i,j <= n");
    K acc = FieldOps<K>::zero(x);
    for (long k = 0; k <= n; ++k) {
        mpz_class cz = binom(j, k) * binom(n - j, k + i - j);
        if (cz == 0) continue;
        long e = n - i - k;
        if (e < 0) continue;
        K term = FieldOps<K>::from_int(acc, cz.get_si());
        for (long t = 0; t < k; ++t) term = term * x;
        for (long t = 0; t < e; ++t) term = term * y;
        acc = acc + term;
    }
    if ((n - i) % 2 != 0) acc = -acc;
    return acc;
}

// Coefficient vector of (z-X)^j (z-Y)^(n-j) as a VnElem coordinate tuple.
template <class K>
VnElem<K> basis_change(long j, long n, const K& x, const K& y) {
    if (j < 0 || j > n) throw IndexOutOfRange("basis_change: need 0 <= j <= n");
    Vec<K> coords;
    coords.reserve(static_cast<size_t>(n + 1));
    for (long i = 0; i <= n; ++i) coords.push_back(pijn(i, j, n, x, y));
    return VnElem<K>(n, std::move(coords));
}

} // namespace treeforms
