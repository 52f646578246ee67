#pragma once

// Definite quaternion algebras B = (a,b | Q), maximal and Eichler orders,
// exact norm-form enumeration, local Hilbert symbols, and an exact
// splitting B -> M_2(Q(sqrt(m))) with (m/p) = 1, so that p-adic digits of
// matrix images are produced only at evaluation time.

#include <gmpxx.h>

#include <algorithm>
#include <array>
#include <map>
#include <vector>

#include "treeforms/arith.hpp"
#include "treeforms/errors.hpp"
#include "treeforms/linalg.hpp"
#include "treeforms/quadfield.hpp"
#include "treeforms/tree.hpp"

namespace treeforms {

// t + x i + y j + z k; the relations i^2 = a, j^2 = b, ij = -ji = k live
// in QuaternionAlgebra, which owns all products and norms.
struct Quat {
    mpq_class t, x, y, z;

    Quat() = default;
    Quat(mpq_class t_, mpq_class x_, mpq_class y_, mpq_class z_)
        : t(std::move(t_)), x(std::move(x_)), y(std::move(y_)), z(std::move(z_)) {}
    static Quat one() { return Quat(1, 0, 0, 0); }

    friend bool operator==(const Quat& u, const Quat& v) {
        return u.t == v.t && u.x == v.x && u.y == v.y && u.z == v.z;
    }
    friend bool operator!=(const Quat& u, const Quat& v) { return !(u == v); }
    friend bool operator<(const Quat& u, const Quat& v) {
        if (u.t != v.t) return cmp(u.t, v.t) < 0;
        if (u.x != v.x) return cmp(u.x, v.x) < 0;
        if (u.y != v.y) return cmp(u.y, v.y) < 0;
        return cmp(u.z, v.z) < 0;
    }

    Quat operator-() const { return Quat(-t, -x, -y, -z); }
    friend Quat operator+(const Quat& u, const Quat& v) {
        return Quat(u.t + v.t, u.x + v.x, u.y + v.y, u.z + v.z);
    }
    friend Quat operator-(const Quat& u, const Quat& v) { return u + (-v); }
    friend Quat operator*(const mpq_class& c, const Quat& u) {
        return Quat(c * u.t, c * u.x, c * u.y, c * u.z);
    }

    std::string str() const {
        return "(" + t.get_str() + ", " + x.get_str() + ", " + y.get_str() + ", " +
               z.get_str() + ")";
    }
};

// Local Hilbert symbol (a,b)_v; v = 0 denotes the real place.
inline int hilbert_symbol(mpq_class a, mpq_class b, long v) {
    if (a == 0 || b == 0) throw ConfigError("hilbert_symbol: arguments must be nonzero");
    if (v == 0) return (a < 0 && b < 0) ? -1 : 1;
    long p = v;
    auto split = [&](const mpq_class& q, long& e) {
        e = vp(q, p);
        mpq_class u = q / pow_q(p, e);
        // Only the unit part mod p (or mod 8 for p=2) matters.
        return u;
    };
    long alpha, beta;
    mpq_class u = split(a, alpha), w = split(b, beta);
    auto unit_mod = [&](const mpq_class& q, long mod) {
        mpz_class m(mod);
        mpz_class num = mod_lift(mpz_class(q.get_num()), m);
        mpz_class den = mod_lift(mpz_class(q.get_den()), m);
        return mpz_class(mod_lift(num * invmod(den, m), m)).get_si();
    };
    if (p != 2) {
        int s = 1;
        if ((alpha & 1) && (beta & 1) && ((p - 1) / 2) % 2 == 1) s = -s;
        mpz_class uz(unit_mod(u, p)), wz(unit_mod(w, p));
        if (beta & 1) s *= legendre(uz, p);
        if (alpha & 1) s *= legendre(wz, p);
        return s;
    }
    long u8 = unit_mod(u, 8), w8 = unit_mod(w, 8);
    long eps_u = ((u8 - 1) / 2) & 1, eps_w = ((w8 - 1) / 2) & 1;
    long om_u = ((u8 * u8 - 1) / 8) & 1, om_w = ((w8 * w8 - 1) / 8) & 1;
    long e = eps_u * eps_w + alpha * om_w + beta * om_u;
    return (e & 1) ? -1 : 1;
}

class QuaternionAlgebra {
public:
    QuaternionAlgebra() = default;
    QuaternionAlgebra(mpq_class a, mpq_class b, long disc)
        : a_(std::move(a)), b_(std::move(b)), disc_(disc) {}

    const mpq_class& a() const { return a_; }
    const mpq_class& b() const { return b_; }
    long disc() const { return disc_; }

    Quat mul(const Quat& u, const Quat& v) const {
        return Quat(u.t * v.t + a_ * u.x * v.x + b_ * u.y * v.y - a_ * b_ * u.z * v.z,
                    u.t * v.x + u.x * v.t - b_ * (u.y * v.z - u.z * v.y),
                    u.t * v.y + u.y * v.t + a_ * (u.x * v.z - u.z * v.x),
                    u.t * v.z + u.z * v.t + (u.x * v.y - u.y * v.x));
    }
    Quat conj(const Quat& u) const { return Quat(u.t, -u.x, -u.y, -u.z); }
    mpq_class nrd(const Quat& u) const {
        return u.t * u.t - a_ * u.x * u.x - b_ * u.y * u.y + a_ * b_ * u.z * u.z;
    }
    mpq_class trd(const Quat& u) const { return 2 * u.t; }

    bool is_definite() const { return hilbert_symbol(a_, b_, 0) == -1; }

    // The finite ramified places are exactly the primes of disc (definite:
    // also ramified at the real place).
    void verify_ramification() const {
        if (!is_definite())
            throw UnsupportedDiscriminant("algebra is not definite");
        std::vector<long> suspects;
        mpz_class prod = 2 * mpz_class(a_.get_num()) * mpz_class(a_.get_den()) *
                         mpz_class(b_.get_num()) * mpz_class(b_.get_den()) * disc_;
        prod = abs(prod);
        for (long q = 2; mpz_class(q) * q <= prod; ++q)
            while (mpz_divisible_ui_p(prod.get_mpz_t(), static_cast<unsigned long>(q))) {
                if (suspects.empty() || suspects.back() != q) suspects.push_back(q);
                prod /= q;
            }
        if (prod > 1) suspects.push_back(prod.get_si());
        mpz_class ram(1);
        for (long q : suspects)
            if (hilbert_symbol(a_, b_, q) == -1) ram *= q;
        if (ram != disc_)
            throw UnsupportedDiscriminant("ramified primes do not match the discriminant");
    }

private:
    mpq_class a_, b_;
    long disc_ = 0;
};

// A Z-lattice with quaternion basis; used for both maximal orders and
// Eichler suborders. Keeps the inverse coordinate matrix for O(1)
// membership tests.
class Order {
public:
    Order() = default;
    Order(QuaternionAlgebra alg, std::array<Quat, 4> basis)
        : alg_(std::move(alg)), basis_(std::move(basis)) {
        Mat<mpq_class> m(4, 4, mpq_class(0));
        for (long c = 0; c < 4; ++c) {
            m.at(0, c) = basis_[static_cast<size_t>(c)].t;
            m.at(1, c) = basis_[static_cast<size_t>(c)].x;
            m.at(2, c) = basis_[static_cast<size_t>(c)].y;
            m.at(3, c) = basis_[static_cast<size_t>(c)].z;
        }
        to_coords_ = inverse(m);
    }

    const QuaternionAlgebra& algebra() const { return alg_; }
    const std::array<Quat, 4>& basis() const { return basis_; }

    Vec<mpq_class> coords(const Quat& q) const {
        Vec<mpq_class> v{q.t, q.x, q.y, q.z};
        return to_coords_ * v;
    }
    Quat from_coords(const Vec<mpq_class>& c) const {
        Quat out(0, 0, 0, 0);
        for (size_t i = 0; i < 4; ++i) out = out + c[i] * basis_[i];
        return out;
    }
    bool contains(const Quat& q) const {
        for (const auto& c : coords(q))
            if (c.get_den() != 1) return false;
        return true;
    }

    // Gram matrix of the reduced norm: nrd(sum c_i e_i) = c^T G c.
    Mat<mpq_class> gram() const {
        Mat<mpq_class> g(4, 4, mpq_class(0));
        for (long i = 0; i < 4; ++i)
            for (long j = 0; j < 4; ++j)
                g.at(i, j) = alg_.trd(alg_.mul(basis_[static_cast<size_t>(i)],
                                               alg_.conj(basis_[static_cast<size_t>(j)]))) /
                             2;
        return g;
    }

    // Reduced discriminant: sqrt of det(trd(e_i conj(e_j))).
    mpq_class reduced_disc() const {
        Mat<mpq_class> t(4, 4, mpq_class(0));
        for (long i = 0; i < 4; ++i)
            for (long j = 0; j < 4; ++j)
                t.at(i, j) = alg_.trd(alg_.mul(basis_[static_cast<size_t>(i)],
                                               alg_.conj(basis_[static_cast<size_t>(j)])));
        mpq_class d = det(t);
        mpz_class num_root, den_root;
        if (!mpz_perfect_square_p(d.get_num().get_mpz_t()) ||
            !mpz_perfect_square_p(d.get_den().get_mpz_t()))
            throw HypothesisViolation("order trace form has non-square determinant");
        mpz_sqrt(num_root.get_mpz_t(), d.get_num().get_mpz_t());
        mpz_sqrt(den_root.get_mpz_t(), d.get_den().get_mpz_t());
        return mpq_class(num_root) / mpq_class(den_root);
    }

    bool closed_under_multiplication() const {
        for (const auto& u : basis_)
            for (const auto& v : basis_)
                if (!contains(alg_.mul(u, v))) return false;
        return true;
    }

private:
    QuaternionAlgebra alg_;
    std::array<Quat, 4> basis_;
    Mat<mpq_class> to_coords_;
};

namespace detail {

// Row Hermite form of an integer matrix (rows span the lattice).
inline std::vector<std::vector<mpz_class>> hnf_rows(std::vector<std::vector<mpz_class>> m) {
    size_t rows = m.size(), cols = rows ? m[0].size() : 0;
    size_t r = 0;
    for (size_t c = 0; c < cols && r < rows; ++c) {
        for (;;) {
            size_t piv = rows;
            for (size_t i = r; i < rows; ++i)
                if (m[i][c] != 0 && (piv == rows || abs(m[i][c]) < abs(m[piv][c]))) piv = i;
            if (piv == rows) break;
            std::swap(m[r], m[piv]);
            bool clean = true;
            for (size_t i = r + 1; i < rows; ++i) {
                if (m[i][c] == 0) continue;
                mpz_class q = m[i][c] / m[r][c]; // truncated division is fine here
                for (size_t j = 0; j < cols; ++j) m[i][j] -= q * m[r][j];
                if (m[i][c] != 0) clean = false;
            }
            if (clean) break;
        }
        if (m[r][c] != 0) {
            if (m[r][c] < 0)
                for (size_t j = 0; j < cols; ++j) m[r][j] = -m[r][j];
            // Reduce the rows above to make the form canonical.
            for (size_t i = 0; i < r; ++i) {
                mpz_class q;
                mpz_fdiv_q(q.get_mpz_t(), m[i][c].get_mpz_t(), m[r][c].get_mpz_t());
                if (q != 0)
                    for (size_t j = 0; j < cols; ++j) m[i][j] -= q * m[r][j];
            }
            ++r;
        }
    }
    m.resize(r);
    return m;
}

// Lattice basis (4 quaternions) from a rational generating set.
inline std::array<Quat, 4> lattice_basis(const std::vector<Quat>& gens) {
    mpz_class den(1);
    for (const auto& g : gens)
        for (const mpq_class* c : {&g.t, &g.x, &g.y, &g.z})
            mpz_lcm(den.get_mpz_t(), den.get_mpz_t(), c->get_den().get_mpz_t());
    std::vector<std::vector<mpz_class>> m;
    for (const auto& g : gens)
        m.push_back({mpz_class(g.t * den), mpz_class(g.x * den), mpz_class(g.y * den),
                     mpz_class(g.z * den)});
    auto h = hnf_rows(std::move(m));
    if (h.size() != 4) throw HypothesisViolation("lattice_basis: rank below 4");
    std::array<Quat, 4> out;
    for (size_t i = 0; i < 4; ++i)
        out[i] = Quat(mpq_class(h[i][0]) / den, mpq_class(h[i][1]) / den,
                      mpq_class(h[i][2]) / den, mpq_class(h[i][3]) / den);
    return out;
}

} // namespace detail

// All Z-order elements of reduced norm t (exact Fincke-Pohst over the
// positive-definite Gram form). Deterministic output order.
inline std::vector<Quat> enumerate_norm(const Order& order, const mpz_class& t) {
    if (t < 0) throw ConfigError("enumerate_norm: negative norm");
    std::vector<Quat> out;
    if (t == 0) return out;
    Mat<mpq_class> g = order.gram();
    // LDL^T: q(c) = sum_i d_i (c_i + sum_{j>i} l_ij c_j)^2.
    std::array<std::array<mpq_class, 4>, 4> l{};
    std::array<mpq_class, 4> d{};
    {
        Mat<mpq_class> a = g;
        for (long i = 0; i < 4; ++i) {
            d[static_cast<size_t>(i)] = a.at(i, i);
            if (d[static_cast<size_t>(i)] <= 0)
                throw HypothesisViolation("enumerate_norm: norm form not positive definite");
            for (long j = i + 1; j < 4; ++j)
                l[static_cast<size_t>(i)][static_cast<size_t>(j)] = a.at(i, j) / a.at(i, i);
            for (long r = i + 1; r < 4; ++r)
                for (long c = i + 1; c < 4; ++c)
                    a.at(r, c) = a.at(r, c) - a.at(r, i) * a.at(i, c) / a.at(i, i);
        }
    }
    std::array<long, 4> c{};
    // Integer bounds for |c_i + u| <= sqrt(rem / d_i), with exact recheck.
    auto bound = [](const mpq_class& rem, const mpq_class& di) {
        mpq_class q = rem / di;
        mpz_class num = q.get_num(), den = q.get_den();
        mpz_class root;
        mpz_sqrt(root.get_mpz_t(), mpz_class(num * den).get_mpz_t());
        mpz_class b = root / den + 1;
        return b.get_si();
    };
    auto rec = [&](auto&& self, long i, const mpq_class& rem) -> void {
        if (i < 0) {
            if (rem == 0) {
                Vec<mpq_class> cc{mpq_class(c[0]), mpq_class(c[1]), mpq_class(c[2]),
                                  mpq_class(c[3])};
                out.push_back(order.from_coords(cc));
            }
            return;
        }
        mpq_class u(0);
        for (long j = i + 1; j < 4; ++j)
            u += l[static_cast<size_t>(i)][static_cast<size_t>(j)] * c[static_cast<size_t>(j)];
        long radius = bound(rem, d[static_cast<size_t>(i)]);
        mpz_class lo_z, hi_z;
        mpq_class nu = -u;
        mpz_fdiv_q(lo_z.get_mpz_t(), nu.get_num().get_mpz_t(), nu.get_den().get_mpz_t());
        long center = lo_z.get_si();
        for (long ci = center - radius; ci <= center + radius + 1; ++ci) {
            mpq_class term = d[static_cast<size_t>(i)] * (ci + u) * (ci + u);
            if (term > rem) continue;
            c[static_cast<size_t>(i)] = ci;
            self(self, i - 1, rem - term);
        }
    };
    rec(rec, 3, mpq_class(t));
    std::sort(out.begin(), out.end());
    return out;
}

// Hilbert-symbol parameter table: definite, ramified exactly at {disc, oo}.
inline std::pair<mpq_class, mpq_class> algebra_params(long n_minus) {
    switch (n_minus) {
        case 2: return {mpq_class(-1), mpq_class(-1)};
        case 3: return {mpq_class(-1), mpq_class(-3)};
        case 5: return {mpq_class(-2), mpq_class(-5)};
        case 7: return {mpq_class(-1), mpq_class(-7)};
        case 13: return {mpq_class(-2), mpq_class(-13)};
        default:
            throw UnsupportedDiscriminant("no order table for this discriminant");
    }
}

namespace detail {

// Saturate a ring lattice at primes above the target reduced discriminant;
// terminates at a maximal order for the table algebras.
inline Order saturate_to_maximal(const QuaternionAlgebra& alg, std::array<Quat, 4> basis,
                                 long target_disc) {
    Order cur(alg, basis);
    for (int guard = 0; guard < 64; ++guard) {
        mpq_class d = cur.reduced_disc();
        if (d == target_disc) return cur;
        if (d.get_den() != 1 || d < target_disc)
            throw UnsupportedDiscriminant("saturation undershot the target discriminant");
        mpz_class excess = mpz_class(d) / target_disc;
        bool improved = false;
        for (long ell = 2; !improved && mpz_class(ell) * ell <= excess * excess; ++ell) {
            if (!mpz_divisible_ui_p(excess.get_mpz_t(), static_cast<unsigned long>(ell)))
                continue;
            // Try index-ell enlargements x = (sum c_i e_i)/ell.
            std::array<long, 4> cvec{};
            auto try_all = [&](auto&& self, size_t pos) -> bool {
                if (pos == 4) {
                    bool allzero = true;
                    for (long cc : cvec)
                        if (cc) allzero = false;
                    if (allzero) return false;
                    Quat x(0, 0, 0, 0);
                    for (size_t i = 0; i < 4; ++i) {
                        mpq_class c(cvec[i], ell);
                        c.canonicalize();
                        x = x + c * cur.basis()[i];
                    }
                    if (alg.trd(x).get_den() != 1 || alg.nrd(x).get_den() != 1) return false;
                    std::vector<Quat> gens(cur.basis().begin(), cur.basis().end());
                    gens.push_back(x);
                    Order bigger(alg, lattice_basis(gens));
                    if (!bigger.closed_under_multiplication()) return false;
                    if (bigger.reduced_disc() >= d) return false;
                    cur = bigger;
                    return true;
                }
                for (long v = 0; v < ell; ++v) {
                    cvec[pos] = v;
                    if (self(self, pos + 1)) return true;
                }
                return false;
            };
            improved = try_all(try_all, 0);
        }
        if (!improved)
            throw UnsupportedDiscriminant("saturation stalled above the target discriminant");
    }
    throw UnsupportedDiscriminant("saturation did not terminate");
}

// A splitting of B over F_{q^e}: images of i and j as 2x2 matrices mod q^e,
// found by Hensel-lifting a solution of u^2 - a v^2 = b. Requires odd q
// with a, b both units mod q.
struct ModSplit {
    long q;
    long e;
    mpz_class mod;
    // i -> [[0,1],[a,0]], j -> [[u, v],[-a v, -u]].
    mpz_class a, u, v;

    std::array<std::array<mpz_class, 2>, 2> image(const Quat& x) const {
        mpz_class t = lift(x.t), xi = lift(x.x), yj = lift(x.y), zk = lift(x.z);
        // k = ij = [[0,1],[a,0]] * [[u,v],[-av,-u]] = [[-av, -u],[au, av]].
        std::array<std::array<mpz_class, 2>, 2> m;
        m[0][0] = t + yj * u + zk * (-a * v);
        m[0][1] = xi + yj * v + zk * (-u);
        m[1][0] = xi * a + yj * (-a * v) + zk * (a * u);
        m[1][1] = t + yj * (-u) + zk * (a * v);
        for (auto& row : m)
            for (auto& x2 : row) x2 = mod_lift(x2, mod);
        return m;
    }

    mpz_class lift(const mpq_class& r) const {
        mpz_class num = mod_lift(mpz_class(r.get_num()), mod);
        return mod_lift(num * invmod(mpz_class(r.get_den()), mod), mod);
    }
};

inline ModSplit mod_splitting(const QuaternionAlgebra& alg, long q, long e) {
    if (q == 2) throw ConfigError("mod_splitting: even level not supported");
    ModSplit s;
    s.q = q;
    s.e = e;
    s.mod = pow_z(q, e);
    s.a = s.lift(alg.a());
    mpz_class b = s.lift(alg.b());
    if (s.a % q == 0 || b % q == 0)
        throw ConfigError("mod_splitting: parameters not units at the level prime");
    // Solve u^2 - a v^2 = b mod q, then Hensel-lift to q^e.
    long u0 = -1, v0 = -1;
    for (long uu = 0; uu < q && u0 < 0; ++uu)
        for (long vv = 0; vv < q; ++vv) {
            if (mod_lift(mpz_class(uu) * uu - s.a * vv * vv - b, mpz_class(q)) == 0) {
                u0 = uu;
                v0 = vv;
                break;
            }
        }
    if (u0 < 0) throw HypothesisViolation("mod_splitting: no solution mod q");
    mpz_class u(u0), v(v0);
    for (long k = 1; k < e; ++k) {
        mpz_class mk = pow_z(q, k + 1);
        mpz_class f = mod_lift(u * u - s.a * v * v - b, mk);
        if (f != 0) {
            // Adjust along the nonzero partial derivative.
            mpz_class step = f / pow_z(q, k);
            if (mod_lift(2 * u, mpz_class(q)) != 0) {
                mpz_class du = mod_lift(-step * invmod(mpz_class(2 * u % q), mpz_class(q)),
                                        mpz_class(q));
                u = mod_lift(u + du * pow_z(q, k), mk);
            } else {
                mpz_class dv = mod_lift(step * invmod(mpz_class(2 * s.a * v % q), mpz_class(q)),
                                        mpz_class(q));
                v = mod_lift(v + dv * pow_z(q, k), mk);
            }
        }
    }
    s.u = u;
    s.v = v;
    if (mod_lift(u * u - s.a * v * v - b, s.mod) != 0)
        throw HypothesisViolation("mod_splitting: lift failed");
    return s;
}

} // namespace detail

struct AlgebraData {
    QuaternionAlgebra algebra;
    Order max_order;   // a maximal Z-order
    Order order;       // the Eichler Z-order of level N+
    long n_minus = 0;
    long n_plus = 0;
    long p = 0;
};

// Build the algebra of discriminant N- and an Eichler order of level N+,
// checked against the local Hilbert symbols and the reduced discriminant.
inline AlgebraData algebra_init(long n_minus, long n_plus, long p) {
    if (n_minus <= 1 || n_plus < 1) throw ConfigError("algebra_init: bad level data");
    if (p < 3 || mpz_probab_prime_p(mpz_class(p).get_mpz_t(), 40) == 0 || p % 2 == 0)
        throw BadPrime("algebra_init: p must be an odd prime");
    auto gcd_l = [](long x, long y) {
        mpz_class g;
        mpz_gcd(g.get_mpz_t(), mpz_class(x).get_mpz_t(), mpz_class(y).get_mpz_t());
        return g.get_si();
    };
    if (gcd_l(p, n_minus * n_plus) != 1)
        throw ConfigError("algebra_init: p must be prime to the level");
    if (gcd_l(n_minus, n_plus) != 1)
        throw ConfigError("algebra_init: N- and N+ must be coprime");

    auto [a, b] = algebra_params(n_minus);
    QuaternionAlgebra alg(a, b, n_minus);
    alg.verify_ramification();

    std::array<Quat, 4> seed = {Quat::one(), Quat(0, 1, 0, 0), Quat(0, 0, 1, 0),
                                Quat(0, 0, 0, 1)};
    Order maximal = detail::saturate_to_maximal(alg, seed, n_minus);

    Order eichler = maximal;
    long rest = n_plus;
    for (long q = 2; q <= rest; ++q) {
        if (rest % q != 0) continue;
        long e = 0;
        while (rest % q == 0) {
            rest /= q;
            ++e;
        }
        detail::ModSplit ms = detail::mod_splitting(alg, q, e);
        // Keep the sublattice whose image is upper triangular mod q^e:
        // kernel of c -> lower-left entry over Z/q^e, as a lattice.
        std::vector<Quat> gens;
        mpz_class qe = ms.mod;
        std::array<mpz_class, 4> ll;
        for (size_t i = 0; i < 4; ++i)
            ll[i] = ms.image(eichler.basis()[i])[1][0];
        // Solve sum c_i ll_i = 0 mod q^e by sweeping c over a Smith-style
        // reduction: use HNF of the 5x... small case: direct enumeration is
        // wasteful; instead adjoin q^e * basis and the explicit kernel
        // combinations found by clearing one pivot coordinate.
        size_t piv = 4;
        long best_val = VAL_INF;
        for (size_t i = 0; i < 4; ++i) {
            if (ll[i] == 0) continue;
            long v = vp(ll[i], q);
            if (v < best_val) {
                best_val = v;
                piv = i;
            }
        }
        if (piv == 4) {
            // Already upper triangular: nothing to do at this prime.
            continue;
        }
        if (best_val > 0)
            throw HypothesisViolation("algebra_init: degenerate level reduction");
        mpz_class inv_piv = invmod(ll[piv], qe);
        for (size_t i = 0; i < 4; ++i) {
            if (i == piv) continue;
            // e_i - (ll_i / ll_piv) e_piv kills the lower-left entry.
            mpz_class coef = mod_lift(ll[i] * inv_piv, qe);
            gens.push_back(eichler.basis()[i] - mpq_class(coef) * eichler.basis()[piv]);
        }
        gens.push_back(mpq_class(qe) * eichler.basis()[piv]);
        eichler = Order(alg, detail::lattice_basis(gens));
        if (!eichler.closed_under_multiplication())
            throw HypothesisViolation("algebra_init: level sublattice is not a ring");
    }
    if (eichler.reduced_disc() != mpq_class(n_minus) * n_plus)
        throw HypothesisViolation("algebra_init: Eichler discriminant mismatch");

    AlgebraData out;
    out.algebra = alg;
    out.max_order = maximal;
    out.order = eichler;
    out.n_minus = n_minus;
    out.n_plus = n_plus;
    out.p = p;
    return out;
}

// Exact splitting B -> M_2(F), F = Q(sqrt(m)) with (m/p) = 1: a traceless
// u with u^2 = m and a traceless w anticommuting with u give
//   u -> [[theta,0],[0,-theta]],  w -> [[0, m'],[1, 0]],  w^2 = m'.
// A final rational conjugation makes the Z-order land in M_2(Z_p) exactly
// (unit images with integral entries), so lattice reductions downstream
// read valuations off honestly.
class ExactSplitting {
public:
    ExactSplitting(const AlgebraData& data, const PadicContext& ctx)
        : alg_(data.algebra), ctx_(ctx) {
        find_frame(data);
        field_ = std::make_shared<SplitEmbedding>(m_, ctx_);
        stabilize(data);
    }

    long mparam() const { return m_; }
    long mprime() const { return mprime_; }
    const SplitEmbedding& field() const { return *field_; }
    const PadicContext& context() const { return ctx_; }

    // Exact matrix image with entries in Q(sqrt(m)).
    Mat<QuadRat> exact(const Quat& q) const {
        Vec<mpq_class> in{q.t, q.x, q.y, q.z};
        Vec<mpq_class> c = frame_coords_ * in;
        QuadRat tau(c[0]), al(c[1]), be(c[2]), ga(c[3]);
        QuadRat theta(mpq_class(0), mpq_class(1), m_);
        Mat<QuadRat> out(2, 2, QuadRat(0));
        out.at(0, 0) = tau + al * theta;
        out.at(0, 1) = QuadRat(mpq_class(mprime_)) * (be + ga * theta);
        out.at(1, 0) = be - ga * theta;
        out.at(1, 1) = tau - al * theta;
        return conj_inv_ * out * conj_;
    }

    // Capped image in M_2(Q_p) at the context precision.
    QpMat matrix(const Quat& q) const {
        Mat<QuadRat> e = exact(q);
        QpMat out;
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) out[i][j] = field_->embed(e.at(i, j));
        return out;
    }

private:
    void find_frame(const AlgebraData& data) {
        // Deterministic search for u = xi + yj + zk with u^2 = m, (m/p)=1.
        Quat u(0, 0, 0, 0), w(0, 0, 0, 0);
        bool found = false;
        for (long box = 1; box <= 6 && !found; ++box) {
            for (long x = -box; x <= box && !found; ++x)
                for (long y = -box; y <= box && !found; ++y)
                    for (long z = -box; z <= box && !found; ++z) {
                        if (std::max({labs(x), labs(y), labs(z)}) != box) continue;
                        Quat cand(0, mpq_class(x), mpq_class(y), mpq_class(z));
                        mpq_class sq = -alg_.nrd(cand);
                        if (sq == 0 || sq.get_den() != 1) continue;
                        mpz_class mz(sq);
                        if (legendre(mz, ctx_.p) != 1) continue;
                        u = cand;
                        m_ = mz.get_si();
                        found = true;
                    }
        }
        if (!found) throw HypothesisViolation("splitting: no split trace-zero element found");
        found = false;
        for (long box = 1; box <= 6 && !found; ++box) {
            for (long x = -box; x <= box && !found; ++x)
                for (long y = -box; y <= box && !found; ++y)
                    for (long z = -box; z <= box && !found; ++z) {
                        if (std::max({labs(x), labs(y), labs(z)}) != box) continue;
                        Quat cand(0, mpq_class(x), mpq_class(y), mpq_class(z));
                        if (alg_.nrd(cand) == 0) continue;
                        Quat anti = alg_.mul(u, cand) + alg_.mul(cand, u);
                        if (anti.t != 0 || anti.x != 0 || anti.y != 0 || anti.z != 0)
                            continue;
                        w = cand;
                        mpq_class sq = -alg_.nrd(cand);
                        mprime_ = mpz_class(sq).get_si();
                        found = true;
                    }
        }
        if (!found) throw HypothesisViolation("splitting: no anticommuting partner found");
        // Base-change matrix from (t,x,y,z) to coordinates in (1, u, w, uw).
        Quat uw = alg_.mul(u, w);
        Mat<mpq_class> frame(4, 4, mpq_class(0));
        const Quat cols[4] = {Quat::one(), u, w, uw};
        for (long c = 0; c < 4; ++c) {
            frame.at(0, c) = cols[c].t;
            frame.at(1, c) = cols[c].x;
            frame.at(2, c) = cols[c].y;
            frame.at(3, c) = cols[c].z;
        }
        frame_coords_ = inverse(frame);
        conj_ = Mat<QuadRat>::identity(2, QuadRat(0));
        conj_inv_ = conj_;
    }

    // Find a basis of the Z_p-lattice stable under the order images and
    // conjugate by it, so images of the order are p-integral with unit
    // determinant elements mapping into GL_2(Z_p).
    void stabilize(const AlgebraData& data) {
        // Lattice basis as columns of a rational 2x2 matrix; p-local only.
        Mat<mpq_class> s = Mat<mpq_class>::identity(2, mpq_class(0));
        auto min_val = [&](const Mat<QuadRat>& m) {
            long mv = VAL_INF;
            for (long i = 0; i < 2; ++i)
                for (long j = 0; j < 2; ++j)
                    if (!m.at(i, j).is_zero())
                        mv = std::min(mv, field_->val(m.at(i, j)));
            return mv;
        };
        auto embed_s = [&](const Mat<mpq_class>& r) {
            Mat<QuadRat> out(2, 2, QuadRat(0));
            for (long i = 0; i < 2; ++i)
                for (long j = 0; j < 2; ++j) out.at(i, j) = QuadRat(r.at(i, j));
            return out;
        };
        for (int guard = 0; guard < 32; ++guard) {
            Mat<QuadRat> sq = embed_s(s), sq_inv = embed_s(inverse(s));
            bool stable = true;
            for (const Quat& e : data.order.basis()) {
                Mat<QuadRat> img = sq_inv * raw_image(e) * sq;
                if (min_val(img) < 0) {
                    stable = false;
                    // Enlarge the lattice: L += image * L, via a p-local
                    // column reduction of [S | img*S] over Z_p.
                    s = enlarge(s, raw_image(e));
                    break;
                }
            }
            if (stable) {
                conj_ = embed_s(s);
                conj_inv_ = embed_s(inverse(s));
                return;
            }
        }
        throw HypothesisViolation("splitting: lattice stabilization did not terminate");
    }

    Mat<QuadRat> raw_image(const Quat& q) const {
        Vec<mpq_class> in{q.t, q.x, q.y, q.z};
        Vec<mpq_class> c = frame_coords_ * in;
        QuadRat theta(mpq_class(0), mpq_class(1), m_);
        Mat<QuadRat> out(2, 2, QuadRat(0));
        out.at(0, 0) = QuadRat(c[0]) + QuadRat(c[1]) * theta;
        out.at(0, 1) = QuadRat(mpq_class(mprime_)) * (QuadRat(c[2]) + QuadRat(c[3]) * theta);
        out.at(1, 0) = QuadRat(c[2]) - QuadRat(c[3]) * theta;
        out.at(1, 1) = QuadRat(c[0]) - QuadRat(c[1]) * theta;
        return out;
    }

    // Column-span of [s | a*s] as a Z_p-lattice, returned as a rational
    // basis matrix (p-adic entries are rounded to rational lifts at high
    // precision, which pins the lattice exactly at this scale).
    Mat<mpq_class> enlarge(const Mat<mpq_class>& s, const Mat<QuadRat>& a) {
        std::vector<std::array<Qp, 2>> cols;
        auto push_col = [&](const Qp& top, const Qp& bot) { cols.push_back({top, bot}); };
        for (long j = 0; j < 2; ++j)
            push_col(ctx_.q(s.at(0, j)), ctx_.q(s.at(1, j)));
        for (long j = 0; j < 2; ++j) {
            QuadRat top = a.at(0, 0) * QuadRat(s.at(0, j)) + a.at(0, 1) * QuadRat(s.at(1, j));
            QuadRat bot = a.at(1, 0) * QuadRat(s.at(0, j)) + a.at(1, 1) * QuadRat(s.at(1, j));
            push_col(field_->embed(top), field_->embed(bot));
        }
        // Two-column Z_p Hermite reduction of the 2x4 span.
        size_t piv = cols.size();
        long best = VAL_INF;
        for (size_t i = 0; i < cols.size(); ++i) {
            if (cols[i][1].is_zero()) continue;
            if (cols[i][1].val() < best) {
                best = cols[i][1].val();
                piv = i;
            }
        }
        if (piv == cols.size())
            throw HypothesisViolation("splitting: enlarge degenerated");
        std::array<Qp, 2> c2 = cols[piv];
        long best0 = VAL_INF;
        size_t piv0 = cols.size();
        for (size_t i = 0; i < cols.size(); ++i) {
            Qp cleared = cols[i][0] - (cols[i][1] / c2[1]) * c2[0];
            long v = cleared.is_zero() ? VAL_INF : cleared.val();
            if (v < best0) {
                best0 = v;
                piv0 = i;
            }
        }
        if (piv0 == cols.size())
            throw HypothesisViolation("splitting: enlarge lost rank");
        Qp c1_top = cols[piv0][0] - (cols[piv0][1] / c2[1]) * c2[0];
        long k = ctx_.prec / 2;
        Mat<mpq_class> out(2, 2, mpq_class(0));
        out.at(0, 0) = c1_top.lift_rational(std::min(c1_top.absprec(), c1_top.val() + k));
        out.at(1, 0) = 0;
        out.at(0, 1) = c2[0].is_zero()
                           ? mpq_class(0)
                           : c2[0].lift_rational(std::min(c2[0].absprec(), c2[0].val() + k));
        out.at(1, 1) = c2[1].lift_rational(std::min(c2[1].absprec(), c2[1].val() + k));
        return out;
    }

    QuaternionAlgebra alg_;
    PadicContext ctx_;
    long m_ = 0;
    long mprime_ = 0;
    Mat<mpq_class> frame_coords_;
    Mat<QuadRat> conj_, conj_inv_;
    std::shared_ptr<SplitEmbedding> field_;
};

} // namespace treeforms
