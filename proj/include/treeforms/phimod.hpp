#pragma once

// Finite-dimensional filtered (phi,N)-modules over the base fields Q_p and
// its unramified quadratic extension: axioms, Tate twists, Dieudonne-Manin
// slopes, the rank-one extension correspondence with its two explicit
// splittings, and the stalk of the rank-four matrix isocrystal at a torus
// point.
//
// Scalar models: mpq_class is the rational model of Q_p (sigma = id);
// QuadRat with a nonresidue radicand is the exact inert model of the
// quadratic extension (sigma = conjugation); Qp2 is the capped numeric
// model (sigma = frobenius). Semilinearity is handled by storing the
// matrix and composing with entrywise sigma; solvers that must see through
// sigma operate on the associated doubling over the degree-one base.

#include <gmpxx.h>

#include <algorithm>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "treeforms/arith.hpp"
#include "treeforms/errors.hpp"
#include "treeforms/linalg.hpp"
#include "treeforms/padic.hpp"
#include "treeforms/quadfield.hpp"

namespace treeforms {

// Scalar model of the coefficient field: inertia degree, sigma, exact
// p-adic valuation, and the split into degree-one parts used by the
// doubled solvers. part1 of a degree-one scalar is identically zero.
template <class S>
struct PhiScalar;

template <>
struct PhiScalar<mpq_class> {
    static constexpr long degree = 1;
    using Base = mpq_class;
    static mpq_class sigma(const mpq_class& x) { return x; }
    static long val(const mpq_class& x, long p) { return x == 0 ? VAL_INF : vp(x, p); }
    static mpq_class part0(const mpq_class& x) { return x; }
    static mpq_class part1(const mpq_class&) { return mpq_class(0); }
    static mpq_class combine(const mpq_class& a, const mpq_class&, const mpq_class&) { return a; }
    static mpq_class cross(const mpq_class&) { return mpq_class(0); }
    static void check_model(const mpq_class&, long) {}
};

template <>
struct PhiScalar<QuadRat> {
    static constexpr long degree = 2;
    using Base = mpq_class;
    static QuadRat sigma(const QuadRat& x) { return x.conj(); }
    // Inert valuation: for a p-unit nonresidue radicand the two coordinates
    // valuate independently.
    static long val(const QuadRat& x, long p) {
        long v = VAL_INF;
        if (x.rat() != 0) v = std::min(v, vp(x.rat(), p));
        if (x.irr() != 0) v = std::min(v, vp(x.irr(), p));
        return v;
    }
    static mpq_class part0(const QuadRat& x) { return x.rat(); }
    static mpq_class part1(const QuadRat& x) { return x.irr(); }
    static QuadRat combine(const mpq_class& a, const mpq_class& b, const QuadRat& like) {
        return QuadRat(a, b, like.mparam());
    }
    static mpq_class cross(const QuadRat& like) { return mpq_class(like.mparam()); }
    static void check_model(const QuadRat& x, long p) {
        if (!x.is_rational() && legendre(mpz_class(x.mparam()), p) != -1)
            throw ConfigError("PhiScalar: the quadratic model must be inert at p");
    }
};

template <>
struct PhiScalar<Qp2> {
    static constexpr long degree = 2;
    using Base = Qp;
    static Qp2 sigma(const Qp2& x) { return x.frobenius(); }
    // A capped zero reports no valuation; Newton polygons treat it as a
    // point above the hull.
    static long val(const Qp2& x, long) { return x.is_zero() ? VAL_INF : x.val(); }
    static Qp part0(const Qp2& x) { return x.re(); }
    static Qp part1(const Qp2& x) { return x.im(); }
    static Qp2 combine(const Qp& a, const Qp& b, const Qp2& like) {
        return Qp2(a, b, like.rparam());
    }
    static Qp cross(const Qp2& like) { return Qp::from_int(like.prime(), like.rparam(), 64); }
    static void check_model(const Qp2&, long) {}
};

template <class S>
Vec<S> sigma_vec(const Vec<S>& v) {
    Vec<S> out;
    out.reserve(v.size());
    for (const S& x : v) out.push_back(PhiScalar<S>::sigma(x));
    return out;
}

template <class S>
Mat<S> sigma_mat(const Mat<S>& m) {
    Mat<S> out = m;
    for (long i = 0; i < m.rows(); ++i)
        for (long j = 0; j < m.cols(); ++j) out.at(i, j) = PhiScalar<S>::sigma(m.at(i, j));
    return out;
}

// One filtration step: the columns of basis span Fil^j for every j from
// jump up to the next listed jump. Below the first listed jump the
// filtration is the full space.
template <class S>
struct FilStep {
    long jump;
    Mat<S> basis;
};

template <class S>
class FilteredPhiNModule {
public:
    FilteredPhiNModule(long p, Mat<S> frob, Mat<S> mono, std::vector<FilStep<S>> fil)
        : p_(p), frob_(std::move(frob)), mono_(std::move(mono)), fil_(std::move(fil)) {
        if (p_ < 2) throw BadPrime("FilteredPhiNModule: p must be at least 2");
        if (frob_.rows() != frob_.cols() || frob_.rows() < 1)
            throw ConfigError("FilteredPhiNModule: frobenius must be square and nonempty");
        if (mono_.rows() != frob_.rows() || mono_.cols() != frob_.cols())
            throw ConfigError("FilteredPhiNModule: monodromy shape mismatch");
        if (fil_.empty()) throw ConfigError("FilteredPhiNModule: empty filtration");
        for (size_t k = 0; k < fil_.size(); ++k) {
            if (fil_[k].basis.rows() != frob_.rows())
                throw ConfigError("FilteredPhiNModule: filtration row count mismatch");
            if (k > 0 && fil_[k].jump <= fil_[k - 1].jump)
                throw ConfigError("FilteredPhiNModule: jumps must increase strictly");
        }
    }

    long prime() const { return p_; }
    long dim() const { return frob_.rows(); }
    const Mat<S>& frob() const { return frob_; }
    const Mat<S>& mono() const { return mono_; }
    const std::vector<FilStep<S>>& fil() const { return fil_; }

    // Basis of Fil^j: full space below the first jump, then the last step
    // whose jump is at most j.
    Mat<S> fil_at(long j) const {
        if (j < fil_.front().jump) return Mat<S>::identity(dim(), frob_.sample());
        size_t k = 0;
        while (k + 1 < fil_.size() && fil_[k + 1].jump <= j) ++k;
        return fil_[k].basis;
    }

    Vec<S> apply_frob(const Vec<S>& v) const { return frob_ * sigma_vec(v); }
    Vec<S> apply_mono(const Vec<S>& v) const { return mono_ * v; }

private:
    long p_;
    Mat<S> frob_;
    Mat<S> mono_;
    std::vector<FilStep<S>> fil_;
};

namespace detail {

template <class S>
bool mat_diff_zero(const Mat<S>& a, const Mat<S>& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
    for (long i = 0; i < a.rows(); ++i)
        for (long j = 0; j < a.cols(); ++j)
            if (!FieldOps<S>::is_zero(a.at(i, j) - b.at(i, j))) return false;
    return true;
}

template <class S>
Mat<S> hstack(const Mat<S>& a, const Mat<S>& b) {
    if (a.rows() != b.rows()) throw ConfigError("hstack: row count mismatch");
    const S& like = a.cols() > 0 ? a.sample() : b.sample();
    Mat<S> out = Mat<S>::zero(a.rows(), a.cols() + b.cols(), like);
    for (long i = 0; i < a.rows(); ++i) {
        for (long j = 0; j < a.cols(); ++j) out.at(i, j) = a.at(i, j);
        for (long j = 0; j < b.cols(); ++j) out.at(i, a.cols() + j) = b.at(i, j);
    }
    return out;
}

template <class S>
S int_power_scalar(const S& like, long base, long e) {
    bool neg = e < 0;
    long k = neg ? -e : e;
    S acc = FieldOps<S>::one(like);
    S b = FieldOps<S>::from_int(like, base);
    while (k > 0) {
        if (k & 1) acc = acc * b;
        b = b * b;
        k >>= 1;
    }
    return neg ? FieldOps<S>::inv(acc) : acc;
}

// A scalar carrying the field parameters for combine/cross: prefer one
// with a nonzero degree-one complement so QuadRat learns its radicand.
template <class S>
S field_witness(const Mat<S>& primary, const Mat<S>& secondary) {
    using s = PhiScalar<S>;
    using B = typename s::Base;
    for (const Mat<S>* m : {&primary, &secondary})
        for (long i = 0; i < m->rows(); ++i)
            for (long j = 0; j < m->cols(); ++j)
                if (!FieldOps<B>::is_zero(s::part1(m->at(i, j)))) return m->at(i, j);
    return primary.sample();
}

// Doubling over the degree-one base: x = x0 + w x1 with w^2 = cross.
// Linear rows M x map to [[M0, c M1],[M1, M0]]; semilinear rows
// M sigma(x) map to [[M0, -c M1],[M1, -M0]]. Degree-one scalars pass
// through unchanged.
template <class S>
Mat<typename PhiScalar<S>::Base> doubled_matrix(const Mat<S>& m,
                                                const typename PhiScalar<S>::Base& cross,
                                                bool semilinear) {
    using s = PhiScalar<S>;
    using B = typename s::Base;
    const B like = s::part0(m.sample());
    if constexpr (s::degree == 1) {
        Mat<B> out = Mat<B>::zero(m.rows(), m.cols(), like);
        for (long i = 0; i < m.rows(); ++i)
            for (long j = 0; j < m.cols(); ++j) out.at(i, j) = s::part0(m.at(i, j));
        return out;
    } else {
        const B zero = FieldOps<B>::zero(like);
        Mat<B> out = Mat<B>::zero(2 * m.rows(), 2 * m.cols(), like);
        for (long i = 0; i < m.rows(); ++i)
            for (long j = 0; j < m.cols(); ++j) {
                B a = s::part0(m.at(i, j));
                B b = s::part1(m.at(i, j));
                out.at(i, j) = a;
                out.at(i, m.cols() + j) = semilinear ? zero - cross * b : cross * b;
                out.at(m.rows() + i, j) = b;
                out.at(m.rows() + i, m.cols() + j) = semilinear ? zero - a : a;
            }
        return out;
    }
}

template <class S>
Mat<typename PhiScalar<S>::Base> vstack_base(
    const std::vector<Mat<typename PhiScalar<S>::Base>>& blocks) {
    using B = typename PhiScalar<S>::Base;
    long rows = 0;
    long cols = blocks.front().cols();
    for (const auto& b : blocks) rows += b.rows();
    Mat<B> out = Mat<B>::zero(rows, cols, blocks.front().sample());
    long r = 0;
    for (const auto& b : blocks) {
        for (long i = 0; i < b.rows(); ++i)
            for (long j = 0; j < cols; ++j) out.at(r + i, j) = b.at(i, j);
        r += b.rows();
    }
    return out;
}

// Solve mono(x) = 0, pi(x) = 1, frob(sigma x) = p^{n+1} x over the doubled
// base. Returns the solution and whether it is unique; nullopt when the
// system is inconsistent.
template <class S>
std::optional<Vec<S>> solve_phi_splitting(const FilteredPhiNModule<S>& e, const Mat<S>& pi,
                                          long n, bool& unique) {
    using s = PhiScalar<S>;
    using B = typename s::Base;
    const S likeS = field_witness(e.frob(), e.fil().front().basis);
    const B cross = s::cross(likeS);
    const B likeB = s::part0(likeS);
    long d = e.dim();

    Mat<B> mono_d = doubled_matrix(e.mono(), cross, false);
    Mat<B> pi_d = doubled_matrix(pi, cross, false);
    Mat<B> frob_d = doubled_matrix(e.frob(), cross, true);
    Mat<B> id_d = doubled_matrix(Mat<S>::identity(d, likeS), cross, false);
    B scale = int_power_scalar(likeB, e.prime(), n + 1);
    Mat<B> eig = frob_d - scale * id_d;

    Mat<B> big = vstack_base<S>({mono_d, pi_d, eig});
    Vec<B> rhs(static_cast<size_t>(big.rows()), FieldOps<B>::zero(likeB));
    rhs[static_cast<size_t>(mono_d.rows())] = FieldOps<B>::one(likeB);

    unique = kernel(big).empty();
    std::optional<Vec<B>> sol = solve(big, rhs);
    if (!sol) return std::nullopt;
    Vec<S> out;
    out.reserve(static_cast<size_t>(d));
    for (long i = 0; i < d; ++i) {
        B hi = s::degree == 1 ? FieldOps<B>::zero(likeB)
                              : (*sol)[static_cast<size_t>(d + i)];
        out.push_back(s::combine((*sol)[static_cast<size_t>(i)], hi, likeS));
    }
    return out;
}

} // namespace detail

struct ValidationReport {
    bool ok;
    std::vector<std::string> violations;
};

// Report-style axiom check: invertible frobenius, the monodromy relation
// N phi = p phi N, and an exhaustive separated strictly decreasing
// filtration made of honest bases.
template <class S>
ValidationReport validate(const FilteredPhiNModule<S>& d) {
    ValidationReport rep{true, {}};
    auto flag = [&rep](std::string msg) {
        rep.ok = false;
        rep.violations.push_back(std::move(msg));
    };

    if (FieldOps<S>::is_zero(det(d.frob()))) flag("frobenius is not invertible");

    const S like = d.frob().sample();
    Mat<S> lhs = d.mono() * d.frob();
    Mat<S> rhs = FieldOps<S>::from_int(like, d.prime()) * (d.frob() * sigma_mat(d.mono()));
    if (!detail::mat_diff_zero(lhs, rhs)) flag("monodromy does not intertwine frobenius with weight one");

    const auto& fil = d.fil();
    if (rank(fil.front().basis) != d.dim()) flag("filtration is not exhaustive");
    if (fil.back().basis.cols() != 0) flag("filtration is not separated");
    for (size_t k = 0; k < fil.size(); ++k) {
        if (rank(fil[k].basis) != fil[k].basis.cols())
            flag("filtration step at jump " + std::to_string(fil[k].jump) + " is not a basis");
        if (k > 0) {
            long prev = rank(fil[k - 1].basis);
            if (fil[k].basis.cols() >= fil[k - 1].basis.cols())
                flag("filtration does not decrease at jump " + std::to_string(fil[k].jump));
            else if (rank(detail::hstack(fil[k - 1].basis, fil[k].basis)) != prev)
                flag("filtration is not nested at jump " + std::to_string(fil[k].jump));
        }
    }
    return rep;
}

// Twist: scale frobenius by p^j and shift every filtration jump by j, so
// Fil^i of the twist equals Fil^{i-j} of the original.
template <class S>
FilteredPhiNModule<S> tate_twist(const FilteredPhiNModule<S>& d, long j) {
    const S like = d.frob().sample();
    S scale = detail::int_power_scalar(like, d.prime(), j);
    std::vector<FilStep<S>> fil = d.fil();
    for (auto& step : fil) step.jump += j;
    return FilteredPhiNModule<S>(d.prime(), scale * d.frob(), d.mono(), std::move(fil));
}

// Dieudonne-Manin slopes: Newton polygon of the linearized power
// frob^degree, each slope divided by the degree, with multiplicity the
// horizontal run. Ascending order.
template <class S>
std::vector<mpq_class> slopes(const FilteredPhiNModule<S>& d) {
    constexpr long r = PhiScalar<S>::degree;
    for (long i = 0; i < d.dim(); ++i)
        for (long j = 0; j < d.dim(); ++j) PhiScalar<S>::check_model(d.frob().at(i, j), d.prime());

    Mat<S> lin = d.frob();
    Mat<S> cur = d.frob();
    for (long i = 1; i < r; ++i) {
        cur = sigma_mat(cur);
        lin = lin * cur;
    }
    std::vector<S> cp = charpoly(lin);
    long n = d.dim();
    if (FieldOps<S>::is_zero(cp[0])) throw SingularMatrix("slopes: frobenius is singular");

    std::vector<std::pair<long, long>> pts;
    for (long k = 0; k <= n; ++k) {
        long v = PhiScalar<S>::val(cp[static_cast<size_t>(n - k)], d.prime());
        if (v < VAL_INF) pts.push_back({k, v});
    }
    std::vector<std::pair<long, long>> hull;
    for (const auto& pt : pts) {
        while (hull.size() >= 2) {
            const auto& a = hull[hull.size() - 2];
            const auto& b = hull.back();
            long turn = (b.first - a.first) * (pt.second - a.second) -
                        (b.second - a.second) * (pt.first - a.first);
            if (turn <= 0) hull.pop_back();
            else break;
        }
        hull.push_back(pt);
    }
    std::vector<mpq_class> out;
    for (size_t i = 0; i + 1 < hull.size(); ++i) {
        long run = hull[i + 1].first - hull[i].first;
        mpq_class slope(hull[i + 1].second - hull[i].second, run * r);
        slope.canonicalize();
        for (long k = 0; k < run; ++k) out.push_back(slope);
    }
    return out;
}

// The correspondence hypothesis: the monodromy restricts to an isomorphism
// from the slope-(n+1) component onto the slope-n component. Certified by
// its computable consequences: the two components have equal dimensions,
// and no nonzero frobenius eigenvector of weight n+1 dies under the
// monodromy.
template <class S>
void check_extension_hypothesis(const FilteredPhiNModule<S>& d, long n) {
    std::vector<mpq_class> sl = slopes(d);
    long lo = static_cast<long>(std::count(sl.begin(), sl.end(), mpq_class(n)));
    long hi = static_cast<long>(std::count(sl.begin(), sl.end(), mpq_class(n + 1)));
    if (lo != hi)
        throw HypothesisViolation("the slope components of weight n and n+1 have different sizes");

    using s = PhiScalar<S>;
    using B = typename s::Base;
    const S likeS = detail::field_witness(d.frob(), d.mono());
    const B cross = s::cross(likeS);
    const B likeB = s::part0(likeS);
    Mat<B> mono_d = detail::doubled_matrix(d.mono(), cross, false);
    Mat<B> frob_d = detail::doubled_matrix(d.frob(), cross, true);
    Mat<B> id_d = detail::doubled_matrix(Mat<S>::identity(d.dim(), likeS), cross, false);
    B scale = detail::int_power_scalar(likeB, d.prime(), n + 1);
    Mat<B> big = detail::vstack_base<S>({mono_d, frob_d - scale * id_d});
    if (!kernel(big).empty())
        throw HypothesisViolation("the monodromy kills a frobenius eigenvector of weight n+1");
}

// Canonical coset representative modulo Fil^j: zero out the pivot
// coordinates of the subspace, fixed pivot order.
template <class S>
Vec<S> reduce_mod_fil(const FilteredPhiNModule<S>& d, long j, Vec<S> v) {
    if (static_cast<long>(v.size()) != d.dim())
        throw ConfigError("reduce_mod_fil: dimension mismatch");
    Mat<S> w = d.fil_at(j);
    if (w.cols() == 0) return v;
    Mat<S> rows = w.transpose();
    std::vector<long> pivots = rref(rows);
    for (size_t r = 0; r < pivots.size(); ++r) {
        S c = v[static_cast<size_t>(pivots[r])];
        if (FieldOps<S>::is_zero(c)) continue;
        for (long i = 0; i < d.dim(); ++i)
            v[static_cast<size_t>(i)] = v[static_cast<size_t>(i)] - c * rows.at(static_cast<long>(r), i);
    }
    return v;
}

template <class S>
struct Extension {
    FilteredPhiNModule<S> total;
    Mat<S> incl;
    Mat<S> proj;
};

template <class S>
struct ExtClass {
    FilteredPhiNModule<S> base;
    long n;
    Vec<S> rep;
};

// Build the extension attached to a coset representative d: the underlying
// module is the direct sum with a rank-one piece of weight n+1, and the
// filtration in degree j consists of the pairs (x, t) with t free through
// degree n+1 and x + t d constrained to Fil^j of the base.
template <class S>
Extension<S> extension_from_class(const FilteredPhiNModule<S>& d, const Vec<S>& rep, long n) {
    if (static_cast<long>(rep.size()) != d.dim())
        throw ConfigError("extension_from_class: representative dimension mismatch");
    check_extension_hypothesis(d, n);

    const S like = d.frob().sample();
    const S one = FieldOps<S>::one(like);
    long dd = d.dim();

    Mat<S> frob = Mat<S>::zero(dd + 1, dd + 1, like);
    Mat<S> mono = Mat<S>::zero(dd + 1, dd + 1, like);
    for (long i = 0; i < dd; ++i)
        for (long j = 0; j < dd; ++j) {
            frob.at(i, j) = d.frob().at(i, j);
            mono.at(i, j) = d.mono().at(i, j);
        }
    frob.at(dd, dd) = detail::int_power_scalar(like, d.prime(), n + 1);

    std::vector<long> jumps;
    for (const auto& step : d.fil()) jumps.push_back(step.jump);
    if (std::find(jumps.begin(), jumps.end(), n + 2) == jumps.end()) jumps.push_back(n + 2);
    std::sort(jumps.begin(), jumps.end());

    std::vector<FilStep<S>> fil;
    for (long j : jumps) {
        Mat<S> base = d.fil_at(j);
        bool with_line = j <= n + 1;
        Mat<S> lifted = Mat<S>::zero(dd + 1, base.cols() + (with_line ? 1 : 0), like);
        for (long i = 0; i < dd; ++i)
            for (long c = 0; c < base.cols(); ++c) lifted.at(i, c) = base.at(i, c);
        if (with_line) {
            for (long i = 0; i < dd; ++i)
                lifted.at(i, base.cols()) = FieldOps<S>::zero(like) - rep[static_cast<size_t>(i)];
            lifted.at(dd, base.cols()) = one;
        }
        fil.push_back(FilStep<S>{j, std::move(lifted)});
    }

    Mat<S> incl = Mat<S>::zero(dd + 1, dd, like);
    for (long i = 0; i < dd; ++i) incl.at(i, i) = one;
    Mat<S> proj = Mat<S>::zero(1, dd + 1, like);
    proj.at(0, dd) = one;

    return Extension<S>{FilteredPhiNModule<S>(d.prime(), std::move(frob), std::move(mono),
                                              std::move(fil)),
                        std::move(incl), std::move(proj)};
}

// Recover the class of an extension: s1 is the unique vector fixed by
// p^{-(n+1)} frob, killed by the monodromy, and projecting to 1; s2 is any
// vector of Fil^{n+1} projecting to 1. Their difference descends to the
// base and is reduced to the canonical coset representative.
template <class S>
ExtClass<S> class_from_extension(const FilteredPhiNModule<S>& d, const Extension<S>& xt,
                                 long n) {
    check_extension_hypothesis(d, n);
    const FilteredPhiNModule<S>& e = xt.total;
    if (e.dim() != d.dim() + 1)
        throw ConfigError("class_from_extension: total dimension mismatch");

    bool unique = false;
    std::optional<Vec<S>> s1 = detail::solve_phi_splitting(e, xt.proj, n, unique);
    if (!s1)
        throw HypothesisViolation("no frobenius-compatible splitting exists");
    if (!unique)
        throw HypothesisViolation("the frobenius-compatible splitting is not unique");

    const S like = e.frob().sample();
    Mat<S> basis = e.fil_at(n + 1);
    if (basis.cols() == 0)
        throw HypothesisViolation("the filtration does not surject onto the quotient line");
    Mat<S> proj_basis = xt.proj * basis;
    Vec<S> one_vec{FieldOps<S>::one(like)};
    std::optional<Vec<S>> coeff = solve(proj_basis, one_vec);
    if (!coeff)
        throw HypothesisViolation("the filtration does not surject onto the quotient line");
    Vec<S> s2 = basis * *coeff;

    Vec<S> diff;
    diff.reserve(s1->size());
    for (size_t i = 0; i < s1->size(); ++i) diff.push_back((*s1)[i] - s2[i]);
    std::optional<Vec<S>> pulled = solve(xt.incl, diff);
    if (!pulled)
        throw HypothesisViolation("the splitting difference does not descend to the base");

    return ExtClass<S>{d, n, reduce_mod_fil(d, n + 1, *pulled)};
}

// Stalk of the rank-four matrix isocrystal at a torus point: matrices
// flattened row-major, frobenius B -> sigma(B) K for the integral kernel
// K = [[0,-p],[-1,0]], trivial monodromy, filtration full, then the
// two-dimensional span of the matrices whose columns are multiples of the
// eigencolumn (z0, 1), then zero.
inline FilteredPhiNModule<Qp2> matrix_stalk(const Qp2& z0, const PadicContext& ctx) {
    if (z0.im().is_zero())
        throw HypothesisViolation("matrix_stalk: the torus point must not be rational");
    const Qp2 zero = ctx.zero2();
    const Qp2 one = ctx.q2(1);
    const Qp2 mp = ctx.q2(-ctx.p);
    const Qp2 mone = ctx.q2(-1);

    Mat<Qp2> frob = Mat<Qp2>::zero(4, 4, zero);
    frob.at(0, 1) = mone;
    frob.at(1, 0) = mp;
    frob.at(2, 3) = mone;
    frob.at(3, 2) = mp;
    Mat<Qp2> mono = Mat<Qp2>::zero(4, 4, zero);

    Mat<Qp2> v1 = Mat<Qp2>::zero(4, 2, zero);
    v1.at(0, 0) = z0;
    v1.at(2, 0) = one;
    v1.at(1, 1) = z0;
    v1.at(3, 1) = one;

    std::vector<FilStep<Qp2>> fil;
    fil.push_back(FilStep<Qp2>{0, Mat<Qp2>::identity(4, zero)});
    fil.push_back(FilStep<Qp2>{1, std::move(v1)});
    fil.push_back(FilStep<Qp2>{2, Mat<Qp2>::zero(4, 0, zero)});

    return FilteredPhiNModule<Qp2>(ctx.p, std::move(frob), std::move(mono), std::move(fil));
}

} // namespace treeforms
