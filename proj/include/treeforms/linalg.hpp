#pragma once

// Dense linear algebra over an abstract field scalar. Exact scalars
// (mpq_class, QuadRat) pivot on any nonzero entry; capped p-adic scalars
// pivot on the provably-nonzero entry of smallest valuation. Constants
// (0, 1, integers) are fabricated through FieldOps so capped types can
// inherit prime/precision from a neighbouring element.

#include <gmpxx.h>

#include <optional>
#include <vector>

#include "treeforms/errors.hpp"
#include "treeforms/padic.hpp"
#include "treeforms/quadfield.hpp"

namespace treeforms {

namespace detail {
inline mpq_class unit_fraction(long n) {
    if (n == 0) throw DivisionByZero("unit_fraction: zero denominator");
    mpq_class q(1, n);
    q.canonicalize();
    return q;
}
} // namespace detail

template <class K>
struct FieldOps;

template <>
struct FieldOps<mpq_class> {
    static mpq_class zero(const mpq_class&) { return mpq_class(0); }
    static mpq_class one(const mpq_class&) { return mpq_class(1); }
    static mpq_class from_int(const mpq_class&, long n) { return mpq_class(n); }
    static bool is_zero(const mpq_class& x) { return x == 0; }
    static mpq_class inv(const mpq_class& x) {
        if (x == 0) throw DivisionByZero("FieldOps<mpq>: inverse of zero");
        return mpq_class(1) / x;
    }
    static mpq_class div_int(const mpq_class& x, long n) { return x / mpq_class(n); }
    // Pivot preference: all nonzero entries are equally good.
    static long pivot_score(const mpq_class& x) { return x == 0 ? VAL_INF : 0; }
};

template <>
struct FieldOps<QuadRat> {
    static QuadRat zero(const QuadRat&) { return QuadRat(0); }
    static QuadRat one(const QuadRat&) { return QuadRat(1); }
    static QuadRat from_int(const QuadRat&, long n) { return QuadRat(n); }
    static bool is_zero(const QuadRat& x) { return x.is_zero(); }
    static QuadRat inv(const QuadRat& x) { return x.inv(); }
    static QuadRat div_int(const QuadRat& x, long n) { return x * QuadRat(detail::unit_fraction(n)); }
    static long pivot_score(const QuadRat& x) { return x.is_zero() ? VAL_INF : 0; }
};

template <>
struct FieldOps<Qp> {
    static Qp zero(const Qp& like) { return Qp::exact_zero(like.prime()); }
    static Qp one(const Qp& like) {
        return Qp::from_int(like.prime(), 1, fab_prec(like));
    }
    static Qp from_int(const Qp& like, long n) {
        return Qp::from_int(like.prime(), n, fab_prec(like));
    }
    static bool is_zero(const Qp& x) { return x.is_zero(); }
    static Qp inv(const Qp& x) { return x.inv(); }
    static Qp div_int(const Qp& x, long n) { return x.mul_rational(detail::unit_fraction(n)); }
    static long pivot_score(const Qp& x) { return x.is_zero() ? VAL_INF : x.val(); }
    static long fab_prec(const Qp& like) {
        return like.relprec() > 0 ? like.relprec() : 64;
    }
};

template <>
struct FieldOps<Qp2> {
    static Qp2 zero(const Qp2& like) { return Qp2::exact_zero(like.prime(), like.rparam()); }
    static Qp2 one(const Qp2& like) { return from_int(like, 1); }
    static Qp2 from_int(const Qp2& like, long n) {
        return Qp2::from_rationals(like.prime(), like.rparam(), mpq_class(n), mpq_class(0),
                                   fab_prec(like));
    }
    static bool is_zero(const Qp2& x) { return x.is_zero(); }
    static Qp2 inv(const Qp2& x) { return x.inv(); }
    static Qp2 div_int(const Qp2& x, long n) { return x.mul_rational(detail::unit_fraction(n)); }
    static long pivot_score(const Qp2& x) { return x.is_zero() ? VAL_INF : x.val(); }
    static long fab_prec(const Qp2& like) {
        long rel = std::max(like.re().relprec(), like.im().relprec());
        return rel > 0 ? rel : 64;
    }
};

template <class K>
using Vec = std::vector<K>;

template <class K>
class Mat {
public:
    Mat() : rows_(0), cols_(0) {}
    Mat(long rows, long cols, const K& fill)
        : rows_(rows), cols_(cols), data_(static_cast<size_t>(rows * cols), fill) {}
    Mat(std::vector<std::vector<K>> rows) {
        rows_ = static_cast<long>(rows.size());
        cols_ = rows_ ? static_cast<long>(rows[0].size()) : 0;
        for (auto& r : rows) {
            if (static_cast<long>(r.size()) != cols_)
                throw ConfigError("Mat: ragged rows");
            for (auto& x : r) data_.push_back(std::move(x));
        }
    }

    static Mat zero(long rows, long cols, const K& like) {
        return Mat(rows, cols, FieldOps<K>::zero(like));
    }
    static Mat identity(long n, const K& like) {
        Mat m = zero(n, n, like);
        for (long i = 0; i < n; ++i) m.at(i, i) = FieldOps<K>::one(like);
        return m;
    }

    long rows() const { return rows_; }
    long cols() const { return cols_; }

    K& at(long i, long j) {
        if (i < 0 || i >= rows_ || j < 0 || j >= cols_)
            throw IndexOutOfRange("Mat::at");
        return data_[static_cast<size_t>(i * cols_ + j)];
    }
    const K& at(long i, long j) const { return const_cast<Mat*>(this)->at(i, j); }

    const K& sample() const {
        if (data_.empty()) throw ConfigError("Mat::sample: empty matrix");
        return data_[0];
    }

    Mat transpose() const {
        Mat t(cols_, rows_, data_.empty() ? K() : data_[0]);
        for (long i = 0; i < rows_; ++i)
            for (long j = 0; j < cols_; ++j) t.at(j, i) = at(i, j);
        return t;
    }

    friend Mat operator+(const Mat& a, const Mat& b) {
        a.shape_check(b);
        Mat out = a;
        for (size_t i = 0; i < out.data_.size(); ++i) out.data_[i] = out.data_[i] + b.data_[i];
        return out;
    }
    friend Mat operator-(const Mat& a, const Mat& b) {
        a.shape_check(b);
        Mat out = a;
        for (size_t i = 0; i < out.data_.size(); ++i) out.data_[i] = out.data_[i] - b.data_[i];
        return out;
    }
    friend Mat operator*(const Mat& a, const Mat& b) {
        if (a.cols_ != b.rows_) throw ConfigError("Mat: size mismatch in product");
        Mat out = zero(a.rows_, b.cols_, a.sample());
        for (long i = 0; i < a.rows_; ++i)
            for (long k = 0; k < a.cols_; ++k) {
                const K& aik = a.at(i, k);
                if (FieldOps<K>::is_zero(aik)) continue;
                for (long j = 0; j < b.cols_; ++j)
                    out.at(i, j) = out.at(i, j) + aik * b.at(k, j);
            }
        return out;
    }
    friend Mat operator*(const K& c, const Mat& a) {
        Mat out = a;
        for (auto& x : out.data_) x = c * x;
        return out;
    }
    friend Vec<K> operator*(const Mat& a, const Vec<K>& v) {
        if (a.cols_ != static_cast<long>(v.size()))
            throw ConfigError("Mat: size mismatch in matrix-vector product");
        Vec<K> out(static_cast<size_t>(a.rows_), FieldOps<K>::zero(a.sample()));
        for (long i = 0; i < a.rows_; ++i)
            for (long j = 0; j < a.cols_; ++j)
                out[static_cast<size_t>(i)] = out[static_cast<size_t>(i)] + a.at(i, j) * v[static_cast<size_t>(j)];
        return out;
    }

    friend bool operator==(const Mat& a, const Mat& b) {
        if (a.rows_ != b.rows_ || a.cols_ != b.cols_) return false;
        for (size_t i = 0; i < a.data_.size(); ++i)
            if (!(a.data_[i] == b.data_[i])) return false;
        return true;
    }
    friend bool operator!=(const Mat& a, const Mat& b) { return !(a == b); }

    K trace() const {
        if (rows_ != cols_) throw ConfigError("Mat::trace: not square");
        K t = FieldOps<K>::zero(sample());
        for (long i = 0; i < rows_; ++i) t = t + at(i, i);
        return t;
    }

private:
    void shape_check(const Mat& b) const {
        if (rows_ != b.rows_ || cols_ != b.cols_)
            throw ConfigError("Mat: shape mismatch");
    }

    long rows_, cols_;
    std::vector<K> data_;
};

// Row-reduce in place; returns the pivot column of each pivot row.
// An augmented matrix (same row count) receives the same row operations.
template <class K>
std::vector<long> rref(Mat<K>& a, Mat<K>* aug = nullptr) {
    std::vector<long> pivots;
    long row = 0;
    for (long col = 0; col < a.cols() && row < a.rows(); ++col) {
        long best = -1;
        long best_score = VAL_INF;
        for (long i = row; i < a.rows(); ++i) {
            long s = FieldOps<K>::pivot_score(a.at(i, col));
            if (s < best_score) {
                best_score = s;
                best = i;
            }
        }
        if (best < 0 || best_score == VAL_INF) continue;
        if (best != row) {
            for (long j = 0; j < a.cols(); ++j) std::swap(a.at(row, j), a.at(best, j));
            if (aug)
                for (long j = 0; j < aug->cols(); ++j) std::swap(aug->at(row, j), aug->at(best, j));
        }
        K piv_inv = FieldOps<K>::inv(a.at(row, col));
        for (long j = 0; j < a.cols(); ++j) a.at(row, j) = piv_inv * a.at(row, j);
        if (aug)
            for (long j = 0; j < aug->cols(); ++j) aug->at(row, j) = piv_inv * aug->at(row, j);
        for (long i = 0; i < a.rows(); ++i) {
            if (i == row) continue;
            K c = a.at(i, col);
            if (FieldOps<K>::is_zero(c)) continue;
            for (long j = 0; j < a.cols(); ++j) a.at(i, j) = a.at(i, j) - c * a.at(row, j);
            if (aug)
                for (long j = 0; j < aug->cols(); ++j)
                    aug->at(i, j) = aug->at(i, j) - c * aug->at(row, j);
        }
        pivots.push_back(col);
        ++row;
    }
    return pivots;
}

template <class K>
long rank(Mat<K> a) {
    return static_cast<long>(rref(a).size());
}

// Basis of the right kernel, one Vec per basis vector.
template <class K>
std::vector<Vec<K>> kernel(Mat<K> a) {
    const K like = a.sample();
    std::vector<long> pivots = rref(a);
    std::vector<bool> is_pivot(static_cast<size_t>(a.cols()), false);
    for (long c : pivots) is_pivot[static_cast<size_t>(c)] = true;
    std::vector<Vec<K>> basis;
    for (long free = 0; free < a.cols(); ++free) {
        if (is_pivot[static_cast<size_t>(free)]) continue;
        Vec<K> v(static_cast<size_t>(a.cols()), FieldOps<K>::zero(like));
        v[static_cast<size_t>(free)] = FieldOps<K>::one(like);
        for (size_t r = 0; r < pivots.size(); ++r)
            v[static_cast<size_t>(pivots[r])] =
                FieldOps<K>::zero(like) - a.at(static_cast<long>(r), free);
        basis.push_back(std::move(v));
    }
    return basis;
}

// One solution of A x = b, or nullopt when inconsistent.
template <class K>
std::optional<Vec<K>> solve(Mat<K> a, const Vec<K>& b) {
    const K like = a.sample();
    Mat<K> rhs(a.rows(), 1, FieldOps<K>::zero(like));
    for (long i = 0; i < a.rows(); ++i) rhs.at(i, 0) = b[static_cast<size_t>(i)];
    std::vector<long> pivots = rref(a, &rhs);
    for (long i = static_cast<long>(pivots.size()); i < a.rows(); ++i)
        if (!FieldOps<K>::is_zero(rhs.at(i, 0))) return std::nullopt;
    Vec<K> x(static_cast<size_t>(a.cols()), FieldOps<K>::zero(like));
    for (size_t r = 0; r < pivots.size(); ++r)
        x[static_cast<size_t>(pivots[r])] = rhs.at(static_cast<long>(r), 0);
    return x;
}

template <class K>
Mat<K> inverse(const Mat<K>& a) {
    if (a.rows() != a.cols()) throw ConfigError("inverse: not square");
    Mat<K> work = a;
    Mat<K> aug = Mat<K>::identity(a.rows(), a.sample());
    std::vector<long> pivots = rref(work, &aug);
    if (static_cast<long>(pivots.size()) != a.rows())
        throw SingularMatrix("inverse: matrix is singular");
    return aug;
}

template <class K>
K det(Mat<K> a) {
    if (a.rows() != a.cols()) throw ConfigError("det: not square");
    const K like = a.sample();
    K d = FieldOps<K>::one(like);
    long row = 0;
    for (long col = 0; col < a.cols() && row < a.rows(); ++col) {
        long best = -1, best_score = VAL_INF;
        for (long i = row; i < a.rows(); ++i) {
            long s = FieldOps<K>::pivot_score(a.at(i, col));
            if (s < best_score) { best_score = s; best = i; }
        }
        if (best < 0 || best_score == VAL_INF) return FieldOps<K>::zero(like);
        if (best != row) {
            for (long j = 0; j < a.cols(); ++j) std::swap(a.at(row, j), a.at(best, j));
            d = FieldOps<K>::zero(like) - d;
        }
        K piv = a.at(row, col);
        d = d * piv;
        K piv_inv = FieldOps<K>::inv(piv);
        for (long i = row + 1; i < a.rows(); ++i) {
            K c = a.at(i, col) * piv_inv;
            if (FieldOps<K>::is_zero(c)) continue;
            for (long j = col; j < a.cols(); ++j) a.at(i, j) = a.at(i, j) - c * a.at(row, j);
        }
        ++row;
    }
    return d;
}

// Characteristic polynomial, monic, returned as coefficients
// [c_0, c_1, ..., c_{n-1}, 1] with charpoly(x) = sum c_i x^i + x^n.
// Faddeev-LeVerrier: division only by the integers 1..n.
template <class K>
std::vector<K> charpoly(const Mat<K>& a) {
    if (a.rows() != a.cols()) throw ConfigError("charpoly: not square");
    long n = a.rows();
    const K like = a.sample();
    std::vector<K> coeff(static_cast<size_t>(n + 1), FieldOps<K>::zero(like));
    coeff[static_cast<size_t>(n)] = FieldOps<K>::one(like);
    Mat<K> m = Mat<K>::zero(n, n, like);
    K c = FieldOps<K>::one(like);
    for (long k = 1; k <= n; ++k) {
        for (long i = 0; i < n; ++i) m.at(i, i) = m.at(i, i) + c;
        m = a * m;
        c = FieldOps<K>::div_int(FieldOps<K>::zero(like) - m.trace(), k);
        coeff[static_cast<size_t>(n - k)] = c;
    }
    return coeff;
}

} // namespace treeforms
