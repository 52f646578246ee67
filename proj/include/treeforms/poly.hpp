#pragma once

// Dense univariate polynomials over an abstract field scalar, coefficients
// stored low degree first. Degree is structural (trailing entries may be
// capped zeros for p-adic scalars); trim() is only meaningful for exact
// coefficient types.

#include <vector>

#include "treeforms/errors.hpp"
#include "treeforms/linalg.hpp"

namespace treeforms {

template <class K>
class Poly {
public:
    Poly() = default;
    explicit Poly(std::vector<K> coeffs) : c_(std::move(coeffs)) {}
    explicit Poly(const K& c0) : c_{c0} {}

    static Poly zero(const K& like) { return Poly(std::vector<K>{FieldOps<K>::zero(like)}); }
    // The monomial c * x^k.
    static Poly monomial(const K& c, long k) {
        std::vector<K> v(static_cast<size_t>(k) + 1, FieldOps<K>::zero(c));
        v.back() = c;
        return Poly(std::move(v));
    }

    long degree() const { return static_cast<long>(c_.size()) - 1; }
    bool empty() const { return c_.empty(); }
    const std::vector<K>& coeffs() const { return c_; }

    const K& operator[](long i) const {
        if (i < 0 || i >= static_cast<long>(c_.size())) throw IndexOutOfRange("Poly::[]");
        return c_[static_cast<size_t>(i)];
    }
    K& operator[](long i) { return const_cast<K&>(static_cast<const Poly*>(this)->operator[](i)); }

    // Coefficient of x^i, zero beyond the stored degree.
    K coeff_or_zero(long i) const {
        if (i >= 0 && i < static_cast<long>(c_.size())) return c_[static_cast<size_t>(i)];
        return FieldOps<K>::zero(sample());
    }

    const K& sample() const {
        if (c_.empty()) throw ConfigError("Poly::sample: empty polynomial");
        return c_[0];
    }

    // Equality up to trailing zero coefficients.
    friend bool operator==(const Poly& a, const Poly& b) {
        size_t top = std::max(a.c_.size(), b.c_.size());
        for (size_t i = 0; i < top; ++i) {
            if (i < a.c_.size() && i < b.c_.size()) {
                if (!(a.c_[i] == b.c_[i])) return false;
            } else if (i < a.c_.size()) {
                if (!FieldOps<K>::is_zero(a.c_[i])) return false;
            } else {
                if (!FieldOps<K>::is_zero(b.c_[i])) return false;
            }
        }
        return true;
    }
    friend bool operator!=(const Poly& a, const Poly& b) { return !(a == b); }

    friend Poly operator+(const Poly& a, const Poly& b) {
        const K like = a.empty() ? b.sample() : a.sample();
        std::vector<K> out(std::max(a.c_.size(), b.c_.size()), FieldOps<K>::zero(like));
        for (size_t i = 0; i < out.size(); ++i) {
            if (i < a.c_.size()) out[i] = out[i] + a.c_[i];
            if (i < b.c_.size()) out[i] = out[i] + b.c_[i];
        }
        return Poly(std::move(out));
    }
    friend Poly operator-(const Poly& a, const Poly& b) { return a + (-b); }
    Poly operator-() const {
        Poly out = *this;
        for (auto& x : out.c_) x = FieldOps<K>::zero(x) - x;
        return out;
    }

    friend Poly operator*(const Poly& a, const Poly& b) {
        if (a.empty() || b.empty()) throw ConfigError("Poly: product with empty polynomial");
        std::vector<K> out(a.c_.size() + b.c_.size() - 1, FieldOps<K>::zero(a.sample()));
        for (size_t i = 0; i < a.c_.size(); ++i) {
            if (FieldOps<K>::is_zero(a.c_[i])) continue;
            for (size_t j = 0; j < b.c_.size(); ++j)
                out[i + j] = out[i + j] + a.c_[i] * b.c_[j];
        }
        return Poly(std::move(out));
    }
    friend Poly operator*(const K& s, const Poly& a) {
        Poly out = a;
        for (auto& x : out.c_) x = s * x;
        return out;
    }

    Poly pow(long e) const {
        if (e < 0) throw ConfigError("Poly::pow: negative exponent");
        Poly acc(FieldOps<K>::one(sample()));
        Poly base = *this;
        while (e > 0) {
            if (e & 1) acc = acc * base;
            base = base * base;
            e >>= 1;
        }
        return acc;
    }

    K eval(const K& x) const {
        if (c_.empty()) throw ConfigError("Poly::eval: empty polynomial");
        K acc = c_.back();
        for (long i = degree() - 1; i >= 0; --i) acc = acc * x + c_[static_cast<size_t>(i)];
        return acc;
    }

    Poly derivative() const {
        if (c_.size() <= 1) return zero(sample());
        std::vector<K> out;
        out.reserve(c_.size() - 1);
        for (size_t i = 1; i < c_.size(); ++i)
            out.push_back(FieldOps<K>::from_int(c_[i], static_cast<long>(i)) * c_[i]);
        return Poly(std::move(out));
    }

    // Substitute x <- inner(x).
    Poly compose(const Poly& inner) const {
        Poly acc(FieldOps<K>::zero(sample()));
        for (long i = degree(); i >= 0; --i)
            acc = acc * inner + Poly(c_[static_cast<size_t>(i)]);
        return acc;
    }

    // Drop exact trailing zeros (exact scalar types only).
    Poly trim() const {
        std::vector<K> out = c_;
        while (out.size() > 1 && FieldOps<K>::is_zero(out.back())) out.pop_back();
        return Poly(std::move(out));
    }

private:
    std::vector<K> c_;
};

} // namespace treeforms
