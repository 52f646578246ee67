#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <set>

#include "treeforms/quaternion.hpp"

using namespace treeforms;

namespace {

Quat random_quat(std::mt19937& rng) {
    std::uniform_int_distribution<long> num(-9, 9), den(1, 4);
    auto pick = [&] {
        mpq_class q(num(rng), den(rng));
        q.canonicalize();
        return q;
    };
    return Quat(pick(), pick(), pick(), pick());
}

bool is_scalar_matrix(const Mat<QuadRat>& m, const QuadRat& s) {
    return m.at(0, 0) == s && m.at(1, 1) == s && m.at(0, 1).is_zero() &&
           m.at(1, 0).is_zero();
}

} // namespace

TEST_CASE("hilbert symbols locate ramification", "[quaternion]") {
    // (-1,-1) is ramified exactly at 2 and the real place.
    CHECK(hilbert_symbol(-1, -1, 0) == -1);
    CHECK(hilbert_symbol(-1, -1, 2) == -1);
    for (long p : {3L, 5L, 7L, 11L, 13L, 17L})
        CHECK(hilbert_symbol(-1, -1, p) == 1);

    // Remaining table entries: ramified exactly at {disc, infinity}.
    struct Row { long a, b, disc; };
    for (const Row& r : {Row{-1, -3, 3}, Row{-2, -5, 5}, Row{-1, -7, 7}, Row{-2, -13, 13}}) {
        CHECK(hilbert_symbol(r.a, r.b, 0) == -1);
        for (long p : {2L, 3L, 5L, 7L, 11L, 13L, 17L, 19L})
            CHECK(hilbert_symbol(r.a, r.b, p) == (p == r.disc ? -1 : 1));
    }

    // Symmetry and the (a,-a) = 1 identity.
    std::mt19937 rng(7);
    std::uniform_int_distribution<long> pick(-30, 30);
    for (int trial = 0; trial < 40; ++trial) {
        mpq_class a(pick(rng)), b(pick(rng));
        if (a == 0 || b == 0) continue;
        for (long v : {0L, 2L, 3L, 5L, 7L}) {
            CHECK(hilbert_symbol(a, b, v) == hilbert_symbol(b, a, v));
            CHECK(hilbert_symbol(a, -a, v) == 1);
            CHECK(hilbert_symbol(a, b, v) * hilbert_symbol(a, b, v) == 1);
        }
    }
    CHECK_THROWS_AS(hilbert_symbol(0, 1, 2), ConfigError);
}

TEST_CASE("quaternion arithmetic identities", "[quaternion]") {
    QuaternionAlgebra alg(-1, -1, 2);
    Quat i(0, 1, 0, 0), j(0, 0, 1, 0), k(0, 0, 0, 1);
    CHECK(alg.mul(i, i) == Quat(-1, 0, 0, 0));
    CHECK(alg.mul(j, j) == Quat(-1, 0, 0, 0));
    CHECK(alg.mul(i, j) == k);
    CHECK(alg.mul(j, i) == -k);
    CHECK(alg.mul(k, k) == Quat(-1, 0, 0, 0));

    std::mt19937 rng(11);
    for (int trial = 0; trial < 60; ++trial) {
        Quat x = random_quat(rng), y = random_quat(rng), z = random_quat(rng);
        CHECK(alg.mul(alg.mul(x, y), z) == alg.mul(x, alg.mul(y, z)));
        CHECK(alg.nrd(alg.mul(x, y)) == alg.nrd(x) * alg.nrd(y));
        CHECK(alg.conj(alg.mul(x, y)) == alg.mul(alg.conj(y), alg.conj(x)));
        CHECK(alg.trd(x) == alg.nrd(x) - alg.nrd(x - Quat::one()) + 1);
        CHECK(alg.mul(x, alg.conj(x)) == Quat(alg.nrd(x), 0, 0, 0));
    }
    // Definiteness: positive norm form.
    QuaternionAlgebra indef(2, 3, 6);
    CHECK_FALSE(indef.is_definite());
    CHECK(alg.is_definite());
}

TEST_CASE("ramification check accepts the table and rejects mismatches", "[quaternion]") {
    for (long d : {2L, 3L, 5L, 7L, 13L}) {
        auto [a, b] = algebra_params(d);
        QuaternionAlgebra alg(a, b, d);
        CHECK_NOTHROW(alg.verify_ramification());
    }
    // (-1,-1) ramifies at 2, not at 3.
    CHECK_THROWS_AS(QuaternionAlgebra(-1, -1, 3).verify_ramification(),
                    UnsupportedDiscriminant);
    CHECK_THROWS_AS(algebra_params(6), UnsupportedDiscriminant);
    CHECK_THROWS_AS(algebra_params(11), UnsupportedDiscriminant);
}

TEST_CASE("maximal orders reach the right discriminant", "[quaternion]") {
    // Lipschitz order has reduced discriminant 4; the Hurwitz closure halves it.
    QuaternionAlgebra alg(-1, -1, 2);
    Order lip(alg, {Quat::one(), Quat(0, 1, 0, 0), Quat(0, 0, 1, 0), Quat(0, 0, 0, 1)});
    CHECK(lip.reduced_disc() == 4);
    CHECK(lip.closed_under_multiplication());

    AlgebraData data = algebra_init(2, 1, 3);
    CHECK(data.max_order.reduced_disc() == 2);
    CHECK(data.max_order.closed_under_multiplication());
    // The Hurwitz order: contains i, j, and (1+i+j+k)/2.
    CHECK(data.max_order.contains(Quat(0, 1, 0, 0)));
    CHECK(data.max_order.contains(Quat(0, 0, 1, 0)));
    CHECK(data.max_order.contains(
        Quat(mpq_class(1, 2), mpq_class(1, 2), mpq_class(1, 2), mpq_class(1, 2))));
    CHECK_FALSE(data.max_order.contains(Quat(mpq_class(1, 2), 0, 0, 0)));

    for (long d : {3L, 5L, 7L, 13L}) {
        AlgebraData o = algebra_init(d, 1, d == 3 ? 5 : 3);
        CHECK(o.max_order.reduced_disc() == d);
        CHECK(o.max_order.closed_under_multiplication());
    }
}

TEST_CASE("unit counts match the class-number-one masses", "[quaternion]") {
    // |O^x| for the definite table algebras: 24, 12, 6, 4, 2.
    struct Row { long disc, p, units; };
    for (const Row& r : {Row{2, 3, 24}, Row{3, 5, 12}, Row{5, 3, 6}, Row{7, 3, 4},
                         Row{13, 3, 2}}) {
        AlgebraData data = algebra_init(r.disc, 1, r.p);
        std::vector<Quat> units = enumerate_norm(data.order, 1);
        CHECK(static_cast<long>(units.size()) == r.units);
        for (const Quat& u : units) {
            CHECK(data.algebra.nrd(u) == 1);
            CHECK(data.order.contains(u));
        }
    }
}

TEST_CASE("norm enumeration counts lattice points exactly", "[quaternion]") {
    AlgebraData data = algebra_init(2, 1, 3);
    CHECK(enumerate_norm(data.order, 0).empty());
    CHECK(enumerate_norm(data.order, 1).size() == 24);
    // Hurwitz elements of odd norm n: 24*sigma(n).
    CHECK(enumerate_norm(data.order, 3).size() == 96);
    CHECK(enumerate_norm(data.order, 5).size() == 144);
    CHECK(enumerate_norm(data.order, 9).size() == 24 * 13);
    for (const Quat& x : enumerate_norm(data.order, 3)) {
        CHECK(data.algebra.nrd(x) == 3);
        CHECK(data.order.contains(x));
    }
    CHECK_THROWS_AS(enumerate_norm(data.order, -1), ConfigError);

    // Output is sorted and duplicate free.
    std::vector<Quat> xs = enumerate_norm(data.order, 9);
    for (size_t a = 1; a < xs.size(); ++a) CHECK(xs[a - 1] < xs[a]);
}

TEST_CASE("eichler orders carve out the extra level", "[quaternion]") {
    AlgebraData data = algebra_init(2, 5, 3);
    CHECK(data.max_order.reduced_disc() == 2);
    CHECK(data.order.reduced_disc() == 10);
    CHECK(data.order.closed_under_multiplication());
    // Index 5+1-free sanity: unit group shrinks to a subgroup of the Hurwitz units.
    std::vector<Quat> units = enumerate_norm(data.order, 1);
    CHECK(24 % units.size() == 0);
    for (const Quat& u : units) CHECK(data.max_order.contains(u));

    CHECK_THROWS_AS(algebra_init(2, 1, 2), BadPrime);
    CHECK_THROWS_AS(algebra_init(2, 1, 4), BadPrime);
    CHECK_THROWS_AS(algebra_init(2, 3, 3), ConfigError);
    CHECK_THROWS_AS(algebra_init(2, 2, 3), ConfigError);
    CHECK_THROWS_AS(algebra_init(1, 1, 3), ConfigError);
}

TEST_CASE("splitting at p is an exact algebra map", "[quaternion]") {
    PadicContext ctx(3, 2, 30);
    AlgebraData data = algebra_init(2, 1, 3);
    ExactSplitting split(data, ctx);
    CHECK(split.mparam() == -2);

    CHECK(is_scalar_matrix(split.exact(Quat::one()), QuadRat(1)));
    // splitting(i)^2 = a * identity.
    Mat<QuadRat> mi = split.exact(Quat(0, 1, 0, 0));
    CHECK(is_scalar_matrix(mi * mi, QuadRat(-1)));

    std::mt19937 rng(23);
    for (int trial = 0; trial < 50; ++trial) {
        Quat x = random_quat(rng), y = random_quat(rng);
        Mat<QuadRat> mx = split.exact(x), my = split.exact(y);
        CHECK(mx * my == split.exact(data.algebra.mul(x, y)));
        CHECK(mx + my == split.exact(x + y));
        QuadRat det = mx.at(0, 0) * mx.at(1, 1) - mx.at(0, 1) * mx.at(1, 0);
        CHECK(det == QuadRat(data.algebra.nrd(x)));
        CHECK(mx.at(0, 0) + mx.at(1, 1) == QuadRat(data.algebra.trd(x)));
    }

    // Stabilized: the order embeds with integral entries.
    for (const Quat& e : data.order.basis()) {
        QpMat img = split.matrix(e);
        for (int r = 0; r < 2; ++r)
            for (int c = 0; c < 2; ++c) {
                const Qp& q = img[r][c];
                if (!q.is_zero()) CHECK(q.val() >= 0);
            }
    }
}

TEST_CASE("splitting works across the table", "[quaternion]") {
    for (long d : {3L, 5L, 7L}) {
        long p = d == 3 ? 5 : 3;
        PadicContext ctx(p, 2, 24);
        AlgebraData data = algebra_init(d, 1, p);
        ExactSplitting split(data, ctx);
        std::mt19937 rng(31 + d);
        for (int trial = 0; trial < 10; ++trial) {
            Quat x = random_quat(rng), y = random_quat(rng);
            CHECK(split.exact(x) * split.exact(y) ==
                  split.exact(data.algebra.mul(x, y)));
        }
        for (const Quat& e : data.order.basis()) {
            QpMat img = split.matrix(e);
            for (int r = 0; r < 2; ++r)
                for (int c = 0; c < 2; ++c)
                    if (!img[r][c].is_zero()) CHECK(img[r][c].val() >= 0);
        }
    }
}
