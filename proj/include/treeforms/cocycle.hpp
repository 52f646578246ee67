#pragma once

// V_n-valued harmonic cocycles on the quotient graph: the exact solution
// space of {stabilizer invariance, reversal antisymmetry, vertex
// harmonicity} over the splitting field Q(sqrt(m)), with Hecke operators
// T_ell (double cosets of norm ell) and U_p (Atkin-Lehner pullback by a
// norm-p element).
//
// Convention: a cocycle is stored by its values on edge-orbit
// representatives; the induced tree cocycle transforms as
// c(gamma e) = gamma . c(e) under the dual left action.

#include <string>
#include <vector>

#include <json.hpp>

#include "treeforms/quotient_graph.hpp"
#include "treeforms/vn.hpp"

namespace treeforms {

class HarmonicCocycle {
public:
    HarmonicCocycle(QuotientGraph& graph, long n, std::vector<VnElem<QuadRat>> values)
        : graph_(&graph), n_(n), values_(std::move(values)) {
        if (values_.size() != graph.edge_orbits().size())
            throw ConfigError("HarmonicCocycle: one value per edge orbit required");
    }

    QuotientGraph& graph() const { return *graph_; }
    long n() const { return n_; }
    const std::vector<VnElem<QuadRat>>& values() const { return values_; }

    // Value on an arbitrary tree edge, transported from its orbit.
    VnElem<QuadRat> evaluate(const DirEdge& e) const {
        auto [k, gamma] = graph_->reduce_edge(e);
        const Quat ginv = graph_->algebra_data().algebra.conj(gamma);
        return vn_act(graph_->splitting().exact(ginv), values_[static_cast<size_t>(k)]);
    }

    friend HarmonicCocycle operator+(const HarmonicCocycle& a, const HarmonicCocycle& b) {
        check_compatible(a, b);
        std::vector<VnElem<QuadRat>> vals;
        for (size_t k = 0; k < a.values_.size(); ++k)
            vals.push_back(a.values_[k] + b.values_[k]);
        return HarmonicCocycle(*a.graph_, a.n_, std::move(vals));
    }
    friend HarmonicCocycle operator-(const HarmonicCocycle& a, const HarmonicCocycle& b) {
        check_compatible(a, b);
        std::vector<VnElem<QuadRat>> vals;
        for (size_t k = 0; k < a.values_.size(); ++k)
            vals.push_back(a.values_[k] - b.values_[k]);
        return HarmonicCocycle(*a.graph_, a.n_, std::move(vals));
    }
    friend HarmonicCocycle operator*(const QuadRat& c, const HarmonicCocycle& a) {
        std::vector<VnElem<QuadRat>> vals;
        for (const auto& v : a.values_) vals.push_back(c * v);
        return HarmonicCocycle(*a.graph_, a.n_, std::move(vals));
    }
    friend bool operator==(const HarmonicCocycle& a, const HarmonicCocycle& b) {
        return a.n_ == b.n_ && a.values_ == b.values_;
    }
    bool is_zero() const {
        for (const auto& v : values_)
            if (!v.is_zero()) return false;
        return true;
    }

private:
    static void check_compatible(const HarmonicCocycle& a, const HarmonicCocycle& b) {
        if (a.graph_ != b.graph_ || a.n_ != b.n_)
            throw WeightMismatch("HarmonicCocycle: incompatible operands");
    }

    QuotientGraph* graph_;
    long n_;
    std::vector<VnElem<QuadRat>> values_;
};

namespace detail {

// Accumulate block += coeff-matrix into a row band of the constraint system.
inline void add_block(std::vector<Vec<QuadRat>>& rows, size_t row0, size_t col0,
                      const Mat<QuadRat>& m, int sign) {
    for (long r = 0; r < m.rows(); ++r)
        for (long c = 0; c < m.cols(); ++c) {
            QuadRat& cell = rows[row0 + static_cast<size_t>(r)][col0 + static_cast<size_t>(c)];
            cell = sign > 0 ? cell + m.at(r, c) : cell - m.at(r, c);
        }
}

inline bool is_pm_one(const Quat& q) {
    return q == Quat::one() || q == -Quat::one();
}

} // namespace detail

// Exact basis of the weight-(n+2) harmonic cocycle space; n even.
// Each basis vector is normalized so its first nonzero flat coordinate is 1.
inline std::vector<HarmonicCocycle> harmonic_basis(QuotientGraph& graph, long n) {
    if (n < 0 || n % 2 != 0)
        throw ConfigError("harmonic_basis: weight index n must be even and >= 0");
    const auto& eos = graph.edge_orbits();
    const auto& vos = graph.vertex_orbits();
    const ExactSplitting& split = graph.splitting();
    const auto& alg = graph.algebra_data().algebra;
    const size_t bw = static_cast<size_t>(n + 1);
    const size_t dim = eos.size() * bw;

    std::vector<Vec<QuadRat>> rows;
    auto fresh_rows = [&](size_t count) {
        size_t row0 = rows.size();
        rows.resize(rows.size() + count, Vec<QuadRat>(dim, QuadRat(0)));
        return row0;
    };

    Mat<QuadRat> id = Mat<QuadRat>::identity(n + 1, QuadRat(1));
    for (size_t k = 0; k < eos.size(); ++k) {
        // Stabilizer invariance: (W(s)^T - I) c_k = 0. Central +-1 acts
        // trivially in even weight.
        for (const Quat& s : eos[k].stabilizer) {
            if (detail::is_pm_one(s)) continue;
            size_t row0 = fresh_rows(bw);
            Mat<QuadRat> wt = weight_matrix(split.exact(s), n).transpose();
            detail::add_block(rows, row0, k * bw, wt, +1);
            detail::add_block(rows, row0, k * bw, id, -1);
        }
        // Reversal antisymmetry: c_k + W(gamma^-1)^T c_{rev(k)} = 0, where
        // gamma carries reverse(rep_k) to rep_{rev(k)}.
        size_t rk = static_cast<size_t>(eos[k].reverse_orbit);
        size_t row0 = fresh_rows(bw);
        Mat<QuadRat> wt = weight_matrix(split.exact(alg.conj(eos[k].reversal_gamma)), n).transpose();
        detail::add_block(rows, row0, k * bw, id, +1);
        detail::add_block(rows, row0, rk * bw, wt, +1);
    }
    // Harmonicity: sum over the p+1 edges at each vertex representative.
    for (const auto& vo : vos) {
        size_t row0 = fresh_rows(bw);
        for (const Vertex& w : neighbors(vo.rep)) {
            auto [k, gamma] = graph.reduce_edge(DirEdge(vo.rep, w));
            Mat<QuadRat> wt = weight_matrix(split.exact(alg.conj(gamma)), n).transpose();
            detail::add_block(rows, row0, static_cast<size_t>(k) * bw, wt, +1);
        }
    }

    Mat<QuadRat> sys(rows);
    std::vector<Vec<QuadRat>> null = kernel(sys);
    std::vector<HarmonicCocycle> basis;
    for (auto& vec : null) {
        // Normalize the first nonzero flat coordinate to 1.
        QuadRat scale(0);
        for (const auto& x : vec)
            if (!x.is_zero()) {
                scale = x.inv();
                break;
            }
        std::vector<VnElem<QuadRat>> vals;
        for (size_t k = 0; k < eos.size(); ++k) {
            Vec<QuadRat> m(vec.begin() + static_cast<long>(k * bw),
                           vec.begin() + static_cast<long>((k + 1) * bw));
            for (auto& x : m) x = scale * x;
            vals.emplace_back(n, std::move(m));
        }
        basis.emplace_back(graph, n, std::move(vals));
    }
    return basis;
}

// Exact re-check of all defining constraints.
inline bool cocycle_is_valid(const HarmonicCocycle& c) {
    QuotientGraph& g = c.graph();
    const ExactSplitting& split = g.splitting();
    const auto& alg = g.algebra_data().algebra;
    const auto& eos = g.edge_orbits();
    for (size_t k = 0; k < eos.size(); ++k) {
        const VnElem<QuadRat>& v = c.values()[k];
        for (const Quat& s : eos[k].stabilizer)
            if (!(vn_act(split.exact(s), v) == v)) return false;
        VnElem<QuadRat> rev = c.evaluate(eos[k].rep.reverse());
        if (!(rev == -v)) return false;
    }
    for (const auto& vo : g.vertex_orbits()) {
        VnElem<QuadRat> total = VnElem<QuadRat>::zero(c.n(), QuadRat(0));
        for (const Vertex& w : neighbors(vo.rep))
            total = total + c.evaluate(DirEdge(vo.rep, w));
        if (!total.is_zero()) return false;
    }
    return true;
}

// Hecke operator: T_ell for ell prime to p N- N+, U_p for ell = p.
// (T c)(e) = sum_i conj(x_i) . c(x_i e) over the ell+1 norm-ell cosets.
// All norm-p elements lie in a single left Gamma-coset, so at ell = p the
// sum degenerates to the pullback (U_p c)(e) = conj(pi) . c(pi e) by any
// norm-p pi; its square is the central scalar p, acting by p^n.
inline HarmonicCocycle hecke_apply(const HarmonicCocycle& c, long ell) {
    QuotientGraph& g = c.graph();
    const AlgebraData& data = g.algebra_data();
    const ExactSplitting& split = g.splitting();
    if (ell < 2 || mpz_probab_prime_p(mpz_class(ell).get_mpz_t(), 40) == 0)
        throw BadPrime("hecke_apply: ell must be prime");
    if (ell != data.p && (data.n_minus % ell == 0 || data.n_plus % ell == 0))
        throw BadPrime("hecke_apply: ell divides the level");

    std::vector<Quat> reps = hecke_cosets(data, ell);
    if (ell == data.p) reps.resize(1);

    std::vector<VnElem<QuadRat>> out;
    for (const auto& eo : g.edge_orbits()) {
        VnElem<QuadRat> acc = VnElem<QuadRat>::zero(c.n(), QuadRat(0));
        for (const Quat& x : reps) {
            QpMat m = split.matrix(x);
            DirEdge moved(act(m, eo.rep.origin()), act(m, eo.rep.target()));
            acc = acc + vn_act(split.exact(data.algebra.conj(x)), c.evaluate(moved));
        }
        out.push_back(std::move(acc));
    }
    return HarmonicCocycle(g, c.n(), std::move(out));
}

// Matrix of the operator in a given basis (columns = images in basis
// coordinates); throws if the image leaves the span.
inline Mat<QuadRat> hecke_matrix(const std::vector<HarmonicCocycle>& basis, long ell) {
    if (basis.empty()) throw ConfigError("hecke_matrix: empty basis");
    size_t dim = basis.size();
    size_t flat = basis[0].values().size() * static_cast<size_t>(basis[0].n() + 1);
    Mat<QuadRat> b(static_cast<long>(flat), static_cast<long>(dim), QuadRat(0));
    auto flatten = [&](const HarmonicCocycle& c, long col, Mat<QuadRat>& into) {
        size_t r = 0;
        for (const auto& v : c.values())
            for (const auto& x : v.moments) into.at(static_cast<long>(r++), col) = x;
    };
    for (size_t j = 0; j < dim; ++j) flatten(basis[j], static_cast<long>(j), b);
    Mat<QuadRat> out(static_cast<long>(dim), static_cast<long>(dim), QuadRat(0));
    for (size_t j = 0; j < dim; ++j) {
        HarmonicCocycle img = hecke_apply(basis[j], ell);
        Mat<QuadRat> rhs(static_cast<long>(flat), 1, QuadRat(0));
        flatten(img, 0, rhs);
        Vec<QuadRat> rhsv;
        for (size_t r = 0; r < flat; ++r) rhsv.push_back(rhs.at(static_cast<long>(r), 0));
        auto sol = solve(b, rhsv);
        if (!sol) throw HypothesisViolation("hecke image leaves the harmonic space");
        for (size_t i = 0; i < dim; ++i) out.at(static_cast<long>(i), static_cast<long>(j)) = (*sol)[i];
    }
    return out;
}

// Eigenvalue on a one-dimensional space, as an exact scalar.
inline QuadRat hecke_eigenvalue(const std::vector<HarmonicCocycle>& basis, long ell) {
    if (basis.size() != 1)
        throw ConfigError("hecke_eigenvalue: space is not one-dimensional");
    return hecke_matrix(basis, ell).at(0, 0);
}

inline nlohmann::json cocycle_basis_to_json(const QuotientGraph& graph, long n,
                                            const std::vector<HarmonicCocycle>& basis) {
    const AlgebraData& data = graph.algebra_data();
    nlohmann::json doc;
    doc["kind"] = "cocycle-basis";
    doc["version"] = 1;
    doc["n_minus"] = data.n_minus;
    doc["n_plus"] = data.n_plus;
    doc["p"] = data.p;
    doc["weight_index"] = n;
    auto scalar_j = [](const QuadRat& q) {
        return nlohmann::json::array(
            {q.rat().get_str(), q.irr().get_str(), q.mparam()});
    };
    doc["basis"] = nlohmann::json::array();
    for (const auto& c : basis) {
        nlohmann::json jc = nlohmann::json::array();
        for (const auto& v : c.values()) {
            nlohmann::json jv = nlohmann::json::array();
            for (const auto& x : v.moments) jv.push_back(scalar_j(x));
            jc.push_back(jv);
        }
        doc["basis"].push_back(jc);
    }
    return doc;
}

inline std::vector<HarmonicCocycle> cocycle_basis_from_json(QuotientGraph& graph,
                                                            const nlohmann::json& doc) {
    const AlgebraData& data = graph.algebra_data();
    if (doc.value("kind", "") != "cocycle-basis" || doc.value("version", 0) != 1)
        throw ParseError("cocycle basis document has unknown shape");
    if (doc["n_minus"] != data.n_minus || doc["n_plus"] != data.n_plus || doc["p"] != data.p)
        throw ConfigError("cocycle basis document level mismatch");
    long n = doc.at("weight_index").get<long>();
    auto scalar_p = [](const nlohmann::json& j) {
        mpq_class x(j.at(0).get<std::string>()), y(j.at(1).get<std::string>());
        x.canonicalize();
        y.canonicalize();
        return QuadRat(x, y, j.at(2).get<long>());
    };
    std::vector<HarmonicCocycle> basis;
    for (const auto& jc : doc.at("basis")) {
        std::vector<VnElem<QuadRat>> vals;
        for (const auto& jv : jc) {
            Vec<QuadRat> m;
            for (const auto& jx : jv) m.push_back(scalar_p(jx));
            vals.emplace_back(n, std::move(m));
        }
        basis.emplace_back(graph, n, std::move(vals));
    }
    return basis;
}

} // namespace treeforms
