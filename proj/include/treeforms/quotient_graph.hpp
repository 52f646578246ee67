#pragma once

// The quotient of the (p+1)-regular tree by Gamma = norm-one units of an
// Eichler Z[1/p]-order: orbit representatives, finite stabilizers,
// transporters, and Hecke coset representatives.
//
// Gamma-equivalence is decided by finite enumeration: gamma.v = w for
// gamma = x/p^t iff x is an order element with nrd(x) = p^(2t) whose
// matrix image M = P_w^-1 iota(x) P_v has all entries of valuation
// >= t + (scale_v - scale_w)/2. Taking 2t = dist(v0,v) + dist(v0,w) is
// complete because the order's image at p is all of M_2(Z_p) (arranged by
// ExactSplitting), so a primitive x moves v0 by exactly nrd-valuation.

#include <deque>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include <json.hpp>

#include "treeforms/quaternion.hpp"
#include "treeforms/tree.hpp"

namespace treeforms {

struct VertexOrbit {
    Vertex rep;
    std::vector<Quat> stabilizer; // all of Gamma_rep, -1 included
};

struct EdgeOrbit {
    DirEdge rep;                  // origin is always a vertex-orbit representative
    std::vector<Quat> stabilizer; // gammas fixing both endpoints
    long reverse_orbit = -1;      // orbit of the reversed edge
    Quat reversal_gamma;          // carries reverse(rep) to that orbit's rep
};

class QuotientGraph {
public:
    QuotientGraph(const AlgebraData& data, const PadicContext& ctx, long radius_hint = 12)
        : data_(data), ctx_(ctx), split_(data, ctx), radius_hint_(radius_hint) {
        build();
    }

    // Deserializing constructor; trusts the document but re-derives caches.
    QuotientGraph(const AlgebraData& data, const PadicContext& ctx,
                  const nlohmann::json& doc)
        : data_(data), ctx_(ctx), split_(data, ctx), radius_hint_(12) {
        from_json(doc);
    }

    const AlgebraData& algebra_data() const { return data_; }
    const ExactSplitting& splitting() const { return split_; }
    const PadicContext& context() const { return ctx_; }
    const std::vector<VertexOrbit>& vertex_orbits() const { return vertex_orbits_; }
    const std::vector<EdgeOrbit>& edge_orbits() const { return edge_orbits_; }

    long unordered_edge_orbits() const {
        long self = 0;
        for (size_t k = 0; k < edge_orbits_.size(); ++k)
            if (edge_orbits_[k].reverse_orbit == static_cast<long>(k)) ++self;
        return (static_cast<long>(edge_orbits_.size()) + self) / 2;
    }
    // First Betti number of the quotient graph.
    long betti() const {
        return 1 - (static_cast<long>(vertex_orbits_.size()) - unordered_edge_orbits());
    }
    mpq_class mass() const {
        mpq_class m(0);
        for (const auto& o : vertex_orbits_)
            m += mpq_class(1, static_cast<long>(o.stabilizer.size()));
        return m;
    }

    // Reduce any vertex: returns (orbit index, gamma) with gamma.v = rep.
    std::pair<long, Quat> reduce_vertex(const Vertex& v) {
        auto it = vred_.find(v);
        if (it != vred_.end()) return it->second;
        std::pair<long, Quat> out;
        if (distance(base(), v) <= shell_radius_) {
            auto direct = reduce_vertex_direct(v);
            if (!direct) throw NotFound("reduce_vertex: no orbit matches");
            out = *direct;
        } else {
            // Recurse along the geodesic toward the base vertex; the moved
            // copy of v is a neighbor of a representative, hence shallow.
            auto [i, gp] = reduce_vertex(step_toward(v, base()));
            Vertex moved = act_gamma(gp, v);
            auto [j, g2] = reduce_vertex(moved);
            out = {j, data_.algebra.mul(g2, gp)};
        }
        vred_.emplace(v, out);
        return out;
    }

    // Reduce any directed edge: (orbit index, gamma) with gamma.e = rep.
    std::pair<long, Quat> reduce_edge(const DirEdge& e) {
        auto it = ered_.find(e);
        if (it != ered_.end()) return it->second;
        auto [i, g] = reduce_vertex(e.origin());
        DirEdge moved(act_gamma(g, e.origin()), act_gamma(g, e.target()));
        for (size_t k = 0; k < edge_orbits_.size(); ++k) {
            const EdgeOrbit& eo = edge_orbits_[k];
            if (!(eo.rep.origin() == moved.origin())) continue;
            for (const Quat& s : vertex_orbits_[static_cast<size_t>(i)].stabilizer) {
                if (act_gamma(s, moved.target()) == eo.rep.target()) {
                    std::pair<long, Quat> out{static_cast<long>(k),
                                              data_.algebra.mul(s, g)};
                    ered_.emplace(e, out);
                    return out;
                }
            }
        }
        throw NotFound("reduce_edge: no orbit matches");
    }

    Vertex act_gamma(const Quat& g, const Vertex& v) const {
        return act(split_.matrix(g), v);
    }
    DirEdge act_gamma(const Quat& g, const DirEdge& e) const {
        return DirEdge(act_gamma(g, e.origin()), act_gamma(g, e.target()));
    }

    nlohmann::json to_json() const {
        nlohmann::json doc;
        doc["kind"] = "quotient-graph";
        doc["version"] = 1;
        doc["n_minus"] = data_.n_minus;
        doc["n_plus"] = data_.n_plus;
        doc["p"] = data_.p;
        auto quat_j = [](const Quat& q) {
            return nlohmann::json::array(
                {q.t.get_str(), q.x.get_str(), q.y.get_str(), q.z.get_str()});
        };
        auto vert_j = [](const Vertex& v) {
            return nlohmann::json{{"scale", v.scale()}, {"residue", v.residue().get_str()}};
        };
        doc["vertex_orbits"] = nlohmann::json::array();
        for (const auto& o : vertex_orbits_) {
            nlohmann::json jo;
            jo["rep"] = vert_j(o.rep);
            jo["stabilizer"] = nlohmann::json::array();
            for (const auto& s : o.stabilizer) jo["stabilizer"].push_back(quat_j(s));
            doc["vertex_orbits"].push_back(jo);
        }
        doc["edge_orbits"] = nlohmann::json::array();
        for (const auto& o : edge_orbits_) {
            nlohmann::json jo;
            jo["origin"] = vert_j(o.rep.origin());
            jo["target"] = vert_j(o.rep.target());
            jo["stabilizer"] = nlohmann::json::array();
            for (const auto& s : o.stabilizer) jo["stabilizer"].push_back(quat_j(s));
            jo["reverse_orbit"] = o.reverse_orbit;
            jo["reversal_gamma"] = quat_j(o.reversal_gamma);
            doc["edge_orbits"].push_back(jo);
        }
        return doc;
    }

private:
    Vertex base() const { return Vertex::base(data_.p); }

    void from_json(const nlohmann::json& doc) {
        if (doc.value("kind", "") != "quotient-graph" || doc.value("version", 0) != 1)
            throw ParseError("quotient graph document has unknown shape");
        if (doc["n_minus"] != data_.n_minus || doc["n_plus"] != data_.n_plus ||
            doc["p"] != data_.p)
            throw ConfigError("quotient graph document level mismatch");
        auto quat_p = [](const nlohmann::json& j) {
            return Quat(mpq_class(j.at(0).get<std::string>()),
                        mpq_class(j.at(1).get<std::string>()),
                        mpq_class(j.at(2).get<std::string>()),
                        mpq_class(j.at(3).get<std::string>()));
        };
        auto vert_p = [&](const nlohmann::json& j) {
            return Vertex(data_.p, j.at("scale").get<long>(),
                          mpq_class(j.at("residue").get<std::string>()));
        };
        for (const auto& jo : doc.at("vertex_orbits")) {
            VertexOrbit o;
            o.rep = vert_p(jo.at("rep"));
            for (const auto& js : jo.at("stabilizer")) o.stabilizer.push_back(quat_p(js));
            vertex_orbits_.push_back(std::move(o));
        }
        for (const auto& jo : doc.at("edge_orbits")) {
            EdgeOrbit o;
            o.rep = DirEdge(vert_p(jo.at("origin")), vert_p(jo.at("target")));
            for (const auto& js : jo.at("stabilizer")) o.stabilizer.push_back(quat_p(js));
            o.reverse_orbit = jo.at("reverse_orbit").get<long>();
            o.reversal_gamma = quat_p(jo.at("reversal_gamma"));
            edge_orbits_.push_back(std::move(o));
        }
        seed_reductions();
    }

    void seed_reductions() {
        shell_radius_ = 0;
        for (size_t i = 0; i < vertex_orbits_.size(); ++i) {
            vred_.emplace(vertex_orbits_[i].rep, std::make_pair(static_cast<long>(i), Quat::one()));
            shell_radius_ = std::max(shell_radius_,
                                     distance(base(), vertex_orbits_[i].rep) + 1);
        }
        for (size_t k = 0; k < edge_orbits_.size(); ++k)
            ered_.emplace(edge_orbits_[k].rep, std::make_pair(static_cast<long>(k), Quat::one()));
    }

    void build() {
        VertexOrbit root;
        root.rep = base();
        root.stabilizer = stabilizer_of(base());
        vertex_orbits_.push_back(std::move(root));
        vred_.emplace(base(), std::make_pair(0L, Quat::one()));
        shell_radius_ = 1;

        std::deque<long> worklist{0};
        while (!worklist.empty()) {
            long i = worklist.front();
            worklist.pop_front();
            Vertex u = vertex_orbits_[static_cast<size_t>(i)].rep;
            if (distance(base(), u) > radius_hint_)
                throw RadiusExceeded("quotient graph did not close within the radius hint");
            for (const Vertex& w : neighbors(u)) {
                long j;
                auto found = vred_.find(w);
                if (found != vred_.end()) {
                    j = found->second.first;
                } else {
                    auto direct = reduce_vertex_direct(w);
                    if (direct) {
                        vred_.emplace(w, *direct);
                        j = direct->first;
                    } else {
                        VertexOrbit o;
                        o.rep = w;
                        o.stabilizer = stabilizer_of(w);
                        vertex_orbits_.push_back(std::move(o));
                        j = static_cast<long>(vertex_orbits_.size()) - 1;
                        vred_.emplace(w, std::make_pair(j, Quat::one()));
                        shell_radius_ = std::max(shell_radius_, distance(base(), w) + 1);
                        worklist.push_back(j);
                    }
                }
                DirEdge e(u, w);
                if (ered_.find(e) == ered_.end()) {
                    auto red = reduce_edge_known(e, i);
                    if (red) {
                        ered_.emplace(e, *red);
                    } else {
                        EdgeOrbit eo;
                        eo.rep = e;
                        for (const Quat& s :
                             vertex_orbits_[static_cast<size_t>(i)].stabilizer)
                            if (act_gamma(s, w) == w) eo.stabilizer.push_back(s);
                        edge_orbits_.push_back(std::move(eo));
                        ered_.emplace(e, std::make_pair(
                                             static_cast<long>(edge_orbits_.size()) - 1,
                                             Quat::one()));
                    }
                }
            }
        }
        // Reversal pairing; also validates that orbits close up.
        for (size_t k = 0; k < edge_orbits_.size(); ++k) {
            auto [rk, g] = reduce_edge(edge_orbits_[k].rep.reverse());
            edge_orbits_[k].reverse_orbit = rk;
            edge_orbits_[k].reversal_gamma = g;
        }
        for (size_t k = 0; k < edge_orbits_.size(); ++k) {
            long rk = edge_orbits_[k].reverse_orbit;
            if (edge_orbits_[static_cast<size_t>(rk)].reverse_orbit !=
                static_cast<long>(k))
                throw HypothesisViolation("edge reversal is not an involution on orbits");
        }
    }

    // Direct search against all known orbit representatives.
    std::optional<std::pair<long, Quat>> reduce_vertex_direct(const Vertex& v) {
        for (size_t i = 0; i < vertex_orbits_.size(); ++i) {
            auto g = transporter(v, vertex_orbits_[i].rep);
            if (g) return std::make_pair(static_cast<long>(i), *g);
        }
        return std::nullopt;
    }

    std::optional<std::pair<long, Quat>> reduce_edge_known(const DirEdge& e, long origin_orbit) {
        for (size_t k = 0; k < edge_orbits_.size(); ++k) {
            const EdgeOrbit& eo = edge_orbits_[k];
            if (!(eo.rep.origin() == e.origin())) continue;
            for (const Quat& s :
                 vertex_orbits_[static_cast<size_t>(origin_orbit)].stabilizer)
                if (act_gamma(s, e.target()) == eo.rep.target())
                    return std::make_pair(static_cast<long>(k), s);
        }
        return std::nullopt;
    }

    // gamma with gamma.v = w, if the vertices are Gamma-equivalent.
    std::optional<Quat> transporter(const Vertex& v, const Vertex& w) {
        if (((v.scale() - w.scale()) & 1) != 0) return std::nullopt;
        long d0v = distance(base(), v), d0w = distance(base(), w);
        if (((d0v + d0w) & 1) != 0) return std::nullopt;
        long t = (d0v + d0w) / 2;
        long s = t + (v.scale() - w.scale()) / 2;
        const auto& [elts, images] = norm_images(2 * t);
        for (size_t idx = 0; idx < elts.size(); ++idx) {
            if (!entry_filter(images[idx], v, w, s)) continue;
            if (act(images[idx], v) == w) {
                mpq_class scale = mpq_class(1) / pow_q(data_.p, t);
                return scale * elts[idx];
            }
        }
        return std::nullopt;
    }

    // All gammas fixing v (a finite group; contains -1).
    std::vector<Quat> stabilizer_of(const Vertex& v) {
        long t = distance(base(), v);
        const auto& [elts, images] = norm_images(2 * t);
        std::vector<Quat> out;
        for (size_t idx = 0; idx < elts.size(); ++idx) {
            if (!entry_filter(images[idx], v, v, t)) continue;
            if (act(images[idx], v) == v) {
                mpq_class scale = mpq_class(1) / pow_q(data_.p, t);
                out.push_back(scale * elts[idx]);
            }
        }
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
    }

    // Quick test: all entries of P_w^-1 A P_v have valuation >= s.
    bool entry_filter(const QpMat& a, const Vertex& v, const Vertex& w, long s) const {
        long p = data_.p;
        mpq_class bw = w.residue(), bv = v.residue();
        Qp top = a[0][0] - a[1][0].mul_rational(bw);
        Qp mid = a[0][1] - a[1][1].mul_rational(bw);
        Qp m00 = top.shift(v.scale() - w.scale());
        Qp m01 = (top.mul_rational(bv) + mid).shift(-w.scale());
        Qp m10 = a[1][0].shift(v.scale());
        Qp m11 = a[1][0].mul_rational(bv) + a[1][1];
        for (const Qp& e : {m00, m01, m10, m11}) {
            // Capped zeros of low absolute precision stay in; the exact
            // action check afterwards settles them.
            if (e.is_zero()) continue;
            if (e.val() < s) return false;
        }
        (void)p;
        return true;
    }

    // Order elements of norm p^k with their capped matrix images.
    const std::pair<std::vector<Quat>, std::vector<QpMat>>& norm_images(long k) {
        auto it = norm_cache_.find(k);
        if (it != norm_cache_.end()) return it->second;
        std::vector<Quat> elts = enumerate_norm(data_.order, pow_z(data_.p, k));
        std::vector<QpMat> imgs;
        imgs.reserve(elts.size());
        for (const auto& x : elts) imgs.push_back(split_.matrix(x));
        auto [pos, ok] = norm_cache_.emplace(k, std::make_pair(std::move(elts), std::move(imgs)));
        (void)ok;
        return pos->second;
    }

    AlgebraData data_;
    PadicContext ctx_;
    ExactSplitting split_;
    long radius_hint_;
    long shell_radius_ = 1;
    std::vector<VertexOrbit> vertex_orbits_;
    std::vector<EdgeOrbit> edge_orbits_;
    std::map<Vertex, std::pair<long, Quat>> vred_;
    std::map<DirEdge, std::pair<long, Quat>> ered_;
    std::map<long, std::pair<std::vector<Quat>, std::vector<QpMat>>> norm_cache_;
};

// Representatives of the ell+1 left cosets of norm-ell order elements.
// Two elements represent the same coset iff x' conj(x) = 0 mod ell in the
// order; for ell = p this is the Z-order (Atkin-Lehner style) count.
inline std::vector<Quat> hecke_cosets(const AlgebraData& data, long ell) {
    if (ell < 2 || mpz_probab_prime_p(mpz_class(ell).get_mpz_t(), 40) == 0)
        throw ConfigError("hecke_cosets: ell must be prime");
    if (ell != data.p) {
        for (long bad : {data.n_minus, data.n_plus})
            if (bad % ell == 0)
                throw ConfigError("hecke_cosets: ell must be prime to the level");
    }
    std::vector<Quat> all = enumerate_norm(data.order, mpz_class(ell));
    std::vector<Quat> reps;
    std::vector<bool> used(all.size(), false);
    const auto& alg = data.algebra;
    for (size_t i = 0; i < all.size(); ++i) {
        if (used[i]) continue;
        reps.push_back(all[i]);
        for (size_t j = i; j < all.size(); ++j) {
            if (used[j]) continue;
            Quat prod = alg.mul(all[j], alg.conj(all[i]));
            Vec<mpq_class> c = data.order.coords(prod);
            bool same = true;
            for (const auto& ci : c) {
                if (ci.get_den() != 1 || mpz_class(ci.get_num()) % ell != 0) {
                    same = false;
                    break;
                }
            }
            if (same) used[j] = true;
        }
    }
    if (static_cast<long>(reps.size()) != ell + 1)
        throw CosetCountMismatch("hecke_cosets: expected ell+1 classes, got " +
                                 std::to_string(reps.size()));
    return reps;
}

} // namespace treeforms
