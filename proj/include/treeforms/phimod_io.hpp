#pragma once

// JSON fixtures for filtered modules over the exact scalar models:
// dimension, prime, both operator matrices, and the filtration steps.
// Rationals serialize as fraction strings, quadratic scalars as
// [rational, irrational, radicand] triples.

#include <gmpxx.h>

#include <string>
#include <vector>

#include "json.hpp"
#include "treeforms/errors.hpp"
#include "treeforms/phimod.hpp"

namespace treeforms {

namespace detail {

inline mpq_class parse_rational(const std::string& text) {
    try {
        mpq_class q(text);
        if (q.get_den() == 0) throw ParseError("rational with zero denominator: " + text);
        q.canonicalize();
        return q;
    } catch (const std::invalid_argument&) {
        throw ParseError("not a rational: " + text);
    }
}

} // namespace detail

template <class S>
struct ScalarJson;

template <>
struct ScalarJson<mpq_class> {
    static nlohmann::json write(const mpq_class& x) { return x.get_str(); }
    static mpq_class read(const nlohmann::json& j) {
        if (!j.is_string()) throw ParseError("rational entries must be strings");
        return detail::parse_rational(j.get<std::string>());
    }
};

template <>
struct ScalarJson<QuadRat> {
    static nlohmann::json write(const QuadRat& x) {
        if (x.is_rational()) return x.rat().get_str();
        return nlohmann::json::array({x.rat().get_str(), x.irr().get_str(), x.mparam()});
    }
    static QuadRat read(const nlohmann::json& j) {
        if (j.is_string()) return QuadRat(detail::parse_rational(j.get<std::string>()));
        if (!j.is_array() || j.size() != 3 || !j[0].is_string() || !j[1].is_string() ||
            !j[2].is_number_integer())
            throw ParseError("quadratic entries must be strings or [rat, irr, m] triples");
        return QuadRat(detail::parse_rational(j[0].get<std::string>()),
                       detail::parse_rational(j[1].get<std::string>()), j[2].get<long>());
    }
};

namespace detail {

template <class S>
nlohmann::json matrix_to_json(const Mat<S>& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (long i = 0; i < m.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (long j = 0; j < m.cols(); ++j) row.push_back(ScalarJson<S>::write(m.at(i, j)));
        rows.push_back(std::move(row));
    }
    return rows;
}

template <class S>
Mat<S> matrix_from_json(const nlohmann::json& j, long rows, long cols) {
    if (!j.is_array() || static_cast<long>(j.size()) != rows)
        throw ParseError("matrix row count mismatch");
    std::vector<std::vector<S>> data;
    for (const auto& row : j) {
        if (!row.is_array() || static_cast<long>(row.size()) != cols)
            throw ParseError("matrix column count mismatch");
        std::vector<S> out;
        for (const auto& entry : row) out.push_back(ScalarJson<S>::read(entry));
        data.push_back(std::move(out));
    }
    return Mat<S>(std::move(data));
}

} // namespace detail

template <class S>
nlohmann::json module_to_json(const FilteredPhiNModule<S>& d) {
    nlohmann::json out;
    out["p"] = d.prime();
    out["dim"] = d.dim();
    out["frob"] = detail::matrix_to_json(d.frob());
    out["mono"] = detail::matrix_to_json(d.mono());
    nlohmann::json fil = nlohmann::json::array();
    for (const auto& step : d.fil()) {
        nlohmann::json entry;
        entry["jump"] = step.jump;
        entry["cols"] = step.basis.cols();
        entry["basis"] = detail::matrix_to_json(step.basis);
        fil.push_back(std::move(entry));
    }
    out["fil"] = std::move(fil);
    return out;
}

template <class S>
FilteredPhiNModule<S> module_from_json(const nlohmann::json& j) {
    try {
        long p = j.at("p").get<long>();
        long dim = j.at("dim").get<long>();
        Mat<S> frob = detail::matrix_from_json<S>(j.at("frob"), dim, dim);
        Mat<S> mono = detail::matrix_from_json<S>(j.at("mono"), dim, dim);
        std::vector<FilStep<S>> fil;
        for (const auto& entry : j.at("fil")) {
            long cols = entry.at("cols").get<long>();
            fil.push_back(FilStep<S>{entry.at("jump").get<long>(),
                                     detail::matrix_from_json<S>(entry.at("basis"), dim, cols)});
        }
        return FilteredPhiNModule<S>(p, std::move(frob), std::move(mono), std::move(fil));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("module_from_json: ") + e.what());
    }
}

} // namespace treeforms
