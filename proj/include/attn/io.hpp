#pragma once

// JSON and CSV conversions for problems and results. Infinite times are
// written as the string "inf"; CSV numbers use 17 significant digits and a
// '.' decimal point regardless of locale.

#include <attn/assumptions.hpp>
#include <attn/binary_choice.hpp>
#include <attn/manipulation.hpp>
#include <attn/news_game.hpp>
#include <attn/simulation.hpp>
#include <attn/stage_solver.hpp>
#include <attn/variance_oracle.hpp>

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace attn::io {

using json = nlohmann::json;

inline Error invalid(const std::string& what) { return Error(ErrorKind::InvalidProblem, what); }

// ---- scalars ------------------------------------------------------------

inline std::string format_number(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

inline json number_to_json(double x) {
    if (std::isinf(x)) return x > 0 ? json("inf") : json("-inf");
    return json(x);
}

inline double number_from_json(const json& j, const char* what) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf") return kInf;
        if (s == "-inf") return -kInf;
    }
    throw invalid(std::string(what) + " must be a number");
}

inline json vector_to_json(const Vector& v) {
    json a = json::array();
    for (Index i = 0; i < v.size(); ++i) a.push_back(number_to_json(v[i]));
    return a;
}

inline Vector vector_from_json(const json& j, const char* what) {
    if (!j.is_array()) throw invalid(std::string(what) + " must be an array");
    Vector v(static_cast<Index>(j.size()));
    for (size_t i = 0; i < j.size(); ++i) v[static_cast<Index>(i)] = number_from_json(j[i], what);
    return v;
}

inline json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (Index i = 0; i < m.rows(); ++i) rows.push_back(vector_to_json(m.row(i).transpose()));
    return rows;
}

// Accepts nested rows or a flat row-major array of k*k numbers.
inline Matrix matrix_from_json(const json& j, Index k, const char* what) {
    if (!j.is_array()) throw invalid(std::string(what) + " must be an array");
    Matrix m(k, k);
    if (!j.empty() && j[0].is_array()) {
        if (static_cast<Index>(j.size()) != k) throw invalid(std::string(what) + " has the wrong number of rows");
        for (Index i = 0; i < k; ++i) {
            const Vector row = vector_from_json(j[static_cast<size_t>(i)], what);
            if (row.size() != k) throw invalid(std::string(what) + " has a row of the wrong length");
            m.row(i) = row.transpose();
        }
    } else {
        const Vector flat = vector_from_json(j, what);
        if (flat.size() != k * k) throw invalid(std::string(what) + " must have K*K entries");
        for (Index i = 0; i < k; ++i)
            for (Index c = 0; c < k; ++c) m(i, c) = flat[i * k + c];
    }
    return m;
}

// "a:b:step" -> a, a+step, ..., up to b inclusive.
inline std::vector<double> parse_grid(const std::string& spec) {
    double v[3];
    size_t pos = 0;
    for (int f = 0; f < 3; ++f) {
        const size_t end = f < 2 ? spec.find(':', pos) : spec.size();
        if (end == std::string::npos) throw Error(ErrorKind::InvalidConfig, "grid must look like a:b:step");
        const char* first = spec.data() + pos;
        const char* last = spec.data() + end;
        const auto r = std::from_chars(first, last, v[f]);
        if (r.ec != std::errc() || r.ptr != last) throw Error(ErrorKind::InvalidConfig, "bad number in grid spec");
        pos = end + 1;
    }
    const double a = v[0], b = v[1], step = v[2];
    if (!(step > 0.0) || !(b >= a) || !std::isfinite(a) || !std::isfinite(b))
        throw Error(ErrorKind::InvalidConfig, "grid needs a <= b and step > 0");
    const double count = std::floor((b - a) / step + 1e-9);
    if (count > 1e7) throw Error(ErrorKind::InvalidConfig, "grid is too large");
    std::vector<double> out;
    for (long i = 0; i <= static_cast<long>(count); ++i) out.push_back(a + static_cast<double>(i) * step);
    return out;
}

inline std::vector<double> grid_from_json(const json& j) {
    if (j.is_string()) return parse_grid(j.get<std::string>());
    const Vector v = vector_from_json(j, "grid");
    return std::vector<double>(v.data(), v.data() + v.size());
}

// ---- problems -----------------------------------------------------------

inline json to_json(const Problem& p) {
    return json{{"sigma", matrix_to_json(p.sigma())}, {"alpha", vector_to_json(p.alpha())}, {"mu", vector_to_json(p.mu())}};
}

inline Problem problem_from_json(const json& j) {
    if (!j.is_object()) throw invalid("problem must be a JSON object");
    if (!j.contains("sigma") || !j.contains("alpha")) throw invalid("problem needs sigma and alpha");
    const Vector alpha = vector_from_json(j.at("alpha"), "alpha");
    const Matrix sigma = matrix_from_json(j.at("sigma"), alpha.size(), "sigma");
    std::optional<Vector> mu;
    if (j.contains("mu")) mu = vector_from_json(j.at("mu"), "mu");
    return Problem(sigma, alpha, mu);
}

struct BinaryChoiceBlock {
    double cost = 0.0;
    DpGrid grid;
};

struct ManipulationBlock {
    double T = 0.0;
    std::vector<double> t_grid;
};

struct ProblemFile {
    Problem problem;
    std::optional<BinaryChoiceBlock> binary_choice;
    std::optional<NewsGameParams> news_game;
    std::optional<ManipulationBlock> manipulation;
    std::optional<SimConfig> sim;
};

namespace detail {

template <class T>
void read_opt(const json& obj, const char* key, T& out) {
    if (!obj.contains(key)) return;
    if constexpr (std::is_same_v<T, double>)
        out = number_from_json(obj.at(key), key);
    else {
        if (!obj.at(key).is_number_integer()) throw invalid(std::string(key) + " must be an integer");
        out = obj.at(key).get<T>();
    }
}

} // namespace detail

inline ProblemFile problem_file_from_json(const json& j) {
    ProblemFile f{problem_from_json(j), {}, {}, {}, {}};
    if (j.contains("binary_choice")) {
        const json& b = j.at("binary_choice");
        BinaryChoiceBlock blk;
        if (!b.contains("cost")) throw invalid("binary_choice needs a cost");
        blk.cost = number_from_json(b.at("cost"), "cost");
        if (b.contains("grid")) {
            const json& g = b.at("grid");
            detail::read_opt(g, "cells_per_sigma", blk.grid.cells_per_sigma);
            detail::read_opt(g, "range_sigmas", blk.grid.range_sigmas);
            detail::read_opt(g, "variance_ratio", blk.grid.variance_ratio);
            detail::read_opt(g, "truncation", blk.grid.truncation);
        }
        f.binary_choice = blk;
    }
    if (j.contains("news_game")) {
        const json& n = j.at("news_game");
        NewsGameParams g;
        detail::read_opt(n, "sigma_omega", g.sigma_omega);
        detail::read_opt(n, "sigma_b", g.sigma_b);
        detail::read_opt(n, "lambda", g.lambda);
        detail::read_opt(n, "kappa", g.kappa);
        detail::read_opt(n, "r", g.r);
        g.validate();
        f.news_game = g;
    }
    if (j.contains("manipulation")) {
        const json& m = j.at("manipulation");
        ManipulationBlock blk;
        if (!m.contains("T")) throw invalid("manipulation needs T");
        blk.T = number_from_json(m.at("T"), "T");
        if (m.contains("t_grid")) blk.t_grid = grid_from_json(m.at("t_grid"));
        f.manipulation = blk;
    }
    if (j.contains("sim")) {
        const json& s = j.at("sim");
        SimConfig c;
        detail::read_opt(s, "dt", c.dt);
        detail::read_opt(s, "horizon", c.horizon);
        detail::read_opt(s, "n_paths", c.n_paths);
        detail::read_opt(s, "record_every", c.record_every);
        if (s.contains("seed")) {
            if (!s.at("seed").is_number_unsigned()) throw invalid("seed must be a nonnegative integer");
            c.seed = s.at("seed").get<std::uint64_t>();
        }
        if (s.contains("mode")) {
            const auto mode = s.at("mode").get<std::string>();
            if (mode == "continuous") c.mode = SimMode::ContinuousEuler;
            else if (mode == "discrete") c.mode = SimMode::DiscretePrecision;
            else throw invalid("sim mode must be continuous or discrete");
        }
        c.validate();
        f.sim = c;
    }
    return f;
}

// ---- results ------------------------------------------------------------

inline json to_json(const StagePath& path) {
    json stages = json::array();
    for (const Stage& s : path.stages) {
        json support = json::array();
        for (Index i : s.support) support.push_back(i);
        stages.push_back({{"t_start", number_to_json(s.t_start)},
                          {"t_end", number_to_json(s.t_end)},
                          {"support", support},
                          {"mixture", vector_to_json(s.mixture)}});
    }
    return json{{"dim", path.dim}, {"stages", stages}};
}

inline StagePath stage_path_from_json(const json& j) {
    if (!j.is_object() || !j.contains("dim") || !j.contains("stages")) throw invalid("stage path needs dim and stages");
    StagePath path;
    path.dim = j.at("dim").get<Index>();
    for (const json& s : j.at("stages")) {
        Stage st;
        st.t_start = number_from_json(s.at("t_start"), "t_start");
        st.t_end = number_from_json(s.at("t_end"), "t_end");
        for (const json& i : s.at("support")) st.support.push_back(i.get<Index>());
        st.mixture = vector_from_json(s.at("mixture"), "mixture");
        if (st.mixture.size() != path.dim) throw invalid("mixture has the wrong length");
        path.stages.push_back(std::move(st));
    }
    if (path.stages.empty()) throw invalid("stage path has no stages");
    return path;
}

inline json to_json(const AssumptionReport& r) {
    return json{{"k2_cov_sum", to_string(r.k2_cov_sum)},
                {"substitutes", r.substitutes},
                {"complements", r.complements},
                {"diagonal_dominance", r.diagonal_dominance},
                {"strict_diagonal_dominance", r.strict_diagonal_dominance},
                {"suff_2K3", r.suff_2K3},
                {"eventual_dominance_shift", r.eventual_dominance_shift},
                {"verdict", to_string(r.verdict)}};
}

inline json to_json(const OracleResult& r) {
    return json{{"q_star", vector_to_json(r.q_star)},
                {"value", r.value},
                {"kkt_residual", r.kkt_residual},
                {"iterations", r.iterations}};
}

inline json to_json(const MonotonicityReport& r) {
    json v = json::array();
    for (const auto& x : r.violations)
        v.push_back({{"source", x.source}, {"t_from", x.t_from}, {"t_to", x.t_to}, {"drop", x.drop}});
    return json{{"monotone", r.monotone()}, {"violations", v}};
}

inline json to_json(const NewsOutcome& o) {
    return json{{"phi_star", o.phi_star},
                {"zeta_star", o.zeta_star},
                {"t1_star", o.t1_star},
                {"shares", vector_to_json(o.shares)},
                {"payoffs", vector_to_json(o.payoffs)},
                {"existence_guaranteed", o.existence_guaranteed}};
}

inline json to_json(const EquilibriumCertificate& c) {
    json j = to_json(c.outcome);
    j["max_gain"] = {c.max_gain[0], c.max_gain[1]};
    j["best_deviation"] = {{{"phi", c.best_phi[0]}, {"zeta", c.best_zeta[0]}},
                           {{"phi", c.best_phi[1]}, {"zeta", c.best_zeta[1]}}};
    return j;
}

inline json to_json(const ManipulationReport& r) {
    json inc = json::array();
    for (const auto& [i, t] : r.increases) inc.push_back({{"source", i}, {"t", t}});
    return json{{"T", r.T}, {"T_star", r.T_star}, {"substitutes", r.substitutes}, {"increases", inc}};
}

// ---- CSV ----------------------------------------------------------------

class CsvWriter {
public:
    explicit CsvWriter(std::ostream& os) : os_(os) {}

    void header(const std::vector<std::string>& cols) { line(cols); }

    void row(const std::vector<double>& values) {
        std::vector<std::string> cells;
        cells.reserve(values.size());
        for (double v : values) cells.push_back(format_number(v));
        line(cells);
    }

private:
    void line(const std::vector<std::string>& cells) {
        for (size_t i = 0; i < cells.size(); ++i) os_ << (i ? "," : "") << cells[i];
        os_ << '\n';
    }

    std::ostream& os_;
};

} // namespace attn::io
