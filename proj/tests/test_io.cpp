#include "support.hpp"

#include <attn/io.hpp>

#include <gtest/gtest.h>

#include <clocale>
#include <sstream>

using namespace attn;
using namespace attn::testing;
using io::json;

TEST(Io, NumberFormatting) {
    EXPECT_EQ(io::format_number(0.1), "0.10000000000000001");
    EXPECT_EQ(io::format_number(kInf), "inf");
    EXPECT_EQ(io::format_number(2.5), "2.5");
    Rng rng(91);
    for (int i = 0; i < 1000; ++i) {
        const double x = uniform(rng, -1, 1) * std::pow(10.0, uniform(rng, -30, 30));
        EXPECT_EQ(std::stod(io::format_number(x)), x);
    }
}

TEST(Io, CsvIgnoresLocale) {
    const char* old = std::setlocale(LC_NUMERIC, nullptr);
    const std::string saved = old ? old : "C";
    const bool switched = std::setlocale(LC_NUMERIC, "de_DE.UTF-8") != nullptr;
    std::ostringstream os;
    io::CsvWriter w(os);
    w.header({"t", "x"});
    w.row({0.5, 1.0 / 3.0});
    std::setlocale(LC_NUMERIC, saved.c_str());
    EXPECT_EQ(os.str(), "t,x\n0.5,0.33333333333333331\n") << (switched ? "de_DE" : "C");
}

TEST(Io, ParseGrid) {
    const auto g = io::parse_grid("0:10:0.1");
    ASSERT_EQ(g.size(), 101u);
    EXPECT_EQ(g.front(), 0.0);
    EXPECT_NEAR(g.back(), 10.0, 1e-12);
    EXPECT_EQ(io::parse_grid("1:1:0.5").size(), 1u);
    for (const char* bad : {"", "1:2", "a:2:0.1", "0:1:0", "2:1:0.1", "0:1:0.1x"})
        EXPECT_THROW(io::parse_grid(bad), Error) << bad;
}

TEST(Io, StagePathRoundTrip) {
    Rng rng(92);
    for (int rep = 0; rep < 50; ++rep) {
        const StagePath path = solve_stages(random_diag_dominant(rng, 2 + rep % 4));
        const json j = io::to_json(path);
        EXPECT_EQ(j["stages"].back()["t_end"], "inf");
        const StagePath back = io::stage_path_from_json(json::parse(j.dump()));
        ASSERT_EQ(back.dim, path.dim);
        ASSERT_EQ(back.stages.size(), path.stages.size());
        for (size_t s = 0; s < path.stages.size(); ++s) {
            EXPECT_EQ(back.stages[s].t_start, path.stages[s].t_start);
            EXPECT_EQ(back.stages[s].t_end, path.stages[s].t_end);
            EXPECT_EQ(back.stages[s].support, path.stages[s].support);
            EXPECT_TRUE(back.stages[s].mixture == path.stages[s].mixture);
        }
    }
}

TEST(Io, ProblemFile) {
    const json j = json::parse(R"({
        "sigma": [[6, 2], [2, 1]], "alpha": [1, 1], "mu": [0.5, -0.5],
        "binary_choice": {"cost": 0.05, "grid": {"cells_per_sigma": 80}},
        "news_game": {"sigma_omega": 1, "sigma_b": 1, "lambda": 1, "kappa": 2, "r": 1},
        "manipulation": {"T": 0.1, "t_grid": "0:1:0.25"},
        "sim": {"dt": 0.01, "horizon": 2, "n_paths": 500, "seed": 7, "mode": "continuous"}
    })");
    const io::ProblemFile f = io::problem_file_from_json(j);
    EXPECT_EQ(f.problem.sigma()(0, 1), 2.0);
    EXPECT_EQ(f.problem.mu()[1], -0.5);
    ASSERT_TRUE(f.binary_choice && f.news_game && f.manipulation && f.sim);
    EXPECT_EQ(f.binary_choice->grid.cells_per_sigma, 80);
    EXPECT_EQ(f.news_game->kappa, 2.0);
    EXPECT_EQ(f.manipulation->t_grid.size(), 5u);
    EXPECT_EQ(f.sim->seed, 7u);

    const Problem flat = io::problem_from_json(json::parse(R"({"sigma": [6, 2, 2, 1], "alpha": [1, 1]})"));
    EXPECT_TRUE(flat.sigma() == f.problem.sigma());
    const Problem back = io::problem_from_json(json::parse(io::to_json(f.problem).dump()));
    EXPECT_TRUE(back.sigma() == f.problem.sigma());
    EXPECT_TRUE(back.mu() == f.problem.mu());
}

TEST(Io, ProblemFileErrors) {
    for (const char* text : {R"([1, 2])", R"({"alpha": [1, 1]})", R"({"sigma": [[1, 0], [0, 1]], "alpha": [1, "x"]})",
                             R"({"sigma": [1, 0, 0], "alpha": [1, 1]})", R"({"sigma": [[1, 0], [0]], "alpha": [1, 1]})",
                             R"({"sigma": [[1, 0], [0, 1]], "alpha": [1, 1], "binary_choice": {}})",
                             R"({"sigma": [[1, 0], [0, 1]], "alpha": [1, 1], "sim": {"mode": "jump"}})",
                             R"({"sigma": [[1, 0], [0, 1]], "alpha": [1, 1], "sim": {"n_paths": 1.5}})",
                             R"({"sigma": [[1, 0], [0, 1]], "alpha": [1, 1], "news_game": {"r": -1}})"}) {
        EXPECT_THROW(io::problem_file_from_json(json::parse(text)), Error) << text;
    }
    try {
        io::problem_file_from_json(json::parse(R"({"sigma": [[1, 2], [2, 1]], "alpha": [1, 1]})"));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::NonPD);
    }
}

TEST(Io, ResultSerializers) {
    Matrix s(2, 2);
    s << 10, -3, -3, 1;
    Vector a(2);
    a << 1, 4;
    const Problem p(s, a);
    const json check = io::to_json(classify(p));
    EXPECT_EQ(check["verdict"], "Unsupported");
    const json scan = io::to_json(monotonicity_scan(p, io::parse_grid("0:2:0.05")));
    EXPECT_FALSE(scan["monotone"].get<bool>());
    EXPECT_EQ(scan["violations"][0]["source"], 0);
    const json orc = io::to_json(t_optimal(p, 0.5));
    EXPECT_NEAR(orc["q_star"][0].get<double>(), 1.0 / 6.0, 1e-8);
}
