// attn_opt: command-line front end for the attention library.
//
// Exit codes: 0 success, 2 invalid input, 3 prior outside the supported
// class when a theorem is required, 1 numerical failure.

#include <attn/io.hpp>

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace attn;
using io::json;

namespace {

struct Options {
    std::string input;
    std::string grid;
    std::string out;
    std::uint64_t seed = 0;
    bool seed_set = false;
    bool require_theorem = false;
};

io::ProblemFile load(const std::string& path) {
    std::stringstream buf;
    if (path == "-") {
        buf << std::cin.rdbuf();
    } else {
        std::ifstream in(path);
        if (!in) throw Error(ErrorKind::InvalidProblem, "cannot open " + path);
        buf << in.rdbuf();
    }
    json j;
    try {
        j = json::parse(buf.str());
    } catch (const json::exception& e) {
        throw Error(ErrorKind::InvalidProblem, std::string("malformed JSON: ") + e.what());
    }
    return io::problem_file_from_json(j);
}

// Writes the JSON result to stdout, or only the table when one is produced;
// with --out both are also saved as files.
void emit(const Options& o, const std::string& name, const json& result, const std::string* table) {
    if (!o.out.empty()) {
        fs::create_directories(o.out);
        std::ofstream(fs::path(o.out) / (name + ".json")) << result.dump(2) << '\n';
        if (table) std::ofstream(fs::path(o.out) / (name + ".csv")) << *table;
    }
    if (table)
        std::cout << *table;
    else
        std::cout << result.dump(2) << '\n';
}

int run_check(const Options& o) {
    const auto f = load(o.input);
    const auto rep = classify(f.problem);
    emit(o, "check", io::to_json(rep), nullptr);
    return (o.require_theorem && !rep.supported()) ? 3 : 0;
}

int run_solve(const Options& o) {
    const auto f = load(o.input);
    const StagePath path = solve_stages(f.problem);
    const json result = io::to_json(path);
    if (o.grid.empty()) {
        emit(o, "solve", result, nullptr);
        return 0;
    }
    std::ostringstream csv;
    io::CsvWriter w(csv);
    std::vector<std::string> cols{"t"};
    for (Index i = 0; i < path.dim; ++i) cols.push_back("n" + std::to_string(i + 1));
    for (Index i = 0; i < path.dim; ++i) cols.push_back("beta" + std::to_string(i + 1));
    w.header(cols);
    for (double t : io::parse_grid(o.grid)) {
        const Vector n = n_of_t(path, t), b = beta_of_t(path, t);
        std::vector<double> row{t};
        row.insert(row.end(), n.data(), n.data() + n.size());
        row.insert(row.end(), b.data(), b.data() + b.size());
        w.row(row);
    }
    const std::string table = csv.str();
    emit(o, "solve", result, &table);
    return 0;
}

int run_oracle(const Options& o, double t, const std::vector<double>& floor) {
    const auto f = load(o.input);
    Vector fl = Vector::Zero(f.problem.dim());
    if (!floor.empty()) {
        if (static_cast<Index>(floor.size()) != f.problem.dim())
            throw Error(ErrorKind::WrongDimension, "floor must have K entries");
        fl = Eigen::Map<const Vector>(floor.data(), static_cast<Index>(floor.size()));
    }
    emit(o, "oracle", io::to_json(constrained_t_optimal(f.problem, t, fl)), nullptr);
    return 0;
}

int run_scan(const Options& o) {
    if (o.grid.empty()) throw Error(ErrorKind::InvalidConfig, "scan needs --grid");
    const auto f = load(o.input);
    const auto rep = monotonicity_scan(f.problem, io::parse_grid(o.grid));
    emit(o, "scan", io::to_json(rep), nullptr);
    return 0;
}

int run_binary_choice(const Options& o) {
    const auto f = load(o.input);
    if (!f.binary_choice) throw Error(ErrorKind::InvalidProblem, "input has no binary_choice block");
    const BinaryChoiceProblem b(f.problem.sigma(), f.problem.alpha(), f.binary_choice->cost);
    const auto sol = solve_stopping_boundary(b, f.binary_choice->grid);
    json result{{"switch_time", switch_time(b)},
                {"relabeled", b.relabeled()},
                {"boundary_at_0", sol.boundary.front()},
                {"accuracy_at_0", sol.accuracy.front()},
                {"horizon", sol.time.back()}};
    std::ostringstream csv;
    io::CsvWriter w(csv);
    w.header({"t", "posterior_variance", "boundary", "accuracy"});
    if (!o.grid.empty()) {
        for (double t : io::parse_grid(o.grid)) {
            const double var = posterior_variance_path(b, t);
            const double p = choice_accuracy(sol, t);
            w.row({t, var, boundary_at(sol, t), p});
        }
    } else {
        const size_t stride = std::max<size_t>(1, sol.time.size() / 1000);
        for (size_t j = 0; j < sol.time.size(); j += stride)
            w.row({sol.time[j], sol.variance[j], sol.boundary[j], sol.accuracy[j]});
    }
    const std::string table = csv.str();
    emit(o, "binary_choice", result, &table);
    return 0;
}

int run_news(const Options& o, bool verify) {
    const auto f = load(o.input);
    if (!f.news_game) throw Error(ErrorKind::InvalidProblem, "input has no news_game block");
    json result = verify ? io::to_json(verify_equilibrium(*f.news_game)) : io::to_json(equilibrium(*f.news_game));
    emit(o, "news_eq", result, nullptr);
    return 0;
}

int run_manipulate(const Options& o) {
    const auto f = load(o.input);
    if (!f.manipulation) throw Error(ErrorKind::InvalidProblem, "input has no manipulation block");
    std::vector<double> grid = o.grid.empty() ? f.manipulation->t_grid : io::parse_grid(o.grid);
    if (grid.empty()) throw Error(ErrorKind::InvalidConfig, "manipulation needs a t_grid or --grid");
    const auto rep = compare_cumulative(f.problem, f.manipulation->T, grid);
    std::ostringstream csv;
    io::CsvWriter w(csv);
    std::vector<std::string> cols{"t"};
    for (Index i = 0; i < f.problem.dim(); ++i) cols.push_back("diff" + std::to_string(i + 1));
    w.header(cols);
    for (size_t m = 0; m < grid.size(); ++m) {
        std::vector<double> row{grid[m]};
        for (Index i = 0; i < f.problem.dim(); ++i) row.push_back(rep.diffs(static_cast<Index>(m), i));
        w.row(row);
    }
    const std::string table = csv.str();
    emit(o, "manipulate", io::to_json(rep), &table);
    return 0;
}

int run_simulate(const Options& o) {
    const auto f = load(o.input);
    SimConfig cfg = f.sim.value_or(SimConfig{});
    if (o.seed_set) cfg.seed = o.seed;
    const StagePath path = solve_stages(f.problem);
    const SimResult res = simulate(f.problem, path, cfg);
    std::ostringstream csv;
    io::CsvWriter w(csv);
    w.header({"t", "mean", "empirical_variance", "analytic_variance", "se_variance", "posterior_variance"});
    for (size_t j = 0; j < res.times.size(); ++j)
        w.row({res.times[j], res.mean_of_means[j], res.empirical_variance[j], res.analytic_variance[j],
               res.se_variance(j), res.posterior_variance[j]});
    json result{{"n_paths", cfg.n_paths}, {"seed", cfg.seed}, {"prior_state_mean", res.prior_state_mean}};
    const std::string table = csv.str();
    emit(o, "simulate", result, &table);
    return 0;
}

int exit_code(ErrorKind k) {
    switch (k) {
    case ErrorKind::UnsupportedPrior:
    case ErrorKind::AssumptionViolated: return 3;
    case ErrorKind::NoConvergence:
    case ErrorKind::GridTooCoarse: return 1;
    default: return 2;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Attention allocation across correlated Gaussian sources"};
    app.require_subcommand(1);
    Options o;
    double oracle_t = 0.0;
    std::vector<double> floor;
    bool verify = false;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--input", o.input, "Problem file (JSON), or - for stdin")->required();
        sub->add_option("--out", o.out, "Directory for result files");
    };
    auto* check = app.add_subcommand("check", "Classify the prior against the sufficient conditions");
    common(check);
    check->add_flag("--require-theorem", o.require_theorem, "Exit with 3 when no condition holds");
    auto* solve = app.add_subcommand("solve", "Optimal attention stages");
    common(solve);
    solve->add_option("--grid", o.grid, "Sample n(t) and beta(t) on a:b:step (CSV)");
    auto* oracle = app.add_subcommand("oracle", "Direct minimization of posterior variance at budget t");
    common(oracle);
    oracle->add_option("--t", oracle_t, "Attention budget")->required();
    oracle->add_option("--floor", floor, "Lower bounds on attention, one per source");
    auto* scan = app.add_subcommand("scan", "Check monotonicity of the optimal attention over a grid");
    common(scan);
    scan->add_option("--grid", o.grid, "Budgets a:b:step")->required();
    auto* bc = app.add_subcommand("binary-choice", "Stopping boundary and choice accuracy");
    common(bc);
    bc->add_option("--grid", o.grid, "Report at times a:b:step");
    auto* news = app.add_subcommand("news-eq", "Symmetric equilibrium of the news game");
    common(news);
    news->add_flag("--verify", verify, "Search a deviation grid for profitable deviations");
    auto* man = app.add_subcommand("manipulate", "Effect of forced early attention on source 1");
    common(man);
    man->add_option("--grid", o.grid, "Times a:b:step (overrides the file)");
    auto* sim = app.add_subcommand("simulate", "Monte Carlo check of the optimal policy");
    common(sim);
    sim->add_option("--seed", o.seed, "Random seed (default 0)")->each([&](const std::string&) { o.seed_set = true; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*check) return run_check(o);
        if (*solve) return run_solve(o);
        if (*oracle) return run_oracle(o, oracle_t, floor);
        if (*scan) return run_scan(o);
        if (*bc) return run_binary_choice(o);
        if (*news) return run_news(o, verify);
        if (*man) return run_manipulate(o);
        if (*sim) return run_simulate(o);
    } catch (const Error& e) {
        std::cerr << "attn_opt: " << e.what() << '\n';
        return exit_code(e.kind());
    } catch (const json::exception& e) {
        std::cerr << "attn_opt: invalid input: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "attn_opt: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
