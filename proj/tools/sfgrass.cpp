// Command-line front end: ingest Matrix Market or edge-list graphs, run the
// multilevel sparsification pipeline, and emit metrics JSON / CSV series.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sfgrass/sfgrass.hpp"

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

enum class LogLevel { error = 0, warn = 1, info = 2, debug = 3 };

LogLevel log_level() {
    static const LogLevel level = [] {
        const char* env = std::getenv("SFGRASS_LOG");
        if (!env) return LogLevel::warn;
        const std::string s(env);
        if (s == "error") return LogLevel::error;
        if (s == "warn") return LogLevel::warn;
        if (s == "info") return LogLevel::info;
        if (s == "debug") return LogLevel::debug;
        return LogLevel::warn;
    }();
    return level;
}

void log_at(LogLevel lvl, const std::string& msg) {
    if (static_cast<int>(lvl) <= static_cast<int>(log_level()))
        std::cerr << "sfgrass: " << msg << "\n";
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

sfgrass::Graph load_graph(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw sfgrass::IoError("cannot open input file '" + path + "'");
    std::string first;
    std::getline(in, first);
    in.seekg(0);
    if (first.rfind("%%MatrixMarket", 0) == 0) {
        log_at(LogLevel::info, "parsing Matrix Market file " + path);
        return sfgrass::matrix_to_laplacian_graph(sfgrass::parse_matrix_market(in));
    }
    log_at(LogLevel::info, "parsing edge list " + path);
    const auto result = sfgrass::read_edge_list(in);
    if (result.self_loops_dropped > 0)
        log_at(LogLevel::warn, std::to_string(result.self_loops_dropped) +
                                   " self-loop line(s) dropped from " + path);
    return result.graph;
}

std::ofstream open_output(const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw sfgrass::IoError("cannot open output file '" + path.string() + "'");
    return out;
}

struct PipelineFlags {
    double budget = 0.05;
    int k = 10;
    int sweeps = 8;
    std::uint64_t seed = 0;
    int max_cluster = 8;
    sfgrass::NodeId coarsest = 64;
    std::string score_embedding = "sparsifier";
    int batches = 8;
    bool heavy_edge = false;
    int threads = 1;

    void add_to(CLI::App& cmd, bool with_budget = true) {
        if (with_budget)
            cmd.add_option("--budget", budget, "off-tree edges per level as a fraction of nodes")
                ->check(CLI::NonNegativeNumber);
        cmd.add_option("--k", k, "number of smoothed test vectors")->check(CLI::PositiveNumber);
        cmd.add_option("--sweeps", sweeps, "Gauss-Seidel sweeps per vector")
            ->check(CLI::PositiveNumber);
        cmd.add_option("--seed", seed, "random seed");
        cmd.add_option("--max-cluster", max_cluster, "aggregation cluster size cap")
            ->check(CLI::Range(2, 1 << 20));
        cmd.add_option("--coarsest", coarsest, "stop coarsening at this many nodes")
            ->check(CLI::PositiveNumber);
        cmd.add_option("--score-embedding", score_embedding,
                       "embed the sparsifier (default) or the level graph for scoring")
            ->check(CLI::IsMember({"sparsifier", "graph"}));
        cmd.add_option("--batches", batches, "scoring rounds per level")
            ->check(CLI::PositiveNumber);
        cmd.add_flag("--heavy-edge", heavy_edge, "order merges by raw weight, not affinity");
        cmd.add_option("--threads", threads, "worker thread cap")->check(CLI::PositiveNumber);
    }

    sfgrass::SparsifyParams to_params() const {
        sfgrass::SparsifyParams p;
        p.budget_fraction = budget;
        p.score_embedding = score_embedding == "graph" ? sfgrass::ScoreEmbedding::graph
                                                       : sfgrass::ScoreEmbedding::sparsifier;
        p.score_batches = batches;
        p.embed.k = k;
        p.embed.sweeps = sweeps;
        p.embed.seed = seed;
        p.coarsen.max_cluster_size = max_cluster;
        p.coarsen.coarsest_size = coarsest;
        p.coarsen.heavy_edge = heavy_edge;
        p.coarsen.embed = p.embed;
        return p;
    }
};

json stats_to_json(const sfgrass::Graph& g, const sfgrass::SfGrassResult& result,
                   const PipelineFlags& flags, const std::string& input) {
    json levels = json::array();
    for (const auto& s : result.levels) {
        levels.push_back({{"level", s.level},
                          {"n", s.n},
                          {"m", s.m},
                          {"sparsifier_edges", s.sparsifier_edges},
                          {"tree_edges", s.tree_edges},
                          {"candidates", s.candidates},
                          {"edges_added", s.edges_added},
                          {"seconds", s.seconds}});
    }
    const auto& p = result.sparsifier;
    return json{{"schema_version", 1},
                {"input", input},
                {"seed", flags.seed},
                {"budget_fraction", flags.budget},
                {"n", g.num_nodes()},
                {"m", g.num_edges()},
                {"levels", levels},
                {"sparsifier_edges", p.graph.num_edges()},
                {"tree_edges", p.tree_edge_count()},
                {"off_tree_edges", p.off_tree_edge_count()},
                {"off_tree_fraction",
                 static_cast<double>(p.off_tree_edge_count()) /
                     static_cast<double>(std::max<sfgrass::NodeId>(1, g.num_nodes()))},
                {"coarsen_seconds", result.coarsen_seconds},
                {"sparsify_seconds", result.sparsify_seconds}};
}

int run_sparsify(const std::string& input, const PipelineFlags& flags, const std::string& outdir,
                 bool export_hierarchy) {
    const sfgrass::Graph g = load_graph(input);
    sfgrass::set_max_threads(flags.threads);
    const sfgrass::SfGrassResult result = sfgrass::sf_grass(g, flags.to_params());

    fs::create_directories(outdir);
    {
        auto out = open_output(fs::path(outdir) / "sparsifier.tsv");
        sfgrass::write_sparsifier(result.sparsifier, out);
    }
    {
        auto out = open_output(fs::path(outdir) / "stats.json");
        sfgrass::write_metrics(stats_to_json(g, result, flags, input), out);
    }
    if (export_hierarchy) {
        for (std::size_t i = 0; i < result.hierarchy.graphs.size(); ++i) {
            auto out = open_output(fs::path(outdir) / ("level_" + std::to_string(i) + ".tsv"));
            sfgrass::write_edge_list(result.hierarchy.graphs[i], out);
        }
        for (std::size_t i = 0; i < result.hierarchy.maps.size(); ++i) {
            auto out = open_output(fs::path(outdir) / ("map_" + std::to_string(i) + ".tsv"));
            sfgrass::write_aggregation_map(result.hierarchy.maps[i], out);
        }
    }
    log_at(LogLevel::info, "sparsifier: " + std::to_string(result.sparsifier.graph.num_edges()) +
                               " edges (" + std::to_string(result.sparsifier.tree_edge_count()) +
                               " tree) over " + std::to_string(result.hierarchy.num_levels()) +
                               " levels");
    return 0;
}

int run_condnum(const std::string& graph_path, const std::string& sparsifier_path,
                const std::string& method, double tol, int maxiter, sfgrass::NodeId dense_cap) {
    const sfgrass::Graph g = load_graph(graph_path);
    std::ifstream in(sparsifier_path);
    if (!in) throw sfgrass::IoError("cannot open input file '" + sparsifier_path + "'");
    const sfgrass::Sparsifier p = sfgrass::read_sparsifier(in, g.num_nodes());
    if (!sfgrass::is_subgraph(p, g))
        throw sfgrass::InvalidInput("NotSubgraph: sparsifier is not a subgraph of the graph");

    sfgrass::PencilOptions opts;
    opts.tol = tol;
    opts.maxiter = maxiter;
    opts.dense_cap = dense_cap;
    const auto spectrum = sfgrass::relative_condition_number(
        g, p, method == "dense" ? sfgrass::PencilMethod::dense : sfgrass::PencilMethod::iterative,
        opts);
    sfgrass::write_metrics(json{{"kappa", spectrum.kappa},
                                {"lambda_min", spectrum.lambda_min},
                                {"lambda_max", spectrum.lambda_max},
                                {"method", method},
                                {"converged", spectrum.converged},
                                {"iterations", spectrum.iterations}},
                           std::cout);
    return 0;
}

int run_sweep(const std::string& input, std::vector<double> budgets, const PipelineFlags& flags,
              const std::string& method, const std::string& outdir) {
    const sfgrass::Graph g = load_graph(input);
    sfgrass::set_max_threads(flags.threads);
    std::set<double> unique(budgets.begin(), budgets.end());

    std::ostringstream csv;
    csv << "budget_fraction,off_tree_edges,kappa\n";
    for (double budget : unique) {
        PipelineFlags f = flags;
        f.budget = budget;
        const auto result = sfgrass::sf_grass(g, f.to_params());
        sfgrass::PencilOptions opts;
        const auto spectrum = sfgrass::relative_condition_number(
            g, result.sparsifier,
            method == "dense" ? sfgrass::PencilMethod::dense : sfgrass::PencilMethod::iterative,
            opts);
        csv << budget << ',' << result.sparsifier.off_tree_edge_count() << ',' << spectrum.kappa
            << '\n';
        log_at(LogLevel::info, "budget " + std::to_string(budget) + ": kappa " +
                                   std::to_string(spectrum.kappa));
    }
    if (outdir.empty()) {
        std::cout << csv.str();
    } else {
        fs::create_directories(outdir);
        auto out = open_output(fs::path(outdir) / "sweep.csv");
        out << csv.str();
    }
    return 0;
}

int run_pcg(const std::string& input, const std::string& precond_kind, const PipelineFlags& flags,
            double tol, int maxiter, const std::string& outdir) {
    const sfgrass::Graph g = load_graph(input);
    sfgrass::set_max_threads(flags.threads);
    const std::vector<double> b = sfgrass::random_projected_rhs(g, flags.seed);

    const auto t_setup = std::chrono::steady_clock::now();
    sfgrass::LinearOperator precond;
    std::size_t precond_edges = 0;
    std::unique_ptr<sfgrass::SddFactorization> factor;
    if (precond_kind == "none") {
        precond = sfgrass::identity_operator();
    } else if (precond_kind == "jacobi") {
        std::vector<double> inv_degree(static_cast<std::size_t>(g.num_nodes()), 0.0);
        for (sfgrass::NodeId p = 0; p < g.num_nodes(); ++p)
            inv_degree[static_cast<std::size_t>(p)] =
                g.degree(p) > 0.0 ? 1.0 / g.degree(p) : 0.0;
        precond = [inv_degree](std::span<const double> r) {
            std::vector<double> z(r.size());
            for (std::size_t i = 0; i < r.size(); ++i) z[i] = inv_degree[i] * r[i];
            return z;
        };
    } else {
        sfgrass::Sparsifier p;
        if (precond_kind == "tree") {
            p = sfgrass::forest_sparsifier(g);
        } else {
            p = sfgrass::sf_grass(g, flags.to_params()).sparsifier;
        }
        precond_edges = p.graph.num_edges();
        factor = std::make_unique<sfgrass::SddFactorization>(p.graph);
        precond = [&f = *factor](std::span<const double> r) { return f.solve(r); };
    }
    const double setup_seconds = seconds_since(t_setup);

    const auto t_solve = std::chrono::steady_clock::now();
    const auto apply_a = [&g](std::span<const double> x) { return sfgrass::laplacian_apply(g, x); };
    const sfgrass::PcgResult result = sfgrass::pcg(apply_a, precond, b, tol, maxiter);
    const double solve_seconds = seconds_since(t_solve);

    sfgrass::write_metrics(json{{"precond", precond_kind},
                                {"n", g.num_nodes()},
                                {"m", g.num_edges()},
                                {"precond_edges", precond_edges},
                                {"iterations", result.iterations},
                                {"relres", result.relative_residual},
                                {"converged", result.converged},
                                {"tol", tol},
                                {"setup_seconds", setup_seconds},
                                {"solve_seconds", solve_seconds}},
                           std::cout);
    if (!outdir.empty()) {
        fs::create_directories(outdir);
        auto out = open_output(fs::path(outdir) / "residuals.csv");
        out << "iter,relres\n";
        for (std::size_t i = 0; i < result.residual_history.size(); ++i)
            out << (i + 1) << ',' << result.residual_history[i] << '\n';
    }
    return 0;
}

int run_gen(const std::string& kind, long long nx, long long ny, long long nz, long long n,
            const std::string& outdir) {
    constexpr long long kMaxNodes = 20'000'000;
    constexpr long long kMaxEdges = 60'000'000;
    std::vector<sfgrass::WeightedEdge> edges;
    long long nodes = 0;
    const auto check = [&](long long node_count, long long edge_count) {
        if (node_count <= 0) throw sfgrass::InvalidInput("gen: size must be positive");
        if (node_count > kMaxNodes || edge_count > kMaxEdges)
            throw sfgrass::InvalidInput("gen: size overflow (" + std::to_string(node_count) +
                                        " nodes, " + std::to_string(edge_count) + " edges)");
    };
    if (kind == "grid2d") {
        check(nx * ny, 2 * nx * ny);
        nodes = nx * ny;
        const auto id = [&](long long x, long long y) {
            return static_cast<sfgrass::NodeId>(x * ny + y);
        };
        for (long long x = 0; x < nx; ++x)
            for (long long y = 0; y < ny; ++y) {
                if (x + 1 < nx) edges.push_back({id(x, y), id(x + 1, y), 1.0});
                if (y + 1 < ny) edges.push_back({id(x, y), id(x, y + 1), 1.0});
            }
    } else if (kind == "grid3d") {
        check(nx * ny * nz, 3 * nx * ny * nz);
        nodes = nx * ny * nz;
        const auto id = [&](long long x, long long y, long long z) {
            return static_cast<sfgrass::NodeId>((x * ny + y) * nz + z);
        };
        for (long long x = 0; x < nx; ++x)
            for (long long y = 0; y < ny; ++y)
                for (long long z = 0; z < nz; ++z) {
                    if (x + 1 < nx) edges.push_back({id(x, y, z), id(x + 1, y, z), 1.0});
                    if (y + 1 < ny) edges.push_back({id(x, y, z), id(x, y + 1, z), 1.0});
                    if (z + 1 < nz) edges.push_back({id(x, y, z), id(x, y, z + 1), 1.0});
                }
    } else if (kind == "path") {
        check(n, n);
        nodes = n;
        for (long long i = 0; i + 1 < n; ++i)
            edges.push_back({static_cast<sfgrass::NodeId>(i), static_cast<sfgrass::NodeId>(i + 1), 1.0});
    } else if (kind == "complete") {
        check(n, n * (n - 1) / 2);
        nodes = n;
        for (long long i = 0; i < n; ++i)
            for (long long j = i + 1; j < n; ++j)
                edges.push_back({static_cast<sfgrass::NodeId>(i), static_cast<sfgrass::NodeId>(j), 1.0});
    } else {
        throw sfgrass::InvalidInput("gen: unknown kind '" + kind + "'");
    }
    const sfgrass::Graph g = sfgrass::build_graph(edges, static_cast<sfgrass::NodeId>(nodes));
    if (outdir.empty()) {
        sfgrass::write_edge_list(g, std::cout);
    } else {
        fs::create_directories(outdir);
        auto out = open_output(fs::path(outdir) / "graph.tsv");
        sfgrass::write_edge_list(g, out);
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"SF-GRASS: solver-free spectral graph sparsification"};
    app.require_subcommand(1);

    // sparsify
    auto* sparsify = app.add_subcommand("sparsify", "build a multilevel spectral sparsifier");
    std::string sp_input, sp_outdir = "out";
    bool sp_export_hierarchy = false;
    PipelineFlags sp_flags;
    sparsify->add_option("input", sp_input, "Matrix Market or edge-list graph")->required();
    sparsify->add_option("-o,--outdir", sp_outdir, "output directory");
    sparsify->add_flag("--export-hierarchy", sp_export_hierarchy,
                       "also write per-level edge lists and aggregation maps");
    sp_flags.add_to(*sparsify);

    // condnum
    auto* condnum = app.add_subcommand("condnum", "relative condition number of a pencil");
    std::string cn_graph, cn_sparsifier, cn_method = "dense";
    double cn_tol = 1e-4;
    int cn_maxiter = 500;
    sfgrass::NodeId cn_cap = sfgrass::kDefaultDenseCap;
    condnum->add_option("graph", cn_graph, "graph file")->required();
    condnum->add_option("sparsifier", cn_sparsifier, "sparsifier TSV")->required();
    condnum->add_option("--method", cn_method)->check(CLI::IsMember({"dense", "iterative"}));
    condnum->add_option("--tol", cn_tol, "iterative relative tolerance");
    condnum->add_option("--maxiter", cn_maxiter, "iterative iteration cap");
    condnum->add_option("--dense-cap", cn_cap, "node cap for the dense method");

    // sweep
    auto* sweep = app.add_subcommand("sweep", "condition number across a budget sweep");
    std::string sw_input, sw_method = "iterative", sw_outdir;
    std::vector<double> sw_budgets;
    PipelineFlags sw_flags;
    sweep->add_option("input", sw_input, "graph file")->required();
    sweep->add_option("--budgets", sw_budgets, "budget fractions")->delimiter(',');
    sweep->add_option("--method", sw_method)->check(CLI::IsMember({"dense", "iterative"}));
    sweep->add_option("-o,--outdir", sw_outdir, "write sweep.csv here instead of stdout");
    sw_flags.add_to(*sweep, /*with_budget=*/false);

    // pcg
    auto* pcg_cmd = app.add_subcommand("pcg", "preconditioned conjugate gradient benchmark");
    std::string pc_input, pc_precond = "sparsifier", pc_outdir;
    double pc_tol = 1e-3;
    int pc_maxiter = 1000;
    PipelineFlags pc_flags;
    pcg_cmd->add_option("input", pc_input, "graph file")->required();
    pcg_cmd->add_option("--precond", pc_precond)
        ->check(CLI::IsMember({"sparsifier", "tree", "jacobi", "none"}));
    pcg_cmd->add_option("--tol", pc_tol, "relative residual tolerance");
    pcg_cmd->add_option("--maxiter", pc_maxiter, "iteration cap");
    pcg_cmd->add_option("-o,--outdir", pc_outdir, "write residuals.csv here");
    pc_flags.add_to(*pcg_cmd);

    // gen
    auto* gen = app.add_subcommand("gen", "generate synthetic unit-weight graphs");
    std::string g_kind, g_outdir;
    long long g_nx = 4, g_ny = 4, g_nz = 4, g_n = 16;
    gen->add_option("kind", g_kind, "grid2d | grid3d | path | complete")->required();
    gen->add_option("--nx", g_nx);
    gen->add_option("--ny", g_ny);
    gen->add_option("--nz", g_nz);
    gen->add_option("--n", g_n, "node count for path/complete");
    gen->add_option("-o,--outdir", g_outdir, "write graph.tsv here instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*sparsify) return run_sparsify(sp_input, sp_flags, sp_outdir, sp_export_hierarchy);
        if (*condnum) return run_condnum(cn_graph, cn_sparsifier, cn_method, cn_tol, cn_maxiter, cn_cap);
        if (*sweep) return run_sweep(sw_input, sw_budgets, sw_flags, sw_method, sw_outdir);
        if (*pcg_cmd) return run_pcg(pc_input, pc_precond, pc_flags, pc_tol, pc_maxiter, pc_outdir);
        if (*gen) return run_gen(g_kind, g_nx, g_ny, g_nz, g_n, g_outdir);
    } catch (const sfgrass::NumericalBreakdown& e) {
        std::cerr << "sfgrass: numerical failure: " << e.what() << "\n";
        return 2;
    } catch (const sfgrass::Error& e) {
        std::cerr << "sfgrass: error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "sfgrass: internal error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
