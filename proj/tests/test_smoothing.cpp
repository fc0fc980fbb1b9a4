#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "sfgrass/smoothing.hpp"
#include "sfgrass/spectral_metrics.hpp"
#include "test_util.hpp"

using namespace sfgrass;
using Catch::Approx;

TEST_CASE("random_test_vectors columns are deflated and normalized") {
    const EmbeddingMatrix x = random_test_vectors(4, 2, 42);
    REQUIRE(x.columns.size() == 2);
    for (const auto& col : x.columns) {
        double sum = 0.0, norm2 = 0.0;
        for (double v : col) {
            sum += v;
            norm2 += v * v;
        }
        REQUIRE(std::abs(sum) < 1e-12);
        REQUIRE(norm2 == Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("random_test_vectors is deterministic") {
    const EmbeddingMatrix a = random_test_vectors(32, 4, 7);
    const EmbeddingMatrix b = random_test_vectors(32, 4, 7);
    for (int c = 0; c < 4; ++c)
        for (std::size_t i = 0; i < 32; ++i)
            REQUIRE(a.columns[c][i] == b.columns[c][i]);

    const EmbeddingMatrix other = random_test_vectors(32, 4, 8);
    bool any_diff = false;
    for (std::size_t i = 0; i < 32; ++i) any_diff |= a.columns[0][i] != other.columns[0][i];
    REQUIRE(any_diff);
}

TEST_CASE("random_test_vectors fails on a single node") {
    REQUIRE_THROWS_AS(random_test_vectors(1, 1, 0), DegenerateColumn);
}

TEST_CASE("gauss_seidel_sweep hand trace on P3") {
    const Graph g = test_util::path_graph(3);
    std::vector<double> x{1.0, 0.0, -1.0};
    const double before = quadratic_form(g, x);
    REQUIRE(before == Approx(2.0));
    gauss_seidel_sweep(g, x, SweepOrder::forward);
    REQUIRE(x[0] == Approx(0.0).margin(1e-15));
    REQUIRE(x[1] == Approx(-0.5));
    REQUIRE(x[2] == Approx(-0.5));
    REQUIRE(quadratic_form(g, x) == Approx(0.25));
}

TEST_CASE("gauss_seidel_sweep keeps constant vectors fixed") {
    const Graph g = test_util::k3();
    std::vector<double> x(3, 3.25);
    gauss_seidel_sweep(g, x, SweepOrder::forward);
    for (double v : x) REQUIRE(v == 3.25);
    gauss_seidel_sweep(g, x, SweepOrder::backward);
    for (double v : x) REQUIRE(v == 3.25);
}

TEST_CASE("gauss_seidel_sweep never increases the energy") {
    for (std::uint64_t seed = 1; seed <= 25; ++seed) {
        const Graph g = test_util::random_connected_graph(30, 45, seed);
        std::vector<double> x = test_util::random_vector(30, seed + 1000);
        double energy = quadratic_form(g, x);
        for (int s = 0; s < 4; ++s) {
            gauss_seidel_sweep(g, x, s % 2 == 0 ? SweepOrder::forward : SweepOrder::backward);
            const double next = quadratic_form(g, x);
            REQUIRE(next <= energy + 1e-12 * std::max(1.0, energy));
            energy = next;
        }
    }
}

TEST_CASE("gauss_seidel_sweep rejects isolated nodes") {
    const Graph g = build_graph(std::vector<WeightedEdge>{{0, 1, 1.0}}, 3);
    std::vector<double> x{1.0, 2.0, 3.0};
    REQUIRE_THROWS_AS(gauss_seidel_sweep(g, x, SweepOrder::forward), IsolatedNode);
}

TEST_CASE("embed approaches the Fiedler direction on a path") {
    const Graph g = test_util::path_graph(16);
    const EmbeddingMatrix x = embed(g, {1, 32, 3});
    const auto& col = x.columns[0];
    const double rayleigh = quadratic_form(g, col); // column already unit norm
    const double lambda2 = 2.0 * (1.0 - std::cos(std::numbers::pi / 16.0));
    const EigenPairs eig = dense_eigen(g);
    REQUIRE(eig.values[1] == Approx(lambda2).epsilon(1e-9));
    REQUIRE(rayleigh <= 2.0 * lambda2);
}

TEST_CASE("embed validates parameters") {
    REQUIRE_THROWS_AS(embed(test_util::k3(), {1, 0, 0}), InvalidInput);
    REQUIRE_THROWS_AS(embed(test_util::k3(), {0, 8, 0}), InvalidInput);
}

TEST_CASE("embed columns are orthogonal to ones and unit norm") {
    const EmbeddingMatrix x = embed(test_util::k3(), {2, 8, 11});
    for (const auto& col : x.columns) {
        double sum = 0.0, norm2 = 0.0;
        for (double v : col) {
            sum += v;
            norm2 += v * v;
        }
        REQUIRE(std::abs(sum) < 1e-9 * 3);
        REQUIRE(norm2 == Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("embed deflates per component and zeroes singletons") {
    // triangle + isolated node + disconnected pair
    const Graph g = build_graph(
        std::vector<WeightedEdge>{{0, 1, 1.0}, {1, 2, 1.0}, {0, 2, 1.0}, {4, 5, 1.0}}, 6);
    const EmbeddingMatrix x = embed(g, {2, 4, 5});
    for (const auto& col : x.columns) {
        REQUIRE(col[3] == 0.0);                        // singleton component
        REQUIRE(col[4] + col[5] == Approx(0.0).margin(1e-12)); // pair deflated
        REQUIRE(col[0] + col[1] + col[2] == Approx(0.0).margin(1e-9));
    }
}

TEST_CASE("embed output does not depend on the thread count") {
    const Graph g = test_util::grid2d(12, 12);
    set_max_threads(1);
    const EmbeddingMatrix a = embed(g, {6, 8, 123});
    set_max_threads(4);
    const EmbeddingMatrix b = embed(g, {6, 8, 123});
    set_max_threads(1);
    for (int c = 0; c < 6; ++c)
        for (std::size_t i = 0; i < a.columns[c].size(); ++i)
            REQUIRE(a.columns[c][i] == b.columns[c][i]);
}
