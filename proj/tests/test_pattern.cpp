#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <random>

#include "nanprop/errors.hpp"
#include "nanprop/expression.hpp"
#include "nanprop/pattern.hpp"
#include "oracles.hpp"

using namespace nanprop;

namespace {

SparsityPattern random_trinary(std::mt19937_64& rng, std::size_t m, std::size_t n) {
    SparsityPattern p(m, n);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) p.set(i, j, static_cast<Cell>(rng() % 3));
    }
    return p;
}

}  // namespace

TEST_CASE("rows parse into cells") {
    auto p = SparsityPattern::from_rows({"10?", "011"});
    CHECK(p.rows() == 2);
    CHECK(p.cols() == 3);
    CHECK(p.at(0, 0) == Cell::Dep);
    CHECK(p.at(0, 1) == Cell::Zero);
    CHECK(p.at(0, 2) == Cell::Unknown);
    CHECK(p.count(Cell::Dep) == 3);
    CHECK(p.has_unknown());
    CHECK(p.is_dep(0, 2));
    CHECK_FALSE(p.is_dep(0, 2, UnknownAs::Zero));
    CHECK_THROWS_AS(SparsityPattern::from_rows({"10", "1"}), ParseError);
    CHECK_THROWS_AS(SparsityPattern::from_rows({"1x"}), ParseError);
}

TEST_CASE("binary view resolves unknowns") {
    auto p = SparsityPattern::from_rows({"1?0"});
    CHECK(p.binary(UnknownAs::Dep) == SparsityPattern::from_rows({"110"}));
    CHECK(p.binary(UnknownAs::Zero) == SparsityPattern::from_rows({"100"}));
}

TEST_CASE("union follows the dominance table") {
    const Cell all[] = {Cell::Zero, Cell::Unknown, Cell::Dep};
    for (Cell a : all) {
        for (Cell b : all) {
            SparsityPattern pa(1, 1, a), pb(1, 1, b);
            CHECK(unite(pa, pb).at(0, 0) == oracle::union_cell(a, b));
        }
    }
    std::mt19937_64 rng(7);
    for (int t = 0; t < 50; ++t) {
        auto a = random_trinary(rng, 5, 7), b = random_trinary(rng, 5, 7);
        auto u = unite(a, b);
        CHECK(u == unite(b, a));
        CHECK(unite(u, a) == u);
        for (std::size_t i = 0; i < 5; ++i) {
            for (std::size_t j = 0; j < 7; ++j) CHECK(u.at(i, j) == oracle::union_cell(a.at(i, j), b.at(i, j)));
        }
        CHECK(u.covers(a));
        CHECK(u.covers(b));
    }
    CHECK_THROWS_AS(unite(SparsityPattern(2, 3), SparsityPattern(3, 2)), DimensionMismatch);
}

TEST_CASE("compare splits disagreements by direction") {
    auto truth = SparsityPattern::from_rows({"110", "011"});
    auto est = SparsityPattern::from_rows({"100", "111"});
    auto d = compare(truth, est);
    REQUIRE(d.false_negatives.size() == 1);
    CHECK(d.false_negatives[0] == CellIndex{0, 1});
    REQUIRE(d.extra_deps.size() == 1);
    CHECK(d.extra_deps[0] == CellIndex{1, 0});

    auto swapped = compare(est, truth);
    CHECK(swapped.false_negatives == d.extra_deps);
    CHECK(swapped.extra_deps == d.false_negatives);
    CHECK(compare(truth, truth).empty());
    CHECK_THROWS_AS(compare(truth, SparsityPattern(2, 2)), DimensionMismatch);
}

TEST_CASE("gramian adjacency matches pairwise row intersection") {
    std::mt19937_64 rng(11);
    for (int t = 0; t < 40; ++t) {
        auto p = random_trinary(rng, 1 + rng() % 6, 1 + rng() % 8);
        auto adj = gramian_adjacency(p, UnknownAs::Dep);
        REQUIRE(adj.size() == p.cols());
        for (std::size_t j = 0; j < p.cols(); ++j) {
            CHECK_FALSE(adj.adjacent(j, j));
            std::size_t deg = 0;
            for (std::size_t k = 0; k < p.cols(); ++k) {
                CHECK(adj.adjacent(j, k) == oracle::columns_intersect(p, j, k));
                deg += adj.adjacent(j, k);
            }
            CHECK(adj.degree(j) == deg);
        }
        auto zero_view = gramian_adjacency(p, UnknownAs::Zero);
        auto bin = p.binary(UnknownAs::Zero);
        for (std::size_t j = 0; j < p.cols(); ++j) {
            for (std::size_t k = 0; k < p.cols(); ++k) {
                CHECK(zero_view.adjacent(j, k) == oracle::columns_intersect(bin, j, k));
            }
        }
    }
}

TEST_CASE("pattern text round trips") {
    std::mt19937_64 rng(3);
    for (int t = 0; t < 20; ++t) {
        auto p = random_trinary(rng, 1 + rng() % 5, 1 + rng() % 9);
        CHECK(parse_pattern(to_text(p)) == p);
    }
    CHECK(to_text(SparsityPattern::from_rows({"10", "1?"})) == "nanprop-pattern v1 2 2\n10\n1?\n");
    CHECK(parse_pattern("nanprop-pattern v1 1 2\r\n10\r\n") == SparsityPattern::from_rows({"10"}));
    CHECK(parse_pattern("nanprop-pattern v1 0 0\n") == SparsityPattern(0, 0));
}

TEST_CASE("pattern text is parsed strictly") {
    CHECK_THROWS_AS(parse_pattern(""), ParseError);
    CHECK_THROWS_AS(parse_pattern("pattern v1 1 1\n1\n"), ParseError);
    CHECK_THROWS_AS(parse_pattern("nanprop-pattern v2 1 1\n1\n"), ParseError);
    CHECK_THROWS_AS(parse_pattern("nanprop-pattern v1 2 1\n1\n"), ParseError);
    CHECK_THROWS_AS(parse_pattern("nanprop-pattern v1 1 2\n1\n"), ParseError);
    CHECK_THROWS_AS(parse_pattern("nanprop-pattern v1 1 2\n1z\n"), ParseError);
    CHECK_THROWS_AS(parse_pattern("nanprop-pattern v1 1 1\n1\n0\n"), ParseError);
    CHECK_THROWS_AS(parse_pattern("nanprop-pattern v1 a 1\n1\n"), ParseError);
}

TEST_CASE("pattern files") {
    auto dir = std::filesystem::temp_directory_path() / "nanprop_test_pattern";
    std::filesystem::create_directories(dir);
    auto p = SparsityPattern::from_rows({"1?0", "001"});
    write_pattern_file(dir / "p.txt", p);
    CHECK(read_pattern_file(dir / "p.txt") == p);
    CHECK_THROWS_AS(read_pattern_file(dir / "missing.txt"), ParseError);
    std::filesystem::remove_all(dir);
}

TEST_CASE("random patterns hit the requested density") {
    auto p = random_pattern(5, 64, 64, 0.05);
    const double density = static_cast<double>(p.count(Cell::Dep)) / (64.0 * 64.0);
    CHECK(density == doctest::Approx(0.05).epsilon(0.3));
    CHECK(random_pattern(5, 64, 64, 0.05) == p);
}
