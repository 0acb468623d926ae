#include "logsad/coreset.hpp"
#include "logsad/errors.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <set>

using namespace logsad;

namespace {

Matrix line(std::vector<float> xs) {
    const std::size_t n = xs.size();
    return Matrix(n, 1, std::move(xs));
}

}  // namespace

TEST(Coreset, FarthestPointIsPickedSecond) {
    const auto m = line({0.0f, 1.0f, 10.0f});
    EXPECT_EQ(coreset_select_from(m, 2, 0), (std::vector<std::size_t>{0, 2}));
    EXPECT_EQ(coreset_select_from(m, 3, 0), (std::vector<std::size_t>{0, 2, 1}));
}

TEST(Coreset, TiesGoToLowestIndex) {
    const auto m = line({0.0f, -2.0f, 2.0f, 1.0f});
    EXPECT_EQ(coreset_select_from(m, 2, 0), (std::vector<std::size_t>{0, 1}));
}

TEST(Coreset, FullBudgetSelectsEveryPointOnce) {
    std::mt19937_64 rng(3);
    const auto m = testutil::random_unit_rows(rng, 40, 5);
    const auto sel = coreset_select(m, 40, 11);
    EXPECT_EQ(std::set<std::size_t>(sel.begin(), sel.end()).size(), 40u);
    EXPECT_DOUBLE_EQ(coverage_radius(m, sel), 0.0);
}

TEST(Coreset, BudgetOneRadiusIsDistanceToFarthestPoint) {
    std::mt19937_64 rng(5);
    const auto m = testutil::random_unit_rows(rng, 30, 4);
    const auto sel = coreset_select(m, 1, 9);
    ASSERT_EQ(sel.size(), 1u);
    EXPECT_EQ(sel[0], coreset_first_index(30, 9));
    EXPECT_NEAR(coverage_radius(m, sel), oracle::radius(testutil::to_rows(m), sel), 1e-12);
}

TEST(Coreset, MatchesBruteForceGreedy) {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 25; ++trial) {
        const std::size_t n = 2 + rng() % 60;
        const std::size_t d = 1 + rng() % 8;
        const std::size_t budget = 1 + rng() % n;
        const auto m = testutil::random_unit_rows(rng, n, d);
        const std::uint64_t seed = rng();
        const auto got = coreset_select(m, budget, seed);
        const auto want = oracle::greedy_k_center(testutil::to_rows(m), budget, coreset_first_index(n, seed));
        EXPECT_EQ(got, want) << "trial " << trial;
    }
}

TEST(Coreset, RadiusShrinksAsBudgetGrows) {
    std::mt19937_64 rng(23);
    const auto m = testutil::random_unit_rows(rng, 80, 6);
    double previous = coverage_radius(m, coreset_select(m, 1, 4));
    for (std::size_t b = 2; b <= 80; b += 7) {
        const double r = coverage_radius(m, coreset_select(m, b, 4));
        EXPECT_LE(r, previous + 1e-12);
        previous = r;
    }
}

TEST(Coreset, SameSeedSameSelection) {
    std::mt19937_64 rng(29);
    const auto m = testutil::random_unit_rows(rng, 100, 3);
    EXPECT_EQ(coreset_select(m, 20, 77), coreset_select(m, 20, 77));
}

TEST(Coreset, OutOfRangeBudgetIsRejected) {
    const auto m = line({0.0f, 1.0f});
    EXPECT_THROW(coreset_select(m, 0, 1), ValidationError);
    EXPECT_THROW(coreset_select(m, 3, 1), ValidationError);
}
