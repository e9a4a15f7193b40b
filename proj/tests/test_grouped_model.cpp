#include <cmath>
#include <limits>
#include <gtest/gtest.h>
#include "test_util.hpp"

using namespace gknock;
using namespace gknock::testing;

TEST(GroupedDesign, ContiguousLabels)
{
    const auto d = new_grouped_design(mat_t::Random(4, 3), std::vector<int>{1, 1, 2});
    ASSERT_EQ(d.m(), 2);
    EXPECT_EQ(d.group(0), (std::vector<index_t>{0, 1}));
    EXPECT_EQ(d.group(1), (std::vector<index_t>{2}));
    EXPECT_EQ(d.group_sizes(), (std::vector<index_t>{2, 1}));
}

TEST(GroupedDesign, NonContiguousLabels)
{
    const auto d = new_grouped_design(mat_t::Random(4, 3), std::vector<int>{1, 2, 1});
    ASSERT_EQ(d.m(), 2);
    EXPECT_EQ(d.group(0), (std::vector<index_t>{0, 2}));
    EXPECT_EQ(d.group(1), (std::vector<index_t>{1}));
    EXPECT_EQ(d.group_of(2), 0);
}

TEST(GroupedDesign, StringLabelsFirstAppearanceOrder)
{
    const auto d = new_grouped_design(mat_t::Random(4, 4),
                                      std::vector<std::string>{"b", "a", "b", "c"});
    EXPECT_EQ(d.group_ids(), (std::vector<std::string>{"b", "a", "c"}));
}

TEST(GroupedDesign, RejectsNaN)
{
    mat_t X = mat_t::Random(4, 3);
    X(2, 1) = std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW(new_grouped_design(X, std::vector<int>{1, 1, 2}), validation_error);
}

TEST(GroupedDesign, RejectsBadLabels)
{
    EXPECT_THROW(new_grouped_design(mat_t::Random(4, 3), std::vector<int>{}), validation_error);
    EXPECT_THROW(new_grouped_design(mat_t::Random(4, 3), std::vector<int>{1, 2}), validation_error);
    EXPECT_THROW(new_grouped_design(mat_t::Random(4, 2), std::vector<std::string>{"a", ""}),
                 validation_error);
}

TEST(GroupedDesign, PartitionInvariant)
{
    for (int seed = 0; seed < 20; ++seed) {
        std::mt19937 rng(seed);
        std::uniform_int_distribution<int> lab(1, 5);
        const index_t p = 3 + seed;
        std::vector<int> labels(p);
        for (auto& l : labels) l = lab(rng);
        const auto d = new_grouped_design(random_normal(10, p, seed), labels);
        index_t total = 0;
        for (auto s : d.group_sizes()) total += s;
        EXPECT_EQ(total, p);
    }
}

TEST(NormalizeColumns, ScalesToUnitNorm)
{
    mat_t X(4, 2);
    X << 3, 1, 4, 1, 0, 1, 0, 1;
    const auto d = normalize_columns(new_grouped_design(X, std::vector<int>{1, 2}));
    EXPECT_DOUBLE_EQ(d.X()(0, 0), 0.6);
    EXPECT_DOUBLE_EQ(d.X()(1, 0), 0.8);
    EXPECT_EQ(d.X()(2, 0), 0.0);
    for (index_t j = 0; j < 2; ++j) EXPECT_NEAR(d.X().col(j).norm(), 1.0, 1e-12);
    EXPECT_EQ(d.groups(), (group_list_t{{0}, {1}}));
}

TEST(NormalizeColumns, Idempotent)
{
    const auto once = normalize_columns(contiguous_design(random_normal(30, 6, 1), 3));
    const auto twice = normalize_columns(once);
    EXPECT_LE((once.X() - twice.X()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(NormalizeColumns, ZeroColumnNamesIndex)
{
    mat_t X = mat_t::Random(5, 3);
    X.col(1).setZero();
    try {
        normalize_columns(singleton_design(X));
        FAIL() << "expected validation_error";
    } catch (const validation_error& e) {
        EXPECT_NE(std::string(e.what()).find("column 2"), std::string::npos);
    }
}

TEST(Gram, OrthonormalColumnsGiveIdentity)
{
    const mat_t Q = random_orthogonal(8, 3).leftCols(4);
    EXPECT_LE((gram(Q) - mat_t::Identity(4, 4)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Gram, IdenticalColumns)
{
    mat_t X(3, 2);
    X.col(0) = vec_t::Constant(3, 1.0 / std::sqrt(3.0));
    X.col(1) = X.col(0);
    EXPECT_NEAR(gram(X)(0, 1), 1.0, 1e-15);
}

TEST(Gram, MatchesNaiveDotProducts)
{
    const mat_t X = random_normal(50, 10, 5);
    const mat_t G = gram(X);
    for (index_t a = 0; a < 10; ++a) {
        for (index_t b = 0; b < 10; ++b) {
            double s = 0.0;
            for (index_t i = 0; i < 50; ++i) s += X(i, a) * X(i, b);
            EXPECT_NEAR(G(a, b), s, 1e-12);
        }
    }
    EXPECT_EQ((G - G.transpose()).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Gram, UnitDiagonalAfterNormalize)
{
    const auto d = normalize_columns(contiguous_design(random_normal(40, 8, 9) * 3.7, 2));
    EXPECT_LE((gram(d).diagonal() - vec_t::Ones(8)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Gram, InvariantUnderRowRotation)
{
    for (int seed = 0; seed < 5; ++seed) {
        const mat_t X = random_normal(30, 6, 100 + seed);
        const mat_t Q = random_orthogonal(30, 200 + seed);
        EXPECT_LE((gram(Q * X) - gram(X)).cwiseAbs().maxCoeff(), 1e-10);
    }
}
