#include <cmath>
#include <gtest/gtest.h>
#include "test_util.hpp"

using namespace gknock;
using namespace gknock::testing;

using Grouping = KroneckerGramOperator::Grouping;

TEST(Vectorize, ColumnStacking)
{
    mat_t Y(2, 2);
    Y << 1, 2, 3, 4;
    vec_t expect(4);
    expect << 1, 3, 2, 4;
    EXPECT_EQ(vectorize_response(Y), expect);
    EXPECT_EQ(unvectorize_response(expect, 2, 2), Y);
    const mat_t col = random_normal(5, 1, 1);
    EXPECT_EQ(vectorize_response(col), col.col(0));
    EXPECT_THROW(unvectorize_response(expect, 3, 2), validation_error);
}

TEST(MultitaskGroups, Formula)
{
    EXPECT_EQ(multitask_groups(3, 2), (group_list_t{{0, 3}, {1, 4}, {2, 5}}));
    EXPECT_EQ(multitask_groups(4, 1), singleton_groups(4));
    const auto g = multitask_groups(7, 4);
    std::vector<int> seen(28, 0);
    for (const auto& grp : g)
        for (auto j : grp) ++seen[j];
    for (int c : seen) EXPECT_EQ(c, 1);
    EXPECT_THROW(multitask_groups(0, 2), validation_error);
}

TEST(KroneckerDesign, GramIdentity)
{
    const mat_t X = random_normal(8, 3, 2);
    const mat_t XX = kron_identity(3, X);
    const mat_t G = XX.transpose() * XX;
    const mat_t S = X.transpose() * X;
    for (index_t a = 0; a < 9; ++a) {
        for (index_t b = 0; b < 9; ++b) {
            const double expect = (a / 3 == b / 3) ? S(a % 3, b % 3) : 0.0;
            EXPECT_NEAR(G(a, b), expect, 1e-12);
        }
    }
}

TEST(KroneckerDesign, ImplicitProductsMatchDense)
{
    const KroneckerDesign K{random_normal(7, 4, 3), 3};
    const mat_t D = K.materialize();
    ASSERT_EQ(D.rows(), K.rows());
    ASSERT_EQ(D.cols(), K.cols());
    const vec_t b = random_normal(12, 1, 4).col(0);
    const vec_t y = random_normal(21, 1, 5).col(0);
    EXPECT_LT((K.multiply(b) - D * b).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((K.transpose_multiply(y) - D.transpose() * y).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(BlockKnockoff, SingleResponseIsPlainKnockoff)
{
    const mat_t Xt = random_normal(10, 3, 6);
    EXPECT_EQ(block_knockoff(Xt, 1).materialize(), Xt);
    EXPECT_THROW(block_knockoff(Xt, 0), validation_error);
}

TEST(BlockKnockoff, SatisfiesGroupConditions)
{
    const mat_t X = normalized_columns(random_normal(30, 5, 7));
    const auto aug = construct_knockoffs(X, 3);
    const index_t r = 3;
    const mat_t XX = kron_identity(r, X);
    const mat_t XXt = block_knockoff(aug.X_tilde, r).materialize();
    const mat_t SS = kron_identity(r, aug.S);
    const auto report = verify_knockoff_conditions(XX, XXt, SS, multitask_groups(5, r), 1e-8);
    EXPECT_TRUE(report.pass);
}

TEST(KroneckerOperator, LayoutRoundTrip)
{
    const KroneckerGramOperator op(random_normal(6, 4, 8), random_normal(6, 3, 9));
    const vec_t v = random_normal(12, 1, 10).col(0);
    EXPECT_EQ(op.to_external(op.to_internal(v)), v);
    EXPECT_EQ(op.num_groups(), 4);
    EXPECT_EQ(op.group_size(0), 3);
    const KroneckerGramOperator entries(random_normal(6, 4, 8), random_normal(6, 3, 9), Grouping::entries);
    EXPECT_EQ(entries.num_groups(), 12);
}

TEST(KroneckerOperator, MatchesMaterializedOracle)
{
    for (int seed = 0; seed < 4; ++seed) {
        const index_t n = 20, p = 5, r = 3;
        const mat_t Z = normalized_columns(random_normal(n, p, 20 + seed));
        mat_t B = mat_t::Zero(p, r);
        B.row(1) = random_normal(1, r, 30 + seed).row(0) * 2.0;
        const mat_t Y = Z * B + random_normal(n, r, 40 + seed);

        const KroneckerGramOperator kop(Z, Y, Grouping::rows);
        const auto dop = DenseGramOperator::from_design(kron_identity(r, Z), vectorize_response(Y),
                                                        multitask_groups(p, r));
        EXPECT_NEAR(lambda_max(kop), lambda_max(dop), 1e-12);
        EXPECT_NEAR(kop.lipschitz(), dop.lipschitz(), 1e-10);

        SolverOptions opts;
        opts.kkt_tol = 1e-12;
        const double lambda = 0.4 * lambda_max(kop);
        const auto rk = solve_group_lasso(kop, lambda, vec_t::Zero(p * r), kop.lipschitz(), opts);
        const auto rd = solve_group_lasso(dop, lambda, vec_t::Zero(p * r), dop.lipschitz(), opts);
        EXPECT_LT((kop.to_external(rk.b) - dop.to_external(rd.b)).cwiseAbs().maxCoeff(), 1e-8);
    }
}

TEST(KroneckerOperator, MatchesMatrixFormObjective)
{
    // proximal gradient run directly on 1/2 ||Y - Z C||_F^2 + lambda sum_j ||C_j.||
    const index_t n = 15, p = 4, r = 2;
    const mat_t Z = normalized_columns(random_normal(n, p, 50));
    mat_t B = mat_t::Zero(p, r);
    B(0, 0) = 3;
    B(0, 1) = -2;
    const mat_t Y = Z * B + random_normal(n, r, 51);
    const KroneckerGramOperator op(Z, Y, Grouping::rows);
    const double lambda = 0.3 * lambda_max(op);

    const double L = op.lipschitz();
    mat_t C = mat_t::Zero(p, r);
    for (int it = 0; it < 20000; ++it) {
        mat_t V = C - (Z.transpose() * (Z * C - Y)) / L;
        for (index_t j = 0; j < p; ++j) {
            const double nrm = V.row(j).norm();
            V.row(j) *= nrm > lambda / L ? 1.0 - lambda / (L * nrm) : 0.0;
        }
        C = V;
    }
    SolverOptions opts;
    opts.kkt_tol = 1e-12;
    const auto res = solve_group_lasso(op, lambda, vec_t::Zero(p * r), L, opts);
    const mat_t Chat = unvectorize_response(op.to_external(res.b), p, r);
    EXPECT_LT((Chat - C).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(MultitaskFilter, SingleResponseReducesToUngrouped)
{
    FilterConfig cfg;
    cfg.grid_size = 60;
    for (int seed = 0; seed < 3; ++seed) {
        const mat_t X = normalized_columns(random_normal(80, 20, 60 + seed));
        vec_t beta = vec_t::Zero(20);
        beta.head(5).setConstant(4.0);
        const vec_t y = X * beta + random_normal(80, 1, 70 + seed).col(0);
        const auto mt = run_multitask_knockoff(X, mat_t(y), 0.2, variant_t::knockoff, cfg);
        const auto ug = run_group_knockoff_filter(singleton_design(X), Response(y), 0.2,
                                                  variant_t::knockoff, cfg);
        EXPECT_EQ(mt.selected_features, ug.result.selected);
        EXPECT_EQ(mt.inner.W, ug.result.W);
    }
}

TEST(MultitaskFilter, StrongRowsRecovered)
{
    sim::MultitaskSimConfig c;
    c.signal_scale = 8.0;
    const auto inst = sim::gen_multitask_instance(c, 123);
    const auto res = run_multitask_knockoff(inst.X, inst.Y, 0.2, variant_t::knockoff);
    const auto score = sim::evaluate_selection(res.selected_features, inst.truth.signal_groups);
    EXPECT_GE(score.power, 0.8);
}

TEST(MultitaskFilter, Validation)
{
    EXPECT_THROW(run_multitask_knockoff(random_normal(30, 5, 1), random_normal(29, 2, 2), 0.2,
                                        variant_t::knockoff),
                 validation_error);
}

TEST(Pooled, FeatureMajorEntries)
{
    EXPECT_EQ(features_from_entries({0, 1, 5}, 2), (std::vector<index_t>{0, 2}));
    EXPECT_EQ(features_from_entries({}, 3), (std::vector<index_t>{}));

    const mat_t X = normalized_columns(random_normal(40, 6, 80));
    const auto aug = construct_knockoffs(X, 1);
    const mat_t Y = random_normal(40, 3, 81);
    EXPECT_EQ(pooled_statistics(X, aug.X_tilde, Y, {}).size(), 18u);
}
