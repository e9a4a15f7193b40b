// Acceptance run: prints one PASS/FAIL line per criterion and exits nonzero
// if any criterion fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>
#include <gknock/gknock.hpp>

using namespace gknock;

namespace {

constexpr std::uint64_t master_seed = 20160511;

struct Outcome
{
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double a)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

mat_t gaussian(index_t rows, index_t cols, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    return sim::standard_normal(rows, cols, rng);
}

mat_t normalized(mat_t X)
{
    for (index_t j = 0; j < X.cols(); ++j) X.col(j).normalize();
    return X;
}

mat_t random_orthogonal(index_t n, std::uint64_t seed)
{
    Eigen::HouseholderQR<mat_t> qr(gaussian(n, n, seed));
    return qr.householderQ() * mat_t::Identity(n, n);
}

/// Grouped instance with correlated rows and a few signal groups.
struct Instance
{
    GroupedDesign design;
    mat_t X_tilde;
    vec_t y;
};

Instance grouped_instance(std::uint64_t seed, index_t n, index_t p, index_t size, double rho,
                          double gamma_factor, index_t k)
{
    sim::GroupSparseSimConfig c;
    c.n = n;
    c.p = p;
    c.group_size = size;
    c.k = k;
    c.rho = rho;
    c.gamma_factor = gamma_factor;
    auto inst = sim::gen_group_sparse_instance(c, sim::derive_seed(master_seed, 0, seed, 0));
    const auto aug = construct_group_knockoffs(inst.design, sim::derive_seed(master_seed, 0, seed, 1));
    return {inst.design, aug.X_tilde, inst.y.y};
}

/// Two-sided exact binomial p-value for P(success) = 1/2: twice the smaller tail.
double binomial_two_sided(int successes, int trials)
{
    auto log_pmf = [&](int x) {
        return std::lgamma(trials + 1.0) - std::lgamma(x + 1.0) - std::lgamma(trials - x + 1.0)
               - trials * std::log(2.0);
    };
    double lower = 0.0, upper = 0.0;
    for (int x = 0; x <= successes; ++x) lower += std::exp(log_pmf(x));
    for (int x = successes; x <= trials; ++x) upper += std::exp(log_pmf(x));
    return std::min(1.0, 2.0 * std::min(lower, upper));
}

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// 1. Knockoff conditions on 50 correlated grouped designs.
Outcome knockoff_condition_fidelity()
{
    const auto t0 = std::chrono::steady_clock::now();
    const double rhos[] = {0.0, 0.5, 0.9};
    const double gammas[] = {0.0, 0.5};
    double worst = 0.0;
    int passed = 0;
    for (int i = 0; i < 50; ++i) {
        const double rho = rhos[i % 3], gf = gammas[(i / 3) % 2];
        sim::GroupSparseSimConfig c;
        c.n = 200;
        c.p = 60;
        c.group_size = 5;
        c.k = 0;
        c.rho = rho;
        c.gamma_factor = gf;
        const auto inst = sim::gen_group_sparse_instance(c, sim::derive_seed(master_seed, 1, i, 0));
        const auto aug = construct_group_knockoffs(inst.design, sim::derive_seed(master_seed, 1, i, 1));
        const auto r = verify_knockoff_conditions(inst.design, aug, 1e-8);
        worst = std::max({worst, r.gram_deviation, r.cross_deviation});
        passed += r.pass;
    }
    const double secs = seconds_since(t0);
    return {passed == 50 && secs < 30,
            std::to_string(passed) + "/50 pass, max deviation " + fmt("%.2e", worst) + ", "
                + fmt("%.1f", secs) + " s"};
}

// 2. gamma = min(1, 2(1 - rho)) for equicorrelated singleton designs.
Outcome equivariant_gamma_closed_form()
{
    double worst = 0.0;
    const index_t p = 5, n = 20;
    for (int i = 0; i <= 9; ++i) {
        const double rho = i / 10.0;
        const mat_t Sigma = sim::equicorrelated_covariance(p, rho);
        const double expect = std::min(1.0, 2.0 * (1.0 - rho));
        worst = std::max(worst, std::abs(equivariant_gamma(Sigma, singleton_design(mat_t::Identity(p, p)).groups()) - expect));
        // a design whose Gram matrix is exactly Sigma
        const mat_t R = Eigen::LLT<mat_t>(Sigma).matrixU();
        const mat_t X = random_orthogonal(n, 200 + i).leftCols(p) * R;
        const auto aug = construct_knockoffs(X, 300 + i);
        worst = std::max(worst, std::abs(aug.gamma - expect));
    }
    return {worst <= 1e-10, "max |gamma - closed form| " + fmt("%.2e", worst)};
}

// 3. KKT along full paths, the block soft-threshold closed form, and exact zeros above lambda_max.
Outcome solver_correctness()
{
    double worst_kkt = 0.0;
    int non_converged = 0;
    bool zero_exact = true;
    for (int i = 0; i < 20; ++i) {
        const auto in = grouped_instance(300 + i, 200, 60, 5, 0.3 * (i % 3), 0.0, 4);
        const auto groups = augmented_groups(in.design.groups(), in.design.p());
        const mat_t A = augment(in.design.X(), in.X_tilde);
        const auto op = DenseGramOperator::from_design(A, in.y, groups);
        const double lm = lambda_max(op);
        PathOptions po;
        po.stop_when_all_entered = false;
        const auto path = group_entry_times(op, make_lambda_grid(lm, 100, 1e-3), po);
        for (const auto& s : path.stats) worst_kkt = std::max(worst_kkt, s.kkt);
        non_converged += path.non_converged;
        for (double f : {1.0, 1.01, 3.0}) {
            const auto r = solve_group_lasso(op, f * lm, vec_t::Zero(op.dim()), op.lipschitz(), {});
            zero_exact = zero_exact && r.b.cwiseAbs().maxCoeff() == 0.0;
        }
    }
    const mat_t Q = random_orthogonal(8, 31);
    const vec_t y = 3.0 * Q.col(0) + 4.0 * Q.col(1) + Q.col(5);
    SolverOptions tight;
    tight.kkt_tol = 1e-12;
    const auto r = solve_group_lasso(Q.leftCols(2), y, {{0, 1}}, 2.5, vec_t::Zero(2), tight);
    const double closed = std::max(std::abs(r.b[0] - 1.5), std::abs(r.b[1] - 2.0));
    return {worst_kkt <= 1e-6 && non_converged == 0 && closed <= 1e-8 && zero_exact,
            "max KKT " + fmt("%.2e", worst_kkt) + ", non-converged " + std::to_string(non_converged)
                + ", closed-form error " + fmt("%.2e", closed) + ", zero above lambda_max "
                + (zero_exact ? "exact" : "NOT exact")};
}

// 4. W depends on the data only through the Gram matrix and X^T y.
Outcome sufficiency()
{
    double worst = 0.0;
    for (int i = 0; i < 10; ++i) {
        const auto in = grouped_instance(400 + i, 200, 60, 5, 0.5, 0.0, 4);
        const mat_t Q = random_orthogonal(200, 500 + i);
        const auto& X = in.design.X();
        const auto W = knockoff_statistics(X, in.X_tilde, in.y, in.design.groups(), {}).W;
        const auto Wq = knockoff_statistics(Q * X, Q * in.X_tilde, Q * in.y, in.design.groups(), {}).W;
        for (size_t j = 0; j < W.size(); ++j) worst = std::max(worst, std::abs(W[j] - Wq[j]));
    }
    return {worst < 1e-6, "max |dW| over 10 rotations " + fmt("%.2e", worst)};
}

// 5. Swapping group i flips W_i and nothing else.
Outcome group_antisymmetry()
{
    double worst = 0.0;
    int checks = 0;
    for (int i = 0; i < 5; ++i) {
        const auto in = grouped_instance(600 + i, 200, 60, 5, 0.5, 0.0, 4);
        const auto& X = in.design.X();
        const auto& groups = in.design.groups();
        const auto W = knockoff_statistics(X, in.X_tilde, in.y, groups, {}).W;
        for (index_t g = 0; g < in.design.m(); ++g) {
            const auto [Xs, Xts] = swap_group(X, in.X_tilde, groups[g]);
            const auto Ws = knockoff_statistics(Xs, Xts, in.y, groups, {}).W;
            for (size_t j = 0; j < W.size(); ++j) {
                const double expect = static_cast<index_t>(j) == g ? -W[j] : W[j];
                worst = std::max(worst, std::abs(Ws[j] - expect));
            }
            ++checks;
        }
    }
    return {worst <= 1e-10,
            std::to_string(checks) + " swaps, max deviation " + fmt("%.2e", worst)};
}

// 6. Null signs are fair coins.
Outcome null_sign_symmetry()
{
    sim::GroupSparseSimConfig c;
    c.n = 300;
    c.p = 100;
    c.group_size = 5;
    c.k = 0;
    int positive = 0, nonzero = 0, trials = 0;
    while (nonzero < 500 || trials < 40) {
        const auto inst = sim::gen_group_sparse_instance(c, sim::derive_seed(master_seed, 6, trials, 0));
        const auto run = run_group_knockoff_filter(inst.design, inst.y, 0.2, variant_t::knockoff,
                                                   [&] {
                                                       FilterConfig fc;
                                                       fc.seed = sim::derive_seed(master_seed, 6, trials, 1);
                                                       return fc;
                                                   }());
        for (double w : run.result.W) {
            nonzero += w != 0.0;
            positive += w > 0.0;
        }
        ++trials;
    }
    const double pval = binomial_two_sided(positive, nonzero);
    return {nonzero >= 500 && pval > 0.01,
            std::to_string(positive) + " positive of " + std::to_string(nonzero) + " nonzero over "
                + std::to_string(trials) + " trials, two-sided p = " + fmt("%.3f", pval)};
}

// 7. Group FDR of group knockoff+ at desk scale.
Outcome group_fdr_control()
{
    const auto t0 = std::chrono::steady_clock::now();
    sim::GroupSparseSimConfig c;  // n=600, p=200, groups of 5, k=8, amplitude 3.5, rho=0, q=0.2
    c.seed = master_seed;
    const auto rep = sim::run_experiment(std::vector{c}, {sim::Method::group_knockoff_plus}, 200);
    const auto& s = rep.summary(0, sim::Method::group_knockoff_plus);
    const double bound = 0.2 + 2 * s.se_fdp;
    return {s.failures == 0 && s.mean_fdp <= bound,
            "mean FDP " + fmt("%.4f", s.mean_fdp) + " <= " + fmt("%.4f", bound) + " (SE "
                + fmt("%.4f", s.se_fdp) + "), power " + fmt("%.3f", s.mean_power) + ", "
                + fmt("%.0f", seconds_since(t0)) + " s"};
}

// 8. Group knockoff keeps its power under strong within-group correlation.
Outcome power_ordering()
{
    sim::GroupSparseSimConfig c;
    c.rho = 0.8;
    c.gamma_factor = 0.0;
    c.seed = master_seed + 8;
    const auto rep = sim::run_experiment(
        std::vector{c}, {sim::Method::group_knockoff, sim::Method::ungrouped_knockoff}, 100);
    const auto& g = rep.summary(0, sim::Method::group_knockoff);
    const auto& u = rep.summary(0, sim::Method::ungrouped_knockoff);
    const double pooled = std::sqrt(g.se_power * g.se_power + u.se_power * u.se_power);
    const double gap = g.mean_power - u.mean_power;
    return {g.failures == 0 && u.failures == 0 && gap >= 2 * pooled,
            "power group " + fmt("%.3f", g.mean_power) + " vs ungrouped " + fmt("%.3f", u.mean_power)
                + ", gap " + fmt("%.3f", gap) + " >= " + fmt("%.3f", 2 * pooled)};
}

// 9. Multitask FDR control under correlated noise; multitask at least as powerful as pooled.
Outcome multitask_fdr_and_power()
{
    using sim::Method;
    sim::MultitaskSimConfig c;  // n=150, p=50, r=5, k=10, scale 2 sqrt(5)
    c.seed = master_seed + 9;
    const auto sweep = sim::make_sweep(c, "rho-y", {0.0, 0.5});
    const std::vector<Method> methods = {Method::multitask_knockoff_plus, Method::multitask_knockoff,
                                         Method::pooled_knockoff};
    const auto rep = sim::run_experiment(sweep, methods, 100);
    bool pass = true;
    std::string detail;
    for (index_t cell = 0; cell < 2; ++cell) {
        const auto& plus = rep.summary(cell, Method::multitask_knockoff_plus);
        const auto& mt = rep.summary(cell, Method::multitask_knockoff);
        const auto& pooled = rep.summary(cell, Method::pooled_knockoff);
        const double bound = 0.2 + 2 * plus.se_fdp;
        const double se = std::sqrt(mt.se_power * mt.se_power + pooled.se_power * pooled.se_power);
        pass = pass && plus.failures == 0 && plus.mean_fdp <= bound
               && mt.mean_power >= pooled.mean_power - 2 * se;
        detail += std::string(cell ? "; " : "") + "rho_y=" + fmt("%.1f", sweep[cell].rho_y) + ": FDR+ "
                  + fmt("%.3f", plus.mean_fdp) + " <= " + fmt("%.3f", bound) + ", power multitask "
                  + fmt("%.3f", mt.mean_power) + " vs pooled " + fmt("%.3f", pooled.mean_power);
    }
    return {pass, detail};
}

// 10. r = 1 reduction and the Kronecker operator against a materialized oracle.
Outcome reduction_identities()
{
    bool same_sets = true;
    for (int i = 0; i < 10; ++i) {
        const mat_t X = normalized(gaussian(100, 30, 1000 + i));
        vec_t beta = vec_t::Zero(30);
        beta.head(6).setConstant(3.5);
        const vec_t y = X * beta + gaussian(100, 1, 1100 + i).col(0);
        FilterConfig fc;
        fc.seed = 1200 + i;
        const auto mt = run_multitask_knockoff(X, mat_t(y), 0.2, variant_t::knockoff, fc);
        const auto ug = run_group_knockoff_filter(singleton_design(X), Response(y), 0.2,
                                                  variant_t::knockoff, fc);
        same_sets = same_sets && mt.selected_features == ug.result.selected;
    }
    double worst = 0.0;
    for (int i = 0; i < 10; ++i) {
        const index_t n = 20, p = 5, r = 3;
        const mat_t Z = normalized(gaussian(n, p, 1300 + i));
        const mat_t Y = Z.leftCols(2) * gaussian(2, r, 1400 + i) * 2.0 + gaussian(n, r, 1500 + i);
        const KroneckerGramOperator kop(Z, Y);
        const auto dop = DenseGramOperator::from_design(kron_identity(r, Z), vectorize_response(Y),
                                                        multitask_groups(p, r));
        SolverOptions tight;
        tight.kkt_tol = 1e-12;
        for (double f : {0.7, 0.3, 0.05}) {
            const double lambda = f * lambda_max(kop);
            const auto rk = solve_group_lasso(kop, lambda, vec_t::Zero(p * r), kop.lipschitz(), tight);
            const auto rd = solve_group_lasso(dop, lambda, vec_t::Zero(p * r), dop.lipschitz(), tight);
            worst = std::max(worst, (kop.to_external(rk.b) - dop.to_external(rd.b)).cwiseAbs().maxCoeff());
        }
    }
    return {same_sets && worst <= 1e-8,
            std::string("r=1 selections ") + (same_sets ? "identical" : "DIFFER")
                + ", Kronecker vs materialized max difference " + fmt("%.2e", worst)};
}

// 11. Threshold arithmetic on W = (3, -2, 1).
Outcome filter_arithmetic()
{
    const WStatistics W = {3, -2, 1};
    const auto a = apply_threshold(W, 0.5, variant_t::knockoff);
    const auto b = apply_threshold(W, 0.4, variant_t::knockoff);
    const auto c = apply_threshold(W, 0.5, variant_t::knockoff_plus);
    const auto d = apply_threshold(W, 0.4, variant_t::knockoff_plus);
    const bool ok = a.threshold == 1.0 && a.selected == std::vector<index_t>{0, 2}
                    && b.threshold == 3.0 && b.selected == std::vector<index_t>{0}
                    && !c.threshold && c.selected.empty() && !d.threshold && d.selected.empty()
                    && fdp_estimate(W, 1, variant_t::knockoff) == 0.5
                    && fdp_estimate(W, 2, variant_t::knockoff) == 1.0
                    && fdp_estimate(W, 3, variant_t::knockoff) == 0.0
                    && fdp_estimate(W, 1, variant_t::knockoff_plus) == 1.0
                    && fdp_estimate(W, 2, variant_t::knockoff_plus) == 2.0
                    && fdp_estimate(W, 3, variant_t::knockoff_plus) == 1.0;
    return {ok, "q=0.5: t=1 {1,3}; q=0.4: t=3 {1}; knockoff+ at q=0.5 and 0.4: none"};
}

} // namespace

int main()
{
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"knockoff condition fidelity", knockoff_condition_fidelity},
        {"equivariant gamma closed form", equivariant_gamma_closed_form},
        {"solver correctness", solver_correctness},
        {"sufficiency", sufficiency},
        {"group antisymmetry", group_antisymmetry},
        {"null sign symmetry", null_sign_symmetry},
        {"group FDR control", group_fdr_control},
        {"power ordering under within-group correlation", power_ordering},
        {"multitask FDR control and power", multitask_fdr_and_power},
        {"reduction identities", reduction_identities},
        {"filter arithmetic", filter_arithmetic},
    };
    int failed = 0;
    for (size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::printf("[%s] %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                    o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
