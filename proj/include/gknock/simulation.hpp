#pragma once
#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <map>
#include <random>
#include <string>
#include <thread>
#include <utility>
#include <vector>
#include <gknock/multitask.hpp>

namespace gknock {
namespace sim {

/// Group-sparse regression setting. Defaults are desk scale.
struct GroupSparseSimConfig
{
    index_t n = 600;
    index_t p = 200;
    index_t group_size = 5;
    index_t k = 8;
    double amplitude = 3.5;
    double rho = 0.0;           // within-group correlation
    double gamma_factor = 0.0;  // between-group correlation is gamma_factor * rho
    double q = 0.2;
    int trials = 100;
    std::uint64_t seed = 20160511;

    index_t m() const { return group_size > 0 ? p / group_size : 0; }

    void validate() const
    {
        if (group_size <= 0 || p % group_size != 0) {
            throw validation_error("p must be a multiple of group_size");
        }
        if (k < 0 || k > m()) throw validation_error("k must lie in [0, m]");
        if (!(rho >= 0 && rho < 1)) throw validation_error("rho must lie in [0, 1)");
        if (!(gamma_factor >= 0 && gamma_factor <= 1)) {
            throw validation_error("gamma_factor must lie in [0, 1]");
        }
        if (!(q > 0 && q < 1)) throw validation_error("q must lie in (0, 1)");
        if (trials < 1) throw validation_error("trials must be positive");
    }

    static GroupSparseSimConfig paper_scale()
    {
        GroupSparseSimConfig c;
        c.n = 3000;
        c.p = 1000;
        c.k = 20;
        return c;
    }
};

/// Multitask regression setting; the full-scale defaults already run at desk scale.
struct MultitaskSimConfig
{
    index_t n = 150;
    index_t p = 50;
    index_t r = 5;
    index_t k = 10;
    double signal_scale = -1.0;  // negative: 2 sqrt(r)
    double rho_x = 0.0;
    double rho_y = 0.0;
    double q = 0.2;
    int trials = 100;
    std::uint64_t seed = 20160511;

    double scale() const { return signal_scale > 0 ? signal_scale : 2.0 * std::sqrt(double(r)); }

    void validate() const
    {
        if (r < 1 || p < 1 || n < 1) throw validation_error("n, p, r must be positive");
        if (k < 0 || k > p) throw validation_error("k must lie in [0, p]");
        if (!(rho_x >= 0 && rho_x < 1)) throw validation_error("rho_x must lie in [0, 1)");
        if (!(rho_y >= 0 && rho_y < 1)) throw validation_error("rho_y must lie in [0, 1)");
        if (!(q > 0 && q < 1)) throw validation_error("q must lie in (0, 1)");
        if (trials < 1) throw validation_error("trials must be positive");
    }
};

/// splitmix64 finalizer.
inline std::uint64_t mix(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

/// Independent per-(cell, trial, stream) seed derived from the master seed.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t cell, std::uint64_t trial,
                                 std::uint64_t stream = 0)
{
    return mix(mix(mix(mix(master) ^ cell) ^ trial) ^ stream);
}

/// Correlation rho inside a group and gamma_factor * rho between groups.
inline mat_t within_between_covariance(index_t p, const group_list_t& groups, double rho,
                                       double gamma_factor)
{
    std::vector<index_t> owner(p, -1);
    for (size_t g = 0; g < groups.size(); ++g)
        for (auto j : groups[g]) owner[j] = static_cast<index_t>(g);
    mat_t S(p, p);
    for (index_t a = 0; a < p; ++a)
        for (index_t b = 0; b < p; ++b)
            S(a, b) = a == b ? 1.0 : (owner[a] == owner[b] ? rho : gamma_factor * rho);
    Eigen::SelfAdjointEigenSolver<mat_t> es(S, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-10) {
        throw validation_error("within/between correlation parameters give a non-PSD covariance");
    }
    return S;
}

/// (Sigma_X)_jk = rho^|j-k|.
inline mat_t tapered_covariance(index_t p, double rho_x)
{
    if (!(std::abs(rho_x) < 1)) throw validation_error("|rho_x| must be below 1");
    mat_t S(p, p);
    for (index_t a = 0; a < p; ++a)
        for (index_t b = 0; b < p; ++b) S(a, b) = std::pow(rho_x, static_cast<double>(std::abs(a - b)));
    return S;
}

/// Unit diagonal, rho_y off the diagonal.
inline mat_t equicorrelated_covariance(index_t r, double rho_y)
{
    const double lower = r > 1 ? -1.0 / static_cast<double>(r - 1) : -1.0;
    if (!(rho_y > lower && rho_y < 1)) {
        throw validation_error("equicorrelation rho_y outside the PSD range");
    }
    mat_t S = mat_t::Constant(r, r, rho_y);
    S.diagonal().setOnes();
    return S;
}

inline mat_t standard_normal(index_t rows, index_t cols, std::mt19937_64& rng)
{
    std::normal_distribution<double> normal;
    mat_t Z(rows, cols);
    for (index_t j = 0; j < cols; ++j)
        for (index_t i = 0; i < rows; ++i) Z(i, j) = normal(rng);
    return Z;
}

/// n iid rows from N(0, cov); identity covariance skips the factorization.
inline mat_t gaussian_rows(index_t n, const mat_t& cov, std::mt19937_64& rng)
{
    mat_t Z = standard_normal(n, cov.rows(), rng);
    if (cov.isIdentity(0.0)) return Z;
    Eigen::SelfAdjointEigenSolver<mat_t> es(cov);
    const vec_t root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    const mat_t R = es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
    return Z * R;
}

/// k distinct indices from [0, total), sorted.
inline std::vector<index_t> choose_subset(index_t total, index_t k, std::mt19937_64& rng)
{
    std::vector<index_t> all(total);
    for (index_t i = 0; i < total; ++i) all[i] = i;
    for (index_t i = 0; i < k; ++i) {
        std::uniform_int_distribution<index_t> pick(i, total - 1);
        std::swap(all[i], all[pick(rng)]);
    }
    all.resize(k);
    std::sort(all.begin(), all.end());
    return all;
}

struct GroupSparseInstance
{
    GroupedDesign design;
    Response y;
    GroundTruth truth;
};

inline GroupSparseInstance gen_group_sparse_instance(const GroupSparseSimConfig& cfg,
                                                     std::uint64_t trial_seed)
{
    cfg.validate();
    std::mt19937_64 rng(trial_seed);
    const index_t m = cfg.m();
    group_list_t groups(m);
    for (index_t j = 0; j < cfg.p; ++j) groups[j / cfg.group_size].push_back(j);

    const mat_t cov = within_between_covariance(cfg.p, groups, cfg.rho, cfg.gamma_factor);
    GroupedDesign design = normalize_columns(contiguous_design(gaussian_rows(cfg.n, cov, rng),
                                                               cfg.group_size));
    GroundTruth truth;
    truth.signal_groups = choose_subset(m, cfg.k, rng);
    vec_t beta = vec_t::Zero(cfg.p);
    std::bernoulli_distribution coin(0.5);
    for (auto g : truth.signal_groups)
        for (auto j : design.group(g)) beta[j] = coin(rng) ? cfg.amplitude : -cfg.amplitude;

    std::normal_distribution<double> normal;
    vec_t y = design.X() * beta;
    for (index_t i = 0; i < cfg.n; ++i) y[i] += normal(rng);
    truth.beta = std::move(beta);
    return {std::move(design), Response(std::move(y)), std::move(truth)};
}

struct MultitaskInstance
{
    mat_t X;
    mat_t Y;
    mat_t B;
    GroundTruth truth;  // signal_groups are the nonzero rows of B
};

inline MultitaskInstance gen_multitask_instance(const MultitaskSimConfig& cfg,
                                                std::uint64_t trial_seed)
{
    cfg.validate();
    std::mt19937_64 rng(trial_seed);
    MultitaskInstance inst;
    inst.X = gaussian_rows(cfg.n, tapered_covariance(cfg.p, cfg.rho_x), rng);
    for (index_t j = 0; j < cfg.p; ++j) inst.X.col(j).normalize();

    inst.truth.signal_groups = choose_subset(cfg.p, cfg.k, rng);
    inst.B = mat_t::Zero(cfg.p, cfg.r);
    for (auto j : inst.truth.signal_groups) {
        vec_t u = standard_normal(cfg.r, 1, rng).col(0);
        u.normalize();
        inst.B.row(j) = cfg.scale() * u.transpose();
    }
    const mat_t E = gaussian_rows(cfg.n, equicorrelated_covariance(cfg.r, cfg.rho_y), rng);
    inst.Y = inst.X * inst.B + E;
    return inst;
}

struct SelectionScore
{
    double fdp = 0.0;
    double power = 0.0;
};

/// fdp = |sel \ signal| / max(|sel|, 1); power = |sel & signal| / max(|signal|, 1).
inline SelectionScore evaluate_selection(const std::vector<index_t>& selected,
                                         const std::vector<index_t>& signal)
{
    std::vector<index_t> sel(selected), sig(signal);
    std::sort(sel.begin(), sel.end());
    sel.erase(std::unique(sel.begin(), sel.end()), sel.end());
    std::sort(sig.begin(), sig.end());
    std::vector<index_t> hit;
    std::set_intersection(sel.begin(), sel.end(), sig.begin(), sig.end(), std::back_inserter(hit));
    SelectionScore s;
    s.fdp = static_cast<double>(sel.size() - hit.size())
            / static_cast<double>(std::max<size_t>(sel.size(), 1));
    s.power = static_cast<double>(hit.size()) / static_cast<double>(std::max<size_t>(sig.size(), 1));
    return s;
}

enum class Method
{
    group_knockoff,
    group_knockoff_plus,
    ungrouped_knockoff,
    ungrouped_knockoff_plus,
    multitask_knockoff,
    multitask_knockoff_plus,
    pooled_knockoff,
    pooled_knockoff_plus,
    parallel_knockoff,
    parallel_knockoff_plus,
};

inline const std::vector<std::pair<Method, std::string>>& method_names()
{
    static const std::vector<std::pair<Method, std::string>> names{
        {Method::group_knockoff, "group-knockoff"},
        {Method::group_knockoff_plus, "group-knockoff+"},
        {Method::ungrouped_knockoff, "ungrouped-knockoff"},
        {Method::ungrouped_knockoff_plus, "ungrouped-knockoff+"},
        {Method::multitask_knockoff, "multitask-knockoff"},
        {Method::multitask_knockoff_plus, "multitask-knockoff+"},
        {Method::pooled_knockoff, "pooled-knockoff"},
        {Method::pooled_knockoff_plus, "pooled-knockoff+"},
        {Method::parallel_knockoff, "parallel-knockoff"},
        {Method::parallel_knockoff_plus, "parallel-knockoff+"},
    };
    return names;
}

inline std::string to_string(Method m)
{
    for (const auto& [k, v] : method_names())
        if (k == m) return v;
    return "unknown";
}

inline Method parse_method(const std::string& s)
{
    for (const auto& [k, v] : method_names())
        if (v == s) return k;
    throw usage_error("unknown method '" + s + "'");
}

inline variant_t method_variant(Method m)
{
    switch (m) {
    case Method::group_knockoff_plus:
    case Method::ungrouped_knockoff_plus:
    case Method::multitask_knockoff_plus:
    case Method::pooled_knockoff_plus:
    case Method::parallel_knockoff_plus:
        return variant_t::knockoff_plus;
    default:
        return variant_t::knockoff;
    }
}

inline bool is_group_sparse_method(Method m)
{
    return m == Method::group_knockoff || m == Method::group_knockoff_plus
           || m == Method::ungrouped_knockoff || m == Method::ungrouped_knockoff_plus;
}

inline std::vector<Method> default_group_sparse_methods()
{
    return {Method::group_knockoff, Method::group_knockoff_plus, Method::ungrouped_knockoff,
            Method::ungrouped_knockoff_plus};
}

inline std::vector<Method> default_multitask_methods()
{
    return {Method::multitask_knockoff, Method::multitask_knockoff_plus, Method::pooled_knockoff,
            Method::pooled_knockoff_plus, Method::parallel_knockoff, Method::parallel_knockoff_plus};
}

using Settings = std::vector<std::pair<std::string, double>>;

struct TrialRecord
{
    index_t cell = 0;
    int trial = 0;
    Method method = Method::group_knockoff;
    double fdp = 0.0;
    double power = 0.0;
    index_t n_selected = 0;
    double threshold = 0.0;  // 0 when no threshold qualified
    double gamma = 0.0;
    int non_converged = 0;   // grid points where the solver hit max_iter
    bool failed = false;
    std::string error;
};

struct CellSummary
{
    index_t cell = 0;
    Settings settings;
    Method method = Method::group_knockoff;
    int trials = 0;
    int failures = 0;
    bool flagged = false;  // more than 5% of trials failed
    double mean_fdp = 0.0, se_fdp = 0.0;
    double mean_power = 0.0, se_power = 0.0;
    double mean_selected = 0.0;
};

struct SimulationReport
{
    std::string setting;  // "group-sparse" or "multitask"
    std::vector<Settings> cells;
    std::vector<Method> methods;
    std::vector<TrialRecord> records;
    std::vector<CellSummary> summaries;

    const CellSummary& summary(index_t cell, Method m) const
    {
        for (const auto& s : summaries)
            if (s.cell == cell && s.method == m) return s;
        throw validation_error("no summary for cell " + std::to_string(cell) + " / " + to_string(m));
    }
};

inline Settings settings_of(const GroupSparseSimConfig& c)
{
    return {{"n", double(c.n)},         {"p", double(c.p)},
            {"m", double(c.m())},       {"group_size", double(c.group_size)},
            {"k", double(c.k)},         {"amplitude", c.amplitude},
            {"rho", c.rho},             {"gamma_factor", c.gamma_factor},
            {"q", c.q}};
}

inline Settings settings_of(const MultitaskSimConfig& c)
{
    return {{"n", double(c.n)},   {"p", double(c.p)},         {"r", double(c.r)},
            {"k", double(c.k)},   {"signal_scale", c.scale()}, {"rho_x", c.rho_x},
            {"rho_y", c.rho_y},   {"q", c.q}};
}

namespace detail {

inline TrialRecord score(index_t cell, int trial, Method m, const FilterResult& res,
                         const std::vector<index_t>& selected, const std::vector<index_t>& signal,
                         double gamma, int non_converged)
{
    TrialRecord rec;
    rec.cell = cell;
    rec.trial = trial;
    rec.method = m;
    const SelectionScore s = evaluate_selection(selected, signal);
    rec.fdp = s.fdp;
    rec.power = s.power;
    rec.n_selected = static_cast<index_t>(selected.size());
    rec.threshold = res.threshold.value_or(0.0);
    rec.gamma = gamma;
    rec.non_converged = non_converged;
    return rec;
}

inline std::vector<TrialRecord> group_sparse_trial(const GroupSparseSimConfig& cfg, index_t cell,
                                                   int trial, const std::vector<Method>& methods,
                                                   const FilterConfig& base)
{
    const auto inst = gen_group_sparse_instance(cfg, derive_seed(cfg.seed, cell, trial, 0));
    FilterConfig fc = base;
    fc.seed = derive_seed(cfg.seed, cell, trial, 1);
    const auto& signal = inst.truth.signal_groups;

    std::vector<TrialRecord> out;
    bool want_group = false, want_single = false;
    for (auto m : methods) {
        want_group |= m == Method::group_knockoff || m == Method::group_knockoff_plus;
        want_single |= m == Method::ungrouped_knockoff || m == Method::ungrouped_knockoff_plus;
    }

    KnockoffAugmentation gaug, saug;
    KnockoffStatistics gstat, sstat;
    if (want_group) {
        gaug = construct_group_knockoffs(inst.design, fc.seed, EquivariantS{fc.construction});
        gstat = knockoff_statistics(inst.design.X(), gaug.X_tilde, inst.y.y, inst.design.groups(), fc);
    }
    if (want_single) {
        const GroupedDesign single = singleton_design(inst.design.X());
        saug = construct_group_knockoffs(single, fc.seed, EquivariantS{fc.construction});
        sstat = knockoff_statistics(single.X(), saug.X_tilde, inst.y.y, single.groups(), fc);
    }
    for (auto m : methods) {
        const variant_t v = method_variant(m);
        if (m == Method::group_knockoff || m == Method::group_knockoff_plus) {
            const FilterResult r = apply_threshold(gstat.W, cfg.q, v);
            out.push_back(score(cell, trial, m, r, r.selected, signal, gaug.gamma,
                                gstat.path.non_converged));
        } else if (m == Method::ungrouped_knockoff || m == Method::ungrouped_knockoff_plus) {
            const FilterResult r = apply_threshold(sstat.W, cfg.q, v);
            // a group counts as discovered when any of its features is selected
            std::vector<index_t> groups_hit;
            for (auto j : r.selected) groups_hit.push_back(inst.design.group_of(j));
            out.push_back(score(cell, trial, m, r, groups_hit, signal, saug.gamma,
                                sstat.path.non_converged));
        } else {
            throw usage_error("method " + to_string(m) + " does not apply to the group-sparse setting");
        }
    }
    return out;
}

inline std::vector<TrialRecord> multitask_trial(const MultitaskSimConfig& cfg, index_t cell,
                                                int trial, const std::vector<Method>& methods,
                                                const FilterConfig& base)
{
    const auto inst = gen_multitask_instance(cfg, derive_seed(cfg.seed, cell, trial, 0));
    FilterConfig fc = base;
    fc.seed = derive_seed(cfg.seed, cell, trial, 1);
    const auto& signal = inst.truth.signal_groups;
    const index_t r = inst.Y.cols();

    // every multitask baseline shares the plain knockoffs of X
    const KnockoffAugmentation aug = construct_knockoffs(inst.X, fc.seed);

    bool want_mt = false, want_pooled = false, want_par = false;
    for (auto m : methods) {
        want_mt |= m == Method::multitask_knockoff || m == Method::multitask_knockoff_plus;
        want_pooled |= m == Method::pooled_knockoff || m == Method::pooled_knockoff_plus;
        want_par |= m == Method::parallel_knockoff || m == Method::parallel_knockoff_plus;
    }
    KnockoffStatistics mt;
    WStatistics pooled;
    std::vector<KnockoffStatistics> per_response;
    if (want_mt) {
        const KroneckerGramOperator op(augment(inst.X, aug.X_tilde), inst.Y,
                                       KroneckerGramOperator::Grouping::rows, fc.weights);
        mt = knockoff_statistics(op, fc);
    }
    if (want_pooled) pooled = pooled_statistics(inst.X, aug.X_tilde, inst.Y, fc);
    if (want_par) {
        const group_list_t singles = singleton_design(inst.X).groups();
        for (index_t t = 0; t < r; ++t) {
            per_response.push_back(
                knockoff_statistics(inst.X, aug.X_tilde, inst.Y.col(t), singles, fc));
        }
    }

    std::vector<TrialRecord> out;
    for (auto m : methods) {
        const variant_t v = method_variant(m);
        if (m == Method::multitask_knockoff || m == Method::multitask_knockoff_plus) {
            const FilterResult res = apply_threshold(mt.W, cfg.q, v);
            out.push_back(score(cell, trial, m, res, res.selected, signal, aug.gamma,
                                mt.path.non_converged));
        } else if (m == Method::pooled_knockoff || m == Method::pooled_knockoff_plus) {
            const FilterResult res = apply_threshold(pooled, cfg.q, v);
            out.push_back(score(cell, trial, m, res, features_from_entries(res.selected, r), signal,
                                aug.gamma, 0));
        } else if (m == Method::parallel_knockoff || m == Method::parallel_knockoff_plus) {
            std::vector<index_t> all;
            FilterResult last;
            int nc = 0;
            for (const auto& st : per_response) {
                last = apply_threshold(st.W, cfg.q, v);
                all.insert(all.end(), last.selected.begin(), last.selected.end());
                nc += st.path.non_converged;
            }
            std::sort(all.begin(), all.end());
            all.erase(std::unique(all.begin(), all.end()), all.end());
            TrialRecord rec = score(cell, trial, m, last, all, signal, aug.gamma, nc);
            rec.threshold = 0.0;  // one threshold per response; not meaningful here
            out.push_back(rec);
        } else {
            throw usage_error("method " + to_string(m) + " does not apply to the multitask setting");
        }
    }
    return out;
}

inline void summarize(SimulationReport& report, int trials)
{
    for (index_t c = 0; c < static_cast<index_t>(report.cells.size()); ++c) {
        for (auto m : report.methods) {
            CellSummary s;
            s.cell = c;
            s.settings = report.cells[c];
            s.method = m;
            std::vector<const TrialRecord*> ok;
            for (const auto& rec : report.records) {
                if (rec.cell != c || rec.method != m) continue;
                ++s.trials;
                if (rec.failed) ++s.failures;
                else ok.push_back(&rec);
            }
            s.flagged = s.failures > 0.05 * trials;
            const double k = static_cast<double>(ok.size());
            if (!ok.empty()) {
                double sf = 0, sp = 0, ss = 0;
                for (auto* r : ok) {
                    sf += r->fdp;
                    sp += r->power;
                    ss += static_cast<double>(r->n_selected);
                }
                s.mean_fdp = sf / k;
                s.mean_power = sp / k;
                s.mean_selected = ss / k;
            }
            if (ok.size() > 1) {
                double vf = 0, vp = 0;
                for (auto* r : ok) {
                    vf += (r->fdp - s.mean_fdp) * (r->fdp - s.mean_fdp);
                    vp += (r->power - s.mean_power) * (r->power - s.mean_power);
                }
                s.se_fdp = std::sqrt(vf / (k - 1)) / std::sqrt(k);
                s.se_power = std::sqrt(vp / (k - 1)) / std::sqrt(k);
            }
            report.summaries.push_back(std::move(s));
        }
    }
}

/**
 * Run every (cell, trial) job on a small thread pool. Records land in a slot
 * fixed by (cell, trial), so results do not depend on scheduling.
 */
template <class Config, class TrialFn>
inline SimulationReport run_cells(const std::string& setting, const std::vector<Config>& sweep,
                                  const std::vector<Method>& methods, int trials, unsigned threads,
                                  TrialFn&& trial_fn)
{
    SimulationReport report;
    report.setting = setting;
    report.methods = methods;
    for (const auto& c : sweep) {
        c.validate();
        report.cells.push_back(settings_of(c));
    }
    const size_t jobs = sweep.size() * static_cast<size_t>(trials);
    std::vector<std::vector<TrialRecord>> slots(jobs);
    std::atomic<size_t> next{0};
    auto worker = [&] {
        for (size_t job = next++; job < jobs; job = next++) {
            const index_t cell = static_cast<index_t>(job / trials);
            const int trial = static_cast<int>(job % trials);
            try {
                slots[job] = trial_fn(sweep[cell], cell, trial);
            } catch (const std::exception& e) {
                for (auto m : methods) {
                    TrialRecord rec;
                    rec.cell = cell;
                    rec.trial = trial;
                    rec.method = m;
                    rec.failed = true;
                    rec.error = e.what();
                    slots[job].push_back(rec);
                }
            }
        }
    };
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<size_t>(threads, std::max<size_t>(jobs, 1)));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (auto& s : slots)
        for (auto& r : s) report.records.push_back(std::move(r));
    summarize(report, trials);
    return report;
}

} // namespace detail

inline SimulationReport run_experiment(const std::vector<GroupSparseSimConfig>& sweep,
                                       const std::vector<Method>& methods, int trials,
                                       const FilterConfig& fc = {}, unsigned threads = 0)
{
    return detail::run_cells("group-sparse", sweep, methods, trials, threads,
                             [&](const GroupSparseSimConfig& c, index_t cell, int trial) {
                                 return detail::group_sparse_trial(c, cell, trial, methods, fc);
                             });
}

inline SimulationReport run_experiment(const std::vector<MultitaskSimConfig>& sweep,
                                       const std::vector<Method>& methods, int trials,
                                       const FilterConfig& fc = {}, unsigned threads = 0)
{
    return detail::run_cells("multitask", sweep, methods, trials, threads,
                             [&](const MultitaskSimConfig& c, index_t cell, int trial) {
                                 return detail::multitask_trial(c, cell, trial, methods, fc);
                             });
}

/// Default values for each sweep; the full-scale k sweep is wider.
inline std::vector<double> default_sweep_values(const std::string& setting, const std::string& kind,
                                                bool paper_scale)
{
    std::vector<double> tenths;
    for (int i = 0; i <= 9; ++i) tenths.push_back(i / 10.0);
    std::vector<double> out;
    if (setting == "group-sparse") {
        if (kind == "k") {
            if (paper_scale)
                for (int k = 10; k <= 50; k += 2) out.push_back(k);
            else
                for (int k = 2; k <= 10; k += 2) out.push_back(k);
            return out;
        }
        if (kind == "between" || kind == "within") return tenths;
    } else if (setting == "multitask") {
        if (kind == "k") {
            for (int k = 2; k <= 20; k += 2) out.push_back(k);
            return out;
        }
        if (kind == "r") return {1, 2, 3, 4, 5};
        if (kind == "rho-x" || kind == "rho-y") return tenths;
    }
    if (kind == "none") return {};
    throw usage_error("unknown sweep '" + kind + "' for setting " + setting);
}

/// One config per sweep value; "none" yields the base config alone.
inline std::vector<GroupSparseSimConfig> make_sweep(const GroupSparseSimConfig& base,
                                                    const std::string& kind,
                                                    const std::vector<double>& values)
{
    if (kind == "none") return {base};
    std::vector<GroupSparseSimConfig> out;
    for (double v : values) {
        GroupSparseSimConfig c = base;
        if (kind == "k") {
            c.k = static_cast<index_t>(std::lround(v));
        } else if (kind == "between") {
            c.rho = 0.5;
            c.gamma_factor = v;
        } else if (kind == "within") {
            c.gamma_factor = 0.0;
            c.rho = v;
        } else {
            throw usage_error("unknown group-sparse sweep '" + kind + "'");
        }
        out.push_back(c);
    }
    return out;
}

inline std::vector<MultitaskSimConfig> make_sweep(const MultitaskSimConfig& base,
                                                  const std::string& kind,
                                                  const std::vector<double>& values)
{
    if (kind == "none") return {base};
    std::vector<MultitaskSimConfig> out;
    for (double v : values) {
        MultitaskSimConfig c = base;
        if (kind == "k") c.k = static_cast<index_t>(std::lround(v));
        else if (kind == "r") c.r = static_cast<index_t>(std::lround(v));
        else if (kind == "rho-x") c.rho_x = v;
        else if (kind == "rho-y") c.rho_y = v;
        else throw usage_error("unknown multitask sweep '" + kind + "'");
        out.push_back(c);
    }
    return out;
}

} // namespace sim
} // namespace gknock
