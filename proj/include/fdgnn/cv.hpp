#ifndef FDGNN_CV_HPP
#define FDGNN_CV_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "config.hpp"
#include "errors.hpp"
#include "graph.hpp"
#include "parallel.hpp"
#include "random.hpp"
#include "readout.hpp"

namespace fdgnn {

struct interval {
    double lo = 0.0;
    double hi = 1.0;

    bool operator==(const interval&) const = default;
};

/// Twelve ridge values, one per decade from 1e-8 to 1e3.
inline std::vector<double> default_lambda_grid() {
    std::vector<double> grid;
    for (int e = -8; e <= 3; ++e) {
        grid.push_back(std::pow(10.0, e));
    }
    return grid;
}

/// Random-search space. Fields of `base` that are not searched (H, C,
/// epsilon, nu, P) are copied into every sampled configuration.
struct search_space {
    int num_configs = 100;
    interval rho;
    interval omega1;
    interval omega;
    std::vector<int> layer_choices{1, 2, 3, 4, 5};
    std::vector<double> lambda_grid = default_lambda_grid();
    int guesses = 20;
    model_config base;

    void validate() const {
        if (num_configs < 1 || guesses < 1) {
            throw config_error("num_configs and guesses must be >= 1");
        }
        for (const interval* iv : {&rho, &omega1, &omega}) {
            if (!(iv->lo >= 0.0 && iv->hi <= 1.0 && iv->lo < iv->hi)) {
                throw config_error("search ranges must satisfy 0 <= lo < hi <= 1");
            }
        }
        if (layer_choices.empty()) {
            throw config_error("layer_choices must not be empty");
        }
        for (int l : layer_choices) {
            if (l < 1) {
                throw config_error("layer_choices entries must be >= 1");
            }
        }
        if (lambda_grid.empty()) {
            throw config_error("lambda_grid must not be empty");
        }
        for (double l : lambda_grid) {
            if (!(l >= 0.0) || !std::isfinite(l)) {
                throw config_error("lambda_grid entries must be finite and >= 0");
            }
        }
        base.validate();
    }
};

/// Hidden size used for a benchmark: 500 for NCI1 and COLLAB, 50 otherwise.
inline index_t default_hidden_size(const std::string& dataset_name) {
    return dataset_name == "NCI1" || dataset_name == "COLLAB" ? 500 : 50;
}

/// Draws space.num_configs configurations. Configuration i gets seed derive_seed(seed, {i}).
inline std::vector<model_config> sample_configs(const search_space& space, std::uint64_t seed) {
    space.validate();
    rng gen(derive_seed(seed, {0xc0f1ULL}));
    std::vector<model_config> out;
    out.reserve(static_cast<std::size_t>(space.num_configs));
    const auto draw = [&](const interval& iv) { return iv.lo + (iv.hi - iv.lo) * gen.uniform_open01(); };
    for (int i = 0; i < space.num_configs; ++i) {
        model_config c = space.base;
        c.num_layers = space.layer_choices[static_cast<std::size_t>(gen.below(space.layer_choices.size()))];
        c.rho = draw(space.rho);
        c.omega1 = draw(space.omega1);
        c.omega = draw(space.omega);
        c.ridge_lambda = space.lambda_grid.front();
        c.seed = derive_seed(seed, {static_cast<std::uint64_t>(i)});
        out.push_back(c);
    }
    return out;
}

/// Seed of guess g during model selection.
inline std::uint64_t guess_seed(std::uint64_t config_seed, int guess) {
    return derive_seed(config_seed, {0x6e55ULL, static_cast<std::uint64_t>(guess)});
}

/// Seed of guess g when the selected configuration is retrained for testing.
inline std::uint64_t final_guess_seed(std::uint64_t config_seed, int guess) {
    return derive_seed(config_seed, {0xf17a1ULL, static_cast<std::uint64_t>(guess)});
}

/// Splits sample positions into k stratified folds.
///
/// Members of each class are shuffled and dealt round-robin, continuing the
/// deal across classes, so every fold holds floor or ceil of n_c / k members
/// of class c. Folds are disjoint, cover all positions, and are sorted.
inline std::vector<std::vector<std::size_t>> stratified_folds(const std::vector<std::size_t>& targets, int k,
                                                              std::uint64_t seed) {
    if (k < 2) {
        throw contract_error("stratified_folds: need at least 2 folds");
    }
    std::map<std::size_t, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < targets.size(); ++i) {
        by_class[targets[i]].push_back(i);
    }
    for (const auto& [cls, members] : by_class) {
        if (members.size() < static_cast<std::size_t>(k)) {
            throw stratification_error("stratified_folds: class " + std::to_string(cls) + " has " +
                                           std::to_string(members.size()) + " members, fewer than " +
                                           std::to_string(k) + " folds",
                                       cls);
        }
    }
    rng gen(derive_seed(seed, {0xf01dULL}));
    std::vector<std::vector<std::size_t>> folds(static_cast<std::size_t>(k));
    std::size_t deal = 0;
    for (auto& [cls, members] : by_class) {
        gen.shuffle(members);
        for (std::size_t m : members) {
            folds[deal++ % static_cast<std::size_t>(k)].push_back(m);
        }
    }
    for (auto& f : folds) {
        std::sort(f.begin(), f.end());
    }
    return folds;
}

/// Complement of fold `f` within positions [0, n), sorted.
inline std::vector<std::size_t> fold_complement(const std::vector<std::vector<std::size_t>>& folds, std::size_t f) {
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < folds.size(); ++j) {
        if (j != f) {
            out.insert(out.end(), folds[j].begin(), folds[j].end());
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

namespace detail {

inline double accuracy_of(const Eigen::MatrixXd& w_out, const Eigen::MatrixXd& features,
                          const std::vector<std::size_t>& truth) {
    if (truth.empty()) {
        return 0.0;
    }
    std::size_t correct = 0;
    for (index_t j = 0; j < features.cols(); ++j) {
        correct += decide_class(readout_output(w_out, features.col(j))) == truth[static_cast<std::size_t>(j)] ? 1 : 0;
    }
    return static_cast<double>(correct) / static_cast<double>(truth.size());
}

inline Eigen::MatrixXd select_columns(const Eigen::MatrixXd& m, const std::vector<std::size_t>& cols) {
    Eigen::MatrixXd out(m.rows(), static_cast<index_t>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) {
        out.col(static_cast<index_t>(j)) = m.col(static_cast<index_t>(cols[j]));
    }
    return out;
}

template <typename T>
std::vector<T> pick(const std::vector<T>& v, const std::vector<std::size_t>& idx) {
    std::vector<T> out;
    out.reserve(idx.size());
    for (std::size_t i : idx) {
        out.push_back(v.at(i));
    }
    return out;
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

} // namespace detail

/// Mean validation accuracy of cfg over `guesses` independent instantiations.
/// Guess g builds its stack and projection from guess_seed(cfg.seed, g),
/// fits the readout on train_idx with cfg.ridge_lambda and scores val_idx.
inline double evaluate_config(const model_config& cfg, const std::vector<std::size_t>& train_idx,
                              const std::vector<std::size_t>& val_idx, const dataset& ds, int guesses) {
    cfg.validate();
    if (guesses < 1) {
        throw contract_error("evaluate_config: guesses must be >= 1");
    }
    for (std::size_t v : val_idx) {
        if (std::find(train_idx.begin(), train_idx.end(), v) != train_idx.end()) {
            throw contract_error("evaluate_config: train and validation sets overlap");
        }
    }
    const embedding_config ec{cfg.epsilon, cfg.max_iters};
    const target_matrix all_targets = encode_targets(ds);
    const target_matrix train_t = all_targets.select(train_idx);
    const auto val_truth = detail::pick(ds.targets, val_idx);
    double sum = 0.0;
    for (int g = 0; g < guesses; ++g) {
        model_config c = cfg;
        c.seed = guess_seed(cfg.seed, g);
        const frozen_model f = build_frozen(c, ds.label_dim, ds.avg_max_degree);
        const Eigen::MatrixXd w = fit_ridge(extract_features(f, ds, train_idx, ec), train_t, cfg.ridge_lambda);
        sum += detail::accuracy_of(w, extract_features(f, ds, val_idx, ec), val_truth);
    }
    return sum / guesses;
}

/// Inner-CV scores of a list of configurations on one training portion.
struct selection_result {
    std::size_t best_index = 0;
    double best_score = -1.0;
    std::vector<double> config_scores;       ///< max over the lambda grid, per config
    std::vector<double> config_best_lambda;  ///< lambda attaining that max
    std::vector<std::vector<double>> lambda_scores; ///< [config][lambda] mean inner accuracy
};

struct cv_options {
    unsigned threads = 1;
    /// Receives every dataset index the model-selection stage touches for a fold.
    std::function<void(std::size_t fold, const std::vector<std::size_t>& indices)> on_selection_indices;
    /// Progress lines, one per outer fold; null for silence.
    std::ostream* log = nullptr;
};

/// Scores every configuration by inner stratified CV on `train_idx` alone.
///
/// For each (config, guess) the frozen model is built once and all training
/// graphs are embedded once; every inner fold and every lambda then reuses
/// those features, since neither embedding nor projection sees the targets.
/// The numbers equal the mean over inner folds of evaluate_config with the
/// same seeds. A config's score is its best lambda's mean accuracy; ties
/// among configs go to fewer layers, then to the earlier config.
inline selection_result select_config(const dataset& ds, const std::vector<std::size_t>& train_idx,
                                      const std::vector<model_config>& configs, const std::vector<double>& lambda_grid,
                                      int guesses, int inner_k, std::uint64_t inner_seed, unsigned threads) {
    if (configs.empty()) {
        throw contract_error("select_config: no configurations");
    }
    const auto train_targets = detail::pick(ds.targets, train_idx);
    const auto inner = stratified_folds(train_targets, inner_k, inner_seed);
    const Eigen::MatrixXd t_all = encode_targets(train_targets, ds.num_classes).values();

    struct fold_data {
        std::vector<std::size_t> train_pos;
        std::vector<std::size_t> val_pos;
        std::vector<std::size_t> val_truth;
        Eigen::MatrixXd train_t;
    };
    std::vector<fold_data> fd(inner.size());
    for (std::size_t i = 0; i < inner.size(); ++i) {
        fd[i].train_pos = fold_complement(inner, i);
        fd[i].val_pos = inner[i];
        fd[i].val_truth = detail::pick(train_targets, inner[i]);
        fd[i].train_t = detail::select_columns(t_all, fd[i].train_pos);
    }

    const std::size_t nl = lambda_grid.size();
    const std::size_t tasks = configs.size() * static_cast<std::size_t>(guesses);
    // acc[task][lambda], averaged over inner folds
    std::vector<std::vector<double>> acc(tasks, std::vector<double>(nl, 0.0));
    parallel_for(tasks, threads, [&](std::size_t task) {
        const std::size_t ci = task / static_cast<std::size_t>(guesses);
        const int g = static_cast<int>(task % static_cast<std::size_t>(guesses));
        model_config c = configs[ci];
        c.validate();
        c.seed = guess_seed(configs[ci].seed, g);
        const embedding_config ec{c.epsilon, c.max_iters};
        const frozen_model f = build_frozen(c, ds.label_dim, ds.avg_max_degree);
        const Eigen::MatrixXd feats = extract_features(f, ds, train_idx, ec);
        for (const auto& fold : fd) {
            const ridge_path path(detail::select_columns(feats, fold.train_pos), fold.train_t);
            const Eigen::MatrixXd val_f = detail::select_columns(feats, fold.val_pos);
            for (std::size_t li = 0; li < nl; ++li) {
                double a = 0.0;
                try {
                    a = detail::accuracy_of(path.solve_any(lambda_grid[li]), val_f, fold.val_truth);
                } catch (const solver_error&) {
                    a = 0.0; // lambda = 0 on a singular system scores as a miss
                }
                acc[task][li] += a;
            }
        }
        for (double& a : acc[task]) {
            a /= static_cast<double>(fd.size());
        }
    });

    selection_result r;
    r.lambda_scores.assign(configs.size(), std::vector<double>(nl, 0.0));
    r.config_scores.assign(configs.size(), 0.0);
    r.config_best_lambda.assign(configs.size(), lambda_grid.front());
    for (std::size_t ci = 0; ci < configs.size(); ++ci) {
        for (std::size_t li = 0; li < nl; ++li) {
            double s = 0.0;
            for (int g = 0; g < guesses; ++g) {
                s += acc[ci * static_cast<std::size_t>(guesses) + static_cast<std::size_t>(g)][li];
            }
            r.lambda_scores[ci][li] = s / guesses;
        }
        std::size_t best_l = 0;
        for (std::size_t li = 1; li < nl; ++li) {
            if (r.lambda_scores[ci][li] > r.lambda_scores[ci][best_l]) {
                best_l = li;
            }
        }
        r.config_scores[ci] = r.lambda_scores[ci][best_l];
        r.config_best_lambda[ci] = lambda_grid[best_l];
    }
    r.best_index = 0;
    for (std::size_t ci = 1; ci < configs.size(); ++ci) {
        const double s = r.config_scores[ci];
        const double b = r.config_scores[r.best_index];
        if (s > b || (s == b && configs[ci].num_layers < configs[r.best_index].num_layers)) {
            r.best_index = ci;
        }
    }
    r.best_score = r.config_scores[r.best_index];
    return r;
}

struct fold_result {
    std::size_t fold = 0;          ///< 0-based outer fold
    model_config selected;         ///< includes the chosen lambda and the config seed
    double inner_score = 0.0;      ///< mean inner-CV accuracy of the selected config
    double test_accuracy = 0.0;    ///< mean over final guesses
    double train_seconds = 0.0;    ///< mean per guess: build + embed train + fit
    double test_seconds = 0.0;     ///< mean per guess: embed test + score
};

struct cv_report {
    std::vector<fold_result> per_fold;
    double mean_accuracy = 0.0;
    double std_accuracy = 0.0;     ///< sample standard deviation over folds
    double mean_depth = 0.0;
    double std_depth = 0.0;
    double mean_train_seconds = 0.0;
    double mean_test_seconds = 0.0;
};

namespace detail {

inline void mean_std(const std::vector<double>& v, double& mean, double& sd) {
    mean = 0.0;
    sd = 0.0;
    if (v.empty()) {
        return;
    }
    for (double x : v) {
        mean += x;
    }
    mean /= static_cast<double>(v.size());
    if (v.size() > 1) {
        double ss = 0.0;
        for (double x : v) {
            ss += (x - mean) * (x - mean);
        }
        sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
    }
}

} // namespace detail

/// Seeds used by nested_cv; exposed so that single folds can be reproduced.
struct nested_cv_seeds {
    std::uint64_t master;

    std::uint64_t outer_split() const { return derive_seed(master, {0x07e2ULL}); }
    std::uint64_t configs(std::size_t fold) const { return derive_seed(master, {0xc0f165ULL, fold}); }
    std::uint64_t inner_split(std::size_t fold) const { return derive_seed(master, {0x1a2e2ULL, fold}); }
};

/// Nested stratified cross-validation with random search.
///
/// For each outer fold: sample space.num_configs configurations, pick one by
/// inner CV on the outer-train portion (see select_config), retrain it on the
/// whole outer-train portion with fresh guesses and report the mean
/// outer-test accuracy over those guesses. The result depends only on
/// (dataset, space, outer_k, inner_k, seed); the thread count changes only
/// the timings.
inline cv_report nested_cv(const dataset& ds, const search_space& space, int outer_k, int inner_k, std::uint64_t seed,
                           const cv_options& opt = {}) {
    space.validate();
    ds.validate();
    const nested_cv_seeds seeds{seed};
    const auto outer = stratified_folds(ds.targets, outer_k, seeds.outer_split());
    const target_matrix all_t = encode_targets(ds);

    cv_report rep;
    for (std::size_t f = 0; f < outer.size(); ++f) {
        try {
            const auto train_idx = fold_complement(outer, f);
            const auto& test_idx = outer[f];
            if (opt.on_selection_indices) {
                opt.on_selection_indices(f, train_idx);
            }
            const auto configs = sample_configs(space, seeds.configs(f));
            const auto sel = select_config(ds, train_idx, configs, space.lambda_grid, space.guesses, inner_k,
                                           seeds.inner_split(f), opt.threads);

            fold_result fr;
            fr.fold = f;
            fr.selected = configs[sel.best_index];
            fr.selected.ridge_lambda = sel.config_best_lambda[sel.best_index];
            fr.inner_score = sel.best_score;

            const target_matrix train_t = all_t.select(train_idx);
            const auto test_truth = detail::pick(ds.targets, test_idx);
            const embedding_config ec{fr.selected.epsilon, fr.selected.max_iters};
            std::vector<double> acc(static_cast<std::size_t>(space.guesses));
            std::vector<double> t_train(acc.size());
            std::vector<double> t_test(acc.size());
            parallel_for(acc.size(), opt.threads, [&](std::size_t g) {
                model_config c = fr.selected;
                c.seed = final_guess_seed(fr.selected.seed, static_cast<int>(g));
                const auto t0 = std::chrono::steady_clock::now();
                const frozen_model fm = build_frozen(c, ds.label_dim, ds.avg_max_degree);
                const Eigen::MatrixXd w = fit_ridge(extract_features(fm, ds, train_idx, ec), train_t, c.ridge_lambda);
                t_train[g] = detail::seconds_since(t0);
                const auto t1 = std::chrono::steady_clock::now();
                acc[g] = detail::accuracy_of(w, extract_features(fm, ds, test_idx, ec), test_truth);
                t_test[g] = detail::seconds_since(t1);
            });
            double sd = 0.0;
            detail::mean_std(acc, fr.test_accuracy, sd);
            detail::mean_std(t_train, fr.train_seconds, sd);
            detail::mean_std(t_test, fr.test_seconds, sd);
            if (opt.log) {
                char buf[256];
                std::snprintf(buf, sizeof buf, "fold %zu/%zu: L=%d rho=%.4f omega1=%.4f omega=%.4f lambda=%g inner=%.4f test=%.4f\n",
                              f + 1, outer.size(), fr.selected.num_layers, fr.selected.rho, fr.selected.omega1,
                              fr.selected.omega, fr.selected.ridge_lambda, fr.inner_score, fr.test_accuracy);
                *opt.log << buf << std::flush;
            }
            rep.per_fold.push_back(fr);
        } catch (const std::exception& e) {
            throw error("nested_cv: outer fold " + std::to_string(f + 1) + " failed: " + e.what());
        }
    }

    std::vector<double> accs, depths, trains, tests;
    for (const auto& fr : rep.per_fold) {
        accs.push_back(fr.test_accuracy);
        depths.push_back(fr.selected.num_layers);
        trains.push_back(fr.train_seconds);
        tests.push_back(fr.test_seconds);
    }
    double unused = 0.0;
    detail::mean_std(accs, rep.mean_accuracy, rep.std_accuracy);
    detail::mean_std(depths, rep.mean_depth, rep.std_depth);
    detail::mean_std(trains, rep.mean_train_seconds, unused);
    detail::mean_std(tests, rep.mean_test_seconds, unused);
    return rep;
}

/// Comma-separated table, one row per outer fold (1-based):
/// fold,L,H,C,rho,omega1,omega,lambda,test_accuracy,train_seconds,test_seconds
/// Without timing the last two columns are left out; that form is a pure
/// function of the inputs and seed.
inline void write_report_csv(std::ostream& os, const cv_report& rep, bool include_timing = true) {
    os << "fold,L,H,C,rho,omega1,omega,lambda,test_accuracy";
    if (include_timing) {
        os << ",train_seconds,test_seconds";
    }
    os << '\n';
    char buf[512];
    for (const auto& fr : rep.per_fold) {
        const auto& c = fr.selected;
        std::snprintf(buf, sizeof buf, "%zu,%d,%td,%td,%.17g,%.17g,%.17g,%.17g,%.17g", fr.fold + 1, c.num_layers,
                      c.hidden_size, c.connections, c.rho, c.omega1, c.omega, c.ridge_lambda, fr.test_accuracy);
        os << buf;
        if (include_timing) {
            std::snprintf(buf, sizeof buf, ",%.6f,%.6f", fr.train_seconds, fr.test_seconds);
            os << buf;
        }
        os << '\n';
    }
}

/// Human-readable summary of a nested CV run.
inline void write_report_text(std::ostream& os, const cv_report& rep, const dataset& ds, const search_space& space,
                              int outer_k, int inner_k, std::uint64_t seed) {
    char buf[512];
    os << "dataset: " << ds.name << " (" << ds.size() << " graphs, " << ds.total_vertices() << " vertices, "
       << ds.num_classes << " classes, label_dim " << ds.label_dim << ")\n";
    std::snprintf(buf, sizeof buf, "dataset checksum: %016llx\n", static_cast<unsigned long long>(ds.checksum));
    os << buf;
    std::snprintf(buf, sizeof buf, "degree k (mean per-graph max): %.6f\n", ds.avg_max_degree);
    os << buf;
    os << "protocol: nested stratified CV, outer " << outer_k << " x inner " << inner_k << ", " << space.num_configs
       << " configs, " << space.guesses << " guesses, master seed " << seed << '\n';
    std::snprintf(buf, sizeof buf, "fixed: H=%td C=%td P=%td epsilon=%g max_iters=%d\n", space.base.hidden_size,
                  space.base.connections, space.base.resolved_projection_dim(), space.base.epsilon,
                  space.base.max_iters);
    os << buf;
    os << "per fold:\n";
    for (const auto& fr : rep.per_fold) {
        const auto& c = fr.selected;
        std::snprintf(buf, sizeof buf,
                      "  fold %2zu: L=%d rho=%.6f omega1=%.6f omega=%.6f lambda=%g inner=%.4f test=%.4f "
                      "train=%.3fs test=%.3fs config_seed=%llu\n",
                      fr.fold + 1, c.num_layers, c.rho, c.omega1, c.omega, c.ridge_lambda, fr.inner_score,
                      fr.test_accuracy, fr.train_seconds, fr.test_seconds, static_cast<unsigned long long>(c.seed));
        os << buf;
    }
    std::snprintf(buf, sizeof buf, "accuracy: %.2f +/- %.2f %%\n", 100.0 * rep.mean_accuracy, 100.0 * rep.std_accuracy);
    os << buf;
    std::snprintf(buf, sizeof buf, "depth: %.1f +/- %.1f\n", rep.mean_depth, rep.std_depth);
    os << buf;
    std::snprintf(buf, sizeof buf, "time per fold: train %.3fs, test %.3fs\n", rep.mean_train_seconds,
                  rep.mean_test_seconds);
    os << buf;
}

} // namespace fdgnn

#endif // FDGNN_CV_HPP
