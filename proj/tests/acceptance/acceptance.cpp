// Acceptance suite. Prints one PASS / FAIL / SKIP line per criterion.
//
//   fdgnn_acceptance              run every criterion
//   fdgnn_acceptance 3 5          run the listed criteria
//
// Exit status: 0 when every selected criterion passes, 1 on any failure,
// 77 when every selected criterion was skipped.

#include "../support.hpp"

#include <unsupported/Eigen/KroneckerProduct>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

using namespace fdgnn;
using namespace fdgnn::testing;

namespace {

// Pinned thresholds.
constexpr double mutag_min_accuracy = 0.80;
constexpr double ptc_min_accuracy = 0.55;
constexpr double contraction_slack = 1e-12;
constexpr double kron_tolerance = 1e-6;
constexpr double necessary_min_false_rate = 0.90;
constexpr double spectral_rel_tolerance = 1e-6;
constexpr double ridge_tolerance = 1e-6;
constexpr double scaling_max_ratio = 14.0;
constexpr double permutation_tolerance = 1e-12;

constexpr std::uint64_t benchmark_seed = 42;
constexpr int skip_code = 77;

enum class verdict { pass, fail, skip };

struct outcome {
    verdict v;
    std::string detail;
};

outcome judge(bool ok, std::string detail) { return {ok ? verdict::pass : verdict::fail, std::move(detail)}; }

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, a, b, c, d);
    return buf;
}

search_space reduced_space(const std::string& name) {
    search_space s;
    s.num_configs = 20;
    s.guesses = 5;
    s.base.hidden_size = default_hidden_size(name);
    s.base.connections = 1;
    return s;
}

std::optional<std::string> ptc_name() {
    for (const char* n : {"PTC_MR", "PTC"}) {
        if (has_dataset(n)) {
            return std::string(n);
        }
    }
    return std::nullopt;
}

/// Timing-free report table of the reduced benchmark.
std::string benchmark_table(const std::string& name, double& mean_accuracy, double& std_accuracy) {
    const dataset ds = load(name);
    const auto rep = nested_cv(ds, reduced_space(name), 10, 10, benchmark_seed);
    mean_accuracy = rep.mean_accuracy;
    std_accuracy = rep.std_accuracy;
    std::ostringstream os;
    write_report_csv(os, rep, false);
    return os.str();
}

std::optional<std::string> mutag_first_table;

outcome criterion_mutag() {
    double mean = 0.0, sd = 0.0;
    mutag_first_table = benchmark_table("MUTAG", mean, sd);
    return judge(mean >= mutag_min_accuracy,
                 fmt("MUTAG nested 10x10 CV, 20 configs x 5 guesses, H=50 C=1: accuracy %.4f +/- %.4f (need >= %.2f)",
                     mean, sd, mutag_min_accuracy));
}

outcome criterion_ptc() {
    const auto name = ptc_name();
    if (!name) {
        return {verdict::skip, "PTC data not found under " + data_dir().string() + "/PTC_MR"};
    }
    double mean = 0.0, sd = 0.0;
    benchmark_table(*name, mean, sd);
    return judge(mean >= ptc_min_accuracy, fmt("PTC reduced protocol: accuracy %.4f +/- %.4f (need >= %.2f)", mean, sd,
                                               ptc_min_accuracy));
}

/// Recurrent weights rescaled so that ||W_H||_2 * k equals `target`.
layer_weights norm_scaled_layer(rng& gen, index_t h, index_t u, index_t c, double k, double target) {
    layer_config lc;
    lc.hidden_size = h;
    lc.input_size = u;
    lc.connections = c;
    lc.effective_spectral_radius = 0.5;
    lc.input_scale = gen.uniform(0.05, 0.95);
    lc.degree = 1.0;
    lc.seed = gen.next_u64();
    layer_weights w = init_layer(lc);
    w.recurrent *= target / (k * oracle_spectral_norm(Eigen::MatrixXd(w.recurrent)));
    return w;
}

outcome criterion_ges_sufficient() {
    rng gen(derive_seed(benchmark_seed, {3}));
    int ges_true = 0, contract_ok = 0;
    double worst_excess = -1.0;
    double max_q = 0.0;
    constexpr int pairs = 200;
    for (int p = 0; p < pairs; ++p) {
        const index_t n = 4 + static_cast<index_t>(gen.below(37));
        const index_t classes = 1 + static_cast<index_t>(gen.below(5));
        const graph g = random_graph(gen, n, gen.uniform(0.05, 0.5), classes);
        const double k = std::max<double>(1.0, static_cast<double>(g.max_degree()));
        const index_t h = 2 + static_cast<index_t>(gen.below(29));
        const index_t c = 1 + static_cast<index_t>(gen.below(static_cast<std::uint64_t>(std::min<index_t>(3, std::min(h, classes)))));
        const double q = gen.uniform_open01();
        max_q = std::max(max_q, q);
        const layer_weights w = norm_scaled_layer(gen, h, classes, c, k, q);

        const embedding_config ec{1e-3, 50};
        if (check_ges(w, g, g.labels(), ec, 5, gen.next_u64())) {
            ++ges_true;
        }

        const double factor = oracle_spectral_norm(Eigen::MatrixXd(w.recurrent)) *
                              oracle_spectral_norm(Eigen::MatrixXd(g.adjacency()));
        const Eigen::MatrixXd drive = Eigen::MatrixXd(w.input) * g.labels();
        Eigen::MatrixXd x(h, n), z(h, n);
        for (index_t j = 0; j < n; ++j) {
            for (index_t i = 0; i < h; ++i) {
                x(i, j) = gen.uniform(-1.0, 1.0);
                z(i, j) = gen.uniform(-1.0, 1.0);
            }
        }
        double prev = (x - z).norm();
        bool ok = true;
        for (int t = 0; t < 50; ++t) {
            x = apply_layer_map(w, drive, g, x);
            z = apply_layer_map(w, drive, g, z);
            const double d = (x - z).norm();
            worst_excess = std::max(worst_excess, d - factor * prev);
            ok = ok && d <= factor * prev + contraction_slack && d <= prev + contraction_slack;
            prev = d;
        }
        contract_ok += ok ? 1 : 0;
    }
    return judge(ges_true == pairs && contract_ok == pairs,
                 fmt("%g/%g pairs GES-stable, %g/%g contract by ||W_H||*||A|| each step", ges_true, pairs,
                     contract_ok, pairs) +
                     fmt(" (max step excess %.3g, max ||W_H||*k %.4f)", worst_excess, max_q));
}

outcome criterion_ges_necessary() {
    std::string detail;
    bool all_ok = true;
    constexpr int seeds = 50;
    for (int k : {2, 3, 4}) {
        const index_t n = 10;
        const graph g = regular_graph(n, k, Eigen::MatrixXd::Zero(1, n));
        const Eigen::MatrixXd a(g.adjacency());
        for (double target : {1.2, 1.5, 2.0}) {
            int false_count = 0;
            double min_kron = std::numeric_limits<double>::infinity();
            double max_kron_err = 0.0;
            for (int s = 0; s < seeds; ++s) {
                layer_config lc;
                lc.hidden_size = 10;
                lc.input_size = 1;
                lc.connections = 1;
                lc.effective_spectral_radius = 0.5;
                lc.input_scale = 0.5;
                lc.degree = 1.0;
                lc.seed = derive_seed(benchmark_seed, {4, static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(s)});
                layer_weights w = init_layer(lc);
                w.recurrent *= target / (k * oracle_spectral_radius(Eigen::MatrixXd(w.recurrent)));
                const double kron =
                    oracle_spectral_radius(Eigen::kroneckerProduct(a, Eigen::MatrixXd(w.recurrent)).eval());
                min_kron = std::min(min_kron, kron);
                max_kron_err = std::max(max_kron_err, std::abs(kron - target) / target);
                if (!check_ges(w, g, g.labels(), {1e-3, 500}, 5, lc.seed)) {
                    ++false_count;
                }
            }
            const double rate = static_cast<double>(false_count) / seeds;
            const bool ok = min_kron > 1.0 && max_kron_err <= kron_tolerance && rate >= necessary_min_false_rate;
            all_ok = all_ok && ok;
            detail += fmt(" k=%g rho*k=%.1f: min rho(A(x)W_H) %.6f, false rate %.2f;", k, target, min_kron, rate);
        }
    }
    return judge(all_ok, "regular graphs, null labels, nu=500:" + detail);
}

outcome criterion_spectral() {
    rng gen(derive_seed(benchmark_seed, {5}));
    double worst = 0.0;
    int failures = 0;
    constexpr int count = 200;
    for (int i = 0; i < count; ++i) {
        const index_t n = 2 + static_cast<index_t>(gen.below(99));
        const index_t c = 1 + static_cast<index_t>(gen.below(static_cast<std::uint64_t>(std::min<index_t>(n, 5))));
        const sparse_matrix m = random_sparse(gen, n, c);
        const double oracle = oracle_spectral_radius(Eigen::MatrixXd(m));
        double est = 0.0;
        try {
            est = spectral_radius(m);
        } catch (const estimation_error& e) {
            est = e.last_estimate();
        }
        const double err = oracle > 0.0 ? std::abs(est - oracle) / oracle : std::abs(est);
        worst = std::max(worst, err);
        failures += err <= spectral_rel_tolerance ? 0 : 1;
    }
    return judge(failures == 0, fmt("%g/%g matrices within tolerance, worst relative error %.3g (need <= %.0e)",
                                    count - failures, count, worst, spectral_rel_tolerance));
}

/// Conjugate gradient on 1/2 w^T (Phi Phi^T + lambda I) w - (Phi t)^T w, one output row at a time.
Eigen::MatrixXd cg_ridge(const Eigen::MatrixXd& phi, const Eigen::MatrixXd& t, double lambda) {
    const auto apply = [&](const Eigen::VectorXd& w) -> Eigen::VectorXd {
        return phi * (phi.transpose() * w) + lambda * w;
    };
    Eigen::MatrixXd out(t.rows(), phi.rows());
    for (index_t r = 0; r < t.rows(); ++r) {
        const Eigen::VectorXd b = phi * t.row(r).transpose();
        Eigen::VectorXd w = Eigen::VectorXd::Zero(phi.rows());
        for (int restart = 0; restart < 20; ++restart) {
            Eigen::VectorXd res = b - apply(w);
            Eigen::VectorXd dir = res;
            double rr = res.squaredNorm();
            for (index_t it = 0; it < 4 * phi.rows() && std::sqrt(rr) > 1e-14 * b.norm(); ++it) {
                const Eigen::VectorXd ad = apply(dir);
                const double alpha = rr / dir.dot(ad);
                w += alpha * dir;
                res -= alpha * ad;
                const double rr_new = res.squaredNorm();
                dir = res + (rr_new / rr) * dir;
                rr = rr_new;
            }
        }
        out.row(r) = w.transpose();
    }
    return out;
}

outcome criterion_ridge() {
    rng gen(derive_seed(benchmark_seed, {6}));
    double worst = 0.0;
    constexpr int count = 50;
    for (int i = 0; i < count; ++i) {
        const index_t p = 2 + static_cast<index_t>(gen.below(29));
        const index_t m = 5 + static_cast<index_t>(gen.below(56));
        const std::size_t classes = gen.below(2) == 0 ? 2 : 3 + gen.below(3);
        Eigen::MatrixXd f(p, m);
        for (index_t j = 0; j < m; ++j) {
            for (index_t r = 0; r < p; ++r) {
                f(r, j) = std::tanh(gen.uniform(-2.0, 2.0));
            }
        }
        std::vector<std::size_t> labels(static_cast<std::size_t>(m));
        for (auto& l : labels) {
            l = gen.below(classes);
        }
        const auto t = encode_targets(labels, classes);
        const double lambda = std::pow(10.0, gen.uniform(-3.0, 3.0));
        const Eigen::MatrixXd closed = fit_ridge(f, t, lambda);
        const Eigen::MatrixXd iterative = cg_ridge(with_bias_row(f), t.values(), lambda);
        worst = std::max(worst, (closed - iterative).cwiseAbs().maxCoeff());
    }
    return judge(worst <= ridge_tolerance, fmt("50 problems, max entrywise deviation from conjugate-gradient "
                                               "minimizer %.3g (need <= %.0e)",
                                               worst, ridge_tolerance));
}

/// Seconds per layer-map application on a 3-regular graph with n vertices.
double seconds_per_iteration(index_t n) {
    rng gen(derive_seed(benchmark_seed, {7, static_cast<std::uint64_t>(n)}));
    const graph g = regular_graph(n, 3, random_one_hot(gen, n, 5));
    layer_config lc;
    lc.hidden_size = 50;
    lc.input_size = 5;
    lc.connections = 1;
    lc.effective_spectral_radius = 0.9;
    lc.input_scale = 0.5;
    lc.degree = 3.0;
    lc.seed = 1;
    const layer_weights w = init_layer(lc);
    const embedding_config ec{1e-300, 50};
    // Repeat until enough wall time accumulates; keep the fastest round.
    double best = std::numeric_limits<double>::infinity();
    for (int round = 0; round < 7; ++round) {
        long iters = 0;
        const auto t0 = std::chrono::steady_clock::now();
        double elapsed = 0.0;
        do {
            iters += iterate_layer(w, g.labels(), g, ec).iterations;
            elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        } while (elapsed < 0.2);
        best = std::min(best, elapsed / static_cast<double>(iters));
    }
    return best;
}

outcome criterion_scaling() {
    const double small = seconds_per_iteration(200);
    const double large = seconds_per_iteration(2000);
    const double ratio = large / small;
    return judge(ratio <= scaling_max_ratio,
                 fmt("per-iteration time N=200 %.3g s, N=2000 %.3g s, ratio %.2f (need <= %.0f)", small, large, ratio,
                     scaling_max_ratio));
}

outcome criterion_permutation() {
    rng gen(derive_seed(benchmark_seed, {8}));
    dataset ds;
    ds.name = "random";
    ds.num_classes = 2;
    ds.label_dim = 4;
    ds.raw_class_values = {0, 1};
    for (int i = 0; i < 100; ++i) {
        const index_t n = 3 + static_cast<index_t>(gen.below(38));
        ds.graphs.push_back(random_graph(gen, n, gen.uniform(0.05, 0.4), 4));
        ds.targets.push_back(static_cast<std::size_t>(gen.below(2)));
    }
    ds.avg_max_degree = degree_stats(ds).avg_max_degree;
    model_config cfg;
    cfg.num_layers = 2;
    cfg.hidden_size = 50;
    cfg.seed = gen.next_u64();
    std::vector<std::size_t> all(ds.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    const trained_model m = train_model(ds, all, cfg);

    double worst = 0.0;
    int same_class = 0;
    for (const auto& g : ds.graphs) {
        std::vector<index_t> perm(static_cast<std::size_t>(g.num_vertices()));
        std::iota(perm.begin(), perm.end(), 0);
        gen.shuffle(perm);
        const graph h = g.permuted(perm);
        worst = std::max(worst, (m.features(g) - m.features(h)).cwiseAbs().maxCoeff());
        same_class += predict(m, g) == predict(m, h) ? 1 : 0;
    }
    return judge(worst <= permutation_tolerance && same_class == 100,
                 fmt("100 graphs: max feature deviation %.3g (need <= %.0e), %g/100 same class", worst,
                     permutation_tolerance, same_class));
}

outcome criterion_determinism() {
    double mean = 0.0, sd = 0.0;
    const std::string first = mutag_first_table ? *mutag_first_table : benchmark_table("MUTAG", mean, sd);
    const std::string second = benchmark_table("MUTAG", mean, sd);
    return judge(first == second, fmt("two MUTAG benchmark runs with seed %g, %g-byte report tables",
                                      static_cast<double>(benchmark_seed), static_cast<double>(first.size())) +
                                      (first == second ? " identical" : " differ"));
}

} // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<const char*, std::function<outcome()>>> criteria{
        {"MUTAG reduced benchmark", criterion_mutag},
        {"PTC reduced benchmark", criterion_ptc},
        {"GES sufficient condition", criterion_ges_sufficient},
        {"GES necessary condition", criterion_ges_necessary},
        {"spectral radius oracle", criterion_spectral},
        {"ridge oracle", criterion_ridge},
        {"embedding cost scaling", criterion_scaling},
        {"vertex permutation", criterion_permutation},
        {"determinism", criterion_determinism},
    };
    std::vector<std::size_t> selected;
    for (int i = 1; i < argc; ++i) {
        const int c = std::atoi(argv[i]);
        if (c < 1 || c > static_cast<int>(criteria.size())) {
            std::fprintf(stderr, "unknown criterion '%s'\n", argv[i]);
            return 2;
        }
        selected.push_back(static_cast<std::size_t>(c - 1));
    }
    if (selected.empty()) {
        selected.resize(criteria.size());
        std::iota(selected.begin(), selected.end(), std::size_t{0});
    }

    int passed = 0, failed = 0, skipped = 0;
    for (std::size_t i : selected) {
        const auto t0 = std::chrono::steady_clock::now();
        outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {verdict::fail, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const char* tag = o.v == verdict::pass ? "PASS" : o.v == verdict::fail ? "FAIL" : "SKIP";
        std::printf("%s criterion %zu (%s): %s [%.1fs]\n", tag, i + 1, criteria[i].first, o.detail.c_str(), secs);
        std::fflush(stdout);
        (o.v == verdict::pass ? passed : o.v == verdict::fail ? failed : skipped)++;
    }
    std::printf("summary: %d passed, %d failed, %d skipped\n", passed, failed, skipped);
    if (failed > 0) {
        return 1;
    }
    return passed == 0 && skipped > 0 ? skip_code : 0;
}
