// fdgnn command-line tool: benchmark, train, predict, inspect.
//
// Exit codes:
//   0  success
//   1  unexpected internal error
//   2  usage or configuration error
//   3  dataset error (missing or malformed files, too few graphs per class)
//   4  model file error (truncated, wrong version, shape mismatch)

#include <fdgnn/fdgnn.hpp>

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace fdgnn;

namespace {

enum exit_code : int { ok = 0, internal = 1, usage = 2, data = 3, model = 4 };

struct run_spec {
    std::string command;
    std::string dataset_name;
    std::string data_root = "data";
    std::string config_path;
    std::string out;
    std::string model_path;
    std::optional<int> configs;
    std::optional<int> guesses;
    std::optional<int> folds;
    std::optional<int> inner_folds;
    std::optional<unsigned> threads;
    int fold = 0; ///< 1-based; 0 = whole dataset
    std::uint64_t seed = 42;
    bool verbose = false;
};

class phase_clock {
public:
    explicit phase_clock(const char* name) : name_(name), t0_(std::chrono::steady_clock::now()) {}
    ~phase_clock() {
        const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
        std::fprintf(stderr, "[time] %s: %.3fs\n", name_, s);
    }

private:
    const char* name_;
    std::chrono::steady_clock::time_point t0_;
};

dataset load_dataset(const run_spec& rs) {
    phase_clock pc("load");
    const fs::path dir = fs::path(rs.data_root) / rs.dataset_name;
    if (!fs::is_directory(dir)) {
        throw ingestion_error("dataset directory not found: " + dir.string());
    }
    dataset ds = parse_tudataset(dir, rs.dataset_name);
    std::fprintf(stderr, "[data] %s: %zu graphs, %zu vertices, %zu classes, label_dim %td, k %.6f, checksum %016llx\n",
                 ds.name.c_str(), ds.size(), ds.total_vertices(), ds.num_classes, ds.label_dim, ds.avg_max_degree,
                 static_cast<unsigned long long>(ds.checksum));
    return ds;
}

config_map load_config(const run_spec& rs) {
    return rs.config_path.empty() ? config_map{} : load_config_file(rs.config_path);
}

int int_key(const config_map& m, const char* key, int fallback) {
    const auto it = m.find(key);
    return it == m.end() ? fallback : static_cast<int>(detail::to_int(key, it->second));
}

void log_config(const char* what, const model_config& c) {
    std::fprintf(stderr,
                 "[config] %s: L=%d H=%td C=%td rho=%.17g omega1=%.17g omega=%.17g epsilon=%g max_iters=%d P=%td "
                 "lambda=%g seed=%llu\n",
                 what, c.num_layers, c.hidden_size, c.connections, c.rho, c.omega1, c.omega, c.epsilon, c.max_iters,
                 c.resolved_projection_dim(), c.ridge_lambda, static_cast<unsigned long long>(c.seed));
}

/// Train/test positions for --fold: the outer split nested_cv uses for the same seed and fold count.
void split_indices(const run_spec& rs, const dataset& ds, int folds, std::vector<std::size_t>& train,
                   std::vector<std::size_t>& test) {
    std::vector<std::size_t> all(ds.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    if (rs.fold == 0) {
        train = all;
        test = all;
        return;
    }
    if (rs.fold < 1 || rs.fold > folds) {
        throw config_error("--fold must lie in 1.." + std::to_string(folds));
    }
    const auto outer = stratified_folds(ds.targets, folds, nested_cv_seeds{rs.seed}.outer_split());
    train = fold_complement(outer, static_cast<std::size_t>(rs.fold - 1));
    test = outer[static_cast<std::size_t>(rs.fold - 1)];
}

int run_benchmark(const run_spec& rs) {
    const auto cfg_map = load_config(rs);
    search_space space;
    auto known = apply_search_keys(cfg_map, space);
    for (const char* k : {"folds", "inner_folds", "threads"}) {
        known.push_back(k);
    }
    reject_unknown_keys(cfg_map, known);
    if (!cfg_map.count("hidden_size")) {
        space.base.hidden_size = default_hidden_size(rs.dataset_name);
    }
    if (rs.configs) {
        space.num_configs = *rs.configs;
    }
    if (rs.guesses) {
        space.guesses = *rs.guesses;
    }
    const int outer_k = rs.folds.value_or(int_key(cfg_map, "folds", 10));
    const int inner_k = rs.inner_folds.value_or(int_key(cfg_map, "inner_folds", outer_k));
    const unsigned threads = rs.threads.value_or(static_cast<unsigned>(int_key(cfg_map, "threads", 0)));
    space.validate();
    if (outer_k < 2 || inner_k < 2) {
        throw config_error("folds must be >= 2");
    }
    if (rs.out.empty()) {
        throw config_error("benchmark needs --out <directory>");
    }

    const dataset ds = load_dataset(rs);
    log_config("base", space.base);
    std::fprintf(stderr, "[config] search: %d configs, %d guesses, L in {", space.num_configs, space.guesses);
    for (std::size_t i = 0; i < space.layer_choices.size(); ++i) {
        std::fprintf(stderr, "%s%d", i ? "," : "", space.layer_choices[i]);
    }
    std::fprintf(stderr, "}, rho [%g,%g], omega1 [%g,%g], omega [%g,%g], %zu lambdas\n", space.rho.lo, space.rho.hi,
                 space.omega1.lo, space.omega1.hi, space.omega.lo, space.omega.hi, space.lambda_grid.size());
    std::fprintf(stderr, "[config] folds %d x %d, master seed %llu, threads %u\n", outer_k, inner_k,
                 static_cast<unsigned long long>(rs.seed), resolve_threads(threads));

    cv_options opt;
    opt.threads = threads;
    opt.log = &std::cerr;
    cv_report rep;
    {
        phase_clock pc("nested-cv");
        rep = nested_cv(ds, space, outer_k, inner_k, rs.seed, opt);
    }

    phase_clock pc("write");
    fs::create_directories(rs.out);
    const fs::path txt = fs::path(rs.out) / "report.txt";
    const fs::path csv = fs::path(rs.out) / "report.csv";
    {
        std::ofstream os(txt);
        write_report_text(os, rep, ds, space, outer_k, inner_k, rs.seed);
        if (!os) {
            throw error("cannot write " + txt.string());
        }
    }
    {
        std::ofstream os(csv);
        write_report_csv(os, rep);
        if (!os) {
            throw error("cannot write " + csv.string());
        }
    }
    std::printf("%s: accuracy %.2f +/- %.2f %%, depth %.1f +/- %.1f, per fold train %.3fs test %.3fs\n",
                ds.name.c_str(), 100.0 * rep.mean_accuracy, 100.0 * rep.std_accuracy, rep.mean_depth, rep.std_depth,
                rep.mean_train_seconds, rep.mean_test_seconds);
    std::printf("reports: %s, %s\n", txt.string().c_str(), csv.string().c_str());
    return ok;
}

int run_train(const run_spec& rs) {
    const auto cfg_map = load_config(rs);
    model_config cfg;
    auto known = apply_model_keys(cfg_map, cfg);
    known.push_back("folds");
    reject_unknown_keys(cfg_map, known);
    if (!cfg_map.count("hidden_size")) {
        cfg.hidden_size = default_hidden_size(rs.dataset_name);
    }
    if (!cfg_map.count("seed")) {
        cfg.seed = derive_seed(rs.seed, {0x7a1eULL});
    }
    cfg.validate();
    if (rs.out.empty()) {
        throw config_error("train needs --out <model file>");
    }
    const int folds = rs.folds.value_or(int_key(cfg_map, "folds", 10));
    const dataset ds = load_dataset(rs);
    std::vector<std::size_t> train, test;
    split_indices(rs, ds, folds, train, test);
    log_config("model", cfg);
    std::fprintf(stderr, "[config] master seed %llu, fold %d of %d, %zu training graphs\n",
                 static_cast<unsigned long long>(rs.seed), rs.fold, folds, train.size());
    trained_model m;
    {
        phase_clock pc("train");
        m = train_model(ds, train, cfg);
    }
    phase_clock pc("write");
    save_model(rs.out, m);
    std::printf("model written to %s\n", rs.out.c_str());
    return ok;
}

int run_predict(const run_spec& rs) {
    if (rs.model_path.empty()) {
        throw config_error("predict needs --model <model file>");
    }
    trained_model m;
    {
        phase_clock pc("load-model");
        m = load_model(rs.model_path);
    }
    const int folds = rs.folds.value_or(10);
    const dataset ds = load_dataset(rs);
    if (m.stack.front().input_size() != ds.label_dim) {
        throw model_format_error("model expects label dimension " + std::to_string(m.stack.front().input_size()) +
                                 ", dataset has " + std::to_string(ds.label_dim));
    }
    std::vector<std::size_t> train, test;
    split_indices(rs, ds, folds, train, test);

    std::ofstream file;
    if (!rs.out.empty()) {
        file.open(rs.out);
        if (!file) {
            throw error("cannot write " + rs.out);
        }
    }
    std::ostream& out = rs.out.empty() ? std::cout : file;
    phase_clock pc("predict");
    std::size_t correct = 0;
    for (std::size_t i : test) {
        const auto r = embed_graph(m.stack, ds.graphs[i], m.embed);
        if (rs.verbose) {
            write_embedding_diagnostics(std::cerr, i, r);
        }
        const std::size_t label = decide_class(readout_output(m.w_out, pool_and_project(r.states, m.w_phi)));
        out << label << '\n';
        correct += label == ds.targets[i] ? 1 : 0;
    }
    std::fprintf(stderr, "[result] %zu graphs, accuracy against dataset labels %.17g\n", test.size(),
                 test.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(test.size()));
    return ok;
}

int run_inspect(const run_spec& rs) {
    if (!rs.model_path.empty()) {
        const trained_model m = load_model(rs.model_path);
        std::printf("model: %zu layers, H=%td, input %td, P=%td, %zu classes, epsilon %g, max_iters %d\n",
                    m.stack.size(), m.stack.back().hidden_size(), m.stack.front().input_size(), m.w_phi.rows(),
                    m.num_classes, m.embed.epsilon, m.embed.max_iters);
        for (std::size_t i = 0; i < m.stack.size(); ++i) {
            const auto& w = m.stack[i];
            std::printf("  layer %zu: W_I %tdx%td nnz %td, W_H %tdx%td nnz %td, rho(W_H) %.6g\n", i + 1,
                        w.input.rows(), w.input.cols(), w.input.nonZeros(), w.recurrent.rows(), w.recurrent.cols(),
                        w.recurrent.nonZeros(), detail::robust_spectral_radius(w.recurrent));
        }
    }
    if (!rs.dataset_name.empty()) {
        const dataset ds = load_dataset(rs);
        const auto d = degree_stats(ds);
        std::printf("dataset: %s\n  graphs %zu\n  vertices %zu (mean %.2f per graph)\n  classes %zu\n  label_dim %td\n",
                    ds.name.c_str(), ds.size(), ds.total_vertices(),
                    static_cast<double>(ds.total_vertices()) / static_cast<double>(ds.size()), ds.num_classes,
                    ds.label_dim);
        std::printf("  degree: mean max %.6f, overall max %zu\n  checksum %016llx\n", d.avg_max_degree,
                    d.global_max_degree, static_cast<unsigned long long>(ds.checksum));
        std::vector<std::size_t> counts(ds.num_classes, 0);
        for (std::size_t t : ds.targets) {
            ++counts[t];
        }
        for (std::size_t c = 0; c < counts.size(); ++c) {
            std::printf("  class %zu (raw %lld): %zu graphs\n", c, ds.raw_class_values[c], counts[c]);
        }
    }
    if (rs.model_path.empty() && rs.dataset_name.empty()) {
        throw config_error("inspect needs --dataset and/or --model");
    }
    return ok;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fast and Deep Graph Neural Network: reservoir graph embeddings with a ridge readout"};
    app.require_subcommand(1);
    run_spec rs;

    const auto add_data = [&](CLI::App* s, bool required) {
        auto* o = s->add_option("--dataset", rs.dataset_name, "Dataset name (directory under --data-root)");
        if (required) {
            o->required();
        }
        s->add_option("--data-root", rs.data_root, "Directory holding dataset folders")->capture_default_str();
    };
    const auto add_seed = [&](CLI::App* s) {
        s->add_option("--seed", rs.seed, "Master seed")->capture_default_str();
    };

    auto* bench = app.add_subcommand("benchmark", "Nested cross-validation with random search");
    add_data(bench, true);
    add_seed(bench);
    bench->add_option("--config", rs.config_path, "key = value configuration file");
    bench->add_option("--configs", rs.configs, "Number of sampled configurations per outer fold");
    bench->add_option("--guesses", rs.guesses, "Random instantiations per configuration");
    bench->add_option("--folds", rs.folds, "Outer fold count (inner defaults to the same)");
    bench->add_option("--inner-folds", rs.inner_folds, "Inner fold count");
    bench->add_option("--threads", rs.threads, "Worker threads; 0 = all cores, 1 = sequential timing mode");
    bench->add_option("--out", rs.out, "Output directory for report.txt and report.csv")->required();

    auto* train = app.add_subcommand("train", "Train one model and save it");
    add_data(train, true);
    add_seed(train);
    train->add_option("--config", rs.config_path, "key = value configuration file");
    train->add_option("--folds", rs.folds, "Outer fold count used with --fold");
    train->add_option("--fold", rs.fold, "Train on the complement of this outer fold (1-based); 0 = all graphs");
    train->add_option("--out", rs.out, "Model file to write")->required();

    auto* pred = app.add_subcommand("predict", "Print one class index per graph");
    add_data(pred, true);
    add_seed(pred);
    pred->add_option("--model", rs.model_path, "Model file")->required();
    pred->add_option("--folds", rs.folds, "Outer fold count used with --fold");
    pred->add_option("--fold", rs.fold, "Predict only this outer fold (1-based); 0 = all graphs");
    pred->add_option("--out", rs.out, "Write labels here instead of standard output");
    pred->add_flag("--verbose", rs.verbose, "Dump per-graph embedding diagnostics to standard error");

    auto* insp = app.add_subcommand("inspect", "Summarize a dataset and/or a model file");
    add_data(insp, false);
    insp->add_option("--model", rs.model_path, "Model file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? ok : usage;
    }
    rs.command = app.get_subcommands().front()->get_name();

    try {
        if (rs.command == "benchmark") {
            return run_benchmark(rs);
        }
        if (rs.command == "train") {
            return run_train(rs);
        }
        if (rs.command == "predict") {
            return run_predict(rs);
        }
        return run_inspect(rs);
    } catch (const config_error& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return usage;
    } catch (const ingestion_error& e) {
        std::fprintf(stderr, "dataset error: %s\n", e.what());
        return data;
    } catch (const malformed_dataset_error& e) {
        std::fprintf(stderr, "dataset error: %s\n", e.what());
        return data;
    } catch (const stratification_error& e) {
        std::fprintf(stderr, "dataset error: %s\n", e.what());
        return data;
    } catch (const model_format_error& e) {
        std::fprintf(stderr, "model error: %s\n", e.what());
        return model;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return internal;
    }
}
