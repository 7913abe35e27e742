#ifndef FDGNN_EMBEDDING_HPP
#define FDGNN_EMBEDDING_HPP

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <ostream>
#include <vector>

#include "errors.hpp"
#include "graph.hpp"
#include "random.hpp"
#include "reservoir.hpp"

namespace fdgnn {

/// Stopping rule for the per-layer fixed-point iteration.
struct embedding_config {
    double epsilon = 1e-3; ///< stop once ||X_t - X_{t-1}||_F <= epsilon
    int max_iters = 50;    ///< nu; the state at nu is used even if not converged

    void validate() const {
        if (!(epsilon > 0.0) || max_iters < 1) {
            throw contract_error("embedding_config: epsilon must be > 0 and max_iters >= 1");
        }
    }
};

struct layer_result {
    Eigen::MatrixXd states; ///< H x N
    int iterations = 0;
    bool converged = false;
    double residual = 0.0;  ///< ||X_t - X_{t-1}||_F at the last step
};

struct embedding_result {
    Eigen::MatrixXd states; ///< H x N, last layer
    std::vector<int> per_layer_iterations;
    std::vector<bool> converged_flags;
    std::vector<double> final_residuals;
};

/// One application of the layer map: tanh(drive + W_H X A), where drive = W_I U
/// has been precomputed. W_H X is formed first so both sparse factors are used.
inline Eigen::MatrixXd apply_layer_map(const layer_weights& w, const Eigen::MatrixXd& drive, const graph& g,
                                       const Eigen::MatrixXd& x) {
    Eigen::MatrixXd hx = w.recurrent * x;
    Eigen::MatrixXd pre = drive;
    pre.noalias() += hx * g.adjacency();
    return pre.array().tanh().matrix();
}

namespace detail {

inline void check_layer_dims(const layer_weights& w, const Eigen::MatrixXd& input, const graph& g) {
    if (w.recurrent.rows() != w.recurrent.cols() || w.input.rows() != w.recurrent.rows()) {
        throw contract_error("iterate_layer: inconsistent weight shapes");
    }
    if (input.rows() != w.input.cols()) {
        throw contract_error("iterate_layer: input has " + std::to_string(input.rows()) +
                             " rows, layer expects " + std::to_string(w.input.cols()));
    }
    if (input.cols() != g.num_vertices()) {
        throw contract_error("iterate_layer: input has " + std::to_string(input.cols()) +
                             " columns, graph has " + std::to_string(g.num_vertices()) + " vertices");
    }
}

} // namespace detail

/// Iterates X_t = tanh(W_I U + W_H X_{t-1} A) from x0 until the Frobenius step
/// falls to epsilon or max_iters is reached.
inline layer_result iterate_layer_from(const layer_weights& w, const Eigen::MatrixXd& input, const graph& g,
                                       const embedding_config& cfg, const Eigen::MatrixXd& x0) {
    cfg.validate();
    detail::check_layer_dims(w, input, g);
    if (x0.rows() != w.hidden_size() || x0.cols() != g.num_vertices()) {
        throw contract_error("iterate_layer: initial state has the wrong shape");
    }
    const Eigen::MatrixXd drive = w.input * input;
    layer_result r;
    r.states = x0;
    for (int t = 1; t <= cfg.max_iters; ++t) {
        Eigen::MatrixXd next = apply_layer_map(w, drive, g, r.states);
        r.residual = (next - r.states).norm();
        r.states.swap(next);
        r.iterations = t;
        if (!std::isfinite(r.residual)) {
            throw numeric_error("iterate_layer: non-finite state at iteration " + std::to_string(t));
        }
        if (r.residual <= cfg.epsilon) {
            r.converged = true;
            break;
        }
    }
    return r;
}

/// Fixed point of one layer starting from the zero state.
inline layer_result iterate_layer(const layer_weights& w, const Eigen::MatrixXd& input, const graph& g,
                                  const embedding_config& cfg) {
    return iterate_layer_from(w, input, g, cfg, Eigen::MatrixXd::Zero(w.hidden_size(), g.num_vertices()));
}

/// Runs the stack bottom-up: layer 1 is driven by the vertex labels and every
/// further layer by the converged states of the layer below.
inline embedding_result embed_graph(const std::vector<layer_weights>& stack, const graph& g,
                                    const embedding_config& cfg) {
    if (stack.empty()) {
        throw contract_error("embed_graph: empty layer stack");
    }
    embedding_result out;
    out.per_layer_iterations.reserve(stack.size());
    out.converged_flags.reserve(stack.size());
    out.final_residuals.reserve(stack.size());
    const Eigen::MatrixXd* input = &g.labels();
    for (const auto& layer : stack) {
        auto r = iterate_layer(layer, *input, g, cfg);
        out.per_layer_iterations.push_back(r.iterations);
        out.converged_flags.push_back(r.converged);
        out.final_residuals.push_back(r.residual);
        out.states = std::move(r.states);
        input = &out.states;
    }
    return out;
}

/// Empirical check of embedding stability: iterates from the zero state and
/// from `trials` random states (entries uniform in [-1, 1]) and reports
/// whether all final states agree pairwise within 10 * epsilon (Frobenius).
inline bool check_ges(const layer_weights& w, const graph& g, const Eigen::MatrixXd& input,
                      const embedding_config& cfg, int trials, std::uint64_t seed = 0) {
    if (trials < 2) {
        throw contract_error("check_ges: trials must be >= 2");
    }
    std::vector<Eigen::MatrixXd> finals;
    finals.reserve(static_cast<std::size_t>(trials) + 1);
    finals.push_back(iterate_layer(w, input, g, cfg).states);
    rng gen(seed);
    for (int t = 0; t < trials; ++t) {
        Eigen::MatrixXd x0(w.hidden_size(), g.num_vertices());
        for (index_t j = 0; j < x0.cols(); ++j) {
            for (index_t i = 0; i < x0.rows(); ++i) {
                x0(i, j) = gen.uniform(-1.0, 1.0);
            }
        }
        finals.push_back(iterate_layer_from(w, input, g, cfg, x0).states);
    }
    const double tol = 10.0 * cfg.epsilon;
    for (std::size_t a = 0; a < finals.size(); ++a) {
        for (std::size_t b = a + 1; b < finals.size(); ++b) {
            if ((finals[a] - finals[b]).norm() > tol) {
                return false;
            }
        }
    }
    return true;
}

/// One diagnostic record per graph: iterations, convergence and residual per layer.
inline void write_embedding_diagnostics(std::ostream& os, std::size_t graph_index, const embedding_result& r) {
    os << "graph=" << graph_index;
    for (std::size_t i = 0; i < r.per_layer_iterations.size(); ++i) {
        os << " layer" << (i + 1) << "={iters=" << r.per_layer_iterations[i]
           << ",converged=" << (r.converged_flags[i] ? 1 : 0) << ",residual=" << r.final_residuals[i] << '}';
    }
    os << '\n';
}

} // namespace fdgnn

#endif // FDGNN_EMBEDDING_HPP
