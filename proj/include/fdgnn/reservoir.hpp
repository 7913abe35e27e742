#ifndef FDGNN_RESERVOIR_HPP
#define FDGNN_RESERVOIR_HPP

#include <Eigen/Sparse>

#include <cstdint>
#include <string>
#include <vector>

#include "config.hpp"
#include "errors.hpp"
#include "graph.hpp"
#include "random.hpp"
#include "spectral.hpp"

namespace fdgnn {

/// Shape and scaling of one untrained recurrent layer.
struct layer_config {
    index_t hidden_size = 0;            ///< H
    index_t input_size = 0;             ///< U
    index_t connections = 1;            ///< C
    double effective_spectral_radius = 0.9; ///< target for rho(W_H) * k
    double input_scale = 0.5;           ///< omega: input weights are uniform in [-omega, omega]
    double degree = 1.0;                ///< k
    std::uint64_t seed = 0;

    void validate() const {
        if (hidden_size < 1 || input_size < 1 || connections < 1) {
            throw contract_error("layer_config: sizes and connections must be positive");
        }
        if (connections > hidden_size || connections > input_size) {
            throw contract_error("layer_config: connections must not exceed hidden_size or input_size");
        }
        if (!(effective_spectral_radius > 0.0 && effective_spectral_radius < 1.0)) {
            throw contract_error("layer_config: effective spectral radius must lie in (0, 1)");
        }
        if (!(input_scale > 0.0 && input_scale < 1.0)) {
            throw contract_error("layer_config: input scale must lie in (0, 1)");
        }
        if (!(degree > 0.0)) {
            throw contract_error("layer_config: degree must be positive");
        }
    }
};

/// Frozen weights of one layer: W_I (H x U) and W_H (H x H), C nonzeros per row.
struct layer_weights {
    sparse_matrix input;
    sparse_matrix recurrent;

    index_t hidden_size() const noexcept { return recurrent.rows(); }
    index_t input_size() const noexcept { return input.cols(); }
};

namespace detail {

inline sparse_matrix sample_row_sparse(rng& gen, index_t rows, index_t cols, index_t per_row, double half_width) {
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<std::size_t>(rows * per_row));
    for (index_t r = 0; r < rows; ++r) {
        const auto picked = gen.sample_without_replacement(static_cast<std::size_t>(cols),
                                                           static_cast<std::size_t>(per_row));
        for (std::size_t c : picked) {
            trips.emplace_back(r, static_cast<index_t>(c), gen.uniform(-half_width, half_width));
        }
    }
    sparse_matrix m(rows, cols);
    m.setFromTriplets(trips.begin(), trips.end());
    m.makeCompressed();
    return m;
}

/// Iterative estimate, with a dense eigen-solve fallback for H <= 1000.
inline double robust_spectral_radius(const sparse_matrix& m) {
    try {
        return spectral_radius(m);
    } catch (const estimation_error&) {
        if (m.rows() <= 1000) {
            return dense_spectral_radius(Eigen::MatrixXd(m));
        }
        throw;
    }
}

} // namespace detail

/// Samples one layer. W_H gets C uniform[-1, 1] entries per row at distinct
/// random columns and is then rescaled so that rho(W_H) * k equals the
/// configured effective spectral radius; W_I gets C uniform[-omega, omega]
/// entries per row. The result depends only on cfg (seed included).
///
/// A sampled W_H with spectral radius 0 is redrawn with seed + 1, up to 10 draws.
inline layer_weights init_layer(const layer_config& cfg) {
    cfg.validate();
    constexpr int max_attempts = 10;
    for (int attempt = 0; attempt < max_attempts; ++attempt) {
        rng gen(cfg.seed + static_cast<std::uint64_t>(attempt));
        layer_weights w;
        w.recurrent = detail::sample_row_sparse(gen, cfg.hidden_size, cfg.hidden_size, cfg.connections, 1.0);
        w.input = detail::sample_row_sparse(gen, cfg.hidden_size, cfg.input_size, cfg.connections, cfg.input_scale);
        const double raw = detail::robust_spectral_radius(w.recurrent);
        if (raw > 0.0) {
            w.recurrent *= cfg.effective_spectral_radius / (cfg.degree * raw);
            return w;
        }
    }
    throw numeric_error("init_layer: recurrent matrix had zero spectral radius in " +
                        std::to_string(max_attempts) + " draws");
}

/// Seed of layer `layer` (0-based) in a stack built from `master`.
inline std::uint64_t layer_seed(std::uint64_t master, int layer) {
    return derive_seed(master, {0x1a7e7ULL, static_cast<std::uint64_t>(layer)});
}

/// Builds the L-layer stack. Layer 1 reads the I-dimensional vertex labels
/// with scale omega1; deeper layers read the H-dimensional states of the
/// layer below with scale omega. A degree of 0 (edgeless data) scales as k = 1.
inline std::vector<layer_weights> build_stack(const model_config& cfg, index_t label_dim, double degree) {
    if (cfg.num_layers < 1) {
        throw contract_error("build_stack: num_layers must be >= 1");
    }
    if (degree <= 0.0) {
        degree = 1.0;
    }
    std::vector<layer_weights> stack;
    stack.reserve(static_cast<std::size_t>(cfg.num_layers));
    for (int i = 0; i < cfg.num_layers; ++i) {
        layer_config lc;
        lc.hidden_size = cfg.hidden_size;
        lc.input_size = i == 0 ? label_dim : cfg.hidden_size;
        lc.connections = cfg.connections;
        lc.effective_spectral_radius = cfg.rho;
        lc.input_scale = i == 0 ? cfg.omega1 : cfg.omega;
        lc.degree = degree;
        lc.seed = layer_seed(cfg.seed, i);
        stack.push_back(init_layer(lc));
    }
    return stack;
}

} // namespace fdgnn

#endif // FDGNN_RESERVOIR_HPP
