#ifndef FDGNN_CONFIG_HPP
#define FDGNN_CONFIG_HPP

#include <cstdint>
#include <string>

#include "errors.hpp"
#include "graph.hpp"

namespace fdgnn {

/// Every hyperparameter of one FDGNN model.
///
/// All hidden layers share hidden_size, connections and rho. omega1 scales
/// the first layer's input weights; omega scales the inter-layer weights of
/// layers 2..L.
struct model_config {
    int num_layers = 1;           ///< L
    index_t hidden_size = 50;     ///< H
    index_t connections = 1;      ///< C, nonzeros per row of each weight matrix
    double rho = 0.9;             ///< effective spectral radius rho(W_H) * k
    double omega1 = 0.5;          ///< input scaling for layer 1
    double omega = 0.5;           ///< inter-layer scaling for layers > 1
    double epsilon = 1e-3;        ///< fixed-point convergence threshold
    int max_iters = 50;           ///< nu
    index_t projection_dim = 0;   ///< P; 0 means 2 * hidden_size
    double ridge_lambda = 1e-3;   ///< Tikhonov regularizer
    std::uint64_t seed = 0;

    index_t resolved_projection_dim() const noexcept {
        return projection_dim > 0 ? projection_dim : 2 * hidden_size;
    }

    void validate() const {
        if (num_layers < 1) {
            throw config_error("num_layers must be >= 1");
        }
        if (hidden_size < 1 || connections < 1) {
            throw config_error("hidden_size and connections must be >= 1");
        }
        if (connections > hidden_size) {
            throw config_error("connections must not exceed hidden_size");
        }
        const auto open_unit = [](double x) { return x > 0.0 && x < 1.0; };
        if (!open_unit(rho) || !open_unit(omega1) || !open_unit(omega)) {
            throw config_error("rho, omega1 and omega must lie in (0, 1)");
        }
        if (!(epsilon > 0.0) || max_iters < 1) {
            throw config_error("epsilon must be > 0 and max_iters >= 1");
        }
        if (projection_dim < 0) {
            throw config_error("projection_dim must be >= 0");
        }
        if (!(ridge_lambda >= 0.0)) {
            throw config_error("ridge_lambda must be >= 0");
        }
    }

    bool operator==(const model_config&) const = default;
};

} // namespace fdgnn

#endif // FDGNN_CONFIG_HPP
