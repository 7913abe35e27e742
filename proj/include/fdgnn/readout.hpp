#ifndef FDGNN_READOUT_HPP
#define FDGNN_READOUT_HPP

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "config.hpp"
#include "embedding.hpp"
#include "errors.hpp"
#include "graph.hpp"
#include "random.hpp"
#include "reservoir.hpp"

namespace fdgnn {

struct readout_config {
    index_t projection_dim = 100; ///< P, conventionally 2 * H
    double ridge_lambda = 1e-3;
    std::uint64_t seed = 0;
};

/// Random projection W_phi (P x H): uniform[-1, 1] entries, each row scaled to unit L2 norm.
inline Eigen::MatrixXd make_projection(index_t projection_dim, index_t hidden_size, std::uint64_t seed) {
    if (projection_dim < 1 || hidden_size < 1) {
        throw contract_error("make_projection: dimensions must be positive");
    }
    rng gen(seed);
    Eigen::MatrixXd w(projection_dim, hidden_size);
    for (index_t i = 0; i < projection_dim; ++i) {
        for (index_t j = 0; j < hidden_size; ++j) {
            w(i, j) = gen.uniform(-1.0, 1.0);
        }
        const double n = w.row(i).norm();
        if (n == 0.0) {
            w.row(i).setZero();
            w(i, static_cast<index_t>(gen.below(static_cast<std::uint64_t>(hidden_size)))) = 1.0;
        } else {
            w.row(i) /= n;
        }
    }
    return w;
}

/// Sum-pools the vertex states and applies the projection: tanh(W_phi * sum_v x(v)).
inline Eigen::VectorXd pool_and_project(const Eigen::MatrixXd& states, const Eigen::MatrixXd& w_phi) {
    if (w_phi.cols() != states.rows()) {
        throw contract_error("pool_and_project: projection expects " + std::to_string(w_phi.cols()) +
                             " state rows, got " + std::to_string(states.rows()));
    }
    const Eigen::VectorXd pooled = states.rowwise().sum();
    return (w_phi * pooled).array().tanh().matrix();
}

/// Appends the constant bias row to a P x M feature matrix.
inline Eigen::MatrixXd with_bias_row(const Eigen::MatrixXd& features) {
    Eigen::MatrixXd phi(features.rows() + 1, features.cols());
    phi.topRows(features.rows()) = features;
    phi.bottomRows(1).setOnes();
    return phi;
}

/// Ridge solutions W(lambda) = T Phi^T (Phi Phi^T + lambda I)^-1 for many
/// lambdas over fixed data, from one symmetric eigen-decomposition of the Gram
/// matrix. Phi includes the bias row, which is regularized like every other
/// weight (exempting it would mean zeroing the last diagonal entry of lambda I).
class ridge_path {
public:
    /// features: P x M (without bias row); targets: Y x M.
    ridge_path(const Eigen::MatrixXd& features, const Eigen::MatrixXd& targets) {
        if (features.cols() < 1) {
            throw contract_error("fit_ridge: need at least one sample");
        }
        if (targets.cols() != features.cols()) {
            throw contract_error("fit_ridge: features and targets differ in sample count");
        }
        if (!features.allFinite()) {
            throw contract_error("fit_ridge: features must be finite");
        }
        phi_ = with_bias_row(features);
        targets_ = targets;
        const Eigen::MatrixXd gram = phi_ * phi_.transpose();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
        if (es.info() != Eigen::Success) {
            throw solver_error("fit_ridge: eigen-decomposition of the Gram matrix failed");
        }
        // Gram matrices are PSD; clip rounding noise below zero.
        eigenvalues_ = es.eigenvalues().cwiseMax(0.0);
        eigenvectors_ = es.eigenvectors();
        projected_ = (targets * phi_.transpose()) * eigenvectors_;
    }

    /// W_Y (Y x (P+1)) for lambda > 0.
    Eigen::MatrixXd solve(double lambda) const {
        if (!(lambda > 0.0)) {
            throw contract_error("ridge_path::solve: lambda must be > 0");
        }
        const Eigen::VectorXd inv = (eigenvalues_.array() + lambda).inverse().matrix();
        return (projected_ * inv.asDiagonal()) * eigenvectors_.transpose();
    }

    /// Minimum-norm least-squares solution (lambda = 0), W_Y = T Phi^+.
    /// Raises solver_error when Phi is numerically rank-deficient beyond the
    /// min(P+1, M) rank its shape allows.
    Eigen::MatrixXd solve_pseudoinverse() const {
        Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(phi_.transpose());
        const index_t full = std::min(phi_.rows(), phi_.cols());
        if (cod.rank() < full) {
            throw solver_error("fit_ridge: singular system at lambda = 0 (rank " + std::to_string(cod.rank()) +
                               " < " + std::to_string(full) + "); use lambda > 0");
        }
        return cod.solve(targets_.transpose()).transpose();
    }

    Eigen::MatrixXd solve_any(double lambda) const {
        return lambda > 0.0 ? solve(lambda) : solve_pseudoinverse();
    }

    const Eigen::MatrixXd& design() const noexcept { return phi_; }

private:
    Eigen::MatrixXd phi_;
    Eigen::MatrixXd targets_;
    Eigen::VectorXd eigenvalues_;
    Eigen::MatrixXd eigenvectors_;
    Eigen::MatrixXd projected_;
};

/// Trains the output layer in closed form: minimizes
/// ||W_Y Phi - T||_F^2 + lambda ||W_Y||_F^2 with Phi = [features; 1].
/// lambda = 0 gives the pseudoinverse solution.
inline Eigen::MatrixXd fit_ridge(const Eigen::MatrixXd& features, const target_matrix& targets, double lambda) {
    if (!(lambda >= 0.0)) {
        throw contract_error("fit_ridge: lambda must be >= 0");
    }
    return ridge_path(features, targets.values()).solve_any(lambda);
}

/// Output y = W_Y [features; 1] for one feature vector.
inline Eigen::VectorXd readout_output(const Eigen::MatrixXd& w_out, const Eigen::VectorXd& features) {
    if (w_out.cols() != features.size() + 1) {
        throw contract_error("readout_output: output weights do not match the feature size");
    }
    return w_out.leftCols(features.size()) * features + w_out.col(features.size());
}

/// Class decision. One output unit: sign, with 0 mapped to class 1.
/// Several units: argmax, ties to the lowest index.
inline std::size_t decide_class(const Eigen::VectorXd& outputs) {
    if (outputs.size() == 0) {
        throw contract_error("decide_class: empty output");
    }
    if (outputs.size() == 1) {
        return outputs(0) >= 0.0 ? 1 : 0;
    }
    index_t best = 0;
    for (index_t i = 1; i < outputs.size(); ++i) {
        if (outputs(i) > outputs(best)) {
            best = i;
        }
    }
    return static_cast<std::size_t>(best);
}

/// Frozen layer stack + projection + trained output weights.
struct trained_model {
    std::vector<layer_weights> stack;
    Eigen::MatrixXd w_phi;    ///< P x H
    Eigen::MatrixXd w_out;    ///< Y x (P + 1), bias in the last column
    embedding_config embed;
    std::size_t num_classes = 2;

    Eigen::VectorXd features(const graph& g) const {
        return pool_and_project(embed_graph(stack, g, embed).states, w_phi);
    }

    Eigen::VectorXd output(const graph& g) const { return readout_output(w_out, features(g)); }
};

inline std::size_t predict(const trained_model& model, const graph& g) { return decide_class(model.output(g)); }

/// Seeds for the stack and for the projection of one model instance.
inline std::uint64_t projection_seed(std::uint64_t model_seed) {
    return derive_seed(model_seed, {0x9e7a11ULL});
}

/// Frozen part of a model: stack and projection, both derived from cfg.seed.
struct frozen_model {
    std::vector<layer_weights> stack;
    Eigen::MatrixXd w_phi;
};

inline frozen_model build_frozen(const model_config& cfg, index_t label_dim, double degree) {
    frozen_model f;
    f.stack = build_stack(cfg, label_dim, degree);
    f.w_phi = make_projection(cfg.resolved_projection_dim(), cfg.hidden_size, projection_seed(cfg.seed));
    return f;
}

/// P x |idx| feature matrix of the listed graphs.
inline Eigen::MatrixXd extract_features(const frozen_model& f, const dataset& ds, const std::vector<std::size_t>& idx,
                                        const embedding_config& ec) {
    Eigen::MatrixXd out(f.w_phi.rows(), static_cast<index_t>(idx.size()));
    for (std::size_t j = 0; j < idx.size(); ++j) {
        out.col(static_cast<index_t>(j)) =
            pool_and_project(embed_graph(f.stack, ds.graphs.at(idx[j]), ec).states, f.w_phi);
    }
    return out;
}

/// Builds the frozen model from cfg (seed included) and fits the readout on
/// the graphs listed in train_idx.
inline trained_model train_model(const dataset& ds, const std::vector<std::size_t>& train_idx,
                                 const model_config& cfg) {
    cfg.validate();
    if (train_idx.empty()) {
        throw contract_error("train_model: empty training set");
    }
    const embedding_config ec{cfg.epsilon, cfg.max_iters};
    frozen_model f = build_frozen(cfg, ds.label_dim, ds.avg_max_degree);
    const Eigen::MatrixXd feats = extract_features(f, ds, train_idx, ec);
    const target_matrix targets = encode_targets(ds).select(train_idx);
    trained_model m;
    m.w_out = fit_ridge(feats, targets, cfg.ridge_lambda);
    m.stack = std::move(f.stack);
    m.w_phi = std::move(f.w_phi);
    m.embed = ec;
    m.num_classes = ds.num_classes;
    return m;
}

} // namespace fdgnn

#endif // FDGNN_READOUT_HPP
