#ifndef FDGNN_SPECTRAL_HPP
#define FDGNN_SPECTRAL_HPP

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "errors.hpp"
#include "graph.hpp"
#include "random.hpp"

namespace fdgnn {

struct spectral_options {
    double tol = 1e-8;
    int max_iter = 10000;
    /// Iterations spent at one block size before the block is doubled.
    int stage_iterations = 300;
    /// First block size; the estimate restarts with 2x the block on stagnation.
    index_t initial_block = 4;
};

namespace detail {

struct ritz_estimate {
    double radius = 0.0;
    double residual = 0.0; // ||M v - theta v|| / ||v|| for the dominant Ritz pair
};

/// Dominant Ritz pair of M restricted to span(q), given mq = M q.
inline ritz_estimate dominant_ritz(const Eigen::MatrixXd& q, const Eigen::MatrixXd& mq) {
    const Eigen::MatrixXd b = q.transpose() * mq;
    Eigen::EigenSolver<Eigen::MatrixXd> es(b, true);
    if (es.info() != Eigen::Success) {
        return {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::infinity()};
    }
    const auto& vals = es.eigenvalues();
    index_t best = 0;
    for (index_t i = 1; i < vals.size(); ++i) {
        if (std::abs(vals(i)) > std::abs(vals(best))) {
            best = i;
        }
    }
    const std::complex<double> theta = vals(best);
    const Eigen::VectorXcd y = es.eigenvectors().col(best);
    const Eigen::VectorXcd v = q.cast<std::complex<double>>() * y;
    const Eigen::VectorXcd mv = mq.cast<std::complex<double>>() * y;
    const double vn = v.norm();
    ritz_estimate r;
    r.radius = std::abs(theta);
    r.residual = vn > 0.0 ? (mv - theta * v).norm() / vn : std::numeric_limits<double>::infinity();
    return r;
}

inline Eigen::MatrixXd orthonormal_columns(const Eigen::MatrixXd& z) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(z);
    return qr.householderQ() * Eigen::MatrixXd::Identity(z.rows(), z.cols());
}

/// True when the directed graph of the nonzero pattern (i -> j for m(i, j) != 0)
/// has no cycle. Such a matrix is nilpotent, so its spectral radius is 0.
inline bool acyclic_pattern(const sparse_matrix& m) {
    const index_t n = m.rows();
    std::vector<index_t> indegree(static_cast<std::size_t>(n), 0);
    std::vector<std::vector<index_t>> out(static_cast<std::size_t>(n));
    for (index_t k = 0; k < m.outerSize(); ++k) {
        for (sparse_matrix::InnerIterator it(m, k); it; ++it) {
            if (it.value() != 0.0) {
                out[static_cast<std::size_t>(it.row())].push_back(it.col());
                ++indegree[static_cast<std::size_t>(it.col())];
            }
        }
    }
    std::vector<index_t> ready;
    for (index_t i = 0; i < n; ++i) {
        if (indegree[static_cast<std::size_t>(i)] == 0) {
            ready.push_back(i);
        }
    }
    index_t removed = 0;
    while (!ready.empty()) {
        const index_t v = ready.back();
        ready.pop_back();
        ++removed;
        for (index_t w : out[static_cast<std::size_t>(v)]) {
            if (--indegree[static_cast<std::size_t>(w)] == 0) {
                ready.push_back(w);
            }
        }
    }
    return removed == n;
}

} // namespace detail

/// Spectral radius (largest eigenvalue modulus) of a square sparse matrix.
///
/// Block power iteration: a block of `b` orthonormal vectors is pushed
/// through the matrix and re-orthonormalized each step, and the dominant
/// eigenvalue is read off the Rayleigh-Ritz projection. A block of b vectors
/// resolves up to b eigenvalues of equal or nearly equal modulus (complex
/// pairs, +/- pairs, the m-th roots produced by a weighted cycle), which is
/// what defeats the single-vector power method on these matrices. When a
/// stage stagnates the iteration restarts deterministically with twice the
/// block size.
///
/// Converged when the dominant Ritz pair's residual is <= tol * radius.
/// Returns 0 when the nonzero pattern is acyclic (the zero matrix included).
/// Throws estimation_error carrying the last estimate after max_iter total
/// iterations.
inline double spectral_radius(const sparse_matrix& m, const spectral_options& opt = {}) {
    if (m.rows() != m.cols()) {
        throw contract_error("spectral_radius: matrix must be square");
    }
    if (!(opt.tol > 0.0) || opt.max_iter < 1) {
        throw contract_error("spectral_radius: tol must be > 0 and max_iter >= 1");
    }
    const index_t n = m.rows();
    if (n == 0) {
        return 0.0;
    }
    if (detail::acyclic_pattern(m)) {
        return 0.0;
    }

    const double scale = [&] {
        double s = 0.0;
        for (index_t k = 0; k < m.outerSize(); ++k) {
            for (sparse_matrix::InnerIterator it(m, k); it; ++it) {
                s = std::max(s, std::abs(it.value()));
            }
        }
        return s;
    }();

    index_t block = std::min(n, std::max<index_t>(1, opt.initial_block));
    int total = 0;
    int stage = 0;
    double last = std::numeric_limits<double>::quiet_NaN();

    while (total < opt.max_iter) {
        rng gen(derive_seed(0x5eed5eedULL, {static_cast<std::uint64_t>(stage)}));
        Eigen::MatrixXd q(n, block);
        for (index_t j = 0; j < block; ++j) {
            for (index_t i = 0; i < n; ++i) {
                q(i, j) = gen.uniform(-1.0, 1.0);
            }
        }
        q = detail::orthonormal_columns(q);

        for (int it = 0; it < opt.stage_iterations && total < opt.max_iter; ++it, ++total) {
            const Eigen::MatrixXd mq = m * q;
            // Nilpotent directions can annihilate the whole block.
            if (mq.norm() <= 1e-300 * std::max(1.0, scale)) {
                return 0.0;
            }
            const auto est = detail::dominant_ritz(q, mq);
            if (std::isfinite(est.radius)) {
                last = est.radius;
                if (est.residual <= opt.tol * est.radius) {
                    return est.radius;
                }
                // A radius negligible against the entries is a nilpotent matrix.
                if (est.radius <= 1e-14 * scale && est.residual <= 1e-14 * scale) {
                    return 0.0;
                }
            }
            q = detail::orthonormal_columns(mq);
        }
        if (block == n) {
            // Full block with a non-converging residual: keep iterating at full width.
            ++stage;
            continue;
        }
        block = std::min(n, 2 * block);
        ++stage;
    }
    throw estimation_error("spectral_radius: no convergence after " + std::to_string(opt.max_iter) +
                               " iterations (last estimate " + std::to_string(last) + ")",
                           last);
}

inline double spectral_radius(const sparse_matrix& m, double tol, int max_iter) {
    spectral_options opt;
    opt.tol = tol;
    opt.max_iter = max_iter;
    return spectral_radius(m, opt);
}

/// Spectral radius through a full dense eigen-decomposition. O(n^3); used
/// as the fallback when the iterative estimate fails on small matrices.
inline double dense_spectral_radius(const Eigen::MatrixXd& m) {
    if (m.rows() != m.cols()) {
        throw contract_error("dense_spectral_radius: matrix must be square");
    }
    if (m.rows() == 0) {
        return 0.0;
    }
    Eigen::EigenSolver<Eigen::MatrixXd> es(m, false);
    if (es.info() != Eigen::Success) {
        throw numeric_error("dense_spectral_radius: eigen-decomposition failed");
    }
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

} // namespace fdgnn

#endif // FDGNN_SPECTRAL_HPP
