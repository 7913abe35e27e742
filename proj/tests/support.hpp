#ifndef FDGNN_TESTS_SUPPORT_HPP
#define FDGNN_TESTS_SUPPORT_HPP

#include <fdgnn/fdgnn.hpp>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#ifndef FDGNN_DATA_DIR
#define FDGNN_DATA_DIR "data"
#endif

namespace fdgnn::testing {

inline std::filesystem::path data_dir() { return FDGNN_DATA_DIR; }

inline bool has_dataset(const std::string& name) {
    return std::filesystem::exists(data_dir() / name / (name + "_A.txt"));
}

inline dataset load(const std::string& name) { return parse_tudataset(data_dir() / name, name); }

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& tag) {
    const auto p = std::filesystem::temp_directory_path() / ("fdgnn-test-" + tag);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

/// One-hot labels drawn from `classes` categories.
inline Eigen::MatrixXd random_one_hot(rng& gen, index_t n, index_t classes) {
    Eigen::MatrixXd l = Eigen::MatrixXd::Zero(classes, n);
    for (index_t v = 0; v < n; ++v) {
        l(static_cast<index_t>(gen.below(static_cast<std::uint64_t>(classes))), v) = 1.0;
    }
    return l;
}

/// G(n, p) random graph with one-hot labels.
inline graph random_graph(rng& gen, index_t n, double p, index_t classes) {
    std::vector<edge> e;
    for (index_t a = 0; a < n; ++a) {
        for (index_t b = a + 1; b < n; ++b) {
            if (gen.uniform01() < p) {
                e.emplace_back(a, b);
            }
        }
    }
    return graph(n, e, random_one_hot(gen, n, classes));
}

/// Circulant k-regular graph on n vertices. Odd k needs even n and adds the
/// antipodal chord.
inline graph regular_graph(index_t n, int k, Eigen::MatrixXd labels) {
    std::vector<edge> e;
    for (index_t v = 0; v < n; ++v) {
        for (int s = 1; s <= k / 2; ++s) {
            e.emplace_back(v, (v + s) % n);
        }
        if (k % 2 == 1 && v < n / 2) {
            e.emplace_back(v, v + n / 2);
        }
    }
    return graph(n, e, std::move(labels));
}

inline graph triangle() {
    return graph(3, {{0, 1}, {1, 2}, {0, 2}}, Eigen::MatrixXd::Ones(1, 3));
}

/// Random sparse square matrix with `per_row` uniform[-1, 1] entries per row.
inline sparse_matrix random_sparse(rng& gen, index_t n, index_t per_row) {
    std::vector<Eigen::Triplet<double>> t;
    for (index_t r = 0; r < n; ++r) {
        for (std::size_t c : gen.sample_without_replacement(static_cast<std::size_t>(n), static_cast<std::size_t>(per_row))) {
            t.emplace_back(r, static_cast<index_t>(c), gen.uniform(-1.0, 1.0));
        }
    }
    sparse_matrix m(n, n);
    m.setFromTriplets(t.begin(), t.end());
    return m;
}

/// Oracle: largest eigenvalue modulus from the complex Schur form.
inline double oracle_spectral_radius(const Eigen::MatrixXd& m) {
    Eigen::ComplexEigenSolver<Eigen::MatrixXd> es(m, false);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

/// Oracle: spectral norm from the singular values.
inline double oracle_spectral_norm(const Eigen::MatrixXd& m) {
    return Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues()(0);
}

/// Layer with explicit dense weights.
inline layer_weights dense_layer(const Eigen::MatrixXd& w_in, const Eigen::MatrixXd& w_rec) {
    layer_weights w;
    w.input = sparse_matrix(w_in.sparseView(0.0, 0.0));
    w.recurrent = sparse_matrix(w_rec.sparseView(0.0, 0.0));
    return w;
}

} // namespace fdgnn::testing

#endif // FDGNN_TESTS_SUPPORT_HPP
