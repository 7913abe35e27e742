#ifndef FDGNN_GRAPH_HPP
#define FDGNN_GRAPH_HPP

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"

namespace fdgnn {

using index_t = Eigen::Index;
/// Row-major sparse storage; used for layer weights (row access dominates).
using sparse_matrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
/// Column-major sparse storage; used for adjacency so that X * A walks neighbor lists.
using adjacency_matrix = Eigen::SparseMatrix<double, Eigen::ColMajor>;

/// Undirected edge as an ordered pair (u < v).
using edge = std::pair<index_t, index_t>;

/// One undirected, unweighted input graph with real vertex labels.
///
/// Adjacency is symmetric with zero diagonal and entries in {0, 1}. Labels are
/// stored column-wise: labels().col(v) is the label vector of vertex v.
class graph {
public:
    graph() = default;

    /// Builds a graph from an edge list. Edges are symmetrized and duplicates
    /// collapsed. Self-loops and out-of-range endpoints raise contract_error.
    graph(index_t num_vertices, const std::vector<edge>& edges, Eigen::MatrixXd labels)
        : labels_(std::move(labels)) {
        if (num_vertices <= 0) {
            throw contract_error("graph: num_vertices must be positive");
        }
        if (labels_.cols() != num_vertices || labels_.rows() < 1) {
            throw contract_error("graph: labels must be I x N with I >= 1 and N = num_vertices");
        }
        for (const auto& [a, b] : edges) {
            if (a < 0 || b < 0 || a >= num_vertices || b >= num_vertices) {
                throw contract_error("graph: edge endpoint out of range");
            }
            if (a == b) {
                throw contract_error("graph: self-loops are not allowed");
            }
            edges_.emplace_back(std::min(a, b), std::max(a, b));
        }
        std::sort(edges_.begin(), edges_.end());
        edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());

        std::vector<Eigen::Triplet<double>> trips;
        trips.reserve(2 * edges_.size());
        for (const auto& [a, b] : edges_) {
            trips.emplace_back(a, b, 1.0);
            trips.emplace_back(b, a, 1.0);
        }
        adjacency_.resize(num_vertices, num_vertices);
        adjacency_.setFromTriplets(trips.begin(), trips.end());
        adjacency_.makeCompressed();

        degrees_.assign(static_cast<std::size_t>(num_vertices), 0);
        for (const auto& [a, b] : edges_) {
            ++degrees_[static_cast<std::size_t>(a)];
            ++degrees_[static_cast<std::size_t>(b)];
        }
    }

    index_t num_vertices() const noexcept { return adjacency_.rows(); }
    index_t label_dim() const noexcept { return labels_.rows(); }
    std::size_t num_edges() const noexcept { return edges_.size(); }

    const adjacency_matrix& adjacency() const noexcept { return adjacency_; }
    const Eigen::MatrixXd& labels() const noexcept { return labels_; }
    /// Unique undirected edges, each as (u, v) with u < v, sorted.
    const std::vector<edge>& edges() const noexcept { return edges_; }

    std::size_t degree(index_t v) const { return degrees_.at(static_cast<std::size_t>(v)); }

    std::size_t max_degree() const noexcept {
        return degrees_.empty() ? 0 : *std::max_element(degrees_.begin(), degrees_.end());
    }

    /// Graph with vertex v moved to position perm[v]. Labels move with their vertex.
    graph permuted(const std::vector<index_t>& perm) const {
        const index_t n = num_vertices();
        if (static_cast<index_t>(perm.size()) != n) {
            throw contract_error("graph::permuted: permutation size mismatch");
        }
        std::vector<edge> e;
        e.reserve(edges_.size());
        for (const auto& [a, b] : edges_) {
            e.emplace_back(perm[static_cast<std::size_t>(a)], perm[static_cast<std::size_t>(b)]);
        }
        Eigen::MatrixXd lab(labels_.rows(), n);
        for (index_t v = 0; v < n; ++v) {
            lab.col(perm[static_cast<std::size_t>(v)]) = labels_.col(v);
        }
        return graph(n, e, std::move(lab));
    }

private:
    adjacency_matrix adjacency_;
    Eigen::MatrixXd labels_;
    std::vector<edge> edges_;
    std::vector<std::size_t> degrees_;
};

/// Labeled collection of graphs for classification.
struct dataset {
    std::string name;
    std::vector<graph> graphs;
    std::vector<std::size_t> targets;   ///< class index in [0, num_classes)
    std::size_t num_classes = 0;
    index_t label_dim = 0;
    double avg_max_degree = 0.0;         ///< k used to scale recurrent weights
    std::vector<long long> raw_class_values; ///< raw label for each class index
    std::uint64_t checksum = 0;          ///< FNV-1a over the source files, 0 if built in memory

    std::size_t size() const noexcept { return graphs.size(); }

    std::size_t total_vertices() const noexcept {
        std::size_t n = 0;
        for (const auto& g : graphs) {
            n += static_cast<std::size_t>(g.num_vertices());
        }
        return n;
    }

    /// Throws contract_error if the cross-field invariants do not hold.
    void validate() const {
        if (graphs.size() != targets.size()) {
            throw contract_error("dataset: graphs and targets differ in length");
        }
        for (std::size_t t : targets) {
            if (t >= num_classes) {
                throw contract_error("dataset: target outside [0, num_classes)");
            }
        }
        bool any_edge = false;
        for (const auto& g : graphs) {
            if (g.label_dim() != label_dim) {
                throw contract_error("dataset: graphs disagree on label dimension");
            }
            any_edge = any_edge || g.num_edges() > 0;
        }
        if (any_edge && !(avg_max_degree > 0.0)) {
            throw contract_error("dataset: avg_max_degree must be positive when edges exist");
        }
    }
};

struct degree_summary {
    double avg_max_degree = 0.0;
    std::size_t global_max_degree = 0;
};

/// Mean over graphs of the per-graph maximum degree, and the overall maximum.
inline degree_summary degree_stats(const std::vector<graph>& graphs) {
    if (graphs.empty()) {
        throw contract_error("degree_stats: empty graph collection");
    }
    degree_summary s;
    double sum = 0.0;
    for (const auto& g : graphs) {
        const std::size_t m = g.max_degree();
        sum += static_cast<double>(m);
        s.global_max_degree = std::max(s.global_max_degree, m);
    }
    s.avg_max_degree = sum / static_cast<double>(graphs.size());
    return s;
}

inline degree_summary degree_stats(const dataset& ds) { return degree_stats(ds.graphs); }

/// Classification targets in -1/+1 form, one column per graph.
/// Binary problems use a single row; Y > 2 classes use Y rows (one-hot).
class target_matrix {
public:
    target_matrix() = default;

    explicit target_matrix(Eigen::MatrixXd values) : values_(std::move(values)) {
        for (index_t j = 0; j < values_.cols(); ++j) {
            int plus = 0;
            for (index_t i = 0; i < values_.rows(); ++i) {
                const double x = values_(i, j);
                if (x != 1.0 && x != -1.0) {
                    throw contract_error("target_matrix: entries must be -1 or +1");
                }
                plus += x == 1.0 ? 1 : 0;
            }
            if (values_.rows() > 1 && plus != 1) {
                throw contract_error("target_matrix: multi-class column must hold exactly one +1");
            }
        }
    }

    const Eigen::MatrixXd& values() const noexcept { return values_; }
    index_t rows() const noexcept { return values_.rows(); }
    index_t cols() const noexcept { return values_.cols(); }

    /// Columns at the given positions, in that order.
    target_matrix select(const std::vector<std::size_t>& idx) const {
        Eigen::MatrixXd out(values_.rows(), static_cast<index_t>(idx.size()));
        for (std::size_t j = 0; j < idx.size(); ++j) {
            out.col(static_cast<index_t>(j)) = values_.col(static_cast<index_t>(idx[j]));
        }
        target_matrix t;
        t.values_ = std::move(out);
        return t;
    }

private:
    Eigen::MatrixXd values_;
};

/// Encodes class indices in -1/+1 form. Binary: class 0 -> -1, class 1 -> +1.
inline target_matrix encode_targets(const std::vector<std::size_t>& targets, std::size_t num_classes) {
    if (num_classes < 2) {
        throw contract_error("encode_targets: need at least two classes");
    }
    const index_t m = static_cast<index_t>(targets.size());
    const index_t rows = num_classes == 2 ? 1 : static_cast<index_t>(num_classes);
    Eigen::MatrixXd t = Eigen::MatrixXd::Constant(rows, m, -1.0);
    for (index_t j = 0; j < m; ++j) {
        const std::size_t c = targets[static_cast<std::size_t>(j)];
        if (c >= num_classes) {
            throw contract_error("encode_targets: target outside [0, num_classes)");
        }
        if (num_classes == 2) {
            t(0, j) = c == 1 ? 1.0 : -1.0;
        } else {
            t(static_cast<index_t>(c), j) = 1.0;
        }
    }
    return target_matrix(std::move(t));
}

inline target_matrix encode_targets(const dataset& ds) { return encode_targets(ds.targets, ds.num_classes); }

} // namespace fdgnn

#endif // FDGNN_GRAPH_HPP
