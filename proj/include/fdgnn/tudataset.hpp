#ifndef FDGNN_TUDATASET_HPP
#define FDGNN_TUDATASET_HPP

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "errors.hpp"
#include "graph.hpp"

namespace fdgnn {

namespace detail {

struct text_file {
    std::string contents;
    bool present = false;
};

inline text_file read_text(const std::filesystem::path& p) {
    text_file f;
    std::ifstream in(p, std::ios::binary);
    if (!in) {
        return f;
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    f.contents = ss.str();
    f.present = true;
    return f;
}

/// FNV-1a, 64-bit.
inline std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

inline long long parse_integer(std::string_view tok, const std::string& file, std::size_t line) {
    tok = trim(tok);
    if (!tok.empty() && tok.front() == '+') {
        tok.remove_prefix(1);
    }
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (tok.empty() || ec != std::errc{} || ptr != tok.data() + tok.size()) {
        throw malformed_dataset_error(file + ":" + std::to_string(line) + ": expected an integer, got '" +
                                      std::string(tok) + "'");
    }
    return v;
}

/// Non-blank lines of a file, each split on commas.
inline std::vector<std::vector<long long>> parse_rows(const std::string& text, const std::string& file) {
    std::vector<std::vector<long long>> rows;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        const auto end = nl == std::string::npos ? text.size() : nl;
        std::string_view line(text.data() + pos, end - pos);
        ++line_no;
        if (!trim(line).empty()) {
            std::vector<long long> row;
            std::size_t start = 0;
            while (true) {
                const auto comma = line.find(',', start);
                row.push_back(parse_integer(line.substr(start, comma == std::string_view::npos
                                                                    ? std::string_view::npos
                                                                    : comma - start),
                                            file, line_no));
                if (comma == std::string_view::npos) {
                    break;
                }
                start = comma + 1;
            }
            rows.push_back(std::move(row));
        }
        if (nl == std::string::npos) {
            break;
        }
        pos = nl + 1;
    }
    return rows;
}

} // namespace detail

/// Loads a dataset in the TUDataset text layout from directory `root`.
///
/// Expects `<name>_A.txt`, `<name>_graph_indicator.txt` and
/// `<name>_graph_labels.txt`; `<name>_node_labels.txt` is optional. Vertex ids
/// are 1-based. Node labels become one-hot columns over the sorted distinct
/// label values; without them every vertex carries the scalar label 1. Graph
/// classes are renumbered 0..Y-1 in ascending order of the raw value. Edge
/// label/attribute files are ignored. Self-loops in `_A.txt` are dropped.
inline dataset parse_tudataset(const std::filesystem::path& root, const std::string& name) {
    const auto file = [&](const char* suffix) { return root / (name + suffix); };
    const auto require = [&](const std::filesystem::path& p) {
        auto f = detail::read_text(p);
        if (!f.present) {
            throw ingestion_error("missing dataset file: " + p.string());
        }
        return f;
    };

    const auto a_path = file("_A.txt");
    const auto gi_path = file("_graph_indicator.txt");
    const auto gl_path = file("_graph_labels.txt");
    const auto nl_path = file("_node_labels.txt");

    const auto a_file = require(a_path);
    const auto gi_file = require(gi_path);
    const auto gl_file = require(gl_path);
    const auto nl_file = detail::read_text(nl_path);

    std::uint64_t checksum = detail::fnv1a(a_file.contents);
    checksum = detail::fnv1a(gi_file.contents, checksum);
    checksum = detail::fnv1a(gl_file.contents, checksum);
    if (nl_file.present) {
        checksum = detail::fnv1a(nl_file.contents, checksum);
    }

    const auto indicator_rows = detail::parse_rows(gi_file.contents, gi_path.filename().string());
    const auto label_rows = detail::parse_rows(gl_file.contents, gl_path.filename().string());
    const auto edge_rows = detail::parse_rows(a_file.contents, a_path.filename().string());

    const std::size_t num_vertices = indicator_rows.size();
    const std::size_t num_graphs = label_rows.size();
    if (num_vertices == 0 || num_graphs == 0) {
        throw malformed_dataset_error(name + ": dataset has no vertices or no graphs");
    }

    // Global vertex -> (graph, local index).
    std::vector<std::size_t> graph_of(num_vertices);
    std::vector<index_t> local_of(num_vertices);
    std::vector<index_t> graph_size(num_graphs, 0);
    for (std::size_t v = 0; v < num_vertices; ++v) {
        const auto& r = indicator_rows[v];
        if (r.size() != 1 || r[0] < 1 || static_cast<std::size_t>(r[0]) > num_graphs) {
            throw malformed_dataset_error(gi_path.filename().string() + ": vertex " + std::to_string(v + 1) +
                                          " has graph id outside 1.." + std::to_string(num_graphs));
        }
        const auto g = static_cast<std::size_t>(r[0] - 1);
        graph_of[v] = g;
        local_of[v] = graph_size[g]++;
    }
    for (std::size_t g = 0; g < num_graphs; ++g) {
        if (graph_size[g] == 0) {
            throw malformed_dataset_error(name + ": graph " + std::to_string(g + 1) + " has no vertices");
        }
    }

    std::vector<std::vector<edge>> graph_edges(num_graphs);
    for (std::size_t e = 0; e < edge_rows.size(); ++e) {
        const auto& r = edge_rows[e];
        if (r.size() != 2) {
            throw malformed_dataset_error(a_path.filename().string() + ": line " + std::to_string(e + 1) +
                                          " must hold two vertex ids");
        }
        for (long long id : r) {
            if (id < 1 || static_cast<std::size_t>(id) > num_vertices) {
                throw malformed_dataset_error(a_path.filename().string() + ": vertex id " + std::to_string(id) +
                                              " outside 1.." + std::to_string(num_vertices));
            }
        }
        const auto u = static_cast<std::size_t>(r[0] - 1);
        const auto v = static_cast<std::size_t>(r[1] - 1);
        if (graph_of[u] != graph_of[v]) {
            throw malformed_dataset_error(a_path.filename().string() + ": edge (" + std::to_string(r[0]) + ", " +
                                          std::to_string(r[1]) + ") joins graphs " +
                                          std::to_string(graph_of[u] + 1) + " and " +
                                          std::to_string(graph_of[v] + 1));
        }
        if (u != v) {
            graph_edges[graph_of[u]].emplace_back(local_of[u], local_of[v]);
        }
    }

    // Vertex labels: one-hot over the sorted set of raw values.
    std::vector<long long> raw_node_label;
    std::map<long long, index_t> node_label_index;
    if (nl_file.present) {
        const auto rows = detail::parse_rows(nl_file.contents, nl_path.filename().string());
        if (rows.size() != num_vertices) {
            throw malformed_dataset_error(nl_path.filename().string() + ": expected " +
                                          std::to_string(num_vertices) + " lines, found " +
                                          std::to_string(rows.size()));
        }
        raw_node_label.reserve(num_vertices);
        for (const auto& r : rows) {
            if (r.size() != 1) {
                throw malformed_dataset_error(nl_path.filename().string() + ": one label per line expected");
            }
            raw_node_label.push_back(r[0]);
            node_label_index.emplace(r[0], 0);
        }
        index_t next = 0;
        for (auto& [value, idx] : node_label_index) {
            idx = next++;
        }
    }
    const index_t label_dim = nl_file.present ? static_cast<index_t>(node_label_index.size()) : 1;

    std::vector<Eigen::MatrixXd> labels(num_graphs);
    for (std::size_t g = 0; g < num_graphs; ++g) {
        labels[g] = nl_file.present ? Eigen::MatrixXd::Zero(label_dim, graph_size[g])
                                    : Eigen::MatrixXd::Ones(1, graph_size[g]);
    }
    if (nl_file.present) {
        for (std::size_t v = 0; v < num_vertices; ++v) {
            labels[graph_of[v]](node_label_index.at(raw_node_label[v]), local_of[v]) = 1.0;
        }
    }

    // Graph classes renumbered in ascending raw order.
    std::map<long long, std::size_t> class_index;
    for (const auto& r : label_rows) {
        if (r.size() != 1) {
            throw malformed_dataset_error(gl_path.filename().string() + ": one label per line expected");
        }
        class_index.emplace(r[0], 0);
    }
    dataset ds;
    ds.name = name;
    {
        std::size_t next = 0;
        for (auto& [value, idx] : class_index) {
            idx = next++;
            ds.raw_class_values.push_back(value);
        }
    }
    ds.num_classes = class_index.size();
    ds.label_dim = label_dim;
    ds.checksum = checksum;
    ds.graphs.reserve(num_graphs);
    ds.targets.reserve(num_graphs);
    for (std::size_t g = 0; g < num_graphs; ++g) {
        ds.graphs.emplace_back(graph_size[g], graph_edges[g], std::move(labels[g]));
        ds.targets.push_back(class_index.at(label_rows[g][0]));
    }
    ds.avg_max_degree = degree_stats(ds.graphs).avg_max_degree;
    ds.validate();
    return ds;
}

/// Writes `ds` in the TUDataset layout (1-based ids, both edge directions).
/// Vertex labels are written as the index of their one-hot position when the
/// dataset has I > 1, and omitted otherwise.
inline void write_tudataset(const dataset& ds, const std::filesystem::path& root) {
    std::filesystem::create_directories(root);
    std::ofstream a(root / (ds.name + "_A.txt"));
    std::ofstream gi(root / (ds.name + "_graph_indicator.txt"));
    std::ofstream gl(root / (ds.name + "_graph_labels.txt"));
    std::ofstream nl;
    const bool labeled = ds.label_dim > 1;
    if (labeled) {
        nl.open(root / (ds.name + "_node_labels.txt"));
    }
    std::size_t offset = 0;
    for (std::size_t g = 0; g < ds.graphs.size(); ++g) {
        const auto& gr = ds.graphs[g];
        for (index_t v = 0; v < gr.num_vertices(); ++v) {
            gi << (g + 1) << '\n';
            if (labeled) {
                index_t which = 0;
                gr.labels().col(v).maxCoeff(&which);
                nl << which << '\n';
            }
        }
        for (const auto& [u, v] : gr.edges()) {
            a << (offset + static_cast<std::size_t>(u) + 1) << ", " << (offset + static_cast<std::size_t>(v) + 1) << '\n';
            a << (offset + static_cast<std::size_t>(v) + 1) << ", " << (offset + static_cast<std::size_t>(u) + 1) << '\n';
        }
        const std::size_t c = ds.targets[g];
        gl << (c < ds.raw_class_values.size() ? ds.raw_class_values[c] : static_cast<long long>(c)) << '\n';
        offset += static_cast<std::size_t>(gr.num_vertices());
    }
}

} // namespace fdgnn

#endif // FDGNN_TUDATASET_HPP
