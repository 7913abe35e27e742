#ifndef FDGNN_SERIALIZE_HPP
#define FDGNN_SERIALIZE_HPP

#include <Eigen/Dense>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "readout.hpp"
#include "reservoir.hpp"

// Text container, one token stream, doubles printed with 17 significant
// digits so they round-trip exactly:
//
//   fdgnn-weights 1
//   layers <L>
//   layer <i> input <rows> <cols> <nnz>     followed by nnz lines "<row> <col> <value>"
//   layer <i> recurrent <rows> <cols> <nnz> followed by nnz lines "<row> <col> <value>"
//   end-weights
//
//   fdgnn-model 1
//   num_classes <Y>
//   epsilon <eps>
//   max_iters <nu>
//   <weights container as above>
//   w_phi <P> <H>       followed by P*H values, row-major
//   w_out <Y'> <P+1>    followed by Y'*(P+1) values, row-major
//   end-model

namespace fdgnn {

inline constexpr int weights_format_version = 1;
inline constexpr int model_format_version = 1;

namespace detail {

inline std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

class token_reader {
public:
    explicit token_reader(std::istream& in) : in_(in) {}

    std::string word(const char* what) {
        std::string w;
        if (!(in_ >> w)) {
            throw model_format_error(std::string("unexpected end of data while reading ") + what);
        }
        return w;
    }

    void expect(const std::string& keyword) {
        const auto w = word(keyword.c_str());
        if (w != keyword) {
            throw model_format_error("expected '" + keyword + "', found '" + w + "'");
        }
    }

    long long integer(const char* what) {
        const auto w = word(what);
        try {
            std::size_t used = 0;
            const long long v = std::stoll(w, &used);
            if (used != w.size()) {
                throw std::invalid_argument(w);
            }
            return v;
        } catch (const std::logic_error&) {
            throw model_format_error(std::string("bad integer for ") + what + ": '" + w + "'");
        }
    }

    double real(const char* what) {
        const auto w = word(what);
        try {
            std::size_t used = 0;
            const double v = std::stod(w, &used);
            if (used != w.size()) {
                throw std::invalid_argument(w);
            }
            return v;
        } catch (const std::logic_error&) {
            throw model_format_error(std::string("bad number for ") + what + ": '" + w + "'");
        }
    }

private:
    std::istream& in_;
};

inline void write_sparse(std::ostream& os, const sparse_matrix& m) {
    os << m.rows() << ' ' << m.cols() << ' ' << m.nonZeros() << '\n';
    for (index_t r = 0; r < m.outerSize(); ++r) {
        for (sparse_matrix::InnerIterator it(m, r); it; ++it) {
            os << it.row() << ' ' << it.col() << ' ' << format_double(it.value()) << '\n';
        }
    }
}

inline sparse_matrix read_sparse(token_reader& in) {
    const auto rows = in.integer("rows");
    const auto cols = in.integer("cols");
    const auto nnz = in.integer("nnz");
    if (rows < 1 || cols < 1 || nnz < 0 || nnz > rows * cols) {
        throw model_format_error("sparse block has invalid dimensions");
    }
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<std::size_t>(nnz));
    for (long long k = 0; k < nnz; ++k) {
        const auto r = in.integer("row");
        const auto c = in.integer("col");
        const double v = in.real("value");
        if (r < 0 || r >= rows || c < 0 || c >= cols) {
            throw model_format_error("sparse entry out of range");
        }
        trips.emplace_back(static_cast<index_t>(r), static_cast<index_t>(c), v);
    }
    sparse_matrix m(static_cast<index_t>(rows), static_cast<index_t>(cols));
    m.setFromTriplets(trips.begin(), trips.end());
    m.makeCompressed();
    return m;
}

inline void write_dense(std::ostream& os, const char* name, const Eigen::MatrixXd& m) {
    os << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
    for (index_t i = 0; i < m.rows(); ++i) {
        for (index_t j = 0; j < m.cols(); ++j) {
            os << (j ? " " : "") << format_double(m(i, j));
        }
        os << '\n';
    }
}

inline Eigen::MatrixXd read_dense(token_reader& in, const char* name) {
    in.expect(name);
    const auto rows = in.integer("rows");
    const auto cols = in.integer("cols");
    if (rows < 1 || cols < 1) {
        throw model_format_error(std::string(name) + " has invalid dimensions");
    }
    Eigen::MatrixXd m(rows, cols);
    for (index_t i = 0; i < m.rows(); ++i) {
        for (index_t j = 0; j < m.cols(); ++j) {
            m(i, j) = in.real(name);
        }
    }
    return m;
}

inline void check_version(token_reader& in, const char* magic, int version) {
    in.expect(magic);
    const auto v = in.integer("version");
    if (v != version) {
        throw model_format_error(std::string(magic) + " version " + std::to_string(v) + " is not supported (expected " +
                                 std::to_string(version) + ")");
    }
}

} // namespace detail

inline void write_weights(std::ostream& os, const std::vector<layer_weights>& stack) {
    os << "fdgnn-weights " << weights_format_version << '\n';
    os << "layers " << stack.size() << '\n';
    for (std::size_t i = 0; i < stack.size(); ++i) {
        os << "layer " << i << " input ";
        detail::write_sparse(os, stack[i].input);
        os << "layer " << i << " recurrent ";
        detail::write_sparse(os, stack[i].recurrent);
    }
    os << "end-weights\n";
}

inline std::vector<layer_weights> read_weights(std::istream& is) {
    detail::token_reader in(is);
    detail::check_version(in, "fdgnn-weights", weights_format_version);
    in.expect("layers");
    const auto count = in.integer("layer count");
    if (count < 1) {
        throw model_format_error("weights container holds no layers");
    }
    std::vector<layer_weights> stack(static_cast<std::size_t>(count));
    for (long long i = 0; i < count; ++i) {
        auto& w = stack[static_cast<std::size_t>(i)];
        for (const char* part : {"input", "recurrent"}) {
            in.expect("layer");
            if (in.integer("layer index") != i) {
                throw model_format_error("layers out of order");
            }
            in.expect(part);
            (std::string(part) == "input" ? w.input : w.recurrent) = detail::read_sparse(in);
        }
        if (w.recurrent.rows() != w.recurrent.cols() || w.input.rows() != w.recurrent.rows()) {
            throw model_format_error("layer " + std::to_string(i) + " has inconsistent shapes");
        }
        if (i > 0 && w.input.cols() != stack[static_cast<std::size_t>(i - 1)].recurrent.rows()) {
            throw model_format_error("layer " + std::to_string(i) + " input size does not match layer below");
        }
    }
    in.expect("end-weights");
    return stack;
}

inline void write_model(std::ostream& os, const trained_model& m) {
    os << "fdgnn-model " << model_format_version << '\n';
    os << "num_classes " << m.num_classes << '\n';
    os << "epsilon " << detail::format_double(m.embed.epsilon) << '\n';
    os << "max_iters " << m.embed.max_iters << '\n';
    write_weights(os, m.stack);
    detail::write_dense(os, "w_phi", m.w_phi);
    detail::write_dense(os, "w_out", m.w_out);
    os << "end-model\n";
}

inline trained_model read_model(std::istream& is) {
    detail::token_reader in(is);
    detail::check_version(in, "fdgnn-model", model_format_version);
    trained_model m;
    in.expect("num_classes");
    const auto y = in.integer("num_classes");
    if (y < 2) {
        throw model_format_error("num_classes must be >= 2");
    }
    m.num_classes = static_cast<std::size_t>(y);
    in.expect("epsilon");
    m.embed.epsilon = in.real("epsilon");
    in.expect("max_iters");
    m.embed.max_iters = static_cast<int>(in.integer("max_iters"));
    if (!(m.embed.epsilon > 0.0) || m.embed.max_iters < 1) {
        throw model_format_error("invalid embedding settings");
    }
    m.stack = read_weights(is);
    m.w_phi = detail::read_dense(in, "w_phi");
    m.w_out = detail::read_dense(in, "w_out");
    in.expect("end-model");
    if (m.w_phi.cols() != m.stack.back().hidden_size()) {
        throw model_format_error("w_phi does not match the last layer size");
    }
    const index_t outputs = m.num_classes == 2 ? 1 : static_cast<index_t>(m.num_classes);
    if (m.w_out.rows() != outputs || m.w_out.cols() != m.w_phi.rows() + 1) {
        throw model_format_error("w_out does not match projection size or class count");
    }
    return m;
}

inline void save_model(const std::filesystem::path& p, const trained_model& m) {
    std::ofstream os(p);
    if (!os) {
        throw error("cannot open " + p.string() + " for writing");
    }
    write_model(os, m);
}

inline trained_model load_model(const std::filesystem::path& p) {
    std::ifstream is(p);
    if (!is) {
        throw model_format_error("cannot open model file " + p.string());
    }
    return read_model(is);
}

} // namespace fdgnn

#endif // FDGNN_SERIALIZE_HPP
