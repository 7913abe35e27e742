#ifndef FDGNN_ERRORS_HPP
#define FDGNN_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fdgnn {

/// Base class for every error raised by the library.
class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A required dataset file is missing or unreadable.
class ingestion_error : public error {
public:
    using error::error;
};

/// Dataset files are readable but inconsistent with each other.
class malformed_dataset_error : public error {
public:
    using error::error;
};

/// Caller violated a precondition (dimensions, ranges, empty inputs).
class contract_error : public error {
public:
    using error::error;
};

/// Non-finite values showed up where the math forbids them.
class numeric_error : public error {
public:
    using error::error;
};

/// Iterative eigenvalue estimate did not converge; carries the last estimate.
class estimation_error : public error {
public:
    estimation_error(const std::string& what, double last_estimate)
        : error(what), last_estimate_(last_estimate) {}

    double last_estimate() const noexcept { return last_estimate_; }

private:
    double last_estimate_;
};

/// Linear solve could not be carried out (e.g. rank-deficient system at lambda = 0).
class solver_error : public error {
public:
    using error::error;
};

/// A class has too few members to be spread across the requested folds.
class stratification_error : public error {
public:
    stratification_error(const std::string& what, std::size_t class_index)
        : error(what), class_index_(class_index) {}

    std::size_t class_index() const noexcept { return class_index_; }

private:
    std::size_t class_index_;
};

/// Configuration text could not be parsed or holds out-of-range values.
class config_error : public error {
public:
    using error::error;
};

/// Persisted weights/model container is truncated, corrupt or of another version.
class model_format_error : public error {
public:
    using error::error;
};

} // namespace fdgnn

#endif // FDGNN_ERRORS_HPP
