#pragma once

#include <stdexcept>
#include <string>

namespace bias_design {

// Coarse failure categories; the CLI maps each to a process exit code.
enum class ErrorKind {
    input,           // malformed or inconsistent caller input
    singular,        // a design or matrix is singular where invertibility is required
    no_convergence,  // an iterative method exhausted its budget or an internal check failed
    size_cap,        // a hard size limit was exceeded
    io,              // file system failure
};

class Error : public std::runtime_error {
  public:
    Error(ErrorKind kind, std::string code, const std::string& what)
        : std::runtime_error(what), kind_(kind), code_(std::move(code)) {}

    ErrorKind kind() const noexcept { return kind_; }
    const std::string& code() const noexcept { return code_; }

  private:
    ErrorKind kind_;
    std::string code_;
};

inline Error singular_matrix(const std::string& msg) {
    return {ErrorKind::singular, "singular_matrix", msg};
}
inline Error dimension_mismatch(const std::string& msg) {
    return {ErrorKind::input, "dimension_mismatch", msg};
}
inline Error not_symmetric(const std::string& msg) {
    return {ErrorKind::input, "not_symmetric", msg};
}
inline Error non_finite(const std::string& msg) {
    return {ErrorKind::input, "non_finite", msg};
}
inline Error size_cap(const std::string& msg) {
    return {ErrorKind::size_cap, "size_cap", msg};
}
inline Error arity_mismatch(const std::string& msg) {
    return {ErrorKind::input, "arity_mismatch", msg};
}
inline Error empty_support(const std::string& msg) {
    return {ErrorKind::input, "empty_support", msg};
}
inline Error weight_mismatch(const std::string& msg) {
    return {ErrorKind::input, "weight_mismatch", msg};
}
inline Error parameter_out_of_range(const std::string& msg) {
    return {ErrorKind::input, "parameter_out_of_range", msg};
}
inline Error unknown_node(const std::string& msg) {
    return {ErrorKind::input, "unknown_node", msg};
}
inline Error overlapping_arguments(const std::string& msg) {
    return {ErrorKind::input, "overlapping_arguments", msg};
}
inline Error graph_too_large(const std::string& msg) {
    return {ErrorKind::size_cap, "graph_too_large", msg};
}
inline Error insufficient_data(const std::string& msg) {
    return {ErrorKind::input, "insufficient_data", msg};
}
inline Error no_convergence(const std::string& msg) {
    return {ErrorKind::no_convergence, "no_convergence", msg};
}
inline Error schema_error(const std::string& msg) {
    return {ErrorKind::input, "schema_error", msg};
}
inline Error io_error(const std::string& msg) {
    return {ErrorKind::io, "io_error", msg};
}

}  // namespace bias_design
