#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cidag {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public Error {
public:
    ParseError(std::size_t line, std::size_t column, const std::string& what)
        : Error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what),
          line_(line), column_(column) {}

    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

/// The graph violates a structural invariant (cycle, duplicate, dangling endpoint).
class GraphError : public Error {
public:
    using Error::Error;
};

class CycleError : public GraphError {
public:
    using GraphError::GraphError;
};

class UnknownVariable : public Error {
public:
    explicit UnknownVariable(const std::string& name)
        : Error("unknown variable '" + name + "'"), name_(name) {}

    const std::string& name() const noexcept { return name_; }

private:
    std::string name_;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Problems with observational data: missing columns, too few rows, bad CSV.
class DataError : public Error {
public:
    using Error::Error;
};

} // namespace cidag
