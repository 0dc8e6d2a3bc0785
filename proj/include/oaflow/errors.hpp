#pragma once

#include <stdexcept>
#include <string>

namespace oaflow {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidGrid : public Error {
public:
    using Error::Error;
};

class ShapeMismatch : public Error {
public:
    using Error::Error;
};

class NonConvex : public Error {
public:
    NonConvex(std::size_t node, double w, const std::string& msg)
        : Error(msg), node_(node), w_(w) {}
    std::size_t node() const noexcept { return node_; }
    double value() const noexcept { return w_; }

private:
    std::size_t node_;
    double w_;
};

class NonpositiveSupport : public Error {
public:
    NonpositiveSupport(std::size_t node, double h, const std::string& msg)
        : Error(msg), node_(node), h_(h) {}
    std::size_t node() const noexcept { return node_; }
    double value() const noexcept { return h_; }

private:
    std::size_t node_;
    double h_;
};

class NotEven : public Error {
public:
    using Error::Error;
};

class DegenerateFamily : public Error {
public:
    using Error::Error;
};

class IndeterminateClass : public Error {
public:
    using Error::Error;
};

class QuadratureError : public Error {
public:
    QuadratureError(double estimate, const std::string& msg)
        : Error(msg), estimate_(estimate) {}
    double achieved_error() const noexcept { return estimate_; }

private:
    double estimate_;
};

class HypothesisViolated : public Error {
public:
    using Error::Error;
};

class UsageError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class SnapshotError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

} // namespace oaflow
