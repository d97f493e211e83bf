#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace eaoa {

/// Dense row-major matrix; one example per row.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Tensor or vector dimensions do not agree.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// A configuration or input value is outside its allowed domain.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Numerical failure during an iterative procedure (diverged loss, degenerate data).
class NumericError : public Error {
public:
    using Error::Error;
};

/// Derive an independent 64-bit stream seed from a parent seed and a tag.
/// splitmix64 finalizer applied to the combined value.
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t tag) noexcept {
    std::uint64_t z = parent + 0x9e3779b97f4a7c15ULL * (tag + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace eaoa
