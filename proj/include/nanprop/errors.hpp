#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace nanprop {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

/// Malformed NANPROP/1 frame.
class WireError : public Error {
public:
    using Error::Error;
};

/// The black box raised, halted or hung when given a NaN input.
class NanIncompatible : public Error {
public:
    NanIncompatible(std::size_t probe, const std::string& detail)
        : Error("black box is NaN-incompatible (probe " + std::to_string(probe) + "): " + detail),
          probe_(probe) {}

    std::size_t probe() const noexcept { return probe_; }

private:
    std::size_t probe_;
};

/// The uncontaminated evaluation point is unusable (error or NaN output).
class BaselineInvalid : public Error {
public:
    using Error::Error;
};

class PayloadCapacityExceeded : public Error {
public:
    using Error::Error;
};

/// Evaluation failed at a point that carries no NaN.
class BlackBoxError : public Error {
public:
    using Error::Error;
};

/// Two dependent columns of one color share a row.
class DecompressionAmbiguity : public Error {
public:
    DecompressionAmbiguity(std::size_t row, std::size_t col_a, std::size_t col_b)
        : Error("columns " + std::to_string(col_a) + " and " + std::to_string(col_b) +
                " share a color and both touch row " + std::to_string(row)),
          row_(row), col_a_(col_a), col_b_(col_b) {}

    std::size_t row() const noexcept { return row_; }
    std::size_t col_a() const noexcept { return col_a_; }
    std::size_t col_b() const noexcept { return col_b_; }

private:
    std::size_t row_, col_a_, col_b_;
};

}  // namespace nanprop
