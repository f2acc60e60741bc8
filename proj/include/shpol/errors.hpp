#pragma once

#include <stdexcept>
#include <string>

namespace shpol {

// Bad inputs to any operation (non-finite angles, odd bit counts, ...).
using InvalidArgument = std::invalid_argument;

// A power or phase measurement has no defined value (zero power, all-zero input).
class MeasurementError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// File export/import failures.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Configuration rejected during validation; carries the offending field name.
class ConfigError : public std::invalid_argument {
public:
    ConfigError(std::string field, const std::string& what)
        : std::invalid_argument(field + ": " + what), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

}  // namespace shpol
