#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

namespace haibench {

// Base for every error the library reports. Metric code throws these; the
// harness converts them into per-field error entries in reports.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Input violates a documented precondition (bad log line, empty list, ...).
class InvalidInput : public Error {
public:
    using Error::Error;
};

// A quantity is mathematically undefined for the given input
// (zero denominator, degenerate rate, singular system).
class Undefined : public Error {
public:
    using Error::Error;
};

// A single metric field that is either a value or a per-field error message.
struct FieldValue {
    std::optional<double> value;
    std::string error;

    static FieldValue of(double v) { return {v, {}}; }
    static FieldValue fail(std::string msg) { return {std::nullopt, std::move(msg)}; }

    bool ok() const { return value.has_value(); }
    double operator*() const { return value.value(); }
};

}  // namespace haibench
