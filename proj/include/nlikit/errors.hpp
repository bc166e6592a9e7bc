#pragma once

#include <stdexcept>
#include <string>

namespace nlikit {

// Base type for all toolkit errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A corpus or record violates a documented invariant (duplicate id, bad
// label pairing, split leakage, ...). Message names the first offender.
class InvariantError : public Error {
public:
    using Error::Error;
};

// A serialized record does not match the expected schema (unknown enum
// value, wrong field type, label outside {0,1}).
class SchemaError : public Error {
public:
    using Error::Error;
};

// Stored data does not match its manifest checksum.
class CorruptionError : public Error {
public:
    using Error::Error;
};

// Bad configuration: missing field, wrong type, infeasible value.
class ConfigError : public Error {
public:
    using Error::Error;
};

// An external completion service failed after retries.
class ServiceError : public Error {
public:
    using Error::Error;
};

} // namespace nlikit
