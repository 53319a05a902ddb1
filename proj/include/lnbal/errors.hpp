#pragma once

#include <stdexcept>
#include <string>

namespace lnbal {

// Bad input data: parse failures, invariant violations in loaded files,
// references to unknown records.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Caller misuse: out-of-range parameters, unknown variant names.
class UsageError : public std::runtime_error {
public:
    explicit UsageError(const std::string& what) : std::runtime_error(what) {}
};

// Broken internal invariant. Reaching this is a bug.
class InternalError : public std::logic_error {
public:
    explicit InternalError(const std::string& what) : std::logic_error(what) {}
};

}  // namespace lnbal
