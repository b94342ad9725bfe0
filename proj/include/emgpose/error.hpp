#pragma once

#include <stdexcept>
#include <string>

namespace emgpose {

// Bad caller input (shapes, non-finite values, unknown labels, ...).
class validation_error : public std::invalid_argument {
public:
    explicit validation_error(const std::string& msg) : std::invalid_argument(msg) {}
};

// File / serialization problems. `byte_offset` is -1 when unknown.
class io_error : public std::runtime_error {
public:
    explicit io_error(const std::string& msg, long long byte_offset = -1)
        : std::runtime_error(msg), byte_offset(byte_offset) {}
    long long byte_offset;
};

// An internal invariant was violated (corrupted state upstream).
class state_error : public std::logic_error {
public:
    explicit state_error(const std::string& msg) : std::logic_error(msg) {}
};

// Training diverged or produced a non-finite loss.
class training_error : public std::runtime_error {
public:
    explicit training_error(const std::string& msg, long long sample_index = -1)
        : std::runtime_error(msg), sample_index(sample_index) {}
    long long sample_index;
};

}  // namespace emgpose
