#pragma once

#include <stdexcept>
#include <string>

namespace bucketpack {

// Bad input data, bad flags, or a violated invariant. Maps to exit code 1.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// File could not be opened, read or written. Maps to exit code 2.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace bucketpack
