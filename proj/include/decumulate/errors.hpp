#pragma once

#include <stdexcept>
#include <string>

namespace decumulate {

// Input files or series that violate their format or domain (CLI exit code 3).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Non-finite losses, blown-up value functions, insufficient FFT padding
// (CLI exit code 4).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace decumulate
