#pragma once

#include <stdexcept>
#include <string>

namespace fseq {

// Malformed or unusable input data: parse failures, ragged rows, missing
// values, degenerate series, domain violations of transforms.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A numerical routine could not produce a trustworthy answer (non-Hermitian
// input, unstable system, rank deficiency, non-miniphase block, ...).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace fseq
