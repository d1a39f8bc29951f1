#pragma once

#include <stdexcept>
#include <string>

namespace expfdr {

/// Thrown when a function is called outside its parameter domain
/// (zero degrees of freedom, probability outside (0,1), nonpositive mean, ...).
class invalid_parameter : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Malformed or inconsistent input data (files, sample arrays).
class input_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An iterative numerical routine failed to converge or produced a non-finite value.
class numeric_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool ok, const std::string& what) {
    if (!ok) throw invalid_parameter(what);
}

}  // namespace detail
}  // namespace expfdr
