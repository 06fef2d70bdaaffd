#pragma once

#include <stdexcept>
#include <string>

namespace qring {

/// Argument outside the mathematical domain of an operation (e.g. N_m(0)).
class domain_error : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Invalid configuration or tuning parameter.
class parameter_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Caller violated a structural precondition (mismatched sampling etc.).
class contract_error : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// A truncated sum or basis cannot meet its tolerance.
class truncation_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Numerical result inconsistent with its defining equations.
class consistency_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Time sampling cannot represent the predicted spectral content.
class sampling_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

template <class Error>
[[noreturn]] inline void fail(const std::string& what) {
    throw Error(what);
}

template <class Error>
inline void require(bool ok, const std::string& what) {
    if (!ok) throw Error(what);
}

} // namespace detail
} // namespace qring
