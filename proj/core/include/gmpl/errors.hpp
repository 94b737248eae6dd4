#pragma once

#include <stdexcept>
#include <string>

namespace gmpl {

// Argument outside an operation's domain (empty word, n too small for a family, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Numeric failure: non-convergence, precision shortfall past the retry cap,
// uncertifiable row sums.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed experiment configuration.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace gmpl
