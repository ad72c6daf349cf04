#pragma once

#include <stdexcept>
#include <string>

namespace iontrap {

/// Argument outside the domain of a physical formula (zero detuning, zero power, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// A numerical procedure (quadrature, integrator, optimizer) failed to converge.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid user input: config keys, dataset rows, CLI arguments.
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace iontrap
