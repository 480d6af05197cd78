#pragma once

#include <stdexcept>
#include <string>

namespace kerrsq {

/// Invalid user input: parameters out of range, malformed config, unknown names.
/// The CLI maps this to exit code 2.
class config_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A computation produced a result outside its validity domain.
/// The CLI maps this to exit code 3.
class numerical_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Fock truncation dropped more probability than the configured tolerance.
class truncation_error : public numerical_error {
public:
    truncation_error(const std::string& what, double deficit)
        : numerical_error(what), deficit_(deficit) {}
    double deficit() const noexcept { return deficit_; }

private:
    double deficit_;
};

/// Post-selection bin carries no representable probability.
class empty_bin_error : public numerical_error {
public:
    using numerical_error::numerical_error;
};

/// Second moments violate the uncertainty relation, so the Gaussian
/// reduction of the conditional state is not meaningful.
class gaussian_validity_error : public numerical_error {
public:
    using numerical_error::numerical_error;
};

} // namespace kerrsq
