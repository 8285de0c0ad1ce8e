#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace cqnls {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidParameter : public Error {
public:
    using Error::Error;
};

class QuadratureFailure : public Error {
public:
    using Error::Error;
};

class WeightConstructionFailure : public Error {
public:
    using Error::Error;
};

class ZeroField : public Error {
public:
    ZeroField() : Error("operation undefined for the zero field") {}
};

class NotNearOrbit : public Error {
public:
    NotNearOrbit(double delta, double gate)
        : Error("field is outside the modulation gate: delta = " + std::to_string(delta) +
                " >= " + std::to_string(gate)),
          delta_(delta), gate_(gate) {}
    double delta() const noexcept { return delta_; }
    double gate() const noexcept { return gate_; }

private:
    double delta_;
    double gate_;
};

class InvalidConfig : public Error {
public:
    using Error::Error;
};

/// No amplitude puts the data on the requested side of the threshold.
/// Carries every positive root a of E(a psi) = target so the caller can
/// move shape parameters instead.
class Infeasible : public Error {
public:
    Infeasible(const std::string& what, std::vector<double> amplitudes)
        : Error(what), amplitudes_(std::move(amplitudes)) {}
    const std::vector<double>& amplitudes() const noexcept { return amplitudes_; }

private:
    std::vector<double> amplitudes_;
};

/// Bad configuration file or override; key() names the offending entry.
class ConfigError : public Error {
public:
    ConfigError(std::string key, const std::string& what)
        : Error(what), key_(std::move(key)) {}
    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

}  // namespace cqnls
