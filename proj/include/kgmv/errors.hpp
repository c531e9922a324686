#ifndef KGMV_ERRORS_HPP
#define KGMV_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace kgmv {

/// Base class of every error raised by the library. `name()` is the stable
/// identifier written into run reports.
class Error : public std::runtime_error {
public:
    Error(std::string name, const std::string& what)
        : std::runtime_error(what), name_(std::move(name)) {}
    const std::string& name() const noexcept { return name_; }

private:
    std::string name_;
};

/// The matter amplitude vanished (or collapsed below the detection threshold).
class ZeroMass : public Error {
public:
    explicit ZeroMass(const std::string& what = "matter field has zero mass")
        : Error("ZeroMass", what) {}
};

/// An iterative linear solve stalled before reaching its tolerance.
class NoConvergence : public Error {
public:
    NoConvergence(int iterations, double residual)
        : Error("NoConvergence", "linear solve did not converge after " + std::to_string(iterations) +
                                     " iterations (relative residual " + std::to_string(residual) + ")"),
          iterations_(iterations), residual_(residual) {}
    int iterations() const noexcept { return iterations_; }
    double residual() const noexcept { return residual_; }

private:
    int iterations_;
    double residual_;
};

class DomainTooSmall : public Error {
public:
    explicit DomainTooSmall(const std::string& what) : Error("DomainTooSmall", what) {}
};

class EnergyNonFinite : public Error {
public:
    explicit EnergyNonFinite(const std::string& what = "energy evaluated to a non-finite value")
        : Error("EnergyNonFinite", what) {}
};

/// Invalid run configuration. `key()` names the offending entry.
class ConfigError : public Error {
public:
    ConfigError(std::string key, const std::string& what)
        : Error("ConfigError", key + ": " + what), key_(std::move(key)) {}
    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

class FormatError : public Error {
public:
    explicit FormatError(const std::string& what) : Error("FormatError", what) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error("IoError", what) {}
};

}  // namespace kgmv

#endif  // KGMV_ERRORS_HPP
