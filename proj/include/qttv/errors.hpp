#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace qttv {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad input: wrong sizes, out-of-range parameters, malformed files.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Numerical failures (singular operators, rank explosion, non-convergence).
class NumericalError : public Error {
public:
    using Error::Error;
};

class SingularOperator : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// A truncation needed more rank than the configured cap allows.
class RankLimitExceeded : public NumericalError {
public:
    RankLimitExceeded(std::size_t mode, std::size_t required, std::size_t cap,
                      std::string context = {})
        : NumericalError(format(mode, required, cap, context)),
          mode_(mode), required_(required), cap_(cap), context_(std::move(context)) {}

    std::size_t mode() const noexcept { return mode_; }
    std::size_t required_rank() const noexcept { return required_; }
    std::size_t cap() const noexcept { return cap_; }
    const std::string& context() const noexcept { return context_; }

    /// Same failure, with an outer context (e.g. "qtt_fft stage 3") prepended.
    RankLimitExceeded within(const std::string& outer) const {
        return {mode_, required_, cap_, context_.empty() ? outer : outer + ": " + context_};
    }

private:
    static std::string format(std::size_t mode, std::size_t required, std::size_t cap,
                              const std::string& context) {
        std::string msg = "rank limit exceeded at mode " + std::to_string(mode) + ": need " +
                          std::to_string(required) + " > cap " + std::to_string(cap);
        if (!context.empty()) msg = context + ": " + msg;
        return msg;
    }

    std::size_t mode_, required_, cap_;
    std::string context_;
};

/// Iterative method stopped before reaching its target.
class ConvergenceError : public NumericalError {
public:
    ConvergenceError(const std::string& what, std::size_t iterations, double residual,
                     std::vector<std::size_t> ranks = {})
        : NumericalError(what), iterations_(iterations), residual_(residual),
          ranks_(std::move(ranks)) {}

    std::size_t iterations() const noexcept { return iterations_; }
    double residual() const noexcept { return residual_; }
    /// Best-so-far ranks, when the method produces a tensor train.
    const std::vector<std::size_t>& ranks() const noexcept { return ranks_; }

private:
    std::size_t iterations_;
    double residual_;
    std::vector<std::size_t> ranks_;
};

}  // namespace qttv
