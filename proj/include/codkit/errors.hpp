#pragma once

#include <stdexcept>
#include <string>

namespace codkit {

struct ShapeMismatch : std::runtime_error {
    explicit ShapeMismatch(const std::string& msg) : std::runtime_error("shape mismatch: " + msg) {}
};

struct NonPowerOfTwoDims : std::runtime_error {
    explicit NonPowerOfTwoDims(const std::string& msg)
        : std::runtime_error("non-power-of-two dims: " + msg) {}
};

/// Inverse transform discarded an imaginary part that was too large to be
/// rounding noise; the spectrum handed in was not conjugate-symmetric.
struct ResidualImaginary : std::runtime_error {
    explicit ResidualImaginary(const std::string& msg)
        : std::runtime_error("residual imaginary: " + msg) {}
};

struct NonPositiveVariance : std::runtime_error {
    explicit NonPositiveVariance(const std::string& msg)
        : std::runtime_error("non-positive variance: " + msg) {}
};

struct OddChannelCount : std::runtime_error {
    explicit OddChannelCount(const std::string& msg)
        : std::runtime_error("odd channel count: " + msg) {}
};

struct EvenKernel : std::runtime_error {
    explicit EvenKernel(const std::string& msg) : std::runtime_error("even kernel: " + msg) {}
};

struct DomainError : std::runtime_error {
    explicit DomainError(const std::string& msg) : std::runtime_error("domain error: " + msg) {}
};

struct EmptyGroundTruth : std::runtime_error {
    explicit EmptyGroundTruth(const std::string& msg)
        : std::runtime_error("empty ground truth: " + msg) {}
};

struct UnreadableImage : std::runtime_error {
    explicit UnreadableImage(const std::string& msg)
        : std::runtime_error("unreadable image: " + msg) {}
};

struct NonFiniteLoss : std::runtime_error {
    explicit NonFiniteLoss(const std::string& msg)
        : std::runtime_error("non-finite loss: " + msg) {}
};

}  // namespace codkit
