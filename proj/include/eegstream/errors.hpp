#pragma once

#include <stdexcept>
#include <string>

namespace eegstream {

// Bad caller input: shape mismatch, out-of-range parameter, unknown name.
struct argument_error : std::invalid_argument {
    explicit argument_error(const std::string& msg) : std::invalid_argument(msg) {}
};

// Non-finite values or a failed numeric procedure (integrator blow-up, NaN loss).
struct numeric_error : std::runtime_error {
    explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Corrupt or truncated container (checksum mismatch, short read).
struct integrity_error : std::runtime_error {
    explicit integrity_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Container version not understood by this build.
struct version_error : std::runtime_error {
    explicit version_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Training loop left the stable regime (NaN/Inf loss).
struct training_error : std::runtime_error {
    explicit training_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Metric undefined on the given inputs (e.g. single-class AUROC).
struct undefined_metric_error : std::runtime_error {
    explicit undefined_metric_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace eegstream
