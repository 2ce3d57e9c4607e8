#pragma once

#include <stdexcept>
#include <string>

namespace mcdl {

// Every failure carries a short machine-readable code (e.g. "invalid-input")
// next to the human message; the CLI prints the code on the error stream.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

struct InvalidInput : Error {
    explicit InvalidInput(const std::string& msg) : Error("invalid-input", msg) {}
};

struct NumericOverflow : Error {
    NumericOverflow(const std::string& tensor, const std::string& msg)
        : Error("numeric-overflow", tensor + ": " + msg), tensor_name(tensor) {}
    std::string tensor_name;
};

struct EmptyHistory : Error {
    explicit EmptyHistory(const std::string& msg) : Error("empty-history", msg) {}
};

struct WarmUpError : Error {
    explicit WarmUpError(const std::string& msg) : Error("warm-up", msg) {}
};

struct InsufficientBatch : Error {
    explicit InsufficientBatch(const std::string& msg) : Error("insufficient-batch", msg) {}
};

struct InternalConsistency : Error {
    explicit InternalConsistency(const std::string& msg) : Error("internal-consistency", msg) {}
};

struct InvalidSplit : Error {
    explicit InvalidSplit(const std::string& msg) : Error("invalid-split", msg) {}
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& msg) : Error("config-error", msg) {}
    ConfigError(std::string code, const std::string& msg) : Error(std::move(code), msg) {}
};

struct FormatError : Error {
    explicit FormatError(const std::string& msg) : Error("bad-format", msg) {}
};

}  // namespace mcdl
