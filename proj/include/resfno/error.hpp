#pragma once

#include <stdexcept>
#include <string>

namespace resfno {

/// Base class for every error raised by the library. `category()` is the
/// short machine-readable tag the CLI prints in front of the message.
class Error : public std::runtime_error {
public:
    Error(std::string category, const std::string& what)
        : std::runtime_error(what), category_(std::move(category)) {}
    const std::string& category() const noexcept { return category_; }

private:
    std::string category_;
};

struct ShapeError : Error {
    explicit ShapeError(const std::string& what) : Error("shape", what) {}
};

struct ValueError : Error {
    explicit ValueError(const std::string& what) : Error("value", what) {}
};

struct DataError : Error {
    explicit DataError(const std::string& what) : Error("data", what) {}
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& what) : Error("config", what) {}
};

struct IoError : Error {
    explicit IoError(const std::string& what) : Error("io", what) {}
};

} // namespace resfno
