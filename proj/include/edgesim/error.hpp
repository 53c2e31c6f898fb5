#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace edgesim {

/// Base class for every error raised by the simulator.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when a configuration fails validation. Carries every violation found.
class ConfigError : public Error {
public:
    explicit ConfigError(std::vector<std::string> violations)
        : Error(join(violations)), violations_(std::move(violations)) {}

    const std::vector<std::string>& violations() const noexcept { return violations_; }

private:
    static std::string join(const std::vector<std::string>& v) {
        std::string out = "invalid config:";
        for (const auto& s : v) {
            out += "\n  - ";
            out += s;
        }
        return out;
    }

    std::vector<std::string> violations_;
};

class IllegalAction : public Error {
public:
    using Error::Error;
};

class EpisodeFinished : public Error {
public:
    EpisodeFinished() : Error("episode finished") {}
};

}  // namespace edgesim
