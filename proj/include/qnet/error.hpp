#pragma once

#include <stdexcept>
#include <string>

namespace qnet {

// Domain error carrying a stable error-class name (e.g. "DuplicateName") and
// the document/element path it concerns. The HTTP layer and the CLI surface
// both verbatim.
class Error : public std::runtime_error {
public:
    Error(std::string code, std::string path, const std::string& message)
        : std::runtime_error(code + (path.empty() ? "" : " at '" + path + "'") +
                             (message.empty() ? "" : ": " + message)),
          code_(std::move(code)),
          path_(std::move(path)),
          message_(message) {}

    const std::string& code() const noexcept { return code_; }
    const std::string& path() const noexcept { return path_; }
    const std::string& message() const noexcept { return message_; }

private:
    std::string code_;
    std::string path_;
    std::string message_;
};

[[noreturn]] inline void fail(std::string code, std::string path = {}, const std::string& message = {}) {
    throw Error(std::move(code), std::move(path), message);
}

}  // namespace qnet
