#pragma once
#include <stdexcept>
#include <string>

namespace rmi {

// Exit-code contract: 0 ok, 2 config error, 3 missing input, 4 numerical failure.
enum class ErrCode : int { config = 2, missing_input = 3, numeric = 4 };

class Error : public std::runtime_error {
public:
    Error(ErrCode code, std::string stage, std::string path, const std::string& msg)
        : std::runtime_error(msg), code(code), stage(std::move(stage)), path(std::move(path)) {}

    ErrCode code;
    std::string stage;
    std::string path;

    // single-line machine-parsable form used by the CLI
    std::string line() const {
        return "rmi-error code=" + std::to_string(static_cast<int>(code)) +
               " stage=" + stage + " path=" + (path.empty() ? "-" : path) +
               " msg=\"" + what() + "\"";
    }
};

} // namespace rmi
