#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ismp {

// Domain error carrying the owning module and a short machine-readable kind.
// The CLI renders these as "error:<module>:<kind>: <message>".
class Error : public std::runtime_error {
public:
    Error(std::string module, std::string kind, const std::string& message)
        : std::runtime_error(message), module_(std::move(module)), kind_(std::move(kind)) {}

    const std::string& module() const noexcept { return module_; }
    const std::string& kind() const noexcept { return kind_; }

private:
    std::string module_;
    std::string kind_;
};

// Non-fatal conditions (degenerate neighborhoods, identity fallbacks, ...)
// are appended here instead of throwing.
using Warnings = std::vector<std::string>;

inline void warn(Warnings* sink, const std::string& message) {
    if (sink != nullptr) sink->push_back(message);
}

}  // namespace ismp
