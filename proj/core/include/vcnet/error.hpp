#pragma once

#include <stdexcept>
#include <string>

namespace vcnet {

// Runtime failure carrying the module and operation where it originated,
// so the CLI can report "module.operation: what" and exit 2.
class Error : public std::runtime_error {
public:
    Error(std::string where, const std::string& what)
        : std::runtime_error(where + ": " + what), where_(std::move(where)) {}

    const std::string& where() const noexcept { return where_; }

private:
    std::string where_;
};

} // namespace vcnet
