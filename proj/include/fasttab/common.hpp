#pragma once

#include <stdexcept>
#include <string>

namespace fasttab {

// Error taxonomy; the CLI maps these onto exit codes.
struct usage_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct dimension_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct data_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct numeric_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct parse_error : std::runtime_error {
    parse_error(const std::string& msg, size_t offset)
        : std::runtime_error(msg + " (byte " + std::to_string(offset) + ")"), byte_offset(offset) {}
    size_t byte_offset;
};

}  // namespace fasttab
