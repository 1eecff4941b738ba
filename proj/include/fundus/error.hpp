#pragma once

#include <stdexcept>
#include <string>

namespace fundus {

/// Raised when a byte stream (raster file, model file, manifest, config)
/// does not conform to its format. The message names the offending field.
class parse_error : public std::runtime_error {
public:
    explicit parse_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace fundus
