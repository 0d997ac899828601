#include "topoattn/error.hpp"

namespace topoattn {

ParseError::ParseError(const std::string& what, std::size_t offset)
    : std::runtime_error(what + " (at byte " + std::to_string(offset) + ")"),
      offset_(offset) {}

}  // namespace topoattn
