#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

#include "flowbench/grid.hpp"

namespace flowbench {

/// Malformed case text. `line()` is 1-based, 0 when no single line applies.
class ParseError : public std::runtime_error {
  public:
    ParseError(int line, const std::string& what)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
    int line() const noexcept { return line_; }

  private:
    int line_;
};

/// Parses the MATPOWER v2 subset: mpc.baseMVA, mpc.bus, mpc.gen, mpc.branch
/// and an optional polynomial mpc.gencost. Powers are converted to p.u. and
/// angles to radians; external bus numbers are remapped to dense indices.
Network parse_matpower(std::string_view text);
Network load_matpower(const std::filesystem::path& path);

/// Writes a case that parse_matpower reads back to the same Network.
std::string emit_matpower(const Network& net);

}  // namespace flowbench
