#pragma once

#include <stdexcept>
#include <string>

#include "sparseflow/engine.hpp"

namespace sparseflow {

// Malformed program text. The message names the offending JSON path.
class ProgramError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kProgramFormat = 1;

// Parses and validates a program document (JSON, "format": 1).
Program parse_program(const std::string &text);
Program load_program(const std::string &path);

// Canonical JSON rendering; parse_program(serialize_program(p)) reproduces p
// and serializes to the identical text.
std::string serialize_program(const Program &program);

// Index expression syntax used by the document: "i", "j+1", "k-2", "i*2",
// "j/4" or an integer constant. Throws std::invalid_argument otherwise.
AxisIndex parse_index(const std::string &text);
std::string format_index(const AxisIndex &index);

}  // namespace sparseflow
