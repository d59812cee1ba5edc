#pragma once

// Flat key/value system-definition files, the built-in fixtures from the
// worked examples, and the loader that turns either into a ControlSystem.

#include <string>
#include <vector>

#include "ctrl/fields.hpp"

namespace ctrl {

struct SystemFileError : std::runtime_error {
  int line;
  SystemFileError(const std::string& msg, int line_no)
      : std::runtime_error("line " + std::to_string(line_no) + ": " + msg), line(line_no) {}
};

struct LoadedSystem {
  ControlSystem system;
  std::vector<std::string> f_text;  // expression strings as written
  std::string note;                 // optional fixture annotation, echoed in reports
};

LoadedSystem load_system_text(const std::string& text);
LoadedSystem load_system_file(const std::string& path);

std::vector<std::string> fixture_names();
bool is_fixture(const std::string& name);
std::string fixture_text(const std::string& name);  // throws std::invalid_argument

// Resolves a fixture name or a path; "kalman-random" generates a random
// linear system from the seed.  Parameter overrides (e.g. A=1 for the
// hydrodynamical sleigh) are applied before validation.
LoadedSystem load(const std::string& name_or_path, uint64_t seed = kDefaultSeed,
                  const ParamMap& param_overrides = {});

}  // namespace ctrl
