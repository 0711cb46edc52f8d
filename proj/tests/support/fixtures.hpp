#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#ifndef GPRISM_FIXTURE_DIR
#error "GPRISM_FIXTURE_DIR must point at tests/fixtures"
#endif

namespace gprism::testing {

inline std::string fixture_path(const std::string& name) { return std::string(GPRISM_FIXTURE_DIR) + "/" + name; }

inline std::string read_fixture(const std::string& name) {
    std::ifstream in(fixture_path(name), std::ios::binary);
    if (!in) throw std::runtime_error("missing fixture " + name);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace gprism::testing
