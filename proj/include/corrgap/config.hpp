#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "corrgap/harness.hpp"

namespace corrgap::config {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Minimal TOML subset: comments, [section] headers, key = value with number,
// boolean, quoted string, and flat array values.
struct Value {
    enum class Kind { kNumber, kBool, kString, kArray } kind = Kind::kNumber;
    double number = 0.0;
    bool boolean = false;
    std::string str;
    std::vector<Value> array;
};

using Section = std::map<std::string, Value>;
using Document = std::map<std::string, Section>;  // "" holds root keys

Document parse_toml(const std::string& text);

// Field names mirror SweepConfig / DistConfig / TrainConfig; unknown keys or
// sections are errors.
harness::SweepConfig sweep_config_from_toml(const std::string& text);
harness::SweepConfig load_sweep_config(const std::string& path);

harness::GapSuiteParams gap_params_from_toml(const std::string& text);
harness::GapSuiteParams load_gap_params(const std::string& path);

}  // namespace corrgap::config
