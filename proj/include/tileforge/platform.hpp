#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>

#include "tileforge/ir.hpp"

namespace tileforge {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Resource budgets and per-operation cost tables. Defaults model an
// Alveo-U200-class device at 250 MHz.
struct PlatformConfig {
  std::int64_t dsp_available = 6840;
  std::int64_t mem_bytes = 7'200'000;
  std::int64_t max_part = 1024;
  std::map<OpKind, std::int64_t> il_par = {{OpKind::Add, 4},
                                           {OpKind::Sub, 4},
                                           {OpKind::Mul, 3},
                                           {OpKind::Div, 14}};
  std::map<OpKind, std::int64_t> il_red = {{OpKind::Add, 4},
                                           {OpKind::Sub, 4},
                                           {OpKind::Mul, 3},
                                           {OpKind::Div, 14}};
  std::map<OpKind, std::int64_t> dsp_cost = {{OpKind::Add, 2},
                                             {OpKind::Sub, 2},
                                             {OpKind::Mul, 3},
                                             {OpKind::Div, 0}};
  bool reuse_opt = true;
  bool tree_reduction = false;
  std::int64_t burst_cap_bits = 512;
  double clock_mhz = 250.0;  // informational only

  // solver section
  double budget_seconds = 60.0;
  int threads = 1;

  // variable pins, path string -> value (see docs/schemas/pins.md)
  std::map<std::string, std::string> pins;

  std::string validate() const;
};

// Loads a config from TOML (sections [platform], [ops.latency], [ops.dsp],
// [solver], [pins]) or from JSON when the file starts with '{'. Unknown keys
// are rejected.
PlatformConfig load_platform_config(const std::string& path);
PlatformConfig parse_platform_config(const std::string& text);

}  // namespace tileforge
