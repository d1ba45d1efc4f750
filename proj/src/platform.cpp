#include "tileforge/platform.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace tileforge {

namespace {

using nlohmann::json;

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

void set_op_table(std::map<OpKind, std::int64_t>& table, const std::string& op,
                  std::int64_t value, const std::string& where) {
  auto kind = op_kind_from_name(op);
  if (!kind) throw ConfigError("unknown op '" + op + "' in " + where);
  table[*kind] = value;
}

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("expected boolean for '" + key + "', got '" + v + "'");
}

void apply_platform_key(PlatformConfig& cfg, const std::string& key,
                        const std::string& value) {
  if (key == "dsp_available")
    cfg.dsp_available = std::stoll(value);
  else if (key == "mem_bytes")
    cfg.mem_bytes = static_cast<std::int64_t>(std::stod(value));
  else if (key == "max_part")
    cfg.max_part = std::stoll(value);
  else if (key == "reuse_opt")
    cfg.reuse_opt = parse_bool(value, key);
  else if (key == "tree_reduction")
    cfg.tree_reduction = parse_bool(value, key);
  else if (key == "burst_cap_bits")
    cfg.burst_cap_bits = std::stoll(value);
  else if (key == "clock_mhz")
    cfg.clock_mhz = std::stod(value);
  else
    throw ConfigError("unknown key '" + key + "' in [platform]");
}

PlatformConfig parse_toml(const std::string& text) {
  PlatformConfig cfg;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    lineno++;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("bad section header at line " +
                          std::to_string(lineno));
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("expected key = value at line " +
                        std::to_string(lineno));
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
      value = value.substr(1, value.size() - 2);

    if (section == "platform") {
      apply_platform_key(cfg, key, value);
    } else if (section == "ops.latency.par") {
      set_op_table(cfg.il_par, key, std::stoll(value), section);
    } else if (section == "ops.latency.red") {
      set_op_table(cfg.il_red, key, std::stoll(value), section);
    } else if (section == "ops.dsp") {
      set_op_table(cfg.dsp_cost, key, std::stoll(value), section);
    } else if (section == "solver") {
      if (key == "budget_seconds")
        cfg.budget_seconds = std::stod(value);
      else if (key == "threads")
        cfg.threads = static_cast<int>(std::stoll(value));
      else
        throw ConfigError("unknown key '" + key + "' in [solver]");
    } else if (section == "pins") {
      cfg.pins[key] = value;
    } else {
      throw ConfigError("unknown section [" + section + "]");
    }
  }
  return cfg;
}

PlatformConfig parse_json_config(const std::string& text) {
  PlatformConfig cfg;
  json j = json::parse(text);
  for (auto& [key, val] : j.items()) {
    if (key == "il_par" || key == "il_red" || key == "dsp_cost") {
      auto& table = key == "il_par"
                        ? cfg.il_par
                        : (key == "il_red" ? cfg.il_red : cfg.dsp_cost);
      for (auto& [op, v] : val.items())
        set_op_table(table, op, v.get<std::int64_t>(), key);
    } else if (key == "solver") {
      if (val.contains("budget_seconds"))
        cfg.budget_seconds = val["budget_seconds"].get<double>();
      if (val.contains("threads")) cfg.threads = val["threads"].get<int>();
    } else if (key == "pins") {
      for (auto& [p, v] : val.items())
        cfg.pins[p] = v.is_string() ? v.get<std::string>() : v.dump();
    } else if (key == "reuse_opt" || key == "tree_reduction") {
      apply_platform_key(cfg, key, val.get<bool>() ? "true" : "false");
    } else {
      std::ostringstream os;
      if (val.is_number_float())
        os << val.get<double>();
      else
        os << val;
      apply_platform_key(cfg, key, os.str());
    }
  }
  return cfg;
}

}  // namespace

std::string PlatformConfig::validate() const {
  if (dsp_available < 0) return "dsp_available must be non-negative";
  if (mem_bytes < 0) return "mem_bytes must be non-negative";
  if (max_part < 1) return "max_part must be >= 1";
  if (burst_cap_bits != 512) return "burst_cap_bits must be 512";
  for (const auto& [op, v] : il_par)
    if (v < 1) return std::string("il_par must be positive for ") +
                      op_kind_name(op);
  for (const auto& [op, v] : il_red)
    if (v < 1) return std::string("il_red must be positive for ") +
                      op_kind_name(op);
  for (const auto& [op, v] : dsp_cost)
    if (v < 0) return std::string("dsp_cost must be non-negative for ") +
                      op_kind_name(op);
  return {};
}

PlatformConfig parse_platform_config(const std::string& text) {
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) continue;
    if (c == '{') return parse_json_config(text);
    break;
  }
  return parse_toml(text);
}

PlatformConfig load_platform_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("config not found: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  PlatformConfig cfg = parse_platform_config(ss.str());
  std::string diag = cfg.validate();
  if (!diag.empty()) throw ConfigError(diag + " (" + path + ")");
  return cfg;
}

}  // namespace tileforge
