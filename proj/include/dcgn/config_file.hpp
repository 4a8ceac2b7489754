#pragma once

#include "dcgn/synthetic.hpp"

#include <filesystem>
#include <iosfwd>
#include <set>

namespace dcgn {

/// Settings read from a `key = value` file. Keys are RunConfig and
/// SyntheticSpec field names; `k` sets both. Colour lists are written as
/// `r,g,b; r,g,b`. Blank lines and text after `#` are ignored.
struct ConfigFile {
  RunConfig run;
  SyntheticSpec synthetic;
  std::set<std::string> keys;  // keys present in the file
};

/// Applies one key to the settings; throws InvalidInput on an unknown key or
/// a malformed value.
void apply_config_value(ConfigFile& cfg, const std::string& key, const std::string& value);

ConfigFile parse_config(std::istream& in);
ConfigFile load_config(const std::filesystem::path& path);

std::vector<Rgb> parse_rgb_list(const std::string& text);

}  // namespace dcgn
