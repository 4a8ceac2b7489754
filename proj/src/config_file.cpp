#include "dcgn/config_file.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <sstream>

namespace dcgn {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return {};
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

double to_double(const std::string& key, const std::string& text) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || text.empty()) {
    throw InvalidInput("'" + key + "' expects a number, got '" + text + "'");
  }
  return v;
}

template <typename Int>
Int to_int(const std::string& key, const std::string& text) {
  Int v{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw InvalidInput("'" + key + "' expects an integer, got '" + text + "'");
  }
  return v;
}

bool to_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw InvalidInput("'" + key + "' expects true or false, got '" + text + "'");
}

Rgb to_rgb(const std::string& key, const std::string& text) {
  const auto list = parse_rgb_list(text);
  if (list.size() != 1) throw InvalidInput("'" + key + "' expects a single r,g,b triple");
  return list.front();
}

}  // namespace

std::vector<Rgb> parse_rgb_list(const std::string& text) {
  std::vector<Rgb> out;
  std::stringstream groups(text);
  std::string group;
  while (std::getline(groups, group, ';')) {
    group = trim(group);
    if (group.empty()) continue;
    std::stringstream parts(group);
    std::string part;
    Rgb rgb{};
    int n = 0;
    while (std::getline(parts, part, ',')) {
      if (n == 3) throw InvalidInput("colour '" + group + "' has more than 3 components");
      rgb[static_cast<std::size_t>(n++)] = to_double("colour", trim(part));
    }
    if (n != 3) throw InvalidInput("colour '" + group + "' needs 3 components");
    out.push_back(rgb);
  }
  return out;
}

void apply_config_value(ConfigFile& cfg, const std::string& key, const std::string& value) {
  RunConfig& r = cfg.run;
  SyntheticSpec& s = cfg.synthetic;
  if (key == "k") {
    r.k = s.k = to_int<int>(key, value);
  } else if (key == "lambda") {
    r.lambda = to_double(key, value);
  } else if (key == "learning_rate") {
    r.learning_rate = to_double(key, value);
  } else if (key == "lr_decay") {
    r.lr_decay = to_double(key, value);
  } else if (key == "epochs") {
    r.epochs = to_int<int>(key, value);
  } else if (key == "batch_size") {
    r.batch_size = to_int<int>(key, value);
  } else if (key == "seed") {
    r.seed = to_int<std::uint64_t>(key, value);
  } else if (key == "gamma_floor") {
    r.gamma_floor = to_double(key, value);
  } else if (key == "covariance_floor") {
    r.covariance_floor = to_double(key, value);
  } else if (key == "variance_floor") {
    r.variance_floor = to_double(key, value);
  } else if (key == "centring") {
    r.centring = parse_centring_sign(value);
  } else if (key == "objective_scale") {
    r.objective_scale = parse_objective_scale(value);
  } else if (key == "augment") {
    r.augment = to_bool(key, value);
  } else if (key == "width") {
    s.width = to_int<int>(key, value);
  } else if (key == "height") {
    s.height = to_int<int>(key, value);
  } else if (key == "layout") {
    s.layout = parse_region_layout(value);
  } else if (key == "class_means") {
    s.class_means = parse_rgb_list(value);
  } else if (key == "class_stds") {
    s.class_stds = parse_rgb_list(value);
  } else if (key == "outlier_fraction") {
    s.outlier_fraction = to_double(key, value);
  } else if (key == "outlier_mean") {
    s.outlier_mean = to_rgb(key, value);
  } else if (key == "outlier_std") {
    s.outlier_std = to_rgb(key, value);
  } else if (key == "outlier_class") {
    s.outlier_class = to_int<int>(key, value);
  } else {
    throw InvalidInput("unknown config key '" + key + "'");
  }
  cfg.keys.insert(key);
}

ConfigFile parse_config(std::istream& in) {
  ConfigFile cfg;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw InvalidInput("config line " + std::to_string(number) + " has no '='");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      apply_config_value(cfg, key, value);
    } catch (const InvalidInput& e) {
      throw InvalidInput("config line " + std::to_string(number) + ": " + e.what());
    }
  }
  return cfg;
}

ConfigFile load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open config " + path.string());
  return parse_config(in);
}

}  // namespace dcgn
