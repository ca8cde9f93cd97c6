#include "blupcal/config.hpp"

#include "blupcal/errors.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <variant>

namespace blupcal {

namespace {

using Scalar = std::variant<double, std::string>;

struct Value {
  std::vector<Scalar> items;
  bool is_list = false;
};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string strip_comment(const std::string& line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') in_string = !in_string;
    if (line[i] == '#' && !in_string) return line.substr(0, i);
  }
  return line;
}

class LineError {
public:
  explicit LineError(int line) : line_(line) {}
  [[noreturn]] void operator()(const std::string& msg) const {
    throw ConfigError("config line " + std::to_string(line_) + ": " + msg);
  }

private:
  int line_;
};

Scalar parse_scalar(const std::string& text, const LineError& fail) {
  if (text.empty()) fail("missing value");
  if (text.front() == '"') {
    if (text.size() < 2 || text.back() != '"') fail("unterminated string " + text);
    return text.substr(1, text.size() - 2);
  }
  double v = 0.0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) fail("cannot parse value '" + text + "'");
  return v;
}

Value parse_value(const std::string& text, const LineError& fail) {
  Value out;
  if (!text.empty() && text.front() == '[') {
    if (text.back() != ']') fail("unterminated list " + text);
    out.is_list = true;
    const std::string body = text.substr(1, text.size() - 2);
    std::size_t start = 0;
    while (start <= body.size()) {
      const auto comma = body.find(',', start);
      const std::string item = trim(body.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
      if (!item.empty()) out.items.push_back(parse_scalar(item, fail));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (out.items.empty()) fail("empty list");
    return out;
  }
  out.items.push_back(parse_scalar(text, fail));
  return out;
}

double as_number(const Scalar& s, const std::string& key, const LineError& fail) {
  if (const auto* d = std::get_if<double>(&s)) return *d;
  fail("key '" + key + "' expects a number");
}

std::string as_string(const Scalar& s, const std::string& key, const LineError& fail) {
  if (const auto* str = std::get_if<std::string>(&s)) return *str;
  fail("key '" + key + "' expects a string");
}

}  // namespace

std::vector<Scenario> SimulationConfig::scenarios() const {
  if (published_grid) {
    std::vector<Scenario> out = scenario_grid(base);
    // Explicit axes further restrict or extend the published design.
    if (!axes.empty()) {
      std::vector<Scenario> expanded;
      for (const auto& s : out)
        for (auto& t : expand_grid(s, axes)) expanded.push_back(std::move(t));
      return expanded;
    }
    return out;
  }
  return expand_grid(base, axes);
}

SimulationConfig parse_config(std::istream& in, bool require_methods) {
  SimulationConfig cfg;
  std::string section;
  std::set<std::string> seen;
  std::string raw;
  int line_no = 0;
  bool family_set = false;
  std::vector<std::pair<std::string, std::pair<double, int>>> deferred_numbers;

  while (std::getline(in, raw)) {
    ++line_no;
    const LineError fail(line_no);
    const std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[' && line.back() == ']' && line.find('=') == std::string::npos) {
      section = trim(line.substr(1, line.size() - 2));
      if (section != "scenario" && section != "grid" && section != "run")
        fail("unknown table [" + section + "] (expected scenario, grid or run)");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail("expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const Value value = parse_value(trim(line.substr(eq + 1)), fail);
    if (key.empty()) fail("empty key");
    if (!seen.insert(key).second) fail("duplicate key '" + key + "'");

    if (key == "methods") {
      if (section == "grid" || section == "scenario") fail("'methods' belongs at top level or in [run]");
      for (const auto& item : value.items) {
        const std::string label = as_string(item, key, fail);
        try {
          (void)parse_pipeline_label(label);
        } catch (const ConfigError& e) {
          fail(std::string("methods: ") + e.what());
        }
        cfg.methods.push_back(label);
      }
      continue;
    }
    if (key == "grid") {
      if (as_string(value.items.front(), key, fail) != "published")
        fail("grid must be \"published\" when given as a string");
      cfg.published_grid = true;
      continue;
    }
    if (key == "brute_force_n") {
      const double v = as_number(value.items.front(), key, fail);
      if (v < 1000 || v != static_cast<int>(v)) fail("brute_force_n must be an integer >= 1000");
      cfg.brute_force_n = static_cast<int>(v);
      continue;
    }
    if (key == "family") {
      cfg.base.family = [&] {
        try {
          return parse_family(as_string(value.items.front(), key, fail));
        } catch (const ConfigError& e) {
          fail(e.what());
        }
      }();
      family_set = true;
      continue;
    }
    if (key == "id") {
      cfg.base.id = as_string(value.items.front(), key, fail);
      continue;
    }

    Scenario probe;
    if (!set_numeric_field(probe, key, 0.0)) fail("unknown key '" + key + "'");
    if (value.is_list || section == "grid") {
      std::vector<double> levels;
      for (const auto& item : value.items) levels.push_back(as_number(item, key, fail));
      cfg.axes.emplace_back(key, std::move(levels));
    } else {
      deferred_numbers.push_back({key, {as_number(value.items.front(), key, fail), line_no}});
    }
  }

  // Family-specific published defaults first, then explicit values.
  if (family_set && cfg.base.family == Family::logistic) {
    Scenario logistic = published_base(Family::logistic);
    logistic.id = cfg.base.id;
    cfg.base = logistic;
  }
  for (const auto& [key, v] : deferred_numbers) {
    try {
      set_numeric_field(cfg.base, key, v.first);
    } catch (const ConfigError& e) {
      LineError(v.second)(e.what());
    }
  }
  if (require_methods && cfg.methods.empty()) throw ConfigError("config: method list is empty");
  try {
    for (const auto& s : cfg.scenarios()) s.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return cfg;
}

SimulationConfig load_config(const std::string& path, bool require_methods) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(in, require_methods);
}

}  // namespace blupcal
