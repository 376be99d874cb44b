#include "sopbound/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <utility>

#include <fmt/format.h>

#include "sopbound/error.hpp"

namespace sopbound::config {

namespace {

using Keys = std::vector<std::pair<std::string, std::string>>;
using Sections = std::vector<std::pair<std::string, Keys>>;

const Keys kChannel = {{"eve_offset_d", "50"},     {"path_loss_exponent", "3"},
                       {"transmit_power", "1"},    {"noise_var_bob", "1e-7"},
                       {"noise_var_eve", "1e-7"},  {"size", "1"},
                       {"gain_rule", "first-entry"}, {"samples", "100000"}};

const Keys kBounds = {{"theta_min", "-1"}, {"theta_max", "1"}, {"eta", "0.1"}};

const std::map<std::string, Sections>& schemas() {
  static const std::map<std::string, Sections> s = {
      {"sop-table",
       {{"channel", kChannel},
        {"table", {{"mutual_info", "0, 0.5, 1"}, {"rho", "0.1, 0.2"}}},
        {"bounds", kBounds}}},
      {"count-eigs",
       {{"pencil", {{"file", ""}, {"b", "0.5 0; 0 2"}, {"a", "1 0; 0 1"}}},
        {"contour",
         {{"shape", "circle"},
          {"center_re", "0"},
          {"center_im", "0"},
          {"radius", "1"},
          {"inner_radius", "0.001"},
          {"slit_angle", "3.141592653589793"},
          {"slit_half_width", "0.001"},
          {"nodes", "128"}}}}},
      {"project",
       {{"bounds", kBounds},
        {"experiment", {{"grid_points", "201"}, {"trials", "10000"}, {"rows", "3"}, {"cols", "3"}}},
        {"diameter",
         {{"point_set", "antipodal"},
          {"r1", "50"},
          {"r2", "10"},
          {"c0", "3"},
          {"points", "200"},
          {"trials", "1000"},
          {"width_draws", "10000"}}}}},
      {"jl-tail",
       {{"jl",
         {{"n", "100"}, {"k", "5, 10, 20, 40"}, {"tau2", "0.2, 0.5, 0.8"}, {"trials", "100000"}}}}},
      {"train",
       {{"ensemble", {{"u0", "5"}, {"v0", "7"}, {"beta", "2"}}},
        {"train",
         {{"iterations", "5000"},
          {"discount", "0.9"},
          {"reward_window", "500"},
          {"initial_q", "0"},
          {"model_steps", "200000"}}},
        {"schedule", {{"kind", "diminishing"}, {"alpha", "0.1"}, {"beta", "0.5"}, {"epsilon", "0.1"}}}}},
      {"possim",
       {{"semi_markov",
         {{"horizon", "1000"},
          {"kernel", "1 0.6; 0.7 1"},
          {"initial_mode", "0"},
          {"initial_state", "1"},
          {"stable_a", "0.5"},
          {"unstable_a", "1.2"},
          {"process_noise", "0.01"},
          {"obs_noise_bob", "0.01"},
          {"obs_noise_eve", "0.01"},
          {"stable_holding", "exponential"},
          {"stable_mean", "5"},
          {"unstable_holding", "exponential"},
          {"unstable_mean", "5"},
          {"record_dynamics", "true"}}},
        {"graph", {{"file", ""}}}}},
      {"complexity-table",
       {{"channel", kChannel},
        {"greedy", {{"thresholds", "8"}, {"grid_points", "64"}, {"max_iters", "100"}, {"t", "1"}}},
        {"table", {{"iterations", "0, 50, 100"}}}}},
  };
  return s;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double to_double(const std::string& text, const std::string& where) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) {
    throw ConfigError(fmt::format("{}: '{}' is not a number", where, text));
  }
  return v;
}

}  // namespace

Entries parse(std::istream& in) {
  Entries entries;
  entries[""];
  std::string section;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    // '#' starts a comment anywhere; ';' only at the start of a line since it
    // also separates matrix rows inside values.
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (const std::string lead = trim(line); !lead.empty() && lead.front() == ';') line.clear();
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (t.front() == '[') {
      if (t.back() != ']') throw ConfigError(fmt::format("line {}: unterminated section header", line_no));
      section = trim(std::string_view(t).substr(1, t.size() - 2));
      if (section.empty()) throw ConfigError(fmt::format("line {}: empty section name", line_no));
      entries[section];
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError(fmt::format("line {}: expected key = value", line_no));
    const std::string key = trim(std::string_view(t).substr(0, eq));
    const std::string value = trim(std::string_view(t).substr(eq + 1));
    if (key.empty()) throw ConfigError(fmt::format("line {}: empty key", line_no));
    if (!entries[section].emplace(key, value).second) {
      throw ConfigError(fmt::format("line {}: duplicate key '{}'", line_no, key));
    }
  }
  return entries;
}

Entries parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config file '{}'", path));
  return parse(in);
}

const std::vector<std::string>& experiment_kinds() {
  static const std::vector<std::string> kinds = {"sop-table", "count-eigs", "project", "jl-tail",
                                                 "train",     "possim",     "complexity-table"};
  return kinds;
}

std::string schema_text(const std::string& kind) {
  const auto it = schemas().find(kind);
  if (it == schemas().end()) throw ConfigError(fmt::format("unknown experiment kind '{}'", kind));
  std::string out = fmt::format("kind = {}\nseed = 1\nout = out\n", kind);
  for (const auto& [section, keys] : it->second) {
    out += fmt::format("\n[{}]\n", section);
    for (const auto& [key, def] : keys) out += fmt::format("{} = {}\n", key, def);
  }
  return out;
}

const std::string& ResolvedConfig::text(const std::string& section, const std::string& key) const {
  const auto s = values_.find(section);
  if (s != values_.end()) {
    const auto k = s->second.find(key);
    if (k != s->second.end()) return k->second;
  }
  throw ConfigError(fmt::format("no key {}.{} in a {} config", section, key, kind_));
}

double ResolvedConfig::number(const std::string& section, const std::string& key) const {
  return to_double(text(section, key), section + "." + key);
}

long ResolvedConfig::integer(const std::string& section, const std::string& key) const {
  const double v = number(section, key);
  if (v != static_cast<double>(static_cast<long>(v))) {
    throw ConfigError(fmt::format("{}.{} must be an integer", section, key));
  }
  return static_cast<long>(v);
}

bool ResolvedConfig::flag(const std::string& section, const std::string& key) const {
  const std::string& v = text(section, key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(fmt::format("{}.{} must be true or false", section, key));
}

std::vector<double> ResolvedConfig::numbers(const std::string& section, const std::string& key) const {
  std::vector<double> out;
  std::istringstream ss(text(section, key));
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_double(trim(item), section + "." + key));
  if (out.empty()) throw ConfigError(fmt::format("{}.{} needs at least one value", section, key));
  return out;
}

std::string ResolvedConfig::to_text() const {
  std::string out = fmt::format("kind = {}\nseed = {}\nout = {}\n", kind_, seed_, out_);
  for (const auto& [section, keys] : schemas().at(kind_)) {
    out += fmt::format("\n[{}]\n", section);
    for (const auto& [key, value] : values_.at(section)) out += fmt::format("{} = {}\n", key, value);
  }
  return out;
}

ResolvedConfig resolve(const Entries& entries, const std::optional<std::string>& kind,
                       std::optional<std::uint64_t> seed, const std::optional<std::string>& out) {
  ResolvedConfig rc;
  const auto globals_it = entries.find("");
  const std::map<std::string, std::string> globals =
      globals_it == entries.end() ? std::map<std::string, std::string>{} : globals_it->second;
  for (const auto& [key, value] : globals) {
    if (key != "kind" && key != "seed" && key != "out") {
      throw ConfigError(fmt::format("unknown global key '{}'", key));
    }
  }
  const auto file_kind = globals.find("kind");
  if (kind && file_kind != globals.end() && file_kind->second != *kind) {
    throw ConfigError(fmt::format("config is for '{}', not '{}'", file_kind->second, *kind));
  }
  if (kind) {
    rc.kind_ = *kind;
  } else if (file_kind != globals.end()) {
    rc.kind_ = file_kind->second;
  } else {
    throw ConfigError("config does not name an experiment kind");
  }
  const auto schema = schemas().find(rc.kind_);
  if (schema == schemas().end()) throw ConfigError(fmt::format("unknown experiment kind '{}'", rc.kind_));

  if (seed) {
    rc.seed_ = *seed;
  } else if (const auto s = globals.find("seed"); s != globals.end()) {
    const std::string& text = s->second;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), rc.seed_);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
      throw ConfigError(fmt::format("seed '{}' is not a non-negative integer", text));
    }
  }
  if (out) {
    rc.out_ = *out;
  } else if (const auto o = globals.find("out"); o != globals.end()) {
    rc.out_ = o->second;
  } else {
    rc.out_ = "out";
  }

  for (const auto& [section, keys] : schema->second) {
    auto& dst = rc.values_[section];
    for (const auto& [key, def] : keys) dst[key] = def;
  }
  for (const auto& [section, keys] : entries) {
    if (section.empty()) continue;
    const auto known = std::find_if(schema->second.begin(), schema->second.end(),
                                    [&](const auto& s) { return s.first == section; });
    if (known == schema->second.end()) {
      throw ConfigError(fmt::format("unknown section [{}] for {}", section, rc.kind_));
    }
    for (const auto& [key, value] : keys) {
      auto& dst = rc.values_[section];
      if (dst.find(key) == dst.end()) throw ConfigError(fmt::format("unknown key {}.{}", section, key));
      dst[key] = value;
    }
  }
  return rc;
}

}  // namespace sopbound::config
