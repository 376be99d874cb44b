#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace sopbound::config {

/// section -> key -> raw value. Keys before the first header live in "".
using Entries = std::map<std::string, std::map<std::string, std::string>>;

/// Flat `key = value` text with `[section]` headers. '#' starts a comment
/// anywhere, ';' only at the start of a line. Duplicate keys and malformed
/// lines raise ConfigError.
Entries parse(std::istream& in);
Entries parse_file(const std::string& path);

/// Experiment kinds, in CLI order.
const std::vector<std::string>& experiment_kinds();

/// Defaults of one experiment kind, formatted like a config file.
std::string schema_text(const std::string& kind);

/// A config with every default filled in and every key checked against the
/// schema of its kind.
class ResolvedConfig {
 public:
  const std::string& kind() const { return kind_; }
  std::uint64_t seed() const { return seed_; }
  const std::string& out() const { return out_; }

  const std::string& text(const std::string& section, const std::string& key) const;
  double number(const std::string& section, const std::string& key) const;
  long integer(const std::string& section, const std::string& key) const;
  bool flag(const std::string& section, const std::string& key) const;
  /// Comma-separated numbers.
  std::vector<double> numbers(const std::string& section, const std::string& key) const;

  /// Canonical text form: globals, then sections in order, keys sorted.
  std::string to_text() const;

 private:
  friend ResolvedConfig resolve(const Entries&, const std::optional<std::string>&,
                                std::optional<std::uint64_t>, const std::optional<std::string>&);
  std::string kind_;
  std::uint64_t seed_ = 1;
  std::string out_;
  Entries values_;
};

/// Fills defaults and rejects unknown sections and keys. The overrides win
/// over the file; a kind override must agree with a kind given in the file.
ResolvedConfig resolve(const Entries& entries, const std::optional<std::string>& kind = std::nullopt,
                       std::optional<std::uint64_t> seed = std::nullopt,
                       const std::optional<std::string>& out = std::nullopt);

}  // namespace sopbound::config
