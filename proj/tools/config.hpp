#pragma once

// INI-style experiment files: [section] headers, key = value lines, '#'
// comments. Every entry remembers its line for diagnostics.

#include <istream>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace pconvex::app {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(int line, std::string field, const std::string& message);
  int line() const noexcept { return line_; }
  const std::string& field() const noexcept { return field_; }

 private:
  int line_;
  std::string field_;
};

struct Entry {
  std::string value;
  int line = 0;
};

class Section {
 public:
  Section() = default;
  Section(std::string name, int line) : name_(std::move(name)), line_(line) {}

  const std::string& name() const noexcept { return name_; }
  int line() const noexcept { return line_; }
  bool has(const std::string& key) const { return entries_.count(key) > 0; }
  const Entry* find(const std::string& key) const;
  void set(const std::string& key, Entry e) { entries_[key] = std::move(e); }
  const std::map<std::string, Entry>& entries() const noexcept { return entries_; }

  std::string text(const std::string& key) const;
  std::string text_or(const std::string& key, const std::string& fallback) const;
  double number(const std::string& key) const;
  double number_or(const std::string& key, double fallback) const;
  int integer(const std::string& key) const;
  int integer_or(const std::string& key, int fallback) const;
  bool boolean_or(const std::string& key, bool fallback) const;
  /// Whitespace-separated numbers; "a/b" fractions are accepted.
  std::vector<double> numbers(const std::string& key) const;
  std::vector<double> numbers_or(const std::string& key, std::vector<double> fallback) const;
  /// Items separated by '|', trimmed.
  std::vector<std::string> list(const std::string& key) const;
  std::vector<std::string> words(const std::string& key) const;

  /// Throws on any key outside `allowed`.
  void restrict_keys(const std::set<std::string>& allowed) const;

  [[noreturn]] void fail(const std::string& key, const std::string& message) const;

 private:
  std::string name_;
  int line_ = 0;
  std::map<std::string, Entry> entries_;
};

class IniFile {
 public:
  static IniFile parse(std::istream& in);
  static IniFile load(const std::string& path);

  bool has(const std::string& section) const { return sections_.count(section) > 0; }
  const Section& section(const std::string& name) const;
  /// An empty section when absent.
  const Section& section_or_empty(const std::string& name) const;
  const std::map<std::string, Section>& sections() const noexcept { return sections_; }

  /// Copy with `token` replaced by `value` in every entry and `skip` dropped.
  IniFile substitute(const std::string& token, const std::string& value, const std::string& skip) const;

 private:
  std::map<std::string, Section> sections_;
};

/// Parses one number, accepting "a/b".
std::optional<double> parse_number(const std::string& s);
std::string trim(const std::string& s);

}  // namespace pconvex::app
