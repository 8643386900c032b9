#include "config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace pconvex::app {

ConfigError::ConfigError(int line, std::string field, const std::string& message)
    : std::runtime_error((line > 0 ? "line " + std::to_string(line) + ": " : std::string()) +
                         (field.empty() ? std::string() : field + ": ") + message),
      line_(line),
      field_(std::move(field)) {}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

namespace {

std::optional<double> parse_plain(const std::string& s) {
  double v = 0.0;
  const char* b = s.data();
  const char* e = b + s.size();
  auto [ptr, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || ptr != e) return std::nullopt;
  return v;
}

}  // namespace

std::optional<double> parse_number(const std::string& raw) {
  const std::string s = trim(raw);
  if (s.empty()) return std::nullopt;
  const auto slash = s.find('/');
  if (slash == std::string::npos) return parse_plain(s);
  const auto a = parse_plain(trim(s.substr(0, slash))), b = parse_plain(trim(s.substr(slash + 1)));
  if (!a || !b || *b == 0.0) return std::nullopt;
  return *a / *b;
}

const Entry* Section::find(const std::string& key) const {
  const auto it = entries_.find(key);
  return it == entries_.end() ? nullptr : &it->second;
}

void Section::fail(const std::string& key, const std::string& message) const {
  const Entry* e = find(key);
  throw ConfigError(e ? e->line : line_, name_ + "." + key, message);
}

std::string Section::text(const std::string& key) const {
  const Entry* e = find(key);
  if (!e) throw ConfigError(line_, name_ + "." + key, "missing required key");
  return e->value;
}

std::string Section::text_or(const std::string& key, const std::string& fallback) const {
  const Entry* e = find(key);
  return e ? e->value : fallback;
}

double Section::number(const std::string& key) const {
  const auto v = parse_number(text(key));
  if (!v) fail(key, "expected a number, got '" + text(key) + "'");
  return *v;
}

double Section::number_or(const std::string& key, double fallback) const {
  return has(key) ? number(key) : fallback;
}

int Section::integer(const std::string& key) const {
  const double v = number(key);
  if (v != static_cast<double>(static_cast<long long>(v)) || std::abs(v) > 1e9) fail(key, "expected an integer");
  return static_cast<int>(v);
}

int Section::integer_or(const std::string& key, int fallback) const { return has(key) ? integer(key) : fallback; }

bool Section::boolean_or(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const std::string v = text(key);
  if (v == "true" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "no" || v == "0") return false;
  fail(key, "expected true or false");
}

std::vector<double> Section::numbers(const std::string& key) const {
  std::vector<double> out;
  for (const auto& w : words(key)) {
    const auto v = parse_number(w);
    if (!v) fail(key, "expected numbers, got '" + w + "'");
    out.push_back(*v);
  }
  if (out.empty()) fail(key, "expected at least one number");
  return out;
}

std::vector<double> Section::numbers_or(const std::string& key, std::vector<double> fallback) const {
  return has(key) ? numbers(key) : fallback;
}

std::vector<std::string> Section::list(const std::string& key) const {
  std::vector<std::string> out;
  std::stringstream ss(text(key));
  std::string item;
  while (std::getline(ss, item, '|')) {
    item = trim(item);
    if (item.empty()) fail(key, "empty list item");
    out.push_back(item);
  }
  return out;
}

std::vector<std::string> Section::words(const std::string& key) const {
  std::vector<std::string> out;
  std::istringstream ss(text(key));
  std::string w;
  while (ss >> w) out.push_back(w);
  return out;
}

void Section::restrict_keys(const std::set<std::string>& allowed) const {
  for (const auto& [k, e] : entries_)
    if (!allowed.count(k)) throw ConfigError(e.line, name_ + "." + k, "unknown key");
}

IniFile IniFile::parse(std::istream& in) {
  IniFile ini;
  Section* cur = nullptr;
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string s = trim(raw);
    if (s.empty() || s[0] == '#') continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw ConfigError(line, "", "unterminated section header");
      const std::string name = trim(s.substr(1, s.size() - 2));
      if (name.empty()) throw ConfigError(line, "", "empty section name");
      if (ini.sections_.count(name)) throw ConfigError(line, name, "duplicate section");
      cur = &ini.sections_.emplace(name, Section(name, line)).first->second;
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError(line, "", "expected 'key = value'");
    if (!cur) throw ConfigError(line, "", "key outside of a section");
    const std::string key = trim(s.substr(0, eq));
    if (key.empty()) throw ConfigError(line, cur->name(), "empty key");
    if (cur->has(key)) throw ConfigError(line, cur->name() + "." + key, "duplicate key");
    cur->set(key, Entry{trim(s.substr(eq + 1)), line});
  }
  return ini;
}

IniFile IniFile::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(0, "", "cannot read " + path);
  return parse(in);
}

IniFile IniFile::substitute(const std::string& token, const std::string& value, const std::string& skip) const {
  IniFile out;
  for (const auto& [name, sec] : sections_) {
    if (name == skip) continue;
    Section copy(name, sec.line());
    for (const auto& [k, e] : sec.entries()) {
      std::string v = e.value;
      for (auto pos = v.find(token); pos != std::string::npos; pos = v.find(token, pos + value.size()))
        v.replace(pos, token.size(), value);
      copy.set(k, Entry{v, e.line});
    }
    out.sections_.emplace(name, std::move(copy));
  }
  return out;
}

const Section& IniFile::section(const std::string& name) const {
  const auto it = sections_.find(name);
  if (it == sections_.end()) throw ConfigError(0, name, "missing section");
  return it->second;
}

const Section& IniFile::section_or_empty(const std::string& name) const {
  static const Section empty;
  const auto it = sections_.find(name);
  return it == sections_.end() ? empty : it->second;
}

}  // namespace pconvex::app
