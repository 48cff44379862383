#pragma once

// Sectioned `key = value` files (a TOML subset): [section] headers, `#`
// comments, and values that are quoted strings, numbers, true/false, or
// arrays of quoted strings.

#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "avsz/error.hpp"

namespace avsz::kv {

using Value = std::variant<std::string, double, bool, std::vector<std::string>>;

struct Entry {
  Value value;
  std::size_t line = 0;
};

struct Section {
  std::string name;  // empty for keys before the first header
  std::size_t line = 0;
  std::map<std::string, Entry> entries;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline Error at_line(std::size_t line, const std::string& why) {
  return Error(Errc::kConfigError, "line " + std::to_string(line) + ": " + why);
}

// s[pos] must be '"'; leaves pos after the closing quote.
inline std::string parse_quoted(const std::string& s, std::size_t& pos, std::size_t line) {
  std::string out;
  ++pos;
  while (pos < s.size() && s[pos] != '"') {
    if (s[pos] == '\\' && pos + 1 < s.size()) {
      const char esc = s[++pos];
      out.push_back(esc == 'n' ? '\n' : esc == 't' ? '\t' : esc);
    } else {
      out.push_back(s[pos]);
    }
    ++pos;
  }
  if (pos >= s.size()) throw at_line(line, "unterminated string");
  ++pos;
  return out;
}

inline bool only_comment(const std::string& rest) {
  const std::string t = trim(rest);
  return t.empty() || t.front() == '#';
}

inline Value parse_value(const std::string& raw, std::size_t line) {
  const std::string v = trim(raw);
  if (v.empty()) throw at_line(line, "missing value");
  if (v.front() == '"') {
    std::size_t pos = 0;
    std::string s = parse_quoted(v, pos, line);
    if (!only_comment(v.substr(pos))) throw at_line(line, "trailing characters after string");
    return s;
  }
  if (v.front() == '[') {
    std::vector<std::string> items;
    std::size_t pos = 1;
    while (true) {
      while (pos < v.size() && (v[pos] == ' ' || v[pos] == '\t' || v[pos] == ',')) ++pos;
      if (pos >= v.size()) throw at_line(line, "unterminated array");
      if (v[pos] == ']') break;
      if (v[pos] != '"') throw at_line(line, "arrays hold quoted strings only");
      items.push_back(parse_quoted(v, pos, line));
    }
    if (!only_comment(v.substr(pos + 1))) throw at_line(line, "trailing characters after array");
    return items;
  }
  const std::string bare = trim(v.substr(0, v.find('#')));
  if (bare == "true") return true;
  if (bare == "false") return false;
  std::size_t used = 0;
  double d = 0.0;
  try {
    d = std::stod(bare, &used);
  } catch (const std::logic_error&) {
    throw at_line(line, "unrecognised value '" + bare + "'");
  }
  if (used != bare.size()) throw at_line(line, "bad number '" + bare + "'");
  return d;
}

}  // namespace detail

inline std::vector<Section> parse(const std::string& text) {
  std::vector<Section> sections{{"", 0, {}}};
  std::istringstream in(text);
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string s = detail::trim(raw);
    if (s.empty() || s.front() == '#') continue;
    if (s.front() == '[') {
      const auto close = s.find(']');
      if (close == std::string::npos || !detail::only_comment(s.substr(close + 1))) {
        throw detail::at_line(line, "bad section header");
      }
      const std::string name = detail::trim(s.substr(1, close - 1));
      if (name.empty()) throw detail::at_line(line, "empty section name");
      for (const auto& sec : sections) {
        if (sec.name == name) throw detail::at_line(line, "section [" + name + "] repeated");
      }
      sections.push_back({name, line, {}});
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw detail::at_line(line, "expected key = value");
    const std::string key = detail::trim(s.substr(0, eq));
    if (key.empty()) throw detail::at_line(line, "empty key");
    auto& entries = sections.back().entries;
    if (entries.contains(key)) throw detail::at_line(line, "key '" + key + "' repeated");
    entries.emplace(key, Entry{detail::parse_value(s.substr(eq + 1), line), line});
  }
  return sections;
}

// Flattens sections into dotted keys: [inversion] num_tokens -> "inversion.num_tokens".
inline std::map<std::string, Entry> flatten(const std::vector<Section>& sections) {
  std::map<std::string, Entry> out;
  for (const auto& sec : sections) {
    for (const auto& [key, entry] : sec.entries) {
      const std::string full = sec.name.empty() ? key : sec.name + "." + key;
      if (!out.emplace(full, entry).second) throw detail::at_line(entry.line, "key '" + full + "' repeated");
    }
  }
  return out;
}

}  // namespace avsz::kv
