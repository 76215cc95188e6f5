#pragma once

#include <cctype>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "cavityband/error.hpp"

namespace cavityband::io {

/// One configuration value. Integers stay distinct from reals so the echoed
/// config reproduces the input exactly.
using Value = std::variant<bool, std::int64_t, double, std::string, std::vector<double>,
                           std::vector<std::string>>;

/// section -> key -> value. Section names may be dotted ("sweep").
using ConfigTree = std::map<std::string, std::map<std::string, Value>>;

namespace detail {

inline std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

[[noreturn]] inline void fail(const std::string& where, const std::string& what) {
  throw Error(Errc::ConfigError, where + ": " + what);
}

class ValueParser {
 public:
  ValueParser(std::string_view text, std::string where) : s_(text), where_(std::move(where)) {}

  Value parse() {
    skip_ws();
    Value v = parse_value();
    skip_ws();
    if (pos_ != s_.size()) fail(where_, "trailing characters after value");
    return v;
  }

 private:
  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  Value parse_value() {
    if (pos_ >= s_.size()) fail(where_, "missing value");
    const char c = s_[pos_];
    if (c == '"') return parse_string();
    if (c == '[') return parse_array();
    if (s_.substr(pos_, 4) == "true") {
      pos_ += 4;
      return true;
    }
    if (s_.substr(pos_, 5) == "false") {
      pos_ += 5;
      return false;
    }
    return parse_number();
  }

  std::string parse_string() {
    ++pos_;
    std::string out;
    while (pos_ < s_.size() && s_[pos_] != '"') {
      char c = s_[pos_++];
      if (c == '\\') {
        if (pos_ >= s_.size()) break;
        const char e = s_[pos_++];
        switch (e) {
          case 'n': c = '\n'; break;
          case 't': c = '\t'; break;
          case '"': c = '"'; break;
          case '\\': c = '\\'; break;
          default: fail(where_, std::string("unsupported escape \\") + e);
        }
      }
      out.push_back(c);
    }
    if (pos_ >= s_.size()) fail(where_, "unterminated string");
    ++pos_;
    return out;
  }

  Value parse_number() {
    std::size_t end = pos_;
    while (end < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[end])) || s_[end] == '.' ||
                               s_[end] == '-' || s_[end] == '+' || s_[end] == '_'))
      ++end;
    std::string token;
    for (std::size_t i = pos_; i < end; ++i)
      if (s_[i] != '_') token.push_back(s_[i]);
    if (token.empty()) fail(where_, "expected a value");
    const bool integral = token.find_first_of(".eEn") == std::string::npos;
    const char* b = token.data();
    const char* e = b + token.size();
    if (*b == '+') ++b;
    if (integral) {
      std::int64_t v = 0;
      auto [p, ec] = std::from_chars(b, e, v);
      if (ec == std::errc() && p == e) {
        pos_ = end;
        return v;
      }
    }
    double d = 0.0;
    auto [p, ec] = std::from_chars(b, e, d);
    if (ec != std::errc() || p != e) fail(where_, "cannot parse '" + token + "'");
    pos_ = end;
    return d;
  }

  Value parse_array() {
    ++pos_;
    std::vector<double> nums;
    std::vector<std::string> strs;
    skip_ws();
    while (pos_ < s_.size() && s_[pos_] != ']') {
      Value v = parse_value();
      if (auto* str = std::get_if<std::string>(&v))
        strs.push_back(*str);
      else if (auto* i = std::get_if<std::int64_t>(&v))
        nums.push_back(static_cast<double>(*i));
      else if (auto* d = std::get_if<double>(&v))
        nums.push_back(*d);
      else
        fail(where_, "arrays hold numbers or strings only");
      skip_ws();
      if (pos_ < s_.size() && s_[pos_] == ',') {
        ++pos_;
        skip_ws();
      }
    }
    if (pos_ >= s_.size()) fail(where_, "unterminated array");
    ++pos_;
    if (!nums.empty() && !strs.empty()) fail(where_, "mixed array");
    if (!strs.empty()) return strs;
    return nums;
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  std::string where_;
};

inline std::string strip_comment(const std::string& line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) in_string = !in_string;
    if (line[i] == '#' && !in_string) return line.substr(0, i);
  }
  return line;
}

inline std::string unquote_key(std::string key, const std::string& where) {
  key = trim(key);
  if (key.size() >= 2 && key.front() == '"' && key.back() == '"') key = key.substr(1, key.size() - 2);
  if (key.empty()) fail(where, "empty key");
  return key;
}

}  // namespace detail

inline Value parse_value(std::string_view text, const std::string& where = "value") {
  return detail::ValueParser(text, where).parse();
}

/// Sectioned key = value text: [section] headers, '#' comments, strings,
/// integers, reals, booleans and flat arrays.
inline ConfigTree parse_toml(std::istream& in, const std::string& name = "config") {
  ConfigTree tree;
  std::string section;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string where = name + ":" + std::to_string(lineno);
    std::string text = detail::trim(detail::strip_comment(line));
    if (text.empty()) continue;
    if (text.front() == '[') {
      if (text.back() != ']') detail::fail(where, "unterminated section header");
      section = detail::trim(text.substr(1, text.size() - 2));
      if (section.empty()) detail::fail(where, "empty section name");
      tree[section];
      continue;
    }
    const auto eq = text.find('=');
    if (eq == std::string::npos) detail::fail(where, "expected key = value");
    if (section.empty()) detail::fail(where, "key outside any section");
    const std::string key = detail::unquote_key(text.substr(0, eq), where);
    // Arrays may span lines.
    std::string value = detail::trim(text.substr(eq + 1));
    if (!value.empty() && value.front() == '[') {
      int depth = 0;
      auto balance = [&](const std::string& v) {
        depth = 0;
        bool str = false;
        for (char c : v) {
          if (c == '"') str = !str;
          if (!str && c == '[') ++depth;
          if (!str && c == ']') --depth;
        }
      };
      balance(value);
      while (depth > 0 && std::getline(in, line)) {
        ++lineno;
        value += " " + detail::trim(detail::strip_comment(line));
        balance(value);
      }
    }
    auto& sec = tree[section];
    if (sec.count(key)) detail::fail(where, "duplicate key '" + key + "'");
    sec[key] = parse_value(value, where);
  }
  return tree;
}

inline Value value_from_json(const nlohmann::json& j, const std::string& where) {
  if (j.is_boolean()) return j.get<bool>();
  if (j.is_number_integer()) return j.get<std::int64_t>();
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) return j.get<std::string>();
  if (j.is_array()) {
    std::vector<double> nums;
    std::vector<std::string> strs;
    for (const auto& e : j) {
      if (e.is_string())
        strs.push_back(e.get<std::string>());
      else if (e.is_number())
        nums.push_back(e.get<double>());
      else
        detail::fail(where, "arrays hold numbers or strings only");
    }
    if (!nums.empty() && !strs.empty()) detail::fail(where, "mixed array");
    if (!strs.empty()) return strs;
    return nums;
  }
  detail::fail(where, "unsupported JSON value");
}

/// Accepts {section: {key: value}} or a summary file carrying that object
/// under "config".
inline ConfigTree tree_from_json(const nlohmann::json& j) {
  const nlohmann::json& root = j.contains("config") ? j.at("config") : j;
  if (!root.is_object()) detail::fail("json", "config must be an object");
  ConfigTree tree;
  for (const auto& [section, keys] : root.items()) {
    if (!keys.is_object()) detail::fail("json", "section '" + section + "' is not an object");
    auto& sec = tree[section];
    for (const auto& [key, v] : keys.items()) {
      if (v.is_null()) continue;
      sec[key] = value_from_json(v, section + "." + key);
    }
  }
  return tree;
}

inline nlohmann::json value_to_json(const Value& v) {
  return std::visit([](const auto& x) { return nlohmann::json(x); }, v);
}

inline nlohmann::json tree_to_json(const ConfigTree& tree) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [section, keys] : tree) {
    nlohmann::json s = nlohmann::json::object();
    for (const auto& [k, v] : keys) s[k] = value_to_json(v);
    j[section] = s;
  }
  return j;
}

inline ConfigTree load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::ConfigError, "cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    try {
      return tree_from_json(nlohmann::json::parse(text));
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::ConfigError, path + ": " + e.what());
    }
  }
  std::istringstream s(text);
  return parse_toml(s, path);
}

/// Applies "--section.key=value". The section is everything before the first
/// dot except for the sweep section, whose keys are themselves dotted.
inline void apply_override(ConfigTree& tree, const std::string& arg) {
  std::string body = arg;
  if (body.rfind("--", 0) == 0) body = body.substr(2);
  const auto eq = body.find('=');
  if (eq == std::string::npos) throw Error(Errc::ConfigError, "override '" + arg + "' lacks '='");
  const std::string path = body.substr(0, eq);
  const std::string raw = body.substr(eq + 1);
  const auto dot = path.find('.');
  if (dot == std::string::npos || dot == 0 || dot + 1 == path.size())
    throw Error(Errc::ConfigError, "override '" + arg + "' must look like --section.key=value");
  Value v;
  try {
    v = parse_value(raw, path);
  } catch (const Error&) {
    v = raw;  // bare words such as --state.kind=dressed
  }
  tree[path.substr(0, dot)][path.substr(dot + 1)] = v;
}

}  // namespace cavityband::io
