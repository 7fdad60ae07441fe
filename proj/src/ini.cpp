#include "iol/ini.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <utility>

namespace iol {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

IniDocument parse_ini(const std::string& text, const std::string& source, ErrorCategory category) {
  IniDocument doc;
  doc.source = source;
  std::set<std::pair<std::string, std::string>> seen;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string at = source + ":" + std::to_string(line_no);
    if (line.front() == '[') {
      if (line.back() != ']') fail(category, at + ": unterminated section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      if (section.empty()) fail(category, at + ": empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) fail(category, at + ": expected 'key = value'");
    IniEntry e{section, std::string(trim(line.substr(0, eq))), std::string(trim(line.substr(eq + 1))), line_no};
    if (e.key.empty()) fail(category, at + ": empty key");
    if (!seen.emplace(e.section, e.key).second) {
      fail(category, at + ": duplicate key '" + e.key + "' in [" + e.section + "]");
    }
    doc.entries.push_back(std::move(e));
  }
  return doc;
}

std::string read_text_file(const std::filesystem::path& path, ErrorCategory category) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(category, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string where(const IniDocument& doc, const IniEntry& e) {
  return doc.source + ":" + std::to_string(e.line) + ": [" + e.section + "] " + e.key;
}

double ini_number(const IniDocument& doc, const IniEntry& e, ErrorCategory category) {
  double v = 0.0;
  const char* first = e.value.data();
  const char* last = first + e.value.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (e.value.empty() || ec != std::errc() || ptr != last || !std::isfinite(v)) {
    fail(category, where(doc, e) + ": expected a number, got '" + e.value + "'");
  }
  return v;
}

std::int64_t ini_integer(const IniDocument& doc, const IniEntry& e, ErrorCategory category) {
  std::int64_t v = 0;
  const char* last = e.value.data() + e.value.size();
  const auto [ptr, ec] = std::from_chars(e.value.data(), last, v);
  if (e.value.empty() || ec != std::errc() || ptr != last) {
    fail(category, where(doc, e) + ": expected an integer, got '" + e.value + "'");
  }
  return v;
}

bool ini_bool(const IniDocument& doc, const IniEntry& e, ErrorCategory category) {
  if (e.value == "true" || e.value == "1") return true;
  if (e.value == "false" || e.value == "0") return false;
  fail(category, where(doc, e) + ": expected true or false, got '" + e.value + "'");
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t hash) noexcept {
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace iol
