#pragma once

// Flat sectioned key = value text:
//
//   # comment
//   [section]
//   key = value   ; trailing comments start with '#'
//
// Keys outside a section belong to section "". Duplicate keys are an error.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "iol/error.hpp"

namespace iol {

struct IniEntry {
  std::string section;
  std::string key;
  std::string value;
  std::size_t line = 0;
};

struct IniDocument {
  std::string source;
  std::vector<IniEntry> entries;
};

IniDocument parse_ini(const std::string& text, const std::string& source, ErrorCategory category);
std::string read_text_file(const std::filesystem::path& path, ErrorCategory category);

/// "<source>:<line>: [section] key" prefix for messages.
std::string where(const IniDocument& doc, const IniEntry& e);

double ini_number(const IniDocument& doc, const IniEntry& e, ErrorCategory category);
std::int64_t ini_integer(const IniDocument& doc, const IniEntry& e, ErrorCategory category);
bool ini_bool(const IniDocument& doc, const IniEntry& e, ErrorCategory category);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t hash = 0xcbf29ce484222325ULL) noexcept;
std::string hex64(std::uint64_t v);

}  // namespace iol
