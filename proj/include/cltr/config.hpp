#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>

namespace cltr {

/// section -> key -> value. Keys before the first `[section]` header land in
/// the "" section.
using ConfigSections = std::map<std::string, std::map<std::string, std::string>>;

/// Flat `key = value` lines grouped under `[section]` headers; `#` starts a
/// comment. Throws ParseError on malformed lines.
ConfigSections parse_config(std::istream& in);
ConfigSections parse_config_file(const std::filesystem::path& path);

}  // namespace cltr
