#include "cltr/config.hpp"

#include <fstream>
#include <istream>

#include "cltr/dataset.hpp"

namespace cltr {
namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

ConfigSections parse_config(std::istream& in) {
  ConfigSections sections;
  std::string section;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (const auto hash = raw.find('#'); hash != std::string::npos) raw.resize(hash);
    const std::string line = trim(raw);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError(line_no, "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      sections[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(line_no, "expected key=value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ParseError(line_no, "empty key");
    sections[section][key] = trim(line.substr(eq + 1));
  }
  return sections;
}

ConfigSections parse_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  return parse_config(in);
}

}  // namespace cltr
