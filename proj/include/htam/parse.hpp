#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "htam/catalog.hpp"
#include "json.hpp"

namespace htam {

// Trims whitespace plus wrapping quotes, backticks and markdown emphasis.
std::string normalize_token(std::string_view text);

// Case-insensitive ASCII equality.
bool iequals(std::string_view a, std::string_view b);

// Lenient JSON salvage from model output. Tries, in order: the first fenced
// code block, then each bracketed span in the text. Trailing commas and
// single-quoted (Python-style) strings are repaired before parsing.
std::optional<nlohmann::json> extract_json(std::string_view raw);

struct ToolList {
  std::vector<std::string> tools;    // catalog hits, in order, duplicates kept
  std::vector<std::string> rejects;  // names absent from the catalog
};

// Extracts the first list of tool names from `raw`. Accepts a JSON array of
// strings, an array of {"tool"|"name": ...} objects, an object holding such an
// array, or a Python-style ['a', 'b'] list. Throws Error(kNoListFound).
ToolList parse_tool_list(std::string_view raw, const ToolCatalog& catalog);

// Same extraction without catalog filtering.
std::vector<std::string> parse_name_list(std::string_view raw);

}  // namespace htam
