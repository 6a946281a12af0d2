#include "htam/parse.hpp"

#include <algorithm>
#include <cctype>

#include "htam/error.hpp"

namespace htam {

using nlohmann::json;

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

// Rewrites single-quoted strings as JSON strings and drops trailing commas.
std::string repair(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    char c = s[i];
    if (c == '"') {
      std::size_t j = i + 1;
      out.push_back('"');
      while (j < s.size() && s[j] != '"') {
        if (s[j] == '\\' && j + 1 < s.size()) out.push_back(s[j++]);
        out.push_back(s[j++]);
      }
      out.push_back('"');
      i = j;
    } else if (c == '\'') {
      std::size_t j = i + 1;
      out.push_back('"');
      while (j < s.size() && s[j] != '\'') {
        if (s[j] == '"') {
          out += "\\\"";
        } else if (s[j] == '\\' && j + 1 < s.size()) {
          out.push_back(s[j++]);
          out.push_back(s[j]);
        } else {
          out.push_back(s[j]);
        }
        ++j;
      }
      out.push_back('"');
      i = j;
    } else if (c == ',') {
      std::size_t j = i + 1;
      while (j < s.size() && is_space(s[j])) ++j;
      if (j < s.size() && (s[j] == '}' || s[j] == ']')) continue;
      out.push_back(c);
    } else {
      out.push_back(c);
    }
  }
  return out;
}

std::optional<json> try_parse(std::string_view s) {
  json j = json::parse(s, nullptr, false);
  if (!j.is_discarded()) return j;
  j = json::parse(repair(s), nullptr, false);
  if (!j.is_discarded()) return j;
  return std::nullopt;
}

// Index one past the bracket closing the one at `open`, or npos.
std::size_t match_bracket(std::string_view s, std::size_t open, bool single_quotes) {
  std::vector<char> stack;
  char quote = 0;
  for (std::size_t i = open; i < s.size(); ++i) {
    char c = s[i];
    if (quote) {
      if (c == '\\') {
        ++i;
      } else if (c == quote) {
        quote = 0;
      }
      continue;
    }
    if (c == '"' || (single_quotes && c == '\'')) {
      quote = c;
    } else if (c == '{' || c == '[') {
      stack.push_back(c == '{' ? '}' : ']');
    } else if (c == '}' || c == ']') {
      if (stack.empty() || stack.back() != c) return std::string_view::npos;
      stack.pop_back();
      if (stack.empty()) return i + 1;
    }
  }
  return std::string_view::npos;
}

std::optional<json> scan_values(std::string_view s) {
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '{' && s[i] != '[') continue;
    for (bool sq : {true, false}) {
      std::size_t end = match_bracket(s, i, sq);
      if (end == std::string_view::npos) continue;
      if (auto j = try_parse(s.substr(i, end - i))) return j;
    }
  }
  return std::nullopt;
}

std::optional<std::string> name_of(const json& item) {
  if (item.is_string()) return item.get<std::string>();
  if (item.is_object()) {
    for (const char* key : {"tool", "name", "tool_name", "agent"}) {
      auto it = item.find(key);
      if (it != item.end() && it->is_string()) return it->get<std::string>();
    }
  }
  return std::nullopt;
}

std::optional<std::vector<std::string>> names_from_array(const json& arr) {
  std::vector<std::string> names;
  for (const auto& item : arr) {
    if (auto n = name_of(item)) names.push_back(*n);
  }
  if (names.empty() && !arr.empty()) return std::nullopt;
  return names;
}

std::optional<std::vector<std::string>> find_names(const json& j) {
  if (j.is_array()) return names_from_array(j);
  if (!j.is_object()) return std::nullopt;
  static const char* kPreferred[] = {"final_tool_trajectory", "refined_tool_trajectory",
                                     "initial_tool_trajectory", "tools", "key_tools", "key_steps",
                                     "plan", "tool_trajectory", "parameterized_tools"};
  for (const char* key : kPreferred) {
    auto it = j.find(key);
    if (it != j.end() && it->is_array()) {
      if (auto names = names_from_array(*it)) return names;
    }
  }
  for (const auto& [key, value] : j.items()) {
    if (value.is_array()) {
      if (auto names = names_from_array(value)) return names;
    }
  }
  for (const auto& [key, value] : j.items()) {
    if (value.is_object()) {
      if (auto names = find_names(value)) return names;
    }
  }
  return std::nullopt;
}

}  // namespace

std::string normalize_token(std::string_view text) {
  auto strip = [](char c) {
    return is_space(c) || c == '"' || c == '\'' || c == '`' || c == '*' || c == '.' || c == ',';
  };
  std::size_t b = 0, e = text.size();
  while (b < e && strip(text[b])) ++b;
  while (e > b && strip(text[e - 1])) --e;
  std::string out(text.substr(b, e - b));
  if (out.size() > 2 && out.ends_with("()")) out.resize(out.size() - 2);
  return out;
}

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
         });
}

std::optional<json> extract_json(std::string_view raw) {
  std::size_t fence = raw.find("```");
  if (fence != std::string_view::npos) {
    std::size_t body = raw.find('\n', fence);
    std::size_t close = body == std::string_view::npos ? body : raw.find("```", body);
    if (close != std::string_view::npos) {
      if (auto j = scan_values(raw.substr(body, close - body))) return j;
    }
  }
  return scan_values(raw);
}

std::vector<std::string> parse_name_list(std::string_view raw) {
  auto j = extract_json(raw);
  if (!j) throw Error(ErrorCode::kNoListFound, "no JSON value or bracketed list in output");
  auto names = find_names(*j);
  if (!names) throw Error(ErrorCode::kNoListFound, "JSON value holds no list of names");
  std::vector<std::string> out;
  for (const auto& n : *names) {
    std::string t = normalize_token(n);
    if (!t.empty()) out.push_back(std::move(t));
  }
  return out;
}

ToolList parse_tool_list(std::string_view raw, const ToolCatalog& catalog) {
  ToolList result;
  for (auto& name : parse_name_list(raw)) {
    if (catalog.contains(name)) {
      result.tools.push_back(std::move(name));
      continue;
    }
    const ToolSpec* hit = nullptr;
    for (const auto& t : catalog.tools()) {
      if (iequals(t.name, name)) {
        hit = &t;
        break;
      }
    }
    if (hit) {
      result.tools.push_back(hit->name);
    } else {
      result.rejects.push_back(std::move(name));
    }
  }
  return result;
}

}  // namespace htam
