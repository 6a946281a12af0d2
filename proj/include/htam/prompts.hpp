#pragma once

#include <map>
#include <string>
#include <string_view>

namespace htam {

using PromptVars = std::map<std::string, std::string, std::less<>>;

// Python str.format semantics restricted to named fields: "{name}" is
// replaced, "{{" and "}}" are literal braces. A field missing from `vars`
// throws Error(kInvalidArgument).
std::string render_template(std::string_view text, const PromptVars& vars);

// Renders the bundled template data/prompts/<name>.txt.
std::string render_prompt(std::string_view name, const PromptVars& vars);

}  // namespace htam
