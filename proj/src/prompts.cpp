#include "htam/prompts.hpp"

#include "htam/assets.hpp"
#include "htam/error.hpp"

namespace htam {

std::string render_template(std::string_view text, const PromptVars& vars) {
  std::string out;
  out.reserve(text.size() + 256);
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '{' && i + 1 < text.size() && text[i + 1] == '{') {
      out.push_back('{');
      ++i;
    } else if (c == '}' && i + 1 < text.size() && text[i + 1] == '}') {
      out.push_back('}');
      ++i;
    } else if (c == '{') {
      const auto close = text.find('}', i);
      if (close == std::string_view::npos) {
        throw Error(ErrorCode::kInvalidArgument, "unterminated placeholder in template");
      }
      const auto key = text.substr(i + 1, close - i - 1);
      auto it = vars.find(key);
      if (it == vars.end()) {
        throw Error(ErrorCode::kInvalidArgument, "template placeholder {" + std::string(key) + "} has no value");
      }
      out += it->second;
      i = close;
    } else {
      out.push_back(c);
    }
  }
  return out;
}

std::string render_prompt(std::string_view name, const PromptVars& vars) {
  return render_template(asset("prompts/" + std::string(name) + ".txt"), vars);
}

}  // namespace htam
