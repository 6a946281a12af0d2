#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "htam/backend.hpp"

namespace htam {

struct MockOptions {
  // ReAct actions always repeat the first relevant tool (never FINISH).
  bool react_repeat = false;
};

// Offline stand-in for an LLM. Recognizes every bundled prompt by its wording
// and answers from keyword rules over the question and the tool/agent lists
// embedded in the prompt, so the output is a pure function of the prompt.
//
//   selection prompts   agents scored by keyword tables; layer 1 prefers
//                       DataFetcherAgent + PreprocessingAgent
//   sub-agent prompts   first two listed tools plus tools whose name tokens
//                       occur in the question
//   baselines           question-relevant tools in listed order
//   key extraction      unique tools of the given path
//   completeness        more unique tools wins, equal counts tie
//   benchgen            chain-shaped DAG templates, placeholder parameters,
//                       questions phrased from the final tools
class KeywordRoutingBackend : public CompletionBackend {
 public:
  explicit KeywordRoutingBackend(MockOptions options = {}) : options_(options) {}

  Completion complete(const CompletionRequest& request) override;

  // Exposed for tests.
  static std::string respond(std::string_view prompt, const MockOptions& options = {});

 private:
  MockOptions options_;
};

// Tools of `listed` whose name tokens share a stem with the question's words.
std::vector<std::string> relevant_tools(std::string_view question, const std::vector<std::string>& listed);

}  // namespace htam
