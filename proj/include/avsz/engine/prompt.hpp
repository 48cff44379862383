#pragma once

#include <cctype>
#include <string>
#include <string_view>

#include "avsz/error.hpp"
#include "avsz/text/default_lexicon.hpp"

namespace avsz::engine {

inline constexpr std::string_view kLabelPlaceholder = "{c}";
inline constexpr std::string_view kDefaultPromptTemplate = "a photo of {c}.";

class PromptTemplate {
 public:
  PromptTemplate() : PromptTemplate(std::string(kDefaultPromptTemplate)) {}

  explicit PromptTemplate(std::string text) : text_(std::move(text)) {
    const auto first = text_.find(kLabelPlaceholder);
    if (first == std::string::npos || text_.find(kLabelPlaceholder, first + 1) != std::string::npos) {
      throw Error(Errc::kConfigError, "prompt template must contain exactly one {c}: \"" + text_ + "\"");
    }
  }

  const std::string& text() const { return text_; }

  std::string substitute(std::string_view label) const {
    std::string out = text_;
    out.replace(out.find(kLabelPlaceholder), kLabelPlaceholder.size(), label);
    return out;
  }

 private:
  std::string text_;
};

// Trim and collapse internal whitespace. Prompts additionally get a
// terminal period unless they already end in sentence punctuation.
inline std::string normalize_referring_text(std::string_view text, bool is_prompt) {
  std::string out;
  bool gap = false;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      gap = !out.empty();
      continue;
    }
    if (gap) out.push_back(' ');
    gap = false;
    out.push_back(c);
  }
  if (is_prompt && !out.empty() && out.back() != '.' && out.back() != '!' && out.back() != '?') out.push_back('.');
  return out;
}

inline std::string normalize_label(std::string_view label) { return text::normalize_phrase(label); }

inline std::string build_prompt(std::string_view label, const PromptTemplate& prompt = PromptTemplate()) {
  const std::string c = normalize_label(label);
  if (c.empty()) throw Error(Errc::kEmptyLabel, "label \"" + std::string(label) + "\" is empty after normalization");
  return normalize_referring_text(prompt.substitute(c), true);
}

}  // namespace avsz::engine
