#pragma once

// Deterministic rule-based noun-phrase chunker.
//
// A caption is tokenized into words (letters/digits with internal
// apostrophes or hyphens). Punctuation and words from the verbs_aux,
// prepositions and conjunctions sets split it into segments; inside a
// segment, determiners, stopwords and bare numbers are dropped and every
// remaining contiguous run of words becomes one candidate phrase.

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <filesystem>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "avsz/core/bytes.hpp"
#include "avsz/error.hpp"

namespace avsz::text {

struct ChunkerLexicon {
  std::unordered_set<std::string> stopwords;
  std::unordered_set<std::string> determiners;
  std::unordered_set<std::string> verbs_aux;
  std::unordered_set<std::string> prepositions;
  std::unordered_set<std::string> conjunctions;

  bool splits(const std::string& w) const {
    return verbs_aux.contains(w) || prepositions.contains(w) || conjunctions.contains(w);
  }
  bool drops(const std::string& w) const {
    return determiners.contains(w) || stopwords.contains(w);
  }
};

struct Candidate {
  std::string phrase;
  // Byte range [begin, end) in the source caption.
  std::size_t begin = 0;
  std::size_t end = 0;

  friend bool operator==(const Candidate&, const Candidate&) = default;
};

// Sectioned plain text: [stopwords], [determiners], [verbs_aux],
// [prepositions] and optionally [conjunctions]; one token per line; '#'
// starts a comment line.
inline ChunkerLexicon parse_lexicon(std::string_view text) {
  ChunkerLexicon lex;
  std::unordered_set<std::string>* current = nullptr;
  std::set<std::string> sections_seen;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto last = line.find_last_not_of(" \t\r");
    std::string token = line.substr(first, last - first + 1);
    if (token.front() == '[') {
      if (token.back() != ']') {
        throw Error(Errc::kParseError, "lexicon line " + std::to_string(line_no) + ": bad header");
      }
      const std::string name = token.substr(1, token.size() - 2);
      if (name == "stopwords") current = &lex.stopwords;
      else if (name == "determiners") current = &lex.determiners;
      else if (name == "verbs_aux") current = &lex.verbs_aux;
      else if (name == "prepositions") current = &lex.prepositions;
      else if (name == "conjunctions") current = &lex.conjunctions;
      else throw Error(Errc::kParseError, "lexicon line " + std::to_string(line_no) + ": unknown section " + name);
      if (!sections_seen.insert(name).second) {
        throw Error(Errc::kParseError, "lexicon line " + std::to_string(line_no) + ": section repeated");
      }
      continue;
    }
    if (!current) {
      throw Error(Errc::kParseError, "lexicon line " + std::to_string(line_no) + ": token before any section");
    }
    std::transform(token.begin(), token.end(), token.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (!current->insert(token).second) {
      throw Error(Errc::kParseError,
                  "lexicon line " + std::to_string(line_no) + ": duplicate token '" + token + "'");
    }
  }
  for (const char* required : {"stopwords", "determiners", "verbs_aux", "prepositions"}) {
    if (!sections_seen.contains(required)) {
      throw Error(Errc::kParseError, std::string("lexicon lacks section [") + required + "]");
    }
  }
  return lex;
}

inline ChunkerLexicon load_lexicon(const std::filesystem::path& path) {
  return parse_lexicon(bytes::read_text(path));
}

namespace detail {

inline bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

inline std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

struct Token {
  std::string word;  // lowercased
  std::size_t begin = 0;
  std::size_t end = 0;
  bool after_punct = false;  // punctuation seen since the previous token
};

inline std::vector<Token> tokenize(std::string_view s) {
  std::vector<Token> tokens;
  bool punct = false;
  std::size_t i = 0;
  while (i < s.size()) {
    if (is_word_char(s[i])) {
      const std::size_t start = i;
      while (i < s.size()) {
        if (is_word_char(s[i])) {
          ++i;
        } else if ((s[i] == '\'' || s[i] == '-') && i + 1 < s.size() && is_word_char(s[i + 1])) {
          ++i;
        } else {
          break;
        }
      }
      tokens.push_back({lower(s.substr(start, i - start)), start, i, punct});
      punct = false;
    } else {
      if (!std::isspace(static_cast<unsigned char>(s[i]))) punct = true;
      ++i;
    }
  }
  return tokens;
}

inline bool is_number(const std::string& w) {
  return !w.empty() && std::all_of(w.begin(), w.end(), [](unsigned char c) { return std::isdigit(c); });
}

}  // namespace detail

// Lowercases, drops trailing punctuation, collapses whitespace and strips
// leading determiners, repeated until stable (so it is idempotent).
inline std::string normalize_phrase(std::string_view phrase, const ChunkerLexicon& lexicon) {
  std::string current = detail::lower(phrase);
  while (true) {
    std::vector<std::string> words;
    std::istringstream in(current);
    for (std::string w; in >> w;) words.push_back(w);
    while (!words.empty()) {
      std::string& back = words.back();
      while (!back.empty() && std::ispunct(static_cast<unsigned char>(back.back()))) back.pop_back();
      if (!back.empty()) break;
      words.pop_back();
    }
    std::size_t lead = 0;
    while (lead < words.size() && lexicon.determiners.contains(words[lead])) ++lead;
    std::string next;
    for (std::size_t i = lead; i < words.size(); ++i) {
      if (!next.empty()) next += ' ';
      next += words[i];
    }
    if (next == current) return next;
    current = std::move(next);
  }
}

inline std::vector<Candidate> extract_noun_phrases(std::string_view caption,
                                                   const ChunkerLexicon& lexicon) {
  std::vector<Candidate> out;
  std::unordered_set<std::string> seen;
  const auto tokens = detail::tokenize(caption);

  std::size_t run_len = 0;
  const auto flush = [&](std::size_t end_index) {
    if (run_len == 0) return;
    const auto& first = tokens[end_index - run_len];
    const auto& last = tokens[end_index - 1];
    std::string phrase = normalize_phrase(caption.substr(first.begin, last.end - first.begin), lexicon);
    if (!phrase.empty() && seen.insert(phrase).second) {
      out.push_back({std::move(phrase), first.begin, last.end});
    }
    run_len = 0;
  };

  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto& t = tokens[i];
    if (t.after_punct) flush(i);
    if (lexicon.splits(t.word) || lexicon.drops(t.word) || detail::is_number(t.word)) {
      flush(i);
      continue;
    }
    ++run_len;
  }
  flush(tokens.size());
  return out;
}

}  // namespace avsz::text
