#pragma once

#include "avsz/text/lexicon_data.hpp"  // generated from data/lexicon_en_v1.txt
#include "avsz/text/phrase_extractor.hpp"

namespace avsz::text {

inline const ChunkerLexicon& default_lexicon() {
  static const ChunkerLexicon lexicon = parse_lexicon(kDefaultLexiconText);
  return lexicon;
}

inline std::string normalize_phrase(std::string_view phrase) {
  return normalize_phrase(phrase, default_lexicon());
}

}  // namespace avsz::text
