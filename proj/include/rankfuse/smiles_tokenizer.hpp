#pragma once

// SMILES tokenization with the regular expression commonly used for reaction
// transformers. Alternatives are tried in pattern order at each position, so
// bracket atoms win over everything and "Br"/"Cl" win over "B"/"C".

#include <cstddef>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include "rankfuse/errors.hpp"

namespace rankfuse {

inline constexpr std::string_view kSmilesTokenPattern =
    R"((\[[^\]]+]|Br?|Cl?|N|O|S|P|F|I|b|c|n|o|s|p|\(|\)|\.|=|#|-|\+|\\|\/|:|~|@|\?|>|\*|\$|\%[0-9]{2}|[0-9]))";

class TokenizeError : public DataError {
 public:
  TokenizeError(std::size_t offset, char character)
      : DataError("cannot tokenize character '" + std::string(1, character) +
                  "' at byte offset " + std::to_string(offset)),
        offset_(offset),
        character_(character) {}

  std::size_t offset() const noexcept { return offset_; }
  char character() const noexcept { return character_; }

 private:
  std::size_t offset_;
  char character_;
};

struct TokenSequence {
  std::string source;
  std::vector<std::string> tokens;

  std::string joined(std::string_view separator = "") const {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (i != 0) out += separator;
      out += tokens[i];
    }
    return out;
  }
};

inline const std::regex& smiles_token_regex() {
  static const std::regex re{std::string(kSmilesTokenPattern)};
  return re;
}

inline TokenSequence tokenize(std::string_view smiles) {
  if (smiles.empty()) throw DataError("cannot tokenize an empty SMILES string");
  TokenSequence seq{std::string(smiles), {}};
  const auto& re = smiles_token_regex();
  const char* const begin = seq.source.data();
  const char* const end = begin + seq.source.size();
  const char* pos = begin;
  std::cmatch match;
  while (pos != end) {
    if (!std::regex_search(pos, end, match, re, std::regex_constants::match_continuous) ||
        match.length(0) == 0) {
      throw TokenizeError(static_cast<std::size_t>(pos - begin), *pos);
    }
    seq.tokens.emplace_back(match[0].first, match[0].second);
    pos = match[0].second;
  }
  return seq;
}

}  // namespace rankfuse
