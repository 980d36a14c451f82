#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace scenevqa {

struct McOption {
  char letter{'A'};
  std::string text;

  friend bool operator==(const McOption&, const McOption&) = default;
};

enum class ParseRule { kSingleToken, kKeyword, kParenthesized, kFailed };
std::string_view to_string(ParseRule r);

struct ParseOutcome {
  std::optional<char> letter;
  ParseRule rule{ParseRule::kFailed};

  bool ok() const { return letter.has_value(); }
};

/// Extracts the chosen option letter from a free-form model reply.
///
/// Rules are tried in order:
///   1. the trimmed reply is a single character naming a legal letter;
///   2. option texts appear in the reply (case-insensitive, whole words);
///      the last match wins, and a match nested inside a longer one is ignored;
///   3. a single character in parentheses, e.g. "(C)"; the last one wins and
///      it must be a legal letter.
/// Anything else is a parse failure, reported as a value.
ParseOutcome parse_response(std::string_view text, const std::vector<McOption>& options);

}  // namespace scenevqa
