#include "scenevqa/response_parser.hpp"

#include <algorithm>
#include <cctype>
#include <regex>

namespace scenevqa {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool is_word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_';
}

std::optional<char> legal(char c, const std::vector<McOption>& options) {
  for (const auto& o : options) {
    if (o.letter == c) return c;
  }
  return std::nullopt;
}

struct Match {
  std::size_t begin;
  std::size_t end;
  char letter;
};

}  // namespace

std::string_view to_string(ParseRule r) {
  switch (r) {
    case ParseRule::kSingleToken: return "single_token";
    case ParseRule::kKeyword: return "keyword";
    case ParseRule::kParenthesized: return "parenthesized";
    case ParseRule::kFailed: return "failed";
  }
  return "failed";
}

ParseOutcome parse_response(std::string_view text, const std::vector<McOption>& options) {
  const std::string_view t = trim(text);
  if (t.size() == 1) {
    if (auto c = legal(t.front(), options)) return {c, ParseRule::kSingleToken};
  }

  const std::string hay = lower(t);
  std::vector<Match> matches;
  for (const auto& o : options) {
    const std::string needle = lower(trim(o.text));
    if (needle.empty()) continue;
    for (std::size_t pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) {
      const std::size_t end = pos + needle.size();
      const bool left_ok = pos == 0 || !is_word_char(hay[pos - 1]) || !is_word_char(needle.front());
      const bool right_ok = end == hay.size() || !is_word_char(hay[end]) || !is_word_char(needle.back());
      if (left_ok && right_ok) matches.push_back({pos, end, o.letter});
    }
  }
  std::optional<Match> best;
  for (const auto& m : matches) {
    const bool nested = std::any_of(matches.begin(), matches.end(), [&](const Match& o) {
      return o.begin <= m.begin && m.end <= o.end && (o.end - o.begin) > (m.end - m.begin);
    });
    if (nested) continue;
    if (!best || m.begin > best->begin || (m.begin == best->begin && m.end > best->end)) best = m;
  }
  if (best) return {best->letter, ParseRule::kKeyword};

  static const std::regex kParen(R"(\(\s*([^()\s])\s*\))");
  std::optional<char> last;
  const std::string raw(t);
  for (auto it = std::sregex_iterator(raw.begin(), raw.end(), kParen); it != std::sregex_iterator(); ++it) {
    last = (*it)[1].str().front();
  }
  if (last) {
    if (auto c = legal(*last, options)) return {c, ParseRule::kParenthesized};
  }
  return {std::nullopt, ParseRule::kFailed};
}

}  // namespace scenevqa
