#include "easlab/eval/ccr.hpp"

#include <algorithm>
#include <map>

#include "easlab/error.hpp"

namespace easlab::eval {
namespace {

bool is_space(char32_t c) {
  return c == U' ' || c == U'\t' || c == U'\n' || c == U'\r' || c == U'\v' || c == U'\f' ||
         c == 0x3000;  // ideographic space
}

}  // namespace

std::vector<char32_t> code_points(std::string_view text) {
  std::vector<char32_t> out;
  for (std::size_t i = 0; i < text.size();) {
    const auto lead = static_cast<unsigned char>(text[i]);
    int extra = 0;
    char32_t cp = 0;
    if (lead < 0x80) {
      cp = lead;
    } else if ((lead & 0xE0) == 0xC0) {
      cp = lead & 0x1F;
      extra = 1;
    } else if ((lead & 0xF0) == 0xE0) {
      cp = lead & 0x0F;
      extra = 2;
    } else if ((lead & 0xF8) == 0xF0) {
      cp = lead & 0x07;
      extra = 3;
    } else {
      throw InvalidArgument("malformed UTF-8 text");
    }
    if (i + static_cast<std::size_t>(extra) >= text.size()) {
      throw InvalidArgument("truncated UTF-8 sequence");
    }
    for (int k = 1; k <= extra; ++k) {
      const auto c = static_cast<unsigned char>(text[i + static_cast<std::size_t>(k)]);
      if ((c & 0xC0) != 0x80) throw InvalidArgument("malformed UTF-8 text");
      cp = (cp << 6) | (c & 0x3F);
    }
    i += static_cast<std::size_t>(extra) + 1;
    if (!is_space(cp)) out.push_back(cp);
  }
  return out;
}

CcrRecord ccr(std::string_view reference, std::string_view response, std::string condition) {
  const auto ref = code_points(reference);
  if (ref.empty()) throw InvalidArgument("CCR reference is empty");
  std::map<char32_t, int> available;
  for (char32_t c : ref) ++available[c];
  int correct = 0;
  for (char32_t c : code_points(response)) {
    auto it = available.find(c);
    if (it != available.end() && it->second > 0) {
      --it->second;
      ++correct;
    }
  }
  return {std::move(condition), correct, static_cast<int>(ref.size())};
}

CcrRecord pool(const std::vector<CcrRecord>& records, std::string condition) {
  CcrRecord out{std::move(condition), 0, 0};
  for (const CcrRecord& r : records) {
    out.correct_characters += r.correct_characters;
    out.total_characters += r.total_characters;
  }
  if (out.total_characters == 0) throw InvalidArgument("no characters to pool");
  return out;
}

}  // namespace easlab::eval
