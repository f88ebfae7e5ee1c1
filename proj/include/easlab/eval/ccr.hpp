#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace easlab::eval {

struct CcrRecord {
  std::string condition;
  int correct_characters = 0;
  int total_characters = 0;

  double ccr_percent() const { return 100.0 * correct_characters / total_characters; }
};

// Order-free scoring: each reference character can be matched once by an
// equal character anywhere in the response. Characters are UTF-8 code
// points; whitespace is ignored on both sides.
CcrRecord ccr(std::string_view reference, std::string_view response, std::string condition = {});

// Pools counts: total correct over total characters.
CcrRecord pool(const std::vector<CcrRecord>& records, std::string condition = {});

// Splits UTF-8 text into code points, skipping whitespace. Throws on
// malformed sequences.
std::vector<char32_t> code_points(std::string_view text);

}  // namespace easlab::eval
