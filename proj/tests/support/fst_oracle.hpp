#pragma once

// Regular-expression oracle for the keyword acceptor over the label alphabet s, 1, 2, 3, o.

#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include "hnnkws/decoder.hpp"

namespace hnnkws::testing {

inline constexpr char kAlphabet[] = {'s', '1', '2', '3', 'o'};

inline std::vector<DecodeLabel> parse(std::string_view s) {
  std::vector<DecodeLabel> out;
  for (char c : s) {
    for (int i = 0; i < 5; ++i) {
      if (kAlphabet[i] == c) out.push_back(static_cast<DecodeLabel>(i));
    }
  }
  return out;
}

// w1+ w2+ w3 with at most `gap` non-word frames between consecutive word frames.
inline std::regex keyword_oracle(int gap) {
  const std::string g = "[so]{0," + std::to_string(gap) + "}";
  return std::regex("1(" + g + "1)*" + g + "2(" + g + "2)*" + g + "3");
}

// Strings of length 8 on which the acceptor and the oracle disagree.
inline int exhaustive_mismatches(int gap) {
  const std::regex oracle = keyword_oracle(gap);
  std::string s(8, 's');
  int mismatches = 0;
  for (int code = 0; code < 390625; ++code) {
    for (int i = 0, v = code; i < 8; ++i, v /= 5) s[static_cast<std::size_t>(i)] = kAlphabet[v % 5];
    const bool woke = !accept_labels(parse(s), gap, 100).empty();
    if (woke != std::regex_search(s, oracle)) ++mismatches;
  }
  return mismatches;
}

}  // namespace hnnkws::testing
