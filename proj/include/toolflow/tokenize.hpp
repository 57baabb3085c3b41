#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace toolflow {

// Shared word tokenizer used by the diversity metrics, the overlap scans,
// and the hash embedding provider so every token count is comparable:
// lowercase, split on Unicode whitespace, strip leading/trailing punctuation
// from each token, drop empties. Input is assumed to be NFC UTF-8.
std::vector<std::string> tokenize(std::string_view text);

// Joins tokens[i..i+n) with single spaces; the key used by n-gram indexes.
std::string join_ngram(const std::vector<std::string>& tokens, std::size_t start, std::size_t n);

}  // namespace toolflow
