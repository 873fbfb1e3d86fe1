#pragma once
// Article cleaning, passage splitting, tokenization and the default
// word normalizer used by keyword extraction.

#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace nflow::text {

/// Removes URLs, HTML tags and emoji code points.
std::string clean(std::string_view article);

/// Whitespace-delimited word count. Hyphenated tokens count once.
std::size_t word_count(std::string_view s);

/// Packs the sentences of each paragraph greedily into passages of at most
/// max_words words. A single sentence over the limit becomes its own passage,
/// truncated to max_words words.
std::vector<std::string> split_into_passages(std::string_view article, std::size_t max_words = 100);

/// Lowercased tokens with surrounding punctuation trimmed ('$' and '%' kept).
std::vector<std::string> tokenize(std::string_view s);

/// Rule-based English suffix stripper (plural -s/-es/-ies, -ing, -ed).
std::string stem(std::string_view word);

/// A word normalizer; the default is `stem`.
using Normalizer = std::string (*)(std::string_view);

const std::unordered_set<std::string>& stopwords();
const std::unordered_set<std::string>& first_names();

}  // namespace nflow::text
