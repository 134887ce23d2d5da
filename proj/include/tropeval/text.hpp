#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace tropeval::text {

std::string trim(const std::string& s);
std::string to_lower(const std::string& s);

// Collapses runs of whitespace (including newlines) to single spaces and trims.
std::string collapse_whitespace(const std::string& s);

// Maps UTF-8 curly quotes to their ASCII forms; other bytes pass through.
std::string straighten_quotes(const std::string& s);

// Removes one layer of matching surrounding quotes ("x", 'x') if present.
std::string strip_surrounding_quotes(const std::string& s);

std::vector<std::string> split(const std::string& s, char sep);

bool starts_with(const std::string& s, const std::string& prefix);

size_t count_words(const std::string& s);

// Levenshtein distance over bytes.
size_t edit_distance(const std::string& a, const std::string& b);

// Half-up rounding to two decimals, rendered like the tables ("63.33", "80.00").
std::string format_percent(double fraction);
double round2(double value);

}  // namespace tropeval::text
