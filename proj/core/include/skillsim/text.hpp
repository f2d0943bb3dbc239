#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace skillsim {

/// Canonical title normalization used everywhere a title acts as a key or
/// as model input: lowercase, Unicode NFC, punctuation/control/separator
/// codepoints replaced by spaces, whitespace collapsed, trimmed.
/// Idempotent; may return an empty string.
std::string normalize_title(std::string_view text);

/// Whitespace tokenization of an already-normalized string.
std::vector<std::string_view> split_tokens(std::string_view normalized);

// UTF-8 helpers. Invalid byte sequences decode to U+FFFD.
std::vector<char32_t> utf8_decode(std::string_view text);
void utf8_append(std::string& out, char32_t cp);

}  // namespace skillsim
