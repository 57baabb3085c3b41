#include "toolflow/tokenize.hpp"

#include <cctype>
#include <cstdint>

namespace toolflow {
namespace {

// Decodes one UTF-8 code point starting at pos; advances pos. Invalid bytes
// are consumed one at a time and returned as-is so tokenization never throws.
std::uint32_t next_codepoint(std::string_view s, std::size_t& pos) {
    const unsigned char b0 = static_cast<unsigned char>(s[pos]);
    if (b0 < 0x80) {
        ++pos;
        return b0;
    }
    int len = 0;
    std::uint32_t cp = 0;
    if ((b0 & 0xE0) == 0xC0) {
        len = 2;
        cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
        len = 3;
        cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
        len = 4;
        cp = b0 & 0x07;
    } else {
        ++pos;
        return b0;
    }
    if (pos + static_cast<std::size_t>(len) > s.size()) {
        ++pos;
        return b0;
    }
    for (int i = 1; i < len; ++i) {
        const unsigned char bi = static_cast<unsigned char>(s[pos + static_cast<std::size_t>(i)]);
        if ((bi & 0xC0) != 0x80) {
            ++pos;
            return b0;
        }
        cp = (cp << 6) | (bi & 0x3F);
    }
    pos += static_cast<std::size_t>(len);
    return cp;
}

bool is_space_cp(std::uint32_t cp) {
    switch (cp) {
        case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D: case 0x20:
        case 0x85: case 0xA0: case 0x1680:
        case 0x2000: case 0x2001: case 0x2002: case 0x2003: case 0x2004:
        case 0x2005: case 0x2006: case 0x2007: case 0x2008: case 0x2009:
        case 0x200A: case 0x2028: case 0x2029: case 0x202F: case 0x205F:
        case 0x3000:
            return true;
        default:
            return false;
    }
}

bool is_strippable_punct(char c) {
    return std::ispunct(static_cast<unsigned char>(c)) != 0;
}

void append_lowered(std::string& out, std::string_view chunk) {
    for (char c : chunk) {
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
}

void push_token(std::vector<std::string>& out, std::string_view chunk) {
    std::size_t begin = 0;
    std::size_t end = chunk.size();
    while (begin < end && is_strippable_punct(chunk[begin])) ++begin;
    while (end > begin && is_strippable_punct(chunk[end - 1])) --end;
    if (end == begin) return;
    std::string token;
    token.reserve(end - begin);
    append_lowered(token, chunk.substr(begin, end - begin));
    out.push_back(std::move(token));
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::size_t pos = 0;
    std::size_t chunk_start = 0;
    while (pos < text.size()) {
        const std::size_t cp_start = pos;
        const std::uint32_t cp = next_codepoint(text, pos);
        if (is_space_cp(cp)) {
            if (cp_start > chunk_start) {
                push_token(tokens, text.substr(chunk_start, cp_start - chunk_start));
            }
            chunk_start = pos;
        }
    }
    if (text.size() > chunk_start) {
        push_token(tokens, text.substr(chunk_start));
    }
    return tokens;
}

std::string join_ngram(const std::vector<std::string>& tokens, std::size_t start, std::size_t n) {
    std::string out;
    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0) out.push_back(' ');
        out += tokens[start + i];
    }
    return out;
}

}  // namespace toolflow
