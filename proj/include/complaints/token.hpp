#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace complaints {

struct Span {
    std::size_t start = 0;  // byte offset into clean_text
    std::size_t end = 0;    // one past the last byte

    friend bool operator==(const Span&, const Span&) = default;
};

struct Token {
    std::string surface;
    std::string lower;
    std::optional<std::string> pos;
    Span span;

    friend bool operator==(const Token&, const Token&) = default;
};

using TokenSeq = std::vector<Token>;

}  // namespace complaints
