#pragma once

#include <array>
#include <cctype>
#include <cstdint>
#include <optional>

namespace cornea::font {

constexpr int kGlyphWidth = 5;
constexpr int kGlyphHeight = 7;

// One byte per row, bit 4 is the leftmost column.
using Glyph = std::array<std::uint8_t, kGlyphHeight>;

inline std::optional<Glyph> glyph(char ch) {
  switch (std::toupper(static_cast<unsigned char>(ch))) {
    case ' ': return Glyph{0, 0, 0, 0, 0, 0, 0};
    case '0': return Glyph{0b01110, 0b10001, 0b10011, 0b10101, 0b11001, 0b10001, 0b01110};
    case '1': return Glyph{0b00100, 0b01100, 0b00100, 0b00100, 0b00100, 0b00100, 0b01110};
    case '2': return Glyph{0b01110, 0b10001, 0b00001, 0b00010, 0b00100, 0b01000, 0b11111};
    case '3': return Glyph{0b11111, 0b00010, 0b00100, 0b00010, 0b00001, 0b10001, 0b01110};
    case '4': return Glyph{0b00010, 0b00110, 0b01010, 0b10010, 0b11111, 0b00010, 0b00010};
    case '5': return Glyph{0b11111, 0b10000, 0b11110, 0b00001, 0b00001, 0b10001, 0b01110};
    case '6': return Glyph{0b00110, 0b01000, 0b10000, 0b11110, 0b10001, 0b10001, 0b01110};
    case '7': return Glyph{0b11111, 0b00001, 0b00010, 0b00100, 0b01000, 0b01000, 0b01000};
    case '8': return Glyph{0b01110, 0b10001, 0b10001, 0b01110, 0b10001, 0b10001, 0b01110};
    case '9': return Glyph{0b01110, 0b10001, 0b10001, 0b01111, 0b00001, 0b00010, 0b01100};
    case 'A': return Glyph{0b01110, 0b10001, 0b10001, 0b11111, 0b10001, 0b10001, 0b10001};
    case 'B': return Glyph{0b11110, 0b10001, 0b10001, 0b11110, 0b10001, 0b10001, 0b11110};
    case 'C': return Glyph{0b01110, 0b10001, 0b10000, 0b10000, 0b10000, 0b10001, 0b01110};
    case 'D': return Glyph{0b11100, 0b10010, 0b10001, 0b10001, 0b10001, 0b10010, 0b11100};
    case 'E': return Glyph{0b11111, 0b10000, 0b10000, 0b11110, 0b10000, 0b10000, 0b11111};
    case 'F': return Glyph{0b11111, 0b10000, 0b10000, 0b11110, 0b10000, 0b10000, 0b10000};
    case 'G': return Glyph{0b01110, 0b10001, 0b10000, 0b10111, 0b10001, 0b10001, 0b01111};
    case 'H': return Glyph{0b10001, 0b10001, 0b10001, 0b11111, 0b10001, 0b10001, 0b10001};
    case 'I': return Glyph{0b01110, 0b00100, 0b00100, 0b00100, 0b00100, 0b00100, 0b01110};
    case 'J': return Glyph{0b00111, 0b00010, 0b00010, 0b00010, 0b00010, 0b10010, 0b01100};
    case 'K': return Glyph{0b10001, 0b10010, 0b10100, 0b11000, 0b10100, 0b10010, 0b10001};
    case 'L': return Glyph{0b10000, 0b10000, 0b10000, 0b10000, 0b10000, 0b10000, 0b11111};
    case 'M': return Glyph{0b10001, 0b11011, 0b10101, 0b10101, 0b10001, 0b10001, 0b10001};
    case 'N': return Glyph{0b10001, 0b10001, 0b11001, 0b10101, 0b10011, 0b10001, 0b10001};
    case 'O': return Glyph{0b01110, 0b10001, 0b10001, 0b10001, 0b10001, 0b10001, 0b01110};
    case 'P': return Glyph{0b11110, 0b10001, 0b10001, 0b11110, 0b10000, 0b10000, 0b10000};
    case 'Q': return Glyph{0b01110, 0b10001, 0b10001, 0b10001, 0b10101, 0b10010, 0b01101};
    case 'R': return Glyph{0b11110, 0b10001, 0b10001, 0b11110, 0b10100, 0b10010, 0b10001};
    case 'S': return Glyph{0b01111, 0b10000, 0b10000, 0b01110, 0b00001, 0b00001, 0b11110};
    case 'T': return Glyph{0b11111, 0b00100, 0b00100, 0b00100, 0b00100, 0b00100, 0b00100};
    case 'U': return Glyph{0b10001, 0b10001, 0b10001, 0b10001, 0b10001, 0b10001, 0b01110};
    case 'V': return Glyph{0b10001, 0b10001, 0b10001, 0b10001, 0b10001, 0b01010, 0b00100};
    case 'W': return Glyph{0b10001, 0b10001, 0b10001, 0b10101, 0b10101, 0b10101, 0b01010};
    case 'X': return Glyph{0b10001, 0b10001, 0b01010, 0b00100, 0b01010, 0b10001, 0b10001};
    case 'Y': return Glyph{0b10001, 0b10001, 0b10001, 0b01010, 0b00100, 0b00100, 0b00100};
    case 'Z': return Glyph{0b11111, 0b00001, 0b00010, 0b00100, 0b01000, 0b10000, 0b11111};
    case '-': return Glyph{0, 0, 0, 0b11111, 0, 0, 0};
    case '+': return Glyph{0, 0b00100, 0b00100, 0b11111, 0b00100, 0b00100, 0};
    case ':': return Glyph{0, 0b01100, 0b01100, 0, 0b01100, 0b01100, 0};
    case '/': return Glyph{0, 0b00001, 0b00010, 0b00100, 0b01000, 0b10000, 0};
    case '.': return Glyph{0, 0, 0, 0, 0, 0b01100, 0b01100};
    case ',': return Glyph{0, 0, 0, 0, 0b01100, 0b00100, 0b01000};
    case '?': return Glyph{0b01110, 0b10001, 0b00001, 0b00010, 0b00100, 0, 0b00100};
    default: return std::nullopt;
  }
}

}  // namespace cornea::font
