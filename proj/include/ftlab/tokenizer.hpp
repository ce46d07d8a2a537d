#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "ftlab/error.hpp"

namespace ftlab {

/// Byte-level vocabulary: ids 0..2 are reserved (pad/bos/eos), ids
/// 3..258 map one-to-one onto raw bytes. Reversible by construction, no
/// model file needed. A trained subword vocabulary would slot in behind
/// the same encode/decode surface.
class ByteTokenizer {
public:
    static constexpr int kPad = 0;
    static constexpr int kBos = 1;
    static constexpr int kEos = 2;
    static constexpr int kReserved = 3;
    static constexpr int kVocabSize = 256 + kReserved;  // 259

    int vocab_size() const { return kVocabSize; }

    /// Rejects malformed UTF-8 with the offending byte offset.
    std::vector<int> encode(std::string_view text) const;

    /// Inverse of encode on non-reserved ids; pad/bos/eos render as
    /// nothing. Throws IndexError on id >= vocab_size().
    std::string decode(const std::vector<int>& ids) const;
};

/// Validates UTF-8; returns the byte offset of the first invalid byte,
/// or text.size() if the whole string is valid.
std::size_t utf8_invalid_offset(std::string_view text);

}  // namespace ftlab
