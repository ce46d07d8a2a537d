#include "ftlab/tokenizer.hpp"

namespace ftlab {

std::size_t utf8_invalid_offset(std::string_view text) {
    const auto* p = reinterpret_cast<const unsigned char*>(text.data());
    std::size_t n = text.size();
    std::size_t i = 0;
    while (i < n) {
        unsigned char c = p[i];
        std::size_t len;
        uint32_t cp;
        if (c < 0x80) {
            i += 1;
            continue;
        } else if ((c & 0xE0) == 0xC0) {
            len = 2;
            cp = c & 0x1F;
        } else if ((c & 0xF0) == 0xE0) {
            len = 3;
            cp = c & 0x0F;
        } else if ((c & 0xF8) == 0xF0) {
            len = 4;
            cp = c & 0x07;
        } else {
            return i;
        }
        if (i + len > n) return i;
        for (std::size_t k = 1; k < len; ++k) {
            if ((p[i + k] & 0xC0) != 0x80) return i;
            cp = (cp << 6) | (p[i + k] & 0x3F);
        }
        // overlong forms, surrogates, out-of-range
        if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000))
            return i;
        if (cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return i;
        i += len;
    }
    return n;
}

std::vector<int> ByteTokenizer::encode(std::string_view text) const {
    std::size_t bad = utf8_invalid_offset(text);
    if (bad != text.size())
        throw ParseError("invalid UTF-8 at byte offset " + std::to_string(bad));
    std::vector<int> ids;
    ids.reserve(text.size());
    for (unsigned char c : text) ids.push_back(static_cast<int>(c) + kReserved);
    return ids;
}

std::string ByteTokenizer::decode(const std::vector<int>& ids) const {
    std::string out;
    out.reserve(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        int id = ids[i];
        if (id < 0 || id >= kVocabSize)
            throw IndexError("decode: id " + std::to_string(id) + " at position " +
                             std::to_string(i) + " outside vocabulary of size " +
                             std::to_string(kVocabSize));
        if (id < kReserved) continue;
        out.push_back(static_cast<char>(id - kReserved));
    }
    return out;
}

}  // namespace ftlab
