#include "ftlab/container.hpp"

#include <zlib.h>

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

static_assert(std::endian::native == std::endian::little,
              "container serialization assumes a little-endian host");

namespace ftlab {

namespace {

void append_u32(std::string& buf, uint32_t v) {
    buf.append(reinterpret_cast<const char*>(&v), 4);
}
void append_u16(std::string& buf, uint16_t v) {
    buf.append(reinterpret_cast<const char*>(&v), 2);
}

struct Reader {
    const std::string& buf;
    std::size_t pos = 0;

    void need(std::size_t n) const {
        if (pos + n > buf.size())
            throw CorruptFileError("checkpoint truncated at byte " + std::to_string(pos));
    }
    uint32_t u32() {
        need(4);
        uint32_t v;
        std::memcpy(&v, buf.data() + pos, 4);
        pos += 4;
        return v;
    }
    uint16_t u16() {
        need(2);
        uint16_t v;
        std::memcpy(&v, buf.data() + pos, 2);
        pos += 2;
        return v;
    }
    uint8_t u8() {
        need(1);
        return static_cast<uint8_t>(buf[pos++]);
    }
    std::string bytes(std::size_t n) {
        need(n);
        std::string s = buf.substr(pos, n);
        pos += n;
        return s;
    }
};

}  // namespace

void write_container(const std::string& path, const char magic[4], const std::string& config_json,
                     const std::vector<ContainerEntry>& entries) {
    std::string buf;
    buf.append(magic, 4);
    append_u32(buf, kContainerVersion);
    append_u32(buf, static_cast<uint32_t>(config_json.size()));
    buf.append(config_json);
    append_u32(buf, static_cast<uint32_t>(entries.size()));
    for (const ContainerEntry& e : entries) {
        if (e.name.size() > 0xFFFF) throw ContractError("entry name too long: " + e.name);
        append_u16(buf, static_cast<uint16_t>(e.name.size()));
        buf.append(e.name);
        buf.push_back(static_cast<char>(e.shape.size()));
        std::size_t count = 1;
        for (int d : e.shape) {
            append_u32(buf, static_cast<uint32_t>(d));
            count *= static_cast<std::size_t>(d);
        }
        if (count != e.data.size())
            throw ContractError("entry " + e.name + ": payload does not fill its shape");
        buf.append(reinterpret_cast<const char*>(e.data.data()), e.data.size() * 4);
    }
    uint32_t crc = static_cast<uint32_t>(
        crc32(0, reinterpret_cast<const Bytef*>(buf.data()), static_cast<uInt>(buf.size())));
    append_u32(buf, crc);

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path);
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw IoError("write failed: " + path);
}

ContainerFile read_container(const std::string& path, const char expected_magic[4]) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);
    std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    if (buf.size() < 8 || std::memcmp(buf.data(), expected_magic, 4) != 0)
        throw BadMagicError("not a " + std::string(expected_magic, 4) + " file: " + path);
    if (buf.size() < 12) throw CorruptFileError("checkpoint truncated: " + path);

    uint32_t stored_crc;
    std::memcpy(&stored_crc, buf.data() + buf.size() - 4, 4);
    uint32_t crc = static_cast<uint32_t>(crc32(
        0, reinterpret_cast<const Bytef*>(buf.data()), static_cast<uInt>(buf.size() - 4)));
    if (crc != stored_crc) throw CorruptFileError("checksum mismatch in " + path);

    Reader r{buf, 4};
    uint32_t version = r.u32();
    if (version != kContainerVersion)
        throw VersionError("unsupported checkpoint version " + std::to_string(version) +
                           " (expected " + std::to_string(kContainerVersion) + ") in " + path);

    ContainerFile file;
    file.config_json = r.bytes(r.u32());
    uint32_t count = r.u32();
    file.entries.reserve(count);
    for (uint32_t i = 0; i < count; ++i) {
        ContainerEntry e;
        e.name = r.bytes(r.u16());
        uint8_t rank = r.u8();
        if (rank == 0 || rank > 3)
            throw CorruptFileError("entry " + e.name + ": bad rank " + std::to_string(rank));
        std::size_t n = 1;
        for (uint8_t k = 0; k < rank; ++k) {
            uint32_t d = r.u32();
            if (d == 0 || d > (1u << 28))
                throw CorruptFileError("entry " + e.name + ": bad extent " + std::to_string(d));
            e.shape.push_back(static_cast<int>(d));
            n *= d;
        }
        std::string payload = r.bytes(n * 4);
        e.data.resize(n);
        std::memcpy(e.data.data(), payload.data(), n * 4);
        file.entries.push_back(std::move(e));
    }
    if (r.pos != buf.size() - 4)
        throw CorruptFileError("trailing bytes after last entry in " + path);
    return file;
}

}  // namespace ftlab
