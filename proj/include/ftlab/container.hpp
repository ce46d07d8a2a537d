#pragma once

#include <string>
#include <vector>

#include "ftlab/error.hpp"

namespace ftlab {

/// One named tensor payload inside a checkpoint container.
struct ContainerEntry {
    std::string name;
    std::vector<int> shape;
    std::vector<float> data;  // row-major
};

/// Binary container shared by model checkpoints ("FTLM") and adapter
/// checkpoints ("FTLA").
///
/// Layout, all integers little-endian:
///   magic (4 bytes) | version u32 = 1 | config-length u32 | config JSON (UTF-8)
///   | entry count u32 | per entry: name-length u16, name, rank u8,
///     extents u32 each, raw IEEE-754 float32 values
///   | CRC-32 (u32) of every preceding byte.
///
/// Writes are deterministic: identical inputs produce identical bytes.
void write_container(const std::string& path, const char magic[4], const std::string& config_json,
                     const std::vector<ContainerEntry>& entries);

struct ContainerFile {
    std::string config_json;
    std::vector<ContainerEntry> entries;
};

/// Throws BadMagicError / VersionError / CorruptFileError as appropriate;
/// a corrupt file is never silently accepted (CRC covers the whole body).
ContainerFile read_container(const std::string& path, const char expected_magic[4]);

constexpr uint32_t kContainerVersion = 1;

}  // namespace ftlab
