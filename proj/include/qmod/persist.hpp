#pragma once

// Canonical one-line-per-element serialization of a store and its SHA-256
// digest. Equal stores have equal bytes, so the digest doubles as a store
// hash for every determinism check.

#include <filesystem>
#include <string>
#include <string_view>

#include "qmod/store.hpp"

namespace qmod {

inline constexpr int kFormatVersion = 1;
inline constexpr std::string_view kFormatName = "QMOD";

std::string serialize(const Store& store);
// FORMAT_ERROR, VERSION_UNSUPPORTED, and VALIDATION_FAILED unless `validate`
// is off, which `qmod check` uses to list the violations itself.
Store deserialize(std::string_view bytes, bool validate = true);

std::string sha256_hex(std::string_view bytes);
inline std::string digest(const Store& store) { return sha256_hex(serialize(store)); }

/// Writes the canonical bytes and returns their digest. Throws IO_ERROR.
std::string save_file(const Store& store, const std::filesystem::path& path);
Store load_file(const std::filesystem::path& path, bool validate = true);

std::string read_text_file(const std::filesystem::path& path);  // IO_ERROR
void write_text_file(const std::filesystem::path& path, std::string_view text);  // IO_ERROR

}  // namespace qmod
