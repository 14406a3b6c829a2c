#pragma once

#include <string>

namespace gmssl {

// Hex SHA-1 digest of a byte string.
std::string sha1_hex(const std::string& data);

// git blob-style content hash of a file ("blob <len>\0" + bytes).
std::string git_blob_hash(const std::string& path);

}  // namespace gmssl
