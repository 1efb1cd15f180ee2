#ifndef DBHDIST_DIGEST_HPP
#define DBHDIST_DIGEST_HPP

#include <filesystem>
#include <string>
#include <string_view>

namespace dbhdist {

/// Lower-case hex SHA-256.
std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

}  // namespace dbhdist

#endif  // DBHDIST_DIGEST_HPP
