#include "mobdemo/digest.hpp"

#include "mobdemo/error.hpp"

#include <openssl/sha.h>

#include <array>
#include <fstream>
#include <sstream>

namespace mobdemo {

std::string sha1_hex(std::string_view bytes) {
    std::array<unsigned char, SHA_DIGEST_LENGTH> hash{};
    SHA1(reinterpret_cast<const unsigned char *>(bytes.data()), bytes.size(), hash.data());
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(hash.size() * 2);
    for (auto b : hash) {
        out.push_back(hex[b >> 4]);
        out.push_back(hex[b & 0xF]);
    }
    return out;
}

std::string content_digest(std::string_view bytes) {
    std::string blob = "blob " + std::to_string(bytes.size());
    blob.push_back('\0');
    blob.append(bytes);
    return sha1_hex(blob);
}

std::string read_file(const std::filesystem::path &path) {
    std::ifstream in{path, std::ios::binary};
    if (!in) {
        throw DataError("io_error", "cannot read " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string file_digest(const std::filesystem::path &path) { return content_digest(read_file(path)); }

} // namespace mobdemo
