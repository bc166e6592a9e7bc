#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace nlikit {

// Incremental SHA-256 (OpenSSL EVP under the hood).
class Sha256 {
public:
    Sha256();
    ~Sha256();
    Sha256(const Sha256&) = delete;
    Sha256& operator=(const Sha256&) = delete;

    void update(std::string_view bytes);
    void update_file(const std::filesystem::path& file);

    // Finalizes and returns the lowercase hex digest. The object must not
    // be updated afterwards.
    std::string hex_digest();

private:
    void* ctx_;
};

std::string sha256_hex(std::string_view bytes);

} // namespace nlikit
