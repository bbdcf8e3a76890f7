// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 faitheval contributors

#pragma once

#include <openssl/evp.h>

#include <array>
#include <string>
#include <string_view>

namespace faitheval::detail {

// SHA-256 of the input, rendered as 64 lowercase hex characters.
// Full digest, no truncation; cache keys rely on this.
inline std::string sha256_hex(std::string_view data) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    EVP_Digest(data.data(), data.size(), md.data(), &len, EVP_sha256(), nullptr);
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 0x0f];
    }
    return out;
}

}  // namespace faitheval::detail
