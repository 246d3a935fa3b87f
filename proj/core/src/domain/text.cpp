#include "anchor/domain/text.hpp"

#include <openssl/evp.h>
#include <unicode/uchar.h>
#include <unicode/ustring.h>
#include <unicode/utypes.h>

#include <array>
#include <cstdio>
#include <memory>

#include "anchor/domain/errors.hpp"

namespace anchor::text {
namespace {

bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

std::string fold_case(const std::string& utf8) {
    if (utf8.empty()) return utf8;
    UErrorCode status = U_ZERO_ERROR;
    int32_t wide_length = 0;
    u_strFromUTF8(nullptr, 0, &wide_length, utf8.data(), static_cast<int32_t>(utf8.size()), &status);
    if (status != U_BUFFER_OVERFLOW_ERROR && U_FAILURE(status)) throw DomainError("invalid UTF-8 text");
    std::u16string wide(static_cast<std::size_t>(wide_length), u'\0');
    status = U_ZERO_ERROR;
    u_strFromUTF8(wide.data(), wide_length, nullptr, utf8.data(), static_cast<int32_t>(utf8.size()), &status);
    if (U_FAILURE(status)) throw DomainError("invalid UTF-8 text");

    status = U_ZERO_ERROR;
    int32_t folded_length =
        u_strFoldCase(nullptr, 0, wide.data(), wide_length, U_FOLD_CASE_DEFAULT, &status);
    std::u16string folded(static_cast<std::size_t>(folded_length), u'\0');
    status = U_ZERO_ERROR;
    u_strFoldCase(folded.data(), folded_length, wide.data(), wide_length, U_FOLD_CASE_DEFAULT, &status);
    if (U_FAILURE(status)) throw DomainError("case folding failed");

    status = U_ZERO_ERROR;
    int32_t out_length = 0;
    u_strToUTF8(nullptr, 0, &out_length, folded.data(), folded_length, &status);
    std::string out(static_cast<std::size_t>(out_length), '\0');
    status = U_ZERO_ERROR;
    u_strToUTF8(out.data(), out_length, nullptr, folded.data(), folded_length, &status);
    if (U_FAILURE(status)) throw DomainError("case folding failed");
    return out;
}

}  // namespace

std::string canonicalize(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (char c : text) {
        if (is_space(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out.push_back(' ');
        pending_space = false;
        out.push_back(c);
    }
    return out;
}

std::string normalize(std::string_view text) { return fold_case(canonicalize(text)); }

std::string sha256_hex(std::string_view bytes) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int length = 0;
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
        EVP_DigestFinal_ex(ctx.get(), digest.data(), &length) != 1) {
        throw Error("SHA-256 failed");
    }
    static constexpr char kHex[] = "0123456789abcdef";
    std::string hex;
    hex.reserve(length * 2);
    for (unsigned int i = 0; i < length; ++i) {
        hex.push_back(kHex[digest[i] >> 4]);
        hex.push_back(kHex[digest[i] & 0xF]);
    }
    return hex;
}

FactorId content_id(std::string_view text) { return "f" + sha256_hex(normalize(text)).substr(0, 16); }

std::vector<std::string> split(std::string_view text, char separator) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto end = text.find(separator, start);
        if (end == std::string_view::npos) end = text.size();
        auto part = canonicalize(text.substr(start, end - start));
        if (!part.empty()) parts.push_back(std::move(part));
        start = end + 1;
    }
    return parts;
}

}  // namespace anchor::text
