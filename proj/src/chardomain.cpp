#include "yzr/chardomain.hpp"

#include "yzr/error.hpp"
#include "yzr/utf8.hpp"

namespace yzr {

const char* to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::EmptyToken: return "EmptyToken";
        case ErrorCode::TokenTooLong: return "TokenTooLong";
        case ErrorCode::TokenTooShort: return "TokenTooShort";
        case ErrorCode::Io: return "IoError";
        case ErrorCode::Format: return "FormatError";
        case ErrorCode::Conflict: return "ConflictError";
        case ErrorCode::Shape: return "ShapeError";
        case ErrorCode::NonFinite: return "NonFiniteError";
        case ErrorCode::StaleCache: return "StaleCache";
        case ErrorCode::VersionMismatch: return "VersionMismatch";
        case ErrorCode::Checksum: return "ChecksumError";
        case ErrorCode::ZeroVector: return "ZeroVector";
        case ErrorCode::EmptyIndex: return "EmptyIndex";
        case ErrorCode::DuplicateKey: return "DuplicateKey";
        case ErrorCode::EmptyDataset: return "EmptyDataset";
        case ErrorCode::TooFewTokens: return "TooFewTokens";
        case ErrorCode::SpecInfeasible: return "SpecInfeasible";
        case ErrorCode::NotEnoughVariants: return "NotEnoughVariants";
        case ErrorCode::NotInitialized: return "NotInitialized";
        case ErrorCode::Service: return "ServiceError";
    }
    return "Unknown";
}

int CharDomain::id_of(char32_t c) noexcept {
    if (c >= U'a' && c <= U'z') return kFirstLetterId + static_cast<int>(c - U'a');
    for (std::size_t i = 0; i < kSpecials.size(); ++i) {
        if (c == static_cast<char32_t>(kSpecials[i])) return kFirstSpecialId + static_cast<int>(i);
    }
    return kOovId;
}

char CharDomain::char_of(int id) noexcept {
    if (id >= kFirstLetterId && id < kFirstSpecialId) return static_cast<char>('a' + (id - kFirstLetterId));
    if (id >= kFirstSpecialId && id < kOovId) return kSpecials[static_cast<std::size_t>(id - kFirstSpecialId)];
    if (id == kPadId) return '\0';
    return kOovGlyph;
}

CharSeq encode_token(std::string_view token) {
    const std::u32string cps = utf8::decode(token);
    if (cps.empty()) throw Error(ErrorCode::EmptyToken, "cannot encode an empty token");
    if (cps.size() > static_cast<std::size_t>(kSeqLen)) {
        throw Error(ErrorCode::TokenTooLong,
                    "token '" + std::string(token) + "' has " + std::to_string(cps.size()) + " characters (max " +
                        std::to_string(kSeqLen) + ")");
    }
    CharSeq seq;
    seq.ids.fill(kPadId);
    for (std::size_t i = 0; i < cps.size(); ++i) seq.ids[i] = CharDomain::id_of(cps[i]);
    seq.true_len = static_cast<int>(cps.size());
    return seq;
}

std::string decode(const CharSeq& seq) {
    std::string out;
    for (int i = 0; i < seq.true_len && i < kSeqLen; ++i) out.push_back(CharDomain::char_of(seq.ids[i]));
    return out;
}

}  // namespace yzr
