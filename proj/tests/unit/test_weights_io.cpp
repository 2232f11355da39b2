#include <gtest/gtest.h>
#include <cstring>

#include "yzr/error.hpp"
#include "yzr/weights_io.hpp"
#include "testkit.hpp"

using namespace yzr;

namespace {

ErrorCode load_error(const std::filesystem::path& p) {
    try {
        load_params(p);
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::InvalidArgument;  // no error
}

bool bitwise_equal(const EncoderParams<float>& a, const EncoderParams<float>& b) {
    std::vector<const Matrix<float>*> ta;
    a.visit([&](const std::string&, const Matrix<float>& t, bool) { ta.push_back(&t); });
    std::size_t i = 0;
    bool same = a.config == b.config;
    b.visit([&](const std::string&, const Matrix<float>& t, bool) {
        const Matrix<float>& o = *ta[i++];
        same = same && o.rows() == t.rows() && o.cols() == t.cols() &&
               std::memcmp(o.data(), t.data(), sizeof(float) * static_cast<std::size_t>(t.size())) == 0;
    });
    return same;
}

}  // namespace

TEST(WeightsIo, RoundTripIsBitwise) {
    testkit::TempDir dir;
    auto p = EncoderParams<float>::initialize(EncoderConfig{}, 17);
    p.bn_running_mean.setRandom();
    p.bn_running_var.array() += 0.25f;
    save_params(p, dir / "w.bin");
    const auto q = load_params(dir / "w.bin");
    EXPECT_TRUE(bitwise_equal(p, q));
    EXPECT_EQ(params_fingerprint(p), params_fingerprint(q));
    save_params(q, dir / "w2.bin");
    EXPECT_EQ(testkit::read_file(dir / "w.bin"), testkit::read_file(dir / "w2.bin"));
}

TEST(WeightsIo, FingerprintTracksContent) {
    auto p = EncoderParams<float>::initialize(EncoderConfig{}, 17);
    const auto fp = params_fingerprint(p);
    p.proj_bias(0, 0) += 1e-3f;
    EXPECT_NE(params_fingerprint(p), fp);
}

TEST(WeightsIo, TruncatedFileIsChecksumError) {
    testkit::TempDir dir;
    save_params(EncoderParams<float>::initialize(testkit::tiny_config(), 1), dir / "w.bin");
    const std::string full = testkit::read_file(dir / "w.bin");
    for (std::size_t cut : {full.size() - 1, full.size() / 2, std::size_t{20}}) {
        testkit::write_file(dir / "cut.bin", full.substr(0, cut));
        EXPECT_EQ(load_error(dir / "cut.bin"), ErrorCode::Checksum) << cut;
    }
}

TEST(WeightsIo, FlippedByteIsChecksumError) {
    testkit::TempDir dir;
    save_params(EncoderParams<float>::initialize(testkit::tiny_config(), 1), dir / "w.bin");
    std::string bytes = testkit::read_file(dir / "w.bin");
    bytes[bytes.size() - 20] ^= 0x40;
    testkit::write_file(dir / "bad.bin", bytes);
    EXPECT_EQ(load_error(dir / "bad.bin"), ErrorCode::Checksum);
}

TEST(WeightsIo, VersionAndMagic) {
    testkit::TempDir dir;
    save_params(EncoderParams<float>::initialize(testkit::tiny_config(), 1), dir / "w.bin");
    std::string bytes = testkit::read_file(dir / "w.bin");
    std::string v = bytes;
    v[4] = 9;
    testkit::write_file(dir / "v.bin", v);
    EXPECT_EQ(load_error(dir / "v.bin"), ErrorCode::VersionMismatch);
    std::string m = bytes;
    m[0] = 'X';
    testkit::write_file(dir / "m.bin", m);
    EXPECT_EQ(load_error(dir / "m.bin"), ErrorCode::Format);
    EXPECT_EQ(load_error(dir / "missing.bin"), ErrorCode::Io);
}

TEST(WeightsIo, ForeignProjectionWidthIsVersionMismatch) {
    testkit::TempDir dir;
    EncoderConfig cfg = testkit::tiny_config();
    cfg.proj_dim = 32;
    save_params(EncoderParams<float>::zeros(cfg), dir / "p32.bin");
    EXPECT_EQ(load_error(dir / "p32.bin"), ErrorCode::VersionMismatch);
    try {
        load_params(dir / "p32.bin", testkit::tiny_config());
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::VersionMismatch);
    }
    save_params(EncoderParams<float>::initialize(testkit::tiny_config(), 1), dir / "tiny.bin");
    EXPECT_NO_THROW(load_params(dir / "tiny.bin", testkit::tiny_config()));
    EXPECT_THROW(load_params(dir / "tiny.bin", EncoderConfig{}), Error);
}
