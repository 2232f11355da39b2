#include "yzr/weights_io.hpp"

#include "binary_io.hpp"

namespace yzr {

using detail::Reader;
using detail::Writer;

namespace {

void write_config(Writer& w, const EncoderConfig& c) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(c.alphabet_size));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(c.embed_dim));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(c.hidden_dim));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(c.num_layers));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(c.proj_dim));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(c.seq_len));
    w.put<float>(c.dropout_rate);
    w.put<float>(c.bn_momentum);
    w.put<float>(c.bn_eps);
}

EncoderConfig read_config(Reader& r) {
    EncoderConfig c;
    c.alphabet_size = static_cast<int>(r.get<std::uint32_t>());
    c.embed_dim = static_cast<int>(r.get<std::uint32_t>());
    c.hidden_dim = static_cast<int>(r.get<std::uint32_t>());
    c.num_layers = static_cast<int>(r.get<std::uint32_t>());
    c.proj_dim = static_cast<int>(r.get<std::uint32_t>());
    c.seq_len = static_cast<int>(r.get<std::uint32_t>());
    c.dropout_rate = r.get<float>();
    c.bn_momentum = r.get<float>();
    c.bn_eps = r.get<float>();
    return c;
}

}  // namespace

void save_params(const EncoderParams<float>& params, const std::filesystem::path& path) {
    Writer w(path.string());
    detail::write_header(w, detail::kKindWeights);
    write_config(w, params.config);
    std::uint32_t count = 0;
    params.visit([&](const std::string&, const Matrix<float>&, bool) { ++count; });
    w.put<std::uint32_t>(count);
    params.visit([&](const std::string& name, const Matrix<float>& t, bool) {
        detail::write_tensor(w, name, {static_cast<std::uint64_t>(t.rows()), static_cast<std::uint64_t>(t.cols())},
                             t.data());
    });
    w.close();
}

EncoderParams<float> load_params(const std::filesystem::path& path) {
    Reader r(path.string());
    detail::read_header(r, detail::kKindWeights);
    const EncoderConfig cfg = read_config(r);
    try {
        cfg.validate();
    } catch (const Error& e) {
        throw Error(ErrorCode::VersionMismatch, path.string() + ": stored encoder config rejected (" + e.what() + ")");
    }
    EncoderParams<float> params = EncoderParams<float>::zeros(cfg);
    const auto count = r.get<std::uint32_t>();
    std::uint32_t expected = 0;
    params.visit([&](const std::string&, Matrix<float>&, bool) { ++expected; });
    if (count != expected) throw Error(ErrorCode::VersionMismatch, path.string() + ": unexpected tensor count");
    params.visit([&](const std::string& name, Matrix<float>& t, bool) {
        const detail::TensorRecord rec = detail::read_tensor(r);
        if (rec.name != name || rec.dims.size() != 2 || rec.dims[0] != static_cast<std::uint64_t>(t.rows()) ||
            rec.dims[1] != static_cast<std::uint64_t>(t.cols())) {
            throw Error(ErrorCode::VersionMismatch, path.string() + ": tensor '" + rec.name + "' does not match '" + name + "'");
        }
        std::copy(rec.data.begin(), rec.data.end(), t.data());
    });
    return params;
}

EncoderParams<float> load_params(const std::filesystem::path& path, const EncoderConfig& expected) {
    // Check the header config before validation so a foreign architecture is
    // reported against what the caller asked for.
    {
        Reader r(path.string());
        detail::read_header(r, detail::kKindWeights);
        const EncoderConfig stored = read_config(r);
        if (!(stored == expected)) {
            throw Error(ErrorCode::VersionMismatch,
                        path.string() + ": stored encoder config (hidden " + std::to_string(stored.hidden_dim) +
                            ", proj " + std::to_string(stored.proj_dim) + ") differs from the requested one (hidden " +
                            std::to_string(expected.hidden_dim) + ", proj " + std::to_string(expected.proj_dim) + ")");
        }
    }
    return load_params(path);
}

std::uint64_t params_fingerprint(const EncoderParams<float>& params) {
    detail::Fnv1a sum;
    params.visit([&](const std::string& name, const Matrix<float>& t, bool) {
        sum.update(name.data(), name.size());
        sum.update(t.data(), static_cast<std::size_t>(t.size()) * sizeof(float));
    });
    return sum.value();
}

}  // namespace yzr
