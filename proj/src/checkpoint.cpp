#include "eegstream/checkpoint.hpp"

#include <fstream>
#include <map>

#include "binio.hpp"

namespace eegstream {

namespace {

constexpr char kMagic[4] = {'E', 'S', 'C', 'P'};
constexpr uint32_t kVersion = 1;

using binio::ByteWriter;
using binio::ByteReader;

void write_config(ByteWriter& w, const ModelConfig& c) {
    for (uint64_t v : {c.d_model, c.n_blocks, c.d_state, c.d_head, c.heads, c.ffn_expansion,
                       c.rank, c.n_queries, c.embed_heads, c.patch_samples, c.pos_period,
                       c.n_channels, c.n_classes, c.scan_chunk})
        w.pod<uint64_t>(v);
    w.pod<uint8_t>(static_cast<uint8_t>(c.mode));
    w.pod<double>(c.rms_eps);
}

ModelConfig read_config(ByteReader& r) {
    ModelConfig c;
    size_t* fields[] = {&c.d_model,   &c.n_blocks,      &c.d_state,  &c.d_head,
                        &c.heads,     &c.ffn_expansion, &c.rank,     &c.n_queries,
                        &c.embed_heads, &c.patch_samples, &c.pos_period, &c.n_channels,
                        &c.n_classes, &c.scan_chunk};
    for (size_t* f : fields) *f = static_cast<size_t>(r.pod<uint64_t>());
    c.mode = static_cast<DiscretizationMode>(r.pod<uint8_t>());
    c.rms_eps = r.pod<double>();
    return c;
}

}  // namespace

uint32_t crc32(const uint8_t* data, size_t n, uint32_t seed) {
    static uint32_t table[256];
    static bool init = false;
    if (!init) {
        for (uint32_t i = 0; i < 256; ++i) {
            uint32_t c = i;
            for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
            table[i] = c;
        }
        init = true;
    }
    uint32_t c = seed ^ 0xFFFFFFFFu;
    for (size_t i = 0; i < n; ++i) c = table[(c ^ data[i]) & 0xFF] ^ (c >> 8);
    return c ^ 0xFFFFFFFFu;
}

void save_checkpoint(const EncoderParams& params, const std::string& path) {
    ByteWriter w;
    w.raw(kMagic, 4);
    w.pod<uint32_t>(kVersion);
    write_config(w, params.config);

    uint32_t count = 0;
    for_each_tensor(params, [&](const TensorRef&) { ++count; });
    w.pod<uint32_t>(count);
    for_each_tensor(params, [&](const TensorRef& t) {
        w.str(t.name);
        w.pod<uint8_t>(static_cast<uint8_t>(Precision::f64));
        w.pod<uint8_t>(static_cast<uint8_t>(t.shape.size()));
        for (size_t d : t.shape) w.pod<uint64_t>(d);
        w.raw(t.data, t.numel * sizeof(double));
    });
    w.pod<uint32_t>(crc32(w.buf.data(), w.buf.size()));

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw integrity_error("checkpoint: cannot open for write: " + path);
    f.write(reinterpret_cast<const char*>(w.buf.data()),
            static_cast<std::streamsize>(w.buf.size()));
    if (!f) throw integrity_error("checkpoint: write failed: " + path);
}

EncoderParams load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw integrity_error("checkpoint: cannot open: " + path);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                               std::istreambuf_iterator<char>());
    if (bytes.size() < 12) throw integrity_error("checkpoint: truncated file");

    const uint32_t stored = [&] {
        uint32_t v;
        std::memcpy(&v, bytes.data() + bytes.size() - 4, 4);
        return v;
    }();
    if (crc32(bytes.data(), bytes.size() - 4) != stored)
        throw integrity_error("checkpoint: checksum mismatch");

    ByteReader r(bytes.data(), bytes.size() - 4, "checkpoint");
    char magic[4];
    r.raw(magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0) throw integrity_error("checkpoint: bad magic");
    const uint32_t version = r.pod<uint32_t>();
    if (version != kVersion)
        throw version_error("checkpoint: unsupported version " + std::to_string(version));

    const ModelConfig cfg = read_config(r);
    EncoderParams params = EncoderParams::init(cfg, 0);

    std::map<std::string, TensorRef> registry;
    for_each_tensor(params, [&](const TensorRef& t) { registry.emplace(t.name, t); });

    const uint32_t count = r.pod<uint32_t>();
    if (count != registry.size())
        throw integrity_error("checkpoint: tensor count mismatch");
    for (uint32_t i = 0; i < count; ++i) {
        const std::string name = r.str();
        auto it = registry.find(name);
        if (it == registry.end())
            throw integrity_error("checkpoint: unknown tensor name: " + name);
        const uint8_t dtype = r.pod<uint8_t>();
        if (dtype != static_cast<uint8_t>(Precision::f64))
            throw integrity_error("checkpoint: unsupported tensor precision");
        const uint8_t ndim = r.pod<uint8_t>();
        if (ndim != it->second.shape.size())
            throw integrity_error("checkpoint: rank mismatch for " + name);
        size_t numel = 1;
        for (uint8_t k = 0; k < ndim; ++k) {
            const uint64_t dim = r.pod<uint64_t>();
            if (dim != it->second.shape[k])
                throw integrity_error("checkpoint: shape mismatch for " + name);
            numel *= dim;
        }
        r.raw(it->second.data, numel * sizeof(double));
    }
    if (r.off != r.n) throw integrity_error("checkpoint: trailing bytes");
    return params;
}

}  // namespace eegstream
