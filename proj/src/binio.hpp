#pragma once

// Internal little-endian byte packing shared by the checkpoint and recording
// containers.

#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "eegstream/errors.hpp"

namespace eegstream::binio {

struct ByteWriter {
    std::vector<uint8_t> buf;
    void raw(const void* p, size_t n) {
        const uint8_t* b = static_cast<const uint8_t*>(p);
        buf.insert(buf.end(), b, b + n);
    }
    template <typename T>
    void pod(T v) {
        raw(&v, sizeof(T));
    }
    void str(const std::string& s) {
        pod<uint16_t>(static_cast<uint16_t>(s.size()));
        raw(s.data(), s.size());
    }
};

struct ByteReader {
    const uint8_t* p;
    size_t n, off = 0;
    std::string what;
    ByteReader(const uint8_t* data, size_t size, std::string context)
        : p(data), n(size), what(std::move(context)) {}
    void raw(void* out, size_t k) {
        if (off + k > n) throw integrity_error(what + ": truncated file");
        std::memcpy(out, p + off, k);
        off += k;
    }
    template <typename T>
    T pod() {
        T v;
        raw(&v, sizeof(T));
        return v;
    }
    std::string str() {
        const uint16_t len = pod<uint16_t>();
        std::string s(len, '\0');
        raw(s.data(), len);
        return s;
    }
};

}  // namespace eegstream::binio
