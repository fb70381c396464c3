#include "prism/io.hpp"

#include <cstring>
#include <fstream>

namespace prism::io {

namespace {

void put_bytes(std::ostream& os, const unsigned char* b, size_t n) {
    os.write(reinterpret_cast<const char*>(b), static_cast<std::streamsize>(n));
}

void get_bytes(std::istream& is, unsigned char* b, size_t n) {
    is.read(reinterpret_cast<char*>(b), static_cast<std::streamsize>(n));
    if (!is) throw ParseError("unexpected end of file");
}

} // namespace

void write_u8(std::ostream& os, uint8_t v) { put_bytes(os, &v, 1); }

void write_u16(std::ostream& os, uint16_t v) {
    unsigned char b[2] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>(v >> 8)};
    put_bytes(os, b, 2);
}

void write_u32(std::ostream& os, uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    put_bytes(os, b, 4);
}

void write_u64(std::ostream& os, uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    put_bytes(os, b, 8);
}

void write_f32(std::ostream& os, float v) {
    uint32_t u;
    static_assert(sizeof(u) == sizeof(v));
    std::memcpy(&u, &v, 4);
    write_u32(os, u);
}

void write_string(std::ostream& os, const std::string& s) {
    write_u32(os, static_cast<uint32_t>(s.size()));
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

uint8_t read_u8(std::istream& is) {
    unsigned char b;
    get_bytes(is, &b, 1);
    return b;
}

uint16_t read_u16(std::istream& is) {
    unsigned char b[2];
    get_bytes(is, b, 2);
    return static_cast<uint16_t>(b[0] | (b[1] << 8));
}

uint32_t read_u32(std::istream& is) {
    unsigned char b[4];
    get_bytes(is, b, 4);
    uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
    return v;
}

uint64_t read_u64(std::istream& is) {
    unsigned char b[8];
    get_bytes(is, b, 8);
    uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
    return v;
}

float read_f32(std::istream& is) {
    uint32_t u = read_u32(is);
    float v;
    std::memcpy(&v, &u, 4);
    return v;
}

std::string read_string(std::istream& is) {
    uint32_t n = read_u32(is);
    std::string s(n, '\0');
    if (n > 0) {
        is.read(s.data(), n);
        if (!is) throw ParseError("unexpected end of file in string field");
    }
    return s;
}

void write_magic(std::ostream& os, const char magic[4]) { os.write(magic, 4); }

void expect_magic(std::istream& is, const char magic[4], const std::string& what) {
    char got[4] = {};
    is.read(got, 4);
    if (!is || std::memcmp(got, magic, 4) != 0)
        throw ParseError("bad magic for " + what + " file");
}

void atomic_write_file(const std::filesystem::path& path, const std::string& bytes) {
    namespace fs = std::filesystem;
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw DataError("cannot open for writing: " + tmp.string());
        os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!os) throw DataError("write failed: " + tmp.string());
    }
    fs::rename(tmp, path);
}

std::string slurp_file(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw MissingFile("cannot open: " + path.string());
    std::string s((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    return s;
}

uint64_t fnv1a(const void* data, size_t n, uint64_t h) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

uint64_t fnv1a_str(const std::string& s, uint64_t h) { return fnv1a(s.data(), s.size(), h); }

} // namespace prism::io
