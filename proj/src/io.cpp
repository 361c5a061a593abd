#include "hydroldp/io.hpp"

#include <fmt/format.h>

#include <bit>
#include <cstring>

#include "hydroldp/errors.hpp"

namespace hydroldp {

std::string fmt_double(double v) { return fmt::format("{:.17g}", v); }

std::string fnv1a_hex(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return fmt::format("{:016x}", h);
}

namespace binio {

static_assert(std::endian::native == std::endian::little, "snapshot I/O assumes a little-endian host");

Writer::Writer(const std::string& path) : path_(path), out_(path, std::ios::binary) {
    if (!out_) throw IoError("cannot open " + path + " for writing");
}

void Writer::bytes(const void* p, std::size_t n) {
    out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
    if (!out_) throw IoError("write failed: " + path_);
}

void Writer::i32(std::int32_t v) { bytes(&v, sizeof v); }
void Writer::f64(double v) { bytes(&v, sizeof v); }

void Writer::grid(const GridSpec& g) {
    i32(g.nx);
    i32(g.ny);
    i32(g.nz);
    f64(g.h);
    f64(g.lx);
    f64(g.ly);
}

void Writer::field_values(const Field& f) { bytes(f.values().data(), f.size() * sizeof(double)); }

void Writer::close() {
    out_.close();
    if (!out_) throw IoError("close failed: " + path_);
}

Reader::Reader(const std::string& path) : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw IoError("cannot open " + path);
}

void Reader::bytes(void* p, std::size_t n) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (!in_) throw IoError("truncated file: " + path_);
}

std::uint8_t Reader::u8() {
    std::uint8_t v;
    bytes(&v, 1);
    return v;
}

std::int32_t Reader::i32() {
    std::int32_t v;
    bytes(&v, sizeof v);
    return v;
}

double Reader::f64() {
    double v;
    bytes(&v, sizeof v);
    return v;
}

GridSpec Reader::grid() {
    GridSpec g;
    g.nx = i32();
    g.ny = i32();
    g.nz = i32();
    g.h = f64();
    g.lx = f64();
    g.ly = f64();
    try {
        g.validate();
    } catch (const InvalidGrid& e) {
        throw IoError(path_ + ": bad grid header: " + e.what());
    }
    return g;
}

void Reader::expect_magic(std::string_view magic) {
    std::string got(magic.size(), '\0');
    bytes(got.data(), got.size());
    if (got != magic) throw IoError(path_ + ": bad magic, expected " + std::string(magic));
}

void Reader::field_values(Field& f) { bytes(f.values().data(), f.size() * sizeof(double)); }

void Reader::expect_end() {
    if (in_.peek() != std::char_traits<char>::eof()) throw IoError(path_ + ": trailing bytes");
}

}  // namespace binio

void write_snapshot(const std::string& path, const Field& f) {
    binio::Writer w(path);
    w.bytes("HLDP1", 5);
    w.grid(f.grid());
    w.i32(f.components());
    w.u8(static_cast<std::uint8_t>(f.bc().kind));
    w.f64(f.bc().alpha);
    w.field_values(f);
    w.close();
}

Field read_snapshot(const std::string& path) {
    binio::Reader r(path);
    r.expect_magic("HLDP1");
    GridSpec g = r.grid();
    const int comps = r.i32();
    if (comps < 1 || comps > 64) throw IoError(path + ": bad component count");
    const std::uint8_t tag = r.u8();
    if (tag > 2) throw IoError(path + ": bad boundary tag");
    BoundaryCondition bc{static_cast<BcKind>(tag), r.f64()};
    Field f(g, comps, bc);
    r.field_values(f);
    r.expect_end();
    return f;
}

}  // namespace hydroldp
