#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "hydroldp/field.hpp"

namespace hydroldp {

// Binary snapshot, little-endian:
//   "HLDP1" | i32 nx ny nz | f64 h lx ly | i32 components | u8 bc | f64 alpha | f64 values[]
void write_snapshot(const std::string& path, const Field& f);
Field read_snapshot(const std::string& path);

// Round-trip float formatting used by every text output.
std::string fmt_double(double v);
std::string fnv1a_hex(std::string_view text);

namespace binio {

class Writer {
public:
    explicit Writer(const std::string& path);
    void bytes(const void* p, std::size_t n);
    void u8(std::uint8_t v) { bytes(&v, 1); }
    void i32(std::int32_t v);
    void f64(double v);
    void grid(const GridSpec& g);
    void field_values(const Field& f);
    void close();

private:
    std::string path_;
    std::ofstream out_;
};

class Reader {
public:
    explicit Reader(const std::string& path);
    void bytes(void* p, std::size_t n);
    std::uint8_t u8();
    std::int32_t i32();
    double f64();
    GridSpec grid();
    void expect_magic(std::string_view magic);
    void field_values(Field& f);
    void expect_end();

private:
    std::string path_;
    std::ifstream in_;
};

}  // namespace binio
}  // namespace hydroldp
