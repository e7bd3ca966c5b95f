#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>

// Little-endian primitive encoding shared by the embedding and model file formats.
namespace qclar::binio {

void write_magic(std::ostream& out, std::string_view magic);
void write_u16(std::ostream& out, std::uint16_t v);
void write_u32(std::ostream& out, std::uint32_t v);
void write_u64(std::ostream& out, std::uint64_t v);
void write_f32(std::ostream& out, float v);
void write_f64(std::ostream& out, double v);
void write_bytes(std::ostream& out, std::string_view bytes);

// Readers throw ValidationError naming `what` on a short read.
bool read_magic(std::istream& in, std::string_view magic);
std::uint16_t read_u16(std::istream& in, std::string_view what);
std::uint32_t read_u32(std::istream& in, std::string_view what);
std::uint64_t read_u64(std::istream& in, std::string_view what);
float read_f32(std::istream& in, std::string_view what);
double read_f64(std::istream& in, std::string_view what);
std::string read_bytes(std::istream& in, std::size_t n, std::string_view what);

}  // namespace qclar::binio
