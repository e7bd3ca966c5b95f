#include "qclar/binary_io.hpp"

#include <array>
#include <bit>
#include <istream>
#include <ostream>

#include "qclar/errors.hpp"

namespace qclar::binio {
namespace {

template <typename U>
void put_le(std::ostream& out, U v) {
  std::array<char, sizeof(U)> buf{};
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    buf[i] = static_cast<char>((v >> (8 * i)) & 0xFFU);
  }
  out.write(buf.data(), buf.size());
}

template <typename U>
U get_le(std::istream& in, std::string_view what) {
  std::array<unsigned char, sizeof(U)> buf{};
  in.read(reinterpret_cast<char*>(buf.data()), buf.size());
  if (in.gcount() != static_cast<std::streamsize>(buf.size())) {
    throw ValidationError("unexpected end of file while reading " + std::string(what));
  }
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    v |= static_cast<U>(buf[i]) << (8 * i);
  }
  return v;
}

}  // namespace

void write_magic(std::ostream& out, std::string_view magic) { write_bytes(out, magic); }
void write_u16(std::ostream& out, std::uint16_t v) { put_le(out, v); }
void write_u32(std::ostream& out, std::uint32_t v) { put_le(out, v); }
void write_u64(std::ostream& out, std::uint64_t v) { put_le(out, v); }
void write_f32(std::ostream& out, float v) { put_le(out, std::bit_cast<std::uint32_t>(v)); }
void write_f64(std::ostream& out, double v) { put_le(out, std::bit_cast<std::uint64_t>(v)); }

void write_bytes(std::ostream& out, std::string_view bytes) {
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

bool read_magic(std::istream& in, std::string_view magic) {
  std::string got(magic.size(), '\0');
  in.read(got.data(), static_cast<std::streamsize>(got.size()));
  return in.gcount() == static_cast<std::streamsize>(magic.size()) && got == magic;
}

std::uint16_t read_u16(std::istream& in, std::string_view what) { return get_le<std::uint16_t>(in, what); }
std::uint32_t read_u32(std::istream& in, std::string_view what) { return get_le<std::uint32_t>(in, what); }
std::uint64_t read_u64(std::istream& in, std::string_view what) { return get_le<std::uint64_t>(in, what); }

float read_f32(std::istream& in, std::string_view what) {
  return std::bit_cast<float>(get_le<std::uint32_t>(in, what));
}

double read_f64(std::istream& in, std::string_view what) {
  return std::bit_cast<double>(get_le<std::uint64_t>(in, what));
}

std::string read_bytes(std::istream& in, std::size_t n, std::string_view what) {
  std::string s(n, '\0');
  in.read(s.data(), static_cast<std::streamsize>(n));
  if (in.gcount() != static_cast<std::streamsize>(n)) {
    throw ValidationError("unexpected end of file while reading " + std::string(what));
  }
  return s;
}

}  // namespace qclar::binio
