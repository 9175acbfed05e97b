#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>

// Little-endian scalar I/O. Reads leave the stream in a failed state on
// short input; callers check the stream.
namespace evver::binio {

template <class U>
inline U to_little(U v) {
  if constexpr (std::endian::native == std::endian::big) {
    U out = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) out = static_cast<U>((out << 8) | ((v >> (8 * i)) & 0xFF));
    return out;
  } else {
    return v;
  }
}

template <class U>
inline void write_uint(std::ostream& out, U v) {
  v = to_little(v);
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class U>
inline U read_uint(std::istream& in) {
  U v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  return to_little(v);
}

inline void write_u32(std::ostream& out, std::uint32_t v) { write_uint(out, v); }
inline void write_u64(std::ostream& out, std::uint64_t v) { write_uint(out, v); }
inline void write_f32(std::ostream& out, float v) { write_uint(out, std::bit_cast<std::uint32_t>(v)); }
inline void write_f64(std::ostream& out, double v) { write_uint(out, std::bit_cast<std::uint64_t>(v)); }

inline std::uint32_t read_u32(std::istream& in) { return read_uint<std::uint32_t>(in); }
inline std::uint64_t read_u64(std::istream& in) { return read_uint<std::uint64_t>(in); }
inline float read_f32(std::istream& in) { return std::bit_cast<float>(read_uint<std::uint32_t>(in)); }
inline double read_f64(std::istream& in) { return std::bit_cast<double>(read_uint<std::uint64_t>(in)); }

}  // namespace evver::binio
