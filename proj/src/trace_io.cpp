#include "xps/trace_io.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <ostream>

#include <fmt/format.h>

#include "xps/errors.hpp"

namespace xps {

namespace {

template <typename U>
void put_le(std::ostream& out, U v) {
  std::array<char, sizeof(U)> bytes{};
  for (std::size_t i = 0; i < sizeof(U); ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(bytes.data(), bytes.size());
}

template <typename U>
U get_le(std::istream& in) {
  std::array<unsigned char, sizeof(U)> bytes{};
  in.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  if (!in) throw Error("truncated trace file");
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(bytes[i]) << (8 * i);
  return v;
}

}  // namespace

void write_trace(std::ostream& out, const BeatTrace& trace) {
  if (trace.samples.size() > UINT32_MAX) throw Error("trace too long for the dump format");
  out.write(kTraceMagic, 4);
  put_le(out, std::bit_cast<std::uint64_t>(trace.sample_rate));
  put_le(out, static_cast<std::uint32_t>(trace.samples.size()));
  for (double v : trace.samples) put_le(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  if (!out) throw Error("failed to write trace");
}

void write_trace(const std::filesystem::path& path, const BeatTrace& trace) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string());
  write_trace(out, trace);
}

BeatTrace read_trace(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kTraceMagic, 4) != 0) throw Error("not a trace file (bad magic)");
  BeatTrace trace;
  trace.sample_rate = std::bit_cast<double>(get_le<std::uint64_t>(in));
  const auto n = get_le<std::uint32_t>(in);
  trace.samples.resize(n);
  for (auto& v : trace.samples) v = std::bit_cast<float>(get_le<std::uint32_t>(in));
  trace.slot_samples = trace.samples.size();
  return trace;
}

BeatTrace read_trace(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return read_trace(in);
}

void write_demod_csv(std::ostream& out, const DemodSeries& series) {
  out << "time_ns,phase_rad,amplitude\n";
  for (std::size_t j = 0; j < series.times.size(); ++j) {
    out << fmt::format("{:.6f},{:.17g},{:.17g}\n", series.times[j] * 1e9, series.phase[j], series.amplitude[j]);
  }
}

}  // namespace xps
