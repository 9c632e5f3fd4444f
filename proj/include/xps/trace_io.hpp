#pragma once

// Debug dumps of probe traces.
//
// Binary layout (little-endian): 4-byte magic "XPST", float64 sample rate in
// Hz, uint32 sample count, then the samples as float32.

#include <filesystem>
#include <iosfwd>

#include "xps/interferometry.hpp"

namespace xps {

inline constexpr char kTraceMagic[4] = {'X', 'P', 'S', 'T'};
inline constexpr std::size_t kTraceHeaderBytes = 16;

void write_trace(std::ostream& out, const BeatTrace& trace);
void write_trace(const std::filesystem::path& path, const BeatTrace& trace);
/// Samples are widened back from float32; metadata is not stored.
BeatTrace read_trace(std::istream& in);
BeatTrace read_trace(const std::filesystem::path& path);

/// time_ns,phase_rad,amplitude
void write_demod_csv(std::ostream& out, const DemodSeries& series);

}  // namespace xps
