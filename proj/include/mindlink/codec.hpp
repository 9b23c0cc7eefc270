#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "mindlink/eeg.hpp"
#include "mindlink/errors.hpp"

namespace mindlink {

using Bits = std::vector<std::uint8_t>;

inline constexpr std::string_view kDefaultHeader = "11111110000000";
inline constexpr std::size_t kPayloadBits = 8;

inline Bits parse_bits(std::string_view text) {
  Bits bits;
  bits.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '0' || c == '1') {
      bits.push_back(static_cast<std::uint8_t>(c - '0'));
    } else if (!std::isspace(static_cast<unsigned char>(c))) {
      throw ParameterError("invalid bit character at position " + std::to_string(i));
    }
  }
  return bits;
}

inline std::string bits_to_string(const Bits& bits) {
  std::string s;
  s.reserve(bits.size());
  for (auto b : bits) s.push_back(b ? '1' : '0');
  return s;
}

inline const Bits& default_header() {
  static const Bits header = parse_bits(kDefaultHeader);
  return header;
}

// Header followed by the 8-bit code, most significant bit first.
inline Bits encode_char(char c, const Bits& header = default_header()) {
  const auto code = static_cast<unsigned char>(c);
  if (code > 0x7F) throw EncodingError(0, "character code " + std::to_string(code) + " is not ASCII");
  Bits frame = header;
  for (int bit = 7; bit >= 0; --bit) frame.push_back(static_cast<std::uint8_t>((code >> bit) & 1u));
  return frame;
}

// Frames back to back, optionally separated by `gap_symbols` idle-low symbols.
inline Bits encode_text(std::string_view text, const Bits& header = default_header(),
                        std::size_t gap_symbols = 0) {
  Bits bits;
  bits.reserve(text.size() * (header.size() + kPayloadBits + gap_symbols));
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (i > 0) bits.insert(bits.end(), gap_symbols, 0);
    try {
      const Bits frame = encode_char(text[i], header);
      bits.insert(bits.end(), frame.begin(), frame.end());
    } catch (const EncodingError& e) {
      throw EncodingError(i, "position " + std::to_string(i) + ": " + e.what());
    }
  }
  return bits;
}

// Detector samples taken at `oversample` samples per symbol.
struct SampleStream {
  std::vector<double> samples;
  double sample_rate_hz = 1e7;
  double symbol_rate_hz = 1e6;

  std::size_t oversample() const {
    const double ratio = sample_rate_hz / symbol_rate_hz;
    const auto os = static_cast<std::size_t>(std::llround(ratio));
    if (os == 0 || std::abs(ratio - static_cast<double>(os)) > 1e-9 * ratio) {
      throw ParameterError("sample rate must be a positive integer multiple of the symbol rate");
    }
    return os;
  }
  std::size_t size() const { return samples.size(); }
};

inline double midpoint_threshold(const SampleStream& s) {
  if (s.samples.empty()) return 0.0;
  const auto [lo, hi] = std::minmax_element(s.samples.begin(), s.samples.end());
  return 0.5 * (*lo + *hi);
}

namespace detail {

inline bool header_matches_at(const SampleStream& s, std::size_t pos, const Bits& header,
                              double threshold, std::size_t os) {
  const std::size_t mid = os / 2;
  for (std::size_t k = 0; k < header.size(); ++k) {
    const bool bit = s.samples[pos + k * os + mid] > threshold;
    if (bit != (header[k] != 0)) return false;
  }
  return true;
}

}  // namespace detail

// Sample index of the first symbol boundary at which the header appears, reading the
// middle sample of each symbol. Every sample offset is tried; the contiguous run of matching
// offsets around a true boundary is about one symbol long, and its edges locate the boundary.
inline std::size_t locate_header(const SampleStream& stream, const Bits& header, double threshold,
                                 std::size_t from = 0) {
  if (header.empty()) throw ParameterError("empty header");
  const std::size_t os = stream.oversample();
  const std::size_t span = header.size() * os;
  if (stream.size() < span) throw SyncError("stream shorter than one header");
  const std::size_t last = stream.size() - span;  // highest offset whose reads stay in bounds
  const std::size_t mid = os / 2;
  auto matches = [&](std::size_t pos) {
    return detail::header_matches_at(stream, pos, header, threshold, os);
  };
  for (std::size_t first = from; first <= last; ++first) {
    if (!matches(first)) continue;
    std::size_t a = first;
    while (a > 0 && first - (a - 1) < os && matches(a - 1)) --a;
    std::size_t b = first;
    while (b < last && (b + 1) - a < os && matches(b + 1)) ++b;
    // An unclipped run spans [start - mid, start + (os - mid) - 1].
    const bool short_run = b - a + 1 < os;
    const bool left_clipped = short_run && a == 0;
    const bool right_clipped = short_run && b == last;
    std::size_t start;
    if (left_clipped && !right_clipped) {
      start = b >= os - mid - 1 ? b - (os - mid - 1) : 0;
    } else if (right_clipped && !left_clipped) {
      start = a + mid;
    } else {
      start = (a + b + 1) / 2;
    }
    return std::min(start, last);
  }
  throw SyncError("frame header not found");
}

// Hard decisions from the middle sample of each symbol starting at `start`.
inline Bits slice_symbols(const SampleStream& stream, double threshold, std::size_t start = 0,
                          std::optional<std::size_t> count = std::nullopt) {
  const std::size_t os = stream.oversample();
  const std::size_t mid = os / 2;
  Bits bits;
  for (std::size_t pos = start; pos + mid < stream.size(); pos += os) {
    if (count && bits.size() == *count) break;
    bits.push_back(stream.samples[pos + mid] > threshold ? 1 : 0);
  }
  return bits;
}

struct DecodeOptions {
  // Fixed slicing threshold. When unset, the header search uses the stream midpoint and
  // each payload is sliced at the midpoint of the high and low levels seen in its header.
  std::optional<double> threshold;
};

// Finds successive headers and maps the following 8 symbols to ASCII until no header remains.
inline std::string decode_stream(const SampleStream& stream, const Bits& header = default_header(),
                                 const DecodeOptions& options = {}) {
  if (stream.samples.empty()) return {};
  if (header.empty()) throw ParameterError("empty header");
  const std::size_t os = stream.oversample();
  const std::size_t mid = os / 2;
  const double search_threshold = options.threshold.value_or(midpoint_threshold(stream));
  const std::size_t header_span = header.size() * os;

  std::string text;
  std::size_t from = 0;
  while (from + header_span <= stream.size()) {
    std::size_t start;
    try {
      start = locate_header(stream, header, search_threshold, from);
    } catch (const SyncError&) {
      break;
    }
    double threshold = search_threshold;
    if (!options.threshold) {
      double hi = 0.0;
      double lo = 0.0;
      std::size_t n_hi = 0;
      std::size_t n_lo = 0;
      for (std::size_t k = 0; k < header.size(); ++k) {
        const double v = stream.samples[start + k * os + mid];
        if (header[k]) {
          hi += v;
          ++n_hi;
        } else {
          lo += v;
          ++n_lo;
        }
      }
      if (n_hi > 0 && n_lo > 0) threshold = 0.5 * (hi / static_cast<double>(n_hi) + lo / static_cast<double>(n_lo));
    }
    const std::size_t payload_start = start + header_span;
    const Bits payload = slice_symbols(stream, threshold, payload_start, kPayloadBits);
    if (payload.size() < kPayloadBits) throw TruncationError(payload.size(), text);
    unsigned code = 0;
    for (auto b : payload) code = (code << 1) | b;
    text.push_back(static_cast<char>(code));
    from = payload_start + kPayloadBits * os;
  }
  return text;
}

enum class StreamFormat { csv, f32 };

// CSV `index,amplitude` with a header row, or raw little-endian float32.
inline void save_stream(const SampleStream& s, const std::string& path, StreamFormat format) {
  if (format == StreamFormat::csv) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << "index,amplitude\n";
    for (std::size_t i = 0; i < s.samples.size(); ++i) {
      out << i << ',' << detail::format_double(s.samples[i]) << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  for (double v : s.samples) {
    auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
    unsigned char le[4];
    for (int i = 0; i < 4; ++i) le[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xFFu);
    out.write(reinterpret_cast<const char*>(le), 4);
  }
  if (!out) throw IoError("write failed: " + path);
}

inline SampleStream load_stream(const std::string& path, StreamFormat format,
                                double sample_rate_hz = 1e7, double symbol_rate_hz = 1e6) {
  SampleStream s{{}, sample_rate_hz, symbol_rate_hz};
  if (format == StreamFormat::csv) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      detail::strip_cr(line);
      if (line.empty()) continue;
      if (line_no == 1 && line.rfind("index", 0) == 0) continue;
      const auto fields = detail::split_csv(line);
      if (fields.size() != 2) throw FormatError(line_no, "expected index,amplitude");
      if (detail::parse_index(fields[0], line_no) != s.samples.size()) {
        throw FormatError(line_no, "sample index out of sequence");
      }
      s.samples.push_back(detail::parse_double(fields[1], line_no));
    }
    return s;
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  unsigned char le[4];
  while (in.read(reinterpret_cast<char*>(le), 4)) {
    std::uint32_t bits = 0;
    for (int i = 0; i < 4; ++i) bits |= static_cast<std::uint32_t>(le[i]) << (8 * i);
    s.samples.push_back(static_cast<double>(std::bit_cast<float>(bits)));
  }
  if (in.gcount() != 0) throw FormatError(1, "binary stream length is not a multiple of 4 bytes");
  return s;
}

inline void save_bits(const Bits& bits, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << bits_to_string(bits) << '\n';
  if (!out) throw IoError("write failed: " + path);
}

inline Bits load_bits(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_bits(buf.str());
}

}  // namespace mindlink
