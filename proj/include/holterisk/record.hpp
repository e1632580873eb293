#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "holterisk/errors.hpp"

namespace holterisk {

inline constexpr int kHolterFormatVersion = 1;

// Conventional 12-lead order: limb, augmented, precordial.
extern const std::array<const char*, 12> kStandardLeadNames;

// Text header of the Holter container, one key=value per line.
// Keys: version, leads, rate_hz, resolution_uv, samples, start (optional).
struct HolterHeader {
  int format_version = kHolterFormatVersion;
  std::vector<std::string> lead_names;
  int sampling_rate_hz = 1000;
  double resolution_uv = 1.0;  // microvolt per least-significant unit
  std::uint64_t sample_count_per_lead = 0;
  std::optional<std::string> start_time;  // ISO-8601

  double duration_s() const {
    return double(sample_count_per_lead) / double(sampling_rate_hz);
  }
  std::size_t lead_count() const { return lead_names.size(); }
  std::size_t expected_data_bytes() const {
    return std::size_t(2) * lead_count() * sample_count_per_lead;
  }
  // Throws DataError if any structural invariant is violated.
  void validate() const;
};

// In-memory record: one row per lead, one column per frame, values in uV.
// Intended for short records and tests; full 24 h recordings are consumed
// chunk-wise through HolterFileReader instead.
struct HolterRecord {
  HolterHeader header;
  Eigen::MatrixXd samples_uv;

  void validate() const;
};

// Index of a lead by name, -1 when absent.
int lead_index(const HolterHeader& header, std::string_view lead);

HolterHeader parse_holter_header(std::string_view text);
std::string write_holter_header(const HolterHeader& header);

// Parses header text plus lead-interleaved little-endian int16 data.
// Samples are scaled to uV via resolution_uv. Errors carry byte offsets.
HolterRecord parse_holter(std::string_view header_text,
                          std::span<const std::uint8_t> data);

// Inverse of parse_holter; round-trips bit-exactly for records whose
// amplitudes are representable at the header resolution.
std::pair<std::string, std::vector<std::uint8_t>> write_holter(const HolterRecord& record);

// Derives the data-file path from a header path (appends ".dat").
std::string default_data_path(const std::string& header_path);

// Chunk-wise reader over the on-disk container; working memory is bounded by
// the chunk size regardless of record length.
class HolterFileReader {
 public:
  explicit HolterFileReader(const std::string& header_path, std::string data_path = "");

  const HolterHeader& header() const { return header_; }

  // Fills `out` with the next chunk and returns the number of frames read
  // (0 at end of record). `out` is resized to exactly lead_count x frames,
  // so a trailing partial chunk never exposes stale columns.
  Eigen::Index read_chunk(Eigen::MatrixXd& out, Eigen::Index max_frames);

  std::uint64_t frames_read() const { return frames_read_; }
  bool done() const { return frames_read_ >= header_.sample_count_per_lead; }

 private:
  HolterHeader header_;
  std::ifstream data_;
  std::vector<std::uint8_t> buffer_;
  std::uint64_t frames_read_ = 0;
};

// Chunk-wise writer; finish() verifies the frame count promised by the header.
class HolterFileWriter {
 public:
  HolterFileWriter(const std::string& header_path, const HolterHeader& header,
                   std::string data_path = "");

  void write_chunk(const Eigen::Ref<const Eigen::MatrixXd>& samples_uv);
  void finish();

  std::uint64_t frames_written() const { return frames_written_; }

 private:
  HolterHeader header_;
  std::ofstream data_;
  std::vector<std::uint8_t> buffer_;
  std::uint64_t frames_written_ = 0;
  bool finished_ = false;
};

}  // namespace holterisk
