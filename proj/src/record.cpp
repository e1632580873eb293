#include "holterisk/record.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>

namespace holterisk {

const std::array<const char*, 12> kStandardLeadNames = {
    "I", "II", "III", "aVR", "aVL", "aVF", "V1", "V2", "V3", "V4", "V5", "V6"};

void HolterHeader::validate() const {
  if (format_version != kHolterFormatVersion)
    throw DataError("unsupported header version " + std::to_string(format_version));
  if (lead_names.size() != 12)
    throw DataError("lead count must be 12, got " + std::to_string(lead_names.size()));
  if (sampling_rate_hz <= 0) throw DataError("sampling_rate_hz must be positive");
  if (!(resolution_uv > 0.0)) throw DataError("resolution_uv must be positive");
  if (sample_count_per_lead == 0)
    throw DataError("sample_count_per_lead > 0 violated");
}

void HolterRecord::validate() const {
  header.validate();
  if (std::size_t(samples_uv.rows()) != header.lead_count())
    throw DataError("sample matrix row count does not match lead count");
  if (std::uint64_t(samples_uv.cols()) != header.sample_count_per_lead)
    throw DataError("sample matrix column count does not match sample_count_per_lead");
}

int lead_index(const HolterHeader& header, std::string_view lead) {
  for (std::size_t i = 0; i < header.lead_names.size(); ++i)
    if (header.lead_names[i] == lead) return int(i);
  return -1;
}

namespace {

double parse_double(std::string_view value, std::size_t offset, const char* key) {
  char* end = nullptr;
  std::string tmp(value);
  const double v = std::strtod(tmp.c_str(), &end);
  if (end != tmp.c_str() + tmp.size() || tmp.empty())
    throw ParseError(std::string("invalid numeric value for ") + key, offset);
  return v;
}

std::uint64_t parse_u64(std::string_view value, std::size_t offset, const char* key) {
  std::uint64_t v = 0;
  const auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || p != value.data() + value.size())
    throw ParseError(std::string("invalid integer value for ") + key, offset);
  return v;
}

std::vector<std::string> split_csv_field(std::string_view s) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    const std::size_t comma = s.find(',', pos);
    if (comma == std::string_view::npos) {
      out.emplace_back(s.substr(pos));
      break;
    }
    out.emplace_back(s.substr(pos, comma - pos));
    pos = comma + 1;
  }
  return out;
}

}  // namespace

HolterHeader parse_holter_header(std::string_view text) {
  HolterHeader h;
  bool saw_version = false, saw_leads = false, saw_rate = false, saw_res = false,
       saw_samples = false;
  std::size_t line_start = 0;
  while (line_start < text.size()) {
    std::size_t line_end = text.find('\n', line_start);
    if (line_end == std::string_view::npos) line_end = text.size();
    std::string_view line = text.substr(line_start, line_end - line_start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty()) {
      const std::size_t eq = line.find('=');
      if (eq == std::string_view::npos)
        throw ParseError("header line missing '='", line_start);
      const std::string_view key = line.substr(0, eq);
      const std::string_view value = line.substr(eq + 1);
      const std::size_t value_offset = line_start + eq + 1;
      if (key == "version") {
        h.format_version = int(parse_u64(value, value_offset, "version"));
        if (h.format_version != kHolterFormatVersion)
          throw ParseError("unsupported version " + std::string(value), value_offset);
        saw_version = true;
      } else if (key == "leads") {
        h.lead_names = split_csv_field(value);
        if (h.lead_names.size() != 12)
          throw ParseError("leads must list 12 names", value_offset);
        saw_leads = true;
      } else if (key == "rate_hz") {
        h.sampling_rate_hz = int(parse_u64(value, value_offset, "rate_hz"));
        saw_rate = true;
      } else if (key == "resolution_uv") {
        h.resolution_uv = parse_double(value, value_offset, "resolution_uv");
        if (!(h.resolution_uv > 0.0))
          throw ParseError("resolution_uv must be positive", value_offset);
        saw_res = true;
      } else if (key == "samples") {
        h.sample_count_per_lead = parse_u64(value, value_offset, "samples");
        saw_samples = true;
      } else if (key == "start") {
        if (value.size() < 10 || !std::isdigit(static_cast<unsigned char>(value[0])))
          throw ParseError("start must be an ISO-8601 timestamp", value_offset);
        h.start_time = std::string(value);
      } else {
        throw ParseError("unknown header key '" + std::string(key) + "'", line_start);
      }
    }
    line_start = line_end + 1;
  }
  if (!saw_version) throw ParseError("missing header key 'version'", text.size());
  if (!saw_leads) throw ParseError("missing header key 'leads'", text.size());
  if (!saw_rate) throw ParseError("missing header key 'rate_hz'", text.size());
  if (!saw_res) throw ParseError("missing header key 'resolution_uv'", text.size());
  if (!saw_samples) throw ParseError("missing header key 'samples'", text.size());
  if (h.sample_count_per_lead == 0)
    throw ParseError("sample_count_per_lead > 0 violated", text.size());
  if (h.sampling_rate_hz <= 0) throw ParseError("rate_hz must be positive", text.size());
  return h;
}

std::string write_holter_header(const HolterHeader& header) {
  header.validate();
  char res[40];
  std::snprintf(res, sizeof res, "%.17g", header.resolution_uv);
  std::string out;
  out += "version=" + std::to_string(header.format_version) + "\n";
  out += "leads=";
  for (std::size_t i = 0; i < header.lead_names.size(); ++i) {
    if (i) out += ',';
    out += header.lead_names[i];
  }
  out += "\nrate_hz=" + std::to_string(header.sampling_rate_hz) + "\n";
  out += std::string("resolution_uv=") + res + "\n";
  out += "samples=" + std::to_string(header.sample_count_per_lead) + "\n";
  if (header.start_time) out += "start=" + *header.start_time + "\n";
  return out;
}

HolterRecord parse_holter(std::string_view header_text,
                          std::span<const std::uint8_t> data) {
  HolterRecord rec;
  rec.header = parse_holter_header(header_text);
  const std::size_t expected = rec.header.expected_data_bytes();
  if (data.size() != expected)
    throw ParseError("data-length mismatch: expected " + std::to_string(expected) +
                         " bytes, got " + std::to_string(data.size()),
                     std::min(expected, data.size()));
  const auto leads = Eigen::Index(rec.header.lead_count());
  const auto frames = Eigen::Index(rec.header.sample_count_per_lead);
  rec.samples_uv.resize(leads, frames);
  const double res = rec.header.resolution_uv;
  const std::uint8_t* p = data.data();
  for (Eigen::Index f = 0; f < frames; ++f) {
    for (Eigen::Index l = 0; l < leads; ++l) {
      const std::int16_t raw = std::int16_t(std::uint16_t(p[0]) | (std::uint16_t(p[1]) << 8));
      rec.samples_uv(l, f) = double(raw) * res;
      p += 2;
    }
  }
  return rec;
}

std::pair<std::string, std::vector<std::uint8_t>> write_holter(const HolterRecord& record) {
  record.validate();
  std::string header_text = write_holter_header(record.header);
  const auto leads = record.samples_uv.rows();
  const auto frames = record.samples_uv.cols();
  const double res = record.header.resolution_uv;
  std::vector<std::uint8_t> data;
  data.resize(std::size_t(2) * leads * frames);
  std::uint8_t* p = data.data();
  for (Eigen::Index f = 0; f < frames; ++f) {
    for (Eigen::Index l = 0; l < leads; ++l) {
      const double scaled = record.samples_uv(l, f) / res;
      const long long raw = std::llround(scaled);
      if (raw < -32768 || raw > 32767)
        throw DataError("amplitude exceeds 16-bit range after scaling on lead " +
                        record.header.lead_names[std::size_t(l)] + " (index " +
                        std::to_string(l) + ")");
      const auto u = std::uint16_t(std::int16_t(raw));
      p[0] = std::uint8_t(u & 0xff);
      p[1] = std::uint8_t(u >> 8);
      p += 2;
    }
  }
  return {std::move(header_text), std::move(data)};
}

std::string default_data_path(const std::string& header_path) {
  return header_path + ".dat";
}

HolterFileReader::HolterFileReader(const std::string& header_path, std::string data_path) {
  std::ifstream hf(header_path, std::ios::binary);
  if (!hf) throw DataError("cannot open header file " + header_path);
  std::string text((std::istreambuf_iterator<char>(hf)), std::istreambuf_iterator<char>());
  header_ = parse_holter_header(text);
  if (data_path.empty()) data_path = default_data_path(header_path);
  data_.open(data_path, std::ios::binary);
  if (!data_) throw DataError("cannot open data file " + data_path);
  data_.seekg(0, std::ios::end);
  const auto actual = std::uint64_t(data_.tellg());
  const auto expected = std::uint64_t(header_.expected_data_bytes());
  if (actual != expected)
    throw ParseError("data-length mismatch: expected " + std::to_string(expected) +
                         " bytes, got " + std::to_string(actual),
                     std::size_t(std::min(actual, expected)));
  data_.seekg(0, std::ios::beg);
}

Eigen::Index HolterFileReader::read_chunk(Eigen::MatrixXd& out, Eigen::Index max_frames) {
  const auto leads = Eigen::Index(header_.lead_count());
  const std::uint64_t remaining = header_.sample_count_per_lead - frames_read_;
  const auto frames = Eigen::Index(std::min<std::uint64_t>(remaining, std::uint64_t(max_frames)));
  if (frames == 0) return 0;
  // Size the output to exactly what was read; a trailing partial chunk must
  // not leave stale columns from the previous pass visible to the caller.
  if (out.rows() != leads || out.cols() != frames) out.resize(leads, frames);
  const std::size_t nbytes = std::size_t(2) * leads * frames;
  buffer_.resize(nbytes);
  data_.read(reinterpret_cast<char*>(buffer_.data()), std::streamsize(nbytes));
  if (std::size_t(data_.gcount()) != nbytes)
    throw ParseError("short read from data file",
                     std::size_t(2 * leads * frames_read_) + std::size_t(data_.gcount()));
  const double res = header_.resolution_uv;
  const std::uint8_t* p = buffer_.data();
  for (Eigen::Index f = 0; f < frames; ++f)
    for (Eigen::Index l = 0; l < leads; ++l) {
      const std::int16_t raw = std::int16_t(std::uint16_t(p[0]) | (std::uint16_t(p[1]) << 8));
      out(l, f) = double(raw) * res;
      p += 2;
    }
  frames_read_ += std::uint64_t(frames);
  return frames;
}

HolterFileWriter::HolterFileWriter(const std::string& header_path, const HolterHeader& header,
                                   std::string data_path)
    : header_(header) {
  header_.validate();
  std::ofstream hf(header_path, std::ios::binary | std::ios::trunc);
  if (!hf) throw DataError("cannot create header file " + header_path);
  hf << write_holter_header(header_);
  if (data_path.empty()) data_path = default_data_path(header_path);
  data_.open(data_path, std::ios::binary | std::ios::trunc);
  if (!data_) throw DataError("cannot create data file " + data_path);
}

void HolterFileWriter::write_chunk(const Eigen::Ref<const Eigen::MatrixXd>& samples_uv) {
  if (finished_) throw DataError("write_chunk after finish");
  const auto leads = Eigen::Index(header_.lead_count());
  if (samples_uv.rows() != leads) throw DataError("chunk row count does not match lead count");
  const auto frames = samples_uv.cols();
  if (frames_written_ + std::uint64_t(frames) > header_.sample_count_per_lead)
    throw DataError("writing more frames than the header declares");
  const double res = header_.resolution_uv;
  buffer_.resize(std::size_t(2) * leads * frames);
  std::uint8_t* p = buffer_.data();
  for (Eigen::Index f = 0; f < frames; ++f)
    for (Eigen::Index l = 0; l < leads; ++l) {
      const long long raw = std::llround(samples_uv(l, f) / res);
      if (raw < -32768 || raw > 32767)
        throw DataError("amplitude exceeds 16-bit range after scaling on lead " +
                        header_.lead_names[std::size_t(l)]);
      const auto u = std::uint16_t(std::int16_t(raw));
      p[0] = std::uint8_t(u & 0xff);
      p[1] = std::uint8_t(u >> 8);
      p += 2;
    }
  data_.write(reinterpret_cast<const char*>(buffer_.data()), std::streamsize(buffer_.size()));
  if (!data_) throw DataError("write failure on data file");
  frames_written_ += std::uint64_t(frames);
}

void HolterFileWriter::finish() {
  if (finished_) return;
  if (frames_written_ != header_.sample_count_per_lead)
    throw DataError("frame count mismatch at finish: wrote " + std::to_string(frames_written_) +
                    ", header declares " + std::to_string(header_.sample_count_per_lead));
  data_.flush();
  if (!data_) throw DataError("flush failure on data file");
  finished_ = true;
}

}  // namespace holterisk
