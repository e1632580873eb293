#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "holterisk/errors.hpp"
#include "holterisk/record.hpp"

using namespace holterisk;

namespace {

HolterHeader twelve_lead_header(std::uint64_t samples, double resolution = 1.0,
                                int rate = 1000) {
  HolterHeader h;
  h.lead_names.assign(kStandardLeadNames.begin(), kStandardLeadNames.end());
  h.sampling_rate_hz = rate;
  h.resolution_uv = resolution;
  h.sample_count_per_lead = samples;
  return h;
}

// Little-endian int16 frames, lead-interleaved.
std::vector<std::uint8_t> pack_frames(const std::vector<std::int16_t>& raw) {
  std::vector<std::uint8_t> bytes;
  for (std::int16_t v : raw) {
    bytes.push_back(static_cast<std::uint8_t>(v & 0xff));
    bytes.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
  }
  return bytes;
}

}  // namespace

TEST_CASE("header round trips through text") {
  HolterHeader h = twelve_lead_header(5000, 2.5, 200);
  h.start_time = "2021-06-01T00:00:00";
  const HolterHeader back = parse_holter_header(write_holter_header(h));
  CHECK(back.lead_names == h.lead_names);
  CHECK(back.sampling_rate_hz == 200);
  CHECK(back.resolution_uv == doctest::Approx(2.5));
  CHECK(back.sample_count_per_lead == 5000);
  REQUIRE(back.start_time.has_value());
  CHECK(*back.start_time == "2021-06-01T00:00:00");
}

TEST_CASE("raw units scale by the header resolution") {
  HolterHeader h = twelve_lead_header(2);
  std::vector<std::int16_t> raw(24, 0);
  raw[0] = 0;    // lead I, frame 0
  raw[12] = 100; // lead I, frame 1
  const HolterRecord rec = parse_holter(write_holter_header(h), pack_frames(raw));
  CHECK(rec.samples_uv(0, 0) == doctest::Approx(0.0));
  CHECK(rec.samples_uv(0, 1) == doctest::Approx(100.0));

  h.resolution_uv = 5.0;
  const HolterRecord scaled = parse_holter(write_holter_header(h), pack_frames(raw));
  CHECK(scaled.samples_uv(0, 1) == doctest::Approx(500.0));
}

TEST_CASE("a 24 hour record at 1 kHz declares 86.4 million samples per lead") {
  HolterHeader h = twelve_lead_header(std::uint64_t(24) * 3600 * 1000);
  CHECK(h.sample_count_per_lead == 86400000ull);
  CHECK(h.duration_s() == doctest::Approx(86400.0));
  CHECK(h.expected_data_bytes() == std::size_t(2) * 12 * 86400000ull);
}

TEST_CASE("truncated data is a data-length mismatch") {
  HolterHeader h = twelve_lead_header(3);
  std::vector<std::int16_t> raw(12 * 2, 1);  // one frame short
  try {
    parse_holter(write_holter_header(h), pack_frames(raw));
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("data-length mismatch") != std::string::npos);
  }
}

TEST_CASE("overrange amplitude names the offending lead") {
  HolterHeader h = twelve_lead_header(1);
  HolterRecord rec;
  rec.header = h;
  rec.samples_uv = Eigen::MatrixXd::Zero(12, 1);
  rec.samples_uv(4, 0) = 40000.0;  // beyond int16 at 1 uV resolution
  try {
    write_holter(rec);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("16-bit range") != std::string::npos);
    CHECK(msg.find("4") != std::string::npos);
  }
}

TEST_CASE("empty records are rejected") {
  HolterHeader h = twelve_lead_header(1);
  h.sample_count_per_lead = 0;
  CHECK_THROWS_AS(h.validate(), DataError);
  CHECK_THROWS_AS(parse_holter_header("version=1\nleads=" +
                                      std::string("I,II,III,aVR,aVL,aVF,V1,V2,V3,V4,V5,V6") +
                                      "\nrate_hz=1000\nresolution_uv=1\nsamples=0\n"),
                  ParseError);
}

TEST_CASE("non-12-lead containers are rejected") {
  HolterHeader h = twelve_lead_header(10);
  h.lead_names.pop_back();
  CHECK_THROWS_AS(h.validate(), DataError);
}

TEST_CASE("record round trips bit-exactly through the container") {
  HolterHeader h = twelve_lead_header(7, 0.5);
  HolterRecord rec;
  rec.header = h;
  rec.samples_uv.resize(12, 7);
  for (int l = 0; l < 12; ++l)
    for (int s = 0; s < 7; ++s) rec.samples_uv(l, s) = 0.5 * double(l * 7 + s - 40);
  const auto [htext, bytes] = write_holter(rec);
  const HolterRecord back = parse_holter(htext, bytes);
  CHECK(back.samples_uv == rec.samples_uv);
}

TEST_CASE("chunked file reader reproduces the in-memory parse") {
  namespace fs = std::filesystem;
  fs::create_directories("record_tmp");
  HolterHeader h = twelve_lead_header(1000, 1.0, 500);
  HolterRecord rec;
  rec.header = h;
  rec.samples_uv.resize(12, 1000);
  for (int l = 0; l < 12; ++l)
    for (int s = 0; s < 1000; ++s)
      rec.samples_uv(l, s) = double(((l * 1000 + s) % 200) - 100);

  const std::string path = "record_tmp/r1.hea";
  {
    HolterFileWriter writer(path, h);
    writer.write_chunk(rec.samples_uv.leftCols(333));
    writer.write_chunk(rec.samples_uv.middleCols(333, 667));
    writer.finish();
  }
  HolterFileReader reader(path);
  CHECK(reader.header().sample_count_per_lead == 1000);
  Eigen::MatrixXd chunk;
  Eigen::MatrixXd assembled(12, 1000);
  Eigen::Index at = 0;
  while (Eigen::Index got = reader.read_chunk(chunk, 97)) {
    assembled.middleCols(at, got) = chunk.leftCols(got);
    at += got;
  }
  CHECK(at == 1000);
  CHECK(assembled == rec.samples_uv);
  CHECK(reader.done());
}

TEST_CASE("reader notices a short data file up front") {
  namespace fs = std::filesystem;
  fs::create_directories("record_tmp");
  HolterHeader h = twelve_lead_header(100);
  const std::string path = "record_tmp/short.hea";
  {
    std::ofstream hf(path);
    hf << write_holter_header(h);
    std::ofstream df(default_data_path(path), std::ios::binary);
    std::vector<char> bytes(2 * 12 * 99, 0);
    df.write(bytes.data(), std::streamsize(bytes.size()));
  }
  try {
    HolterFileReader reader(path);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("data-length mismatch") != std::string::npos);
  }
}

TEST_CASE("lead lookup and data path helpers") {
  HolterHeader h = twelve_lead_header(1);
  CHECK(lead_index(h, "II") == 1);
  CHECK(lead_index(h, "V6") == 11);
  CHECK(lead_index(h, "X") == -1);
  CHECK(default_data_path("dir/rec.hea") == "dir/rec.hea.dat");
}
