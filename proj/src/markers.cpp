#include "holterisk/markers.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "holterisk/errors.hpp"

namespace holterisk {

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Quote a CSV field only when needed.
std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

}  // namespace

const MarkerValue* MarkerVector::find(std::string_view name) const {
  for (const MarkerValue& v : values)
    if (v.name == name) return &v;
  return nullptr;
}

std::optional<double> MarkerVector::value_of(std::string_view name) const {
  const MarkerValue* v = find(name);
  if (v == nullptr || !v->valid) return std::nullopt;
  return v->value;
}

void MarkerVector::set(MarkerValue v) {
  for (MarkerValue& existing : values) {
    if (existing.name == v.name) {
      existing = std::move(v);
      return;
    }
  }
  values.push_back(std::move(v));
}

const std::vector<MarkerDefinition>& marker_battery() {
  static const std::vector<MarkerDefinition> battery = {
      {"pvc_count", "count"},
      {"nsvt_count", "episodes"},
      {"nsvt_mean_rate_bpm", "bpm"},
      {"sustained_vt_count", "episodes"},
      {"sdnn_ms", "ms"},
      {"rmssd_ms", "ms"},
      {"hrv_vlf_ms2", "ms^2"},
      {"hrv_lf_ms2", "ms^2"},
      {"hrv_hf_ms2", "ms^2"},
      {"hrv_lf_hf_ratio", "ratio"},
      {"turbulence_onset_percent", "%"},
      {"turbulence_slope_ms_per_beat", "ms/beat"},
      {"deceleration_capacity_ms", "ms"},
      {"acceleration_capacity_ms", "ms"},
      {"twa_uv", "uV"},
      {"prd_deg2", "deg^2"},
      {"stv_qt_ms", "ms"},
      {"tpte_ms", "ms"},
      {"jpoint_uv", "uV"},
      {"early_repolarization", "0/1"},
      {"fractionation_index", "count"},
      {"tcrt", "cosine"},
      {"twr", "fraction"},
      {"tmd_deg", "deg"},
      {"tld", "deg"},
  };
  return battery;
}

void fill_battery(MarkerVector* markers, const std::string& note) {
  for (const MarkerDefinition& def : marker_battery()) {
    if (markers->find(def.name) != nullptr) continue;
    MarkerValue v;
    v.name = def.name;
    v.unit = def.unit;
    v.valid = false;
    v.note = note;
    markers->values.push_back(std::move(v));
  }
}

std::string markers_csv_header() {
  return "record_id,name,value,unit,valid,support,note\n";
}

std::string markers_to_csv_rows(std::string_view record_id, const MarkerVector& markers) {
  std::string out;
  for (const MarkerValue& v : markers.values) {
    out += csv_field(record_id);
    out += ',';
    out += csv_field(v.name);
    out += ',';
    if (v.valid && std::isfinite(v.value)) out += format_double(v.value);
    out += ',';
    out += csv_field(v.unit);
    out += ',';
    out += v.valid ? '1' : '0';
    out += ',';
    out += format_double(v.support);
    out += ',';
    out += csv_field(v.note);
    out += '\n';
  }
  return out;
}

std::string markers_to_csv(std::string_view record_id, const MarkerVector& markers) {
  return markers_csv_header() + markers_to_csv_rows(record_id, markers);
}

std::string markers_to_json(std::string_view record_id, const MarkerVector& markers) {
  std::string out = "{\n  \"record_id\": \"";
  out += record_id;
  out += "\",\n  \"markers\": [\n";
  for (size_t i = 0; i < markers.values.size(); ++i) {
    const MarkerValue& v = markers.values[i];
    out += "    {\"name\": \"" + v.name + "\", \"value\": ";
    out += (v.valid && std::isfinite(v.value)) ? format_double(v.value) : "null";
    out += ", \"unit\": \"" + v.unit + "\", \"valid\": ";
    out += v.valid ? "true" : "false";
    out += ", \"support\": " + format_double(v.support);
    out += ", \"note\": \"" + v.note + "\"}";
    if (i + 1 < markers.values.size()) out += ',';
    out += '\n';
  }
  out += "  ]\n}\n";
  return out;
}

std::vector<std::pair<std::string, MarkerVector>> markers_from_csv(std::string_view text) {
  std::vector<std::pair<std::string, MarkerVector>> records;
  std::istringstream in{std::string(text)};
  std::string line;
  long row = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != "record_id,name,value,unit,valid,support,note")
        throw ParseError("unexpected marker CSV header", 0);
      header_seen = true;
      continue;
    }
    std::vector<std::string> f = split_csv_line(line);
    if (f.size() != 7)
      throw ParseError("marker CSV row " + std::to_string(row) + ": expected 7 fields, got " +
                           std::to_string(f.size()),
                       0);
    if (records.empty() || records.back().first != f[0])
      records.emplace_back(f[0], MarkerVector{});
    MarkerValue v;
    v.name = f[1];
    v.unit = f[3];
    v.valid = f[4] == "1" || f[4] == "true";
    try {
      v.value = f[2].empty() ? std::numeric_limits<double>::quiet_NaN() : std::stod(f[2]);
      v.support = f[5].empty() ? 0.0 : std::stod(f[5]);
    } catch (const std::exception&) {
      throw ParseError("marker CSV row " + std::to_string(row) + ": bad numeric field", 0);
    }
    v.note = f[6];
    records.back().second.values.push_back(std::move(v));
  }
  if (!header_seen) throw ParseError("empty marker CSV", 0);
  return records;
}

}  // namespace holterisk
