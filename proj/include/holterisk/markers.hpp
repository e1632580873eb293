#pragma once

#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace holterisk {

// One marker measurement. `support` counts the raw material behind the value
// (beats, anchors, tachograms, windows, ...); `note` carries the reason when
// the marker is invalid.
struct MarkerValue {
  std::string name;
  double value = std::numeric_limits<double>::quiet_NaN();
  std::string unit;
  bool valid = false;
  double support = 0.0;
  std::string note;
};

struct MarkerVector {
  std::vector<MarkerValue> values;

  const MarkerValue* find(std::string_view name) const;
  // Value of a valid marker; nullopt when absent or flagged invalid.
  std::optional<double> value_of(std::string_view name) const;
  void set(MarkerValue v);  // replaces an existing entry with the same name
};

struct MarkerDefinition {
  const char* name;
  const char* unit;
};

// The full reported battery, in output order.
const std::vector<MarkerDefinition>& marker_battery();

// Ensures every battery marker is present; absent ones are added as invalid
// with the given note.
void fill_battery(MarkerVector* markers, const std::string& note);

// CSV with header record_id,name,value,unit,valid,support,note.
// Values are formatted round-trip exactly; invalid values are left empty.
std::string markers_to_csv(std::string_view record_id, const MarkerVector& markers);
std::string markers_csv_header();
std::string markers_to_csv_rows(std::string_view record_id, const MarkerVector& markers);

// Single-record JSON object {"record_id": ..., "markers": [{...}, ...]}.
std::string markers_to_json(std::string_view record_id, const MarkerVector& markers);

// Parses one or more records from marker CSV; returns (record_id, markers)
// pairs in file order.
std::vector<std::pair<std::string, MarkerVector>> markers_from_csv(std::string_view text);

}  // namespace holterisk
