#pragma once

// Gridded forecast/observation fields, long-format CSV interchange, the
// cross-system missing-data rule, and flattening to PairSet.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "fcverify/errors.hpp"
#include "fcverify/format.hpp"
#include "fcverify/pairs.hpp"

namespace fcv {

enum class ValueKind { probability, binary };

inline const char* to_string(ValueKind k) {
  return k == ValueKind::probability ? "probability" : "binary";
}

// A (time, y, x) field stored row-major. Coordinates are opaque integer
// labels, sorted ascending along each axis. Masked cells hold NaN.
struct GridField {
  std::string name;
  ValueKind kind = ValueKind::probability;
  std::vector<std::int64_t> times;
  std::vector<std::int64_t> ys;
  std::vector<std::int64_t> xs;
  std::vector<double> values;
  std::vector<std::uint8_t> mask;  // 1 = missing
  std::optional<int> lead_day;

  static constexpr std::array<std::string_view, 3> dims{"time", "y", "x"};

  [[nodiscard]] Shape3 shape() const { return {times.size(), ys.size(), xs.size()}; }
  [[nodiscard]] std::size_t size() const { return values.size(); }
  [[nodiscard]] bool missing(std::size_t i) const { return mask[i] != 0; }
  [[nodiscard]] std::size_t missing_count() const {
    return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
  }
  void set_missing(std::size_t i) {
    mask[i] = 1;
    values[i] = std::numeric_limits<double>::quiet_NaN();
  }

  // All cells missing on the given coordinate axes.
  static GridField empty_like(std::string name, ValueKind kind, std::vector<std::int64_t> times,
                              std::vector<std::int64_t> ys, std::vector<std::int64_t> xs) {
    GridField f;
    f.name = std::move(name);
    f.kind = kind;
    f.times = std::move(times);
    f.ys = std::move(ys);
    f.xs = std::move(xs);
    const std::size_t n = f.times.size() * f.ys.size() * f.xs.size();
    f.values.assign(n, std::numeric_limits<double>::quiet_NaN());
    f.mask.assign(n, 1);
    return f;
  }
};

// One parsed data row of a long CSV.
struct LongRow {
  std::int64_t time = 0;
  std::int64_t y = 0;
  std::int64_t x = 0;
  std::optional<int> lead_day;
  std::optional<double> value;
  std::size_t line = 0;
};

inline constexpr std::array<std::string_view, 5> kLongCsvColumns{"time", "y", "x", "lead_day",
                                                                 "value"};

namespace detail {

inline void check_value(double v, ValueKind kind, std::size_t line, const std::string& source) {
  if (kind == ValueKind::probability) {
    if (!is_probability(v)) {
      throw ValidationError(source + ": row " + std::to_string(line) + ": value " +
                            format_double(v) + " outside [0,1]");
    }
  } else if (v != 0.0 && v != 1.0) {
    throw ValidationError(source + ": row " + std::to_string(line) + ": value " +
                          format_double(v) + " is not binary (0 or 1)");
  }
}

inline void check_header(std::string_view line, const std::string& source) {
  auto cols = split(line, ',');
  for (std::size_t i = 0; i < kLongCsvColumns.size(); ++i) {
    if (i >= cols.size()) {
      throw FormatError(source + ": header is missing column '" +
                        std::string(kLongCsvColumns[i]) + "'");
    }
    if (trim(cols[i]) != kLongCsvColumns[i]) {
      throw FormatError(source + ": header column " + std::to_string(i + 1) + " is '" +
                        std::string(trim(cols[i])) + "', expected '" +
                        std::string(kLongCsvColumns[i]) + "'");
    }
  }
  if (cols.size() > kLongCsvColumns.size()) {
    throw FormatError(source + ": unexpected header column '" +
                      std::string(trim(cols[kLongCsvColumns.size()])) + "'");
  }
}

inline std::vector<std::int64_t> sorted_unique(std::vector<std::int64_t> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

inline std::size_t label_index(const std::vector<std::int64_t>& labels, std::int64_t v) {
  auto it = std::lower_bound(labels.begin(), labels.end(), v);
  if (it == labels.end() || *it != v) {
    throw AlignmentError("coordinate label " + std::to_string(v) + " not on the grid");
  }
  return static_cast<std::size_t>(it - labels.begin());
}

}  // namespace detail

// Parses long-format CSV rows from a stream. `source` is used in messages.
inline std::vector<LongRow> read_long_rows(std::istream& in, ValueKind kind,
                                           const std::string& source = "<stream>") {
  std::string line;
  if (!std::getline(in, line)) throw FormatError(source + ": empty file, header missing");
  detail::check_header(trim(line), source);

  std::vector<LongRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view sv = trim(line);
    if (sv.empty()) continue;
    auto cols = split(sv, ',');
    if (cols.size() != kLongCsvColumns.size()) {
      throw FormatError(source + ": row " + std::to_string(lineno) + " has " +
                        std::to_string(cols.size()) + " fields, expected 5");
    }
    LongRow row;
    row.line = lineno;
    const std::array<std::int64_t*, 3> coords{&row.time, &row.y, &row.x};
    for (std::size_t c = 0; c < 3; ++c) {
      auto v = parse_int(trim(cols[c]));
      if (!v) {
        throw FormatError(source + ": row " + std::to_string(lineno) + ": column '" +
                          std::string(kLongCsvColumns[c]) + "' is not an integer");
      }
      *coords[c] = *v;
    }
    if (auto ld = trim(cols[3]); !ld.empty()) {
      auto v = parse_int(ld);
      if (!v || *v < 1) {
        throw FormatError(source + ": row " + std::to_string(lineno) +
                          ": column 'lead_day' must be an integer >= 1");
      }
      row.lead_day = static_cast<int>(*v);
    }
    if (auto val = trim(cols[4]); !val.empty()) {
      auto v = parse_double(val);
      if (!v || std::isnan(*v)) {
        throw FormatError(source + ": row " + std::to_string(lineno) +
                          ": column 'value' is not a decimal number");
      }
      detail::check_value(*v, kind, lineno, source);
      row.value = *v;
    }
    rows.push_back(row);
  }
  return rows;
}

inline std::vector<LongRow> read_long_rows(const std::filesystem::path& path, ValueKind kind) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return read_long_rows(in, kind, path.string());
}

// Places rows on the given coordinate axes. Rows must fall on the axes;
// cells without a row or with an empty value are masked.
inline GridField grid_from_rows(const std::vector<LongRow>& rows, std::string name, ValueKind kind,
                                std::vector<std::int64_t> times, std::vector<std::int64_t> ys,
                                std::vector<std::int64_t> xs) {
  GridField f = GridField::empty_like(std::move(name), kind, std::move(times), std::move(ys),
                                      std::move(xs));
  const Shape3 shape = f.shape();
  std::vector<std::uint8_t> seen(f.size(), 0);
  for (const auto& r : rows) {
    const std::size_t i =
        shape.flat(detail::label_index(f.times, r.time), detail::label_index(f.ys, r.y),
                   detail::label_index(f.xs, r.x));
    if (seen[i]) {
      throw FormatError(f.name + ": row " + std::to_string(r.line) + " duplicates cell (" +
                        std::to_string(r.time) + "," + std::to_string(r.y) + "," +
                        std::to_string(r.x) + ")");
    }
    seen[i] = 1;
    if (r.value) {
      f.values[i] = *r.value;
      f.mask[i] = 0;
    }
  }
  return f;
}

// Loads a single-lead-day long CSV; axes are the distinct coordinates present.
inline GridField load_long_csv(std::istream& in, ValueKind kind,
                               const std::string& source = "<stream>") {
  auto rows = read_long_rows(in, kind, source);
  std::vector<std::int64_t> ts, ys, xs;
  std::set<int> leads;
  for (const auto& r : rows) {
    ts.push_back(r.time);
    ys.push_back(r.y);
    xs.push_back(r.x);
    if (r.lead_day) leads.insert(*r.lead_day);
  }
  if (leads.size() > 1) {
    throw FormatError(source + ": file holds " + std::to_string(leads.size()) +
                      " lead days; load it through a manifest");
  }
  GridField f = grid_from_rows(rows, source, kind, detail::sorted_unique(ts),
                               detail::sorted_unique(ys), detail::sorted_unique(xs));
  if (!leads.empty()) f.lead_day = *leads.begin();
  return f;
}

inline GridField load_long_csv(const std::filesystem::path& path, ValueKind kind) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  GridField f = load_long_csv(in, kind, path.string());
  f.name = path.stem().string();
  return f;
}

// Every cell is written, masked cells with an empty value, so reloading
// restores both values and mask.
inline void write_long_csv(const GridField& f, std::ostream& out) {
  out << "time,y,x,lead_day,value\n";
  const Shape3 s = f.shape();
  const std::string lead = f.lead_day ? std::to_string(*f.lead_day) : std::string{};
  for (std::size_t t = 0; t < s.time; ++t) {
    for (std::size_t iy = 0; iy < s.y; ++iy) {
      for (std::size_t ix = 0; ix < s.x; ++ix) {
        const std::size_t i = s.flat(t, iy, ix);
        out << f.times[t] << ',' << f.ys[iy] << ',' << f.xs[ix] << ',' << lead << ',';
        if (!f.missing(i)) out << format_double(f.values[i]);
        out << '\n';
      }
    }
  }
}

inline void write_long_csv(const GridField& f, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  write_long_csv(f, out);
}

// Throws AlignmentError naming every axis on which the two fields differ.
inline void require_same_grid(const GridField& a, const GridField& b) {
  std::vector<std::string> bad;
  if (a.times != b.times) bad.emplace_back("time");
  if (a.ys != b.ys) bad.emplace_back("y");
  if (a.xs != b.xs) bad.emplace_back("x");
  if (!bad.empty()) {
    std::string msg = "fields '" + a.name + "' and '" + b.name + "' differ on axes:";
    for (const auto& ax : bad) msg += " " + ax;
    throw AlignmentError(msg);
  }
}

// Applies the union of all input masks to every field.
inline std::vector<GridField> align_missing(std::vector<GridField> fields) {
  if (fields.empty()) return fields;
  for (std::size_t k = 1; k < fields.size(); ++k) require_same_grid(fields.front(), fields[k]);
  std::vector<std::uint8_t> any(fields.front().size(), 0);
  for (const auto& f : fields) {
    for (std::size_t i = 0; i < any.size(); ++i) any[i] |= f.mask[i];
  }
  for (auto& f : fields) {
    for (std::size_t i = 0; i < any.size(); ++i) {
      if (any[i]) f.set_missing(i);
    }
  }
  return fields;
}

// Pairs for every cell present in both fields, time-major then y then x.
inline PairSet flatten_pairs(const GridField& forecast, const GridField& observation) {
  require_same_grid(forecast, observation);
  const Shape3 s = forecast.shape();
  std::vector<double> xs;
  std::vector<std::uint8_t> ys;
  std::vector<std::int64_t> ti, ci;
  for (std::size_t t = 0; t < s.time; ++t) {
    for (std::size_t c = 0; c < s.cells(); ++c) {
      const std::size_t i = t * s.cells() + c;
      if (forecast.missing(i) || observation.missing(i)) continue;
      xs.push_back(forecast.values[i]);
      ys.push_back(static_cast<std::uint8_t>(observation.values[i] != 0.0));
      ti.push_back(static_cast<std::int64_t>(t));
      ci.push_back(static_cast<std::int64_t>(c));
    }
  }
  if (xs.empty()) {
    throw EmptyDataError("no jointly non-missing cells between '" + forecast.name + "' and '" +
                         observation.name + "'");
  }
  return PairSet(std::move(xs), std::move(ys), std::move(ti), std::move(ci), s);
}

// Rounds non-missing probabilities to whole percent.
inline void round_to_percent(GridField& f) {
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (!f.missing(i)) f.values[i] = std::round(f.values[i] * 100.0) / 100.0;
  }
}

// ---------------------------------------------------------------------------
// Manifests

struct SystemEntry {
  std::string name;
  std::filesystem::path path;
  std::vector<int> lead_days;
};

struct DatasetManifest {
  std::vector<SystemEntry> systems;
  std::filesystem::path observation;
  std::optional<std::filesystem::path> region_mask;
  std::optional<std::filesystem::path> reference;
};

// Relative paths are resolved against `base_dir`.
inline DatasetManifest parse_manifest(const nlohmann::json& j,
                                      const std::filesystem::path& base_dir = {}) {
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_relative() ? base_dir / path : path;
  };
  try {
    DatasetManifest m;
    if (!j.contains("systems") || !j.at("systems").is_array() || j.at("systems").empty()) {
      throw ValidationError("manifest needs a non-empty 'systems' array");
    }
    if (!j.contains("observation") || !j.at("observation").is_string()) {
      throw ValidationError("manifest needs exactly one 'observation' path");
    }
    std::set<std::string> names;
    for (const auto& s : j.at("systems")) {
      SystemEntry e;
      e.name = s.at("name").get<std::string>();
      e.path = resolve(s.at("path").get<std::string>());
      if (s.contains("lead_days")) e.lead_days = s.at("lead_days").get<std::vector<int>>();
      if (e.lead_days.empty()) e.lead_days = {1};
      for (int ld : e.lead_days) {
        if (ld < 1) throw ValidationError("system '" + e.name + "': lead days must be >= 1");
      }
      if (!names.insert(e.name).second) {
        throw ValidationError("duplicate system name '" + e.name + "'");
      }
      m.systems.push_back(std::move(e));
    }
    m.observation = resolve(j.at("observation").get<std::string>());
    if (j.contains("region_mask") && !j.at("region_mask").is_null()) {
      m.region_mask = resolve(j.at("region_mask").get<std::string>());
    }
    if (j.contains("reference") && !j.at("reference").is_null()) {
      m.reference = resolve(j.at("reference").get<std::string>());
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed manifest: ") + e.what());
  }
}

inline DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("manifest " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_manifest(j, path.parent_path());
}

// Which fields share one missing-data union.
enum class MissingPolicy {
  joint,         // every field of every system and lead day, observation, reference, region
  per_lead_day,  // one union per lead day (systems at that lead, observation, reference, region)
};

struct SystemFields {
  std::string name;
  std::map<int, GridField> by_lead;
};

// Loaded and aligned fields. Observation and reference are keyed by lead day
// because under MissingPolicy::per_lead_day their masks differ between leads.
struct Dataset {
  std::vector<SystemFields> systems;
  std::map<int, GridField> observation;
  std::map<int, GridField> reference;

  [[nodiscard]] const SystemFields& system(const std::string& name) const {
    for (const auto& s : systems) {
      if (s.name == name) return s;
    }
    throw ValidationError("unknown system '" + name + "'");
  }

  [[nodiscard]] PairSet pairs(const std::string& system_name, int lead_day) const {
    const auto& s = system(system_name);
    auto it = s.by_lead.find(lead_day);
    if (it == s.by_lead.end()) {
      throw ValidationError("system '" + system_name + "' has no lead day " +
                            std::to_string(lead_day));
    }
    return flatten_pairs(it->second, observation.at(lead_day));
  }
};

struct LoadOptions {
  MissingPolicy policy = MissingPolicy::joint;
  bool round_percent = false;
};

inline Dataset load_dataset(const DatasetManifest& m, const LoadOptions& opt = {}) {
  struct Source {
    std::string name;
    std::vector<LongRow> rows;
  };
  std::vector<Source> system_rows;
  std::vector<std::int64_t> ts, ys, xs;
  auto collect = [&](const std::vector<LongRow>& rows) {
    for (const auto& r : rows) {
      ts.push_back(r.time);
      ys.push_back(r.y);
      xs.push_back(r.x);
    }
  };
  for (const auto& s : m.systems) {
    system_rows.push_back({s.name, read_long_rows(s.path, ValueKind::probability)});
    collect(system_rows.back().rows);
  }
  auto obs_rows = read_long_rows(m.observation, ValueKind::binary);
  collect(obs_rows);
  std::optional<std::vector<LongRow>> ref_rows;
  if (m.reference) {
    ref_rows = read_long_rows(*m.reference, ValueKind::probability);
    collect(*ref_rows);
  }
  const auto times = detail::sorted_unique(ts);
  const auto yl = detail::sorted_unique(ys);
  const auto xl = detail::sorted_unique(xs);

  std::set<int> all_leads;
  Dataset ds;
  for (std::size_t k = 0; k < m.systems.size(); ++k) {
    const auto& entry = m.systems[k];
    SystemFields sf{entry.name, {}};
    std::map<int, std::vector<LongRow>> grouped;
    for (const auto& r : system_rows[k].rows) {
      int lead = 0;
      if (r.lead_day) {
        lead = *r.lead_day;
      } else if (entry.lead_days.size() == 1) {
        lead = entry.lead_days.front();
      } else {
        throw FormatError(entry.path.string() + ": row " + std::to_string(r.line) +
                          " has no lead_day but the system lists several");
      }
      grouped[lead].push_back(r);
    }
    for (int lead : entry.lead_days) {
      auto it = grouped.find(lead);
      if (it == grouped.end()) {
        throw DataError("system '" + entry.name + "' has no rows for lead day " +
                        std::to_string(lead));
      }
      GridField f = grid_from_rows(it->second, entry.name, ValueKind::probability, times, yl, xl);
      f.lead_day = lead;
      if (opt.round_percent) round_to_percent(f);
      sf.by_lead.emplace(lead, std::move(f));
      all_leads.insert(lead);
    }
    ds.systems.push_back(std::move(sf));
  }

  // Observations are valid-time fields; their lead_day column is ignored.
  for (auto& r : obs_rows) r.lead_day.reset();
  GridField obs = grid_from_rows(obs_rows, "observation", ValueKind::binary, times, yl, xl);
  std::optional<GridField> ref;
  if (ref_rows) {
    for (auto& r : *ref_rows) r.lead_day.reset();
    ref = grid_from_rows(*ref_rows, "reference", ValueKind::probability, times, yl, xl);
  }
  std::optional<GridField> region;
  if (m.region_mask) {
    // A (y, x) cell is inside the region iff any of its rows has value 1.
    auto rows = read_long_rows(*m.region_mask, ValueKind::binary);
    region = GridField::empty_like("region", ValueKind::binary, times, yl, xl);
    std::vector<std::uint8_t> inside(yl.size() * xl.size(), 0);
    for (const auto& r : rows) {
      auto iy = std::lower_bound(yl.begin(), yl.end(), r.y);
      auto ix = std::lower_bound(xl.begin(), xl.end(), r.x);
      if (iy == yl.end() || *iy != r.y || ix == xl.end() || *ix != r.x) continue;
      if (r.value && *r.value == 1.0) {
        inside[static_cast<std::size_t>(iy - yl.begin()) * xl.size() +
               static_cast<std::size_t>(ix - xl.begin())] = 1;
      }
    }
    const Shape3 s = region->shape();
    for (std::size_t t = 0; t < s.time; ++t) {
      for (std::size_t c = 0; c < s.cells(); ++c) {
        if (inside[c]) {
          region->values[t * s.cells() + c] = 1.0;
          region->mask[t * s.cells() + c] = 0;
        }
      }
    }
  }

  auto union_of = [&](const std::vector<const GridField*>& group) {
    std::vector<std::uint8_t> any(obs.size(), 0);
    for (const auto* f : group) {
      for (std::size_t i = 0; i < any.size(); ++i) any[i] |= f->mask[i];
    }
    return any;
  };
  auto apply = [](GridField& f, const std::vector<std::uint8_t>& any) {
    for (std::size_t i = 0; i < any.size(); ++i) {
      if (any[i]) f.set_missing(i);
    }
  };
  std::vector<const GridField*> shared{&obs};
  if (ref) shared.push_back(&*ref);
  if (region) shared.push_back(&*region);

  if (opt.policy == MissingPolicy::joint) {
    auto group = shared;
    for (const auto& s : ds.systems) {
      for (const auto& [lead, f] : s.by_lead) group.push_back(&f);
    }
    const auto any = union_of(group);
    for (auto& s : ds.systems) {
      for (auto& [lead, f] : s.by_lead) apply(f, any);
    }
    for (int lead : all_leads) {
      GridField o = obs;
      o.lead_day = lead;
      apply(o, any);
      ds.observation.emplace(lead, std::move(o));
      if (ref) {
        GridField r = *ref;
        r.lead_day = lead;
        apply(r, any);
        ds.reference.emplace(lead, std::move(r));
      }
    }
  } else {
    for (int lead : all_leads) {
      auto group = shared;
      for (const auto& s : ds.systems) {
        if (auto it = s.by_lead.find(lead); it != s.by_lead.end()) group.push_back(&it->second);
      }
      const auto any = union_of(group);
      for (auto& s : ds.systems) {
        if (auto it = s.by_lead.find(lead); it != s.by_lead.end()) apply(it->second, any);
      }
      GridField o = obs;
      o.lead_day = lead;
      apply(o, any);
      ds.observation.emplace(lead, std::move(o));
      if (ref) {
        GridField r = *ref;
        r.lead_day = lead;
        apply(r, any);
        ds.reference.emplace(lead, std::move(r));
      }
    }
  }
  return ds;
}

}  // namespace fcv
