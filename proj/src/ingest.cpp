#include "odt/ingest.hpp"

#include <array>
#include <cmath>
#include <cstdlib>
#include <map>
#include <stdexcept>
#include <tuple>

namespace odt {

namespace {

std::string join_raw(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += csv_escape(fields[i]);
  }
  return out;
}

bool parse_number(const std::string& s, double* out) {
  if (s.empty()) return false;
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || !std::isfinite(v)) return false;
  *out = v;
  return true;
}

bool parse_int(const std::string& s, long* out) {
  if (s.empty()) return false;
  char* end = nullptr;
  long v = std::strtol(s.c_str(), &end, 10);
  if (end != s.c_str() + s.size()) return false;
  *out = v;
  return true;
}

int require_col(const CsvTable& t, const std::string& name, const char* what) {
  int c = t.col(name);
  if (c < 0) throw std::invalid_argument(std::string(what) + " is missing required column '" + name + "'");
  return c;
}

}  // namespace

TripParseResult parse_trips(const CsvTable& t, const TripSchema& schema, const ZoneRegistry& zones,
                            const ServiceCalendar* calendar) {
  const int co = require_col(t, schema.origin_da, "trips CSV");
  const int cd = require_col(t, schema.dest_da, "trips CSV");
  const int ct = require_col(t, schema.date, "trips CSV");
  const int cr = t.col(schema.riders);  // optional

  TripParseResult out;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& row = t.rows[i];
    const int line = static_cast<int>(i) + 2;
    auto reject = [&](const std::string& reason) { out.rejects.push_back({line, join_raw(row), reason}); };
    auto field = [&](int c) -> const std::string& {
      static const std::string empty;
      return c >= 0 && c < static_cast<int>(row.size()) ? row[static_cast<std::size_t>(c)] : empty;
    };

    auto date = parse_date(field(ct));
    if (!date) {
      reject("unparseable date '" + field(ct) + "'");
      continue;
    }
    if (calendar && !calendar->contains(*date)) {
      reject("date " + format_date(*date) + " outside the service window");
      continue;
    }
    if (!zones.find(field(co))) {
      reject("unknown origin DA '" + field(co) + "'");
      continue;
    }
    if (!zones.find(field(cd))) {
      reject("unknown destination DA '" + field(cd) + "'");
      continue;
    }
    int riders = 1;
    if (cr >= 0 && !field(cr).empty()) {
      long v = 0;
      if (!parse_int(field(cr), &v) || v < 1) {
        reject("riders '" + field(cr) + "' is not a positive integer");
        continue;
      }
      riders = static_cast<int>(v);
    }
    out.records.push_back({field(co), field(cd), *date, riders});
  }
  return out;
}

CensusParseResult parse_census(const CsvTable& t) {
  const int cid = require_col(t, "da_id", "census CSV");
  const std::array<const char*, 5> cols = {"population_density", "median_income", "avg_household_size",
                                           "pct_male", "pct_working_age"};
  std::array<int, 5> ci{};
  for (std::size_t k = 0; k < cols.size(); ++k) ci[k] = require_col(t, cols[k], "census CSV");

  CensusParseResult out;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& row = t.rows[i];
    const int line = static_cast<int>(i) + 2;
    auto field = [&](int c) -> const std::string& {
      static const std::string empty;
      return c >= 0 && c < static_cast<int>(row.size()) ? row[static_cast<std::size_t>(c)] : empty;
    };
    if (field(cid).empty()) {
      out.rejects.push_back({line, join_raw(row), "empty da_id"});
      continue;
    }
    std::array<double, 5> v{};
    std::string bad;
    for (std::size_t k = 0; k < cols.size(); ++k) {
      if (!parse_number(field(ci[k]), &v[k])) {
        bad = std::string(cols[k]) + " '" + field(ci[k]) + "' is not numeric";
        break;
      }
      if (k <= 2 && v[k] < 0.0) {
        bad = std::string(cols[k]) + " must be >= 0";
        break;
      }
      if (k >= 3 && (v[k] < 0.0 || v[k] > 100.0)) {
        bad = std::string(cols[k]) + " outside [0, 100]";
        break;
      }
    }
    if (!bad.empty()) {
      out.rejects.push_back({line, join_raw(row), bad});
      continue;
    }
    ZoneProfile p{field(cid), v[0], v[1], v[2], v[3], v[4]};
    if (out.registry.upsert(p))
      out.warnings.push_back("duplicate da_id '" + p.da_id + "' at line " + std::to_string(line) +
                             "; keeping the later row");
  }
  return out;
}

std::vector<ProductionRow> aggregate_production(const std::vector<TripRecord>& trips,
                                                const ServiceCalendar& cal) {
  std::map<std::tuple<Date, std::string>, int> groups;
  for (const auto& tr : trips) groups[{tr.date, tr.origin_da}] += 1;
  std::vector<ProductionRow> out;
  out.reserve(groups.size());
  for (const auto& [key, count] : groups) {
    const auto& [date, da] = key;
    out.push_back({da, date, cal.context(date), count});
  }
  return out;
}

std::vector<DistributionRow> aggregate_distribution(const std::vector<TripRecord>& trips,
                                                    const ServiceCalendar& cal, bool exclude_intrazonal) {
  std::map<std::tuple<Date, std::string, std::string>, int> groups;
  for (const auto& tr : trips) {
    if (exclude_intrazonal && tr.origin_da == tr.dest_da) continue;
    groups[{tr.date, tr.origin_da, tr.dest_da}] += 1;
  }
  std::vector<DistributionRow> out;
  out.reserve(groups.size());
  for (const auto& [key, count] : groups) {
    const auto& [date, o, d] = key;
    out.push_back({o, d, date, cal.context(date), count});
  }
  return out;
}

namespace {

const ZoneProfile& profile_or_throw(const ZoneRegistry& census, const std::string& da_id) {
  const ZoneProfile* p = census.find(da_id);
  if (!p) throw std::runtime_error("no census profile for DA '" + da_id + "'");
  return *p;
}

std::vector<FeatureMeta> context_meta() {
  return {{"hours_of_operation", FeatureKind::binary},
          {"day_of_week", FeatureKind::discrete},
          {"month_of_year", FeatureKind::discrete}};
}

std::vector<FeatureMeta> demographic_meta(const std::string& prefix) {
  std::vector<FeatureMeta> m;
  for (const char* name :
       {"population_density", "median_income", "avg_household_size", "pct_male", "pct_working_age"})
    m.push_back({prefix + name, FeatureKind::continuous});
  return m;
}

}  // namespace

LabeledDataset build_production_dataset(const std::vector<ProductionRow>& rows, const ZoneRegistry& census,
                                        const DemandLabeler& labeler) {
  LabeledDataset d;
  d.meta = demographic_meta("");
  for (auto& m : context_meta()) d.meta.push_back(m);
  d.X.resize(static_cast<Eigen::Index>(rows.size()), 8);
  d.y.resize(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    const auto& p = profile_or_throw(census, r.da_id);
    auto ri = static_cast<Eigen::Index>(i);
    d.X.row(ri) << p.population_density, p.median_income, p.avg_household_size, p.pct_male, p.pct_working_age,
        static_cast<double>(r.context.hours_of_operation), static_cast<double>(r.context.day_of_week),
        static_cast<double>(r.context.month_of_year);
    d.y[i] = label(labeler, r.count);
  }
  return d;
}

LabeledDataset build_distribution_dataset(const std::vector<DistributionRow>& rows, const ZoneRegistry& census,
                                          const DemandLabeler& labeler) {
  LabeledDataset d;
  d.meta = demographic_meta("o_");
  for (auto& m : demographic_meta("d_")) d.meta.push_back(m);
  for (auto& m : context_meta()) d.meta.push_back(m);
  d.X.resize(static_cast<Eigen::Index>(rows.size()), 13);
  d.y.resize(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    const auto& o = profile_or_throw(census, r.origin_da);
    const auto& t = profile_or_throw(census, r.dest_da);
    auto ri = static_cast<Eigen::Index>(i);
    d.X.row(ri) << o.population_density, o.median_income, o.avg_household_size, o.pct_male, o.pct_working_age,
        t.population_density, t.median_income, t.avg_household_size, t.pct_male, t.pct_working_age,
        static_cast<double>(r.context.hours_of_operation), static_cast<double>(r.context.day_of_week),
        static_cast<double>(r.context.month_of_year);
    d.y[i] = label(labeler, r.count);
  }
  return d;
}

CsvTable rejects_to_csv(const std::vector<RejectRow>& rejects) {
  CsvTable t;
  t.header = {"line", "row", "reason"};
  for (const auto& r : rejects) t.rows.push_back({std::to_string(r.line), r.raw, r.reason});
  return t;
}

}  // namespace odt
