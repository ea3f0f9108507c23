#pragma once
#include <string>
#include <vector>

#include "odt/calendar.hpp"
#include "odt/cluster.hpp"
#include "odt/core.hpp"
#include "odt/csv.hpp"

namespace odt {

// Maps the logical trip-log fields to CSV column names. origin/dest/date are
// required; the riders column is optional and defaults to 1 when absent.
struct TripSchema {
  std::string origin_da = "origin_da";
  std::string dest_da = "dest_da";
  std::string date = "date";
  std::string riders = "riders";
};

struct RejectRow {
  int line = 0;  // 1-based file line (header = 1)
  std::string raw;
  std::string reason;
};

struct TripParseResult {
  std::vector<TripRecord> records;
  std::vector<RejectRow> rejects;
};

/// Rows with unparseable dates, unknown DA ids, bad riders values, or (when a
/// calendar is given) dates outside the service window go to `rejects`.
/// Throws on a missing required column.
TripParseResult parse_trips(const CsvTable& t, const TripSchema& schema, const ZoneRegistry& zones,
                            const ServiceCalendar* calendar = nullptr);

struct CensusParseResult {
  ZoneRegistry registry;
  std::vector<RejectRow> rejects;
  std::vector<std::string> warnings;  // duplicate da_id last-wins notes
};

CensusParseResult parse_census(const CsvTable& t);

struct ProductionRow {
  std::string da_id;
  Date date;
  TripContext context;
  int count = 0;  // >= 1; zero-demand pairs are never materialized
};

struct DistributionRow {
  std::string origin_da;
  std::string dest_da;
  Date date;
  TripContext context;
  int count = 0;
};

/// Trips grouped by (origin_da, date); output ordered by (date, da_id).
std::vector<ProductionRow> aggregate_production(const std::vector<TripRecord>& trips,
                                                const ServiceCalendar& cal);

/// Trips grouped by (origin_da, dest_da, date); ordered by (date, origin, dest).
/// Intra-zone pairs are retained unless exclude_intrazonal is set.
std::vector<DistributionRow> aggregate_distribution(const std::vector<TripRecord>& trips,
                                                    const ServiceCalendar& cal, bool exclude_intrazonal = false);

/// 8 columns: [density, income, hh_size, pct_male, pct_working, hours, day, month].
LabeledDataset build_production_dataset(const std::vector<ProductionRow>& rows, const ZoneRegistry& census,
                                        const DemandLabeler& labeler);

/// 13 columns: 5 origin demographics (o_*), 5 destination demographics (d_*), 3 context.
LabeledDataset build_distribution_dataset(const std::vector<DistributionRow>& rows, const ZoneRegistry& census,
                                          const DemandLabeler& labeler);

CsvTable rejects_to_csv(const std::vector<RejectRow>& rejects);

}  // namespace odt
