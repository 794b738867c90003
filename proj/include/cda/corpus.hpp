#pragma once
#include <filesystem>
#include <string>
#include <vector>

#include "cda/csv.hpp"
#include "cda/types.hpp"

namespace cda {

enum class Provenance { Synthetic, Ingested };

std::string_view to_string(Provenance p);

struct Corpus {
  std::vector<MarketLog> markets;
  Provenance provenance = Provenance::Synthetic;
  int schema_version = kSchemaVersion;
};

extern const std::vector<std::string> kEventsHeader;
extern const std::vector<std::string> kDealsHeader;
extern const std::vector<std::string> kValuationsHeader;
extern const std::vector<std::string> kTreatmentsHeader;

struct CorpusPaths {
  std::filesystem::path events;
  std::filesystem::path deals;
  std::filesystem::path valuations;  // empty when reservation values are unknown
  std::filesystem::path treatments;

  // events.csv, deals.csv, valuations.csv (when present), treatments.csv.
  static CorpusPaths in(const std::filesystem::path& dir);
};

struct IngestOptions {
  bool strict = false;  // any skipped row is an error
};

struct IngestReport {
  std::size_t skipped_rows = 0;
  std::vector<std::string> notes;  // one line per skipped row
};

// One MarketLog per market id, in order of first appearance in events.csv.
// Within a market rounds ascend and rows keep file order, which must be
// nondecreasing in time within each round. Blank lines and valuation or
// treatment rows for markets without events are skipped and counted.
// Throws SchemaError and IntegrityError naming the offending line.
Corpus ingest(const CorpusPaths& paths, const IngestOptions& options = {}, IngestReport* report = nullptr);

// Writes the four files into `dir` (valuations only when some market has a
// profile). Ingesting the output and exporting again reproduces it byte for
// byte.
void export_corpus(const Corpus& corpus, const std::filesystem::path& dir, const FileMeta& meta);

}  // namespace cda
