#pragma once
#include <filesystem>
#include <vector>

#include "cda/csv.hpp"
#include "cda/eval.hpp"
#include "cda/features.hpp"

namespace cda {

// Feature rows, prediction records and split plans as CSV. Every table reads
// back to the values it was written from.
std::vector<std::string> feature_header();
void write_features(std::span<const FeatureRow> rows, const std::filesystem::path& path, const FileMeta& meta);
std::vector<FeatureRow> read_features(const std::filesystem::path& path);

std::vector<std::string> prediction_header();
void write_predictions(std::span<const PredictionRecord> records, const std::filesystem::path& path,
                       const FileMeta& meta);
std::vector<PredictionRecord> read_predictions(const std::filesystem::path& path);

void write_splits(std::span<const SplitPlan> plans, std::span<const MarketRef> markets,
                  const std::filesystem::path& path, const FileMeta& meta);
std::vector<SplitPlan> read_splits(const std::filesystem::path& path);

}  // namespace cda
