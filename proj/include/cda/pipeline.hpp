#pragma once
#include <filesystem>
#include <string>
#include <vector>

#include "cda/config.hpp"
#include "cda/corpus.hpp"
#include "cda/eval.hpp"

namespace cda {

// Stages of the command-line workflow. Each reads the artifacts of earlier
// stages below `root` and writes its own; missing inputs raise
// MissingArtifact naming the stage to run first.
struct StageContext {
  RunConfig config;
  std::filesystem::path root;
  int jobs = 1;
  bool strict = false;

  FileMeta meta() const;
};

// Synthetic ZI corpus. Treatments rotate over feedback x price rule (and
// size when large markets are included), using at most markets/2 of them so
// every treatment gets at least two markets.
Corpus simulate_corpus(const RunConfig& config);

void stage_simulate(const StageContext& ctx);
IngestReport stage_ingest(const StageContext& ctx, const CorpusPaths& paths);
void stage_featurize(const StageContext& ctx);
void stage_fit(const StageContext& ctx);
void stage_predict(const StageContext& ctx);
void stage_evaluate(const StageContext& ctx);
void stage_ablate(const StageContext& ctx, const std::vector<AblationKind>& kinds);
void stage_report(const StageContext& ctx);

// Core models compared pairwise (EMH, CEMH, OB-RLM, GBT) among those present.
std::vector<std::string> comparison_models(std::span<const PredictionRecord> records, TargetKind target);

namespace paths {
inline std::filesystem::path corpus(const std::filesystem::path& root) { return root / "corpus"; }
inline std::filesystem::path features(const std::filesystem::path& root) { return root / "features.csv"; }
inline std::filesystem::path splits(const std::filesystem::path& root) { return root / "splits.csv"; }
inline std::filesystem::path models(const std::filesystem::path& root) { return root / "models"; }
inline std::filesystem::path predictions(const std::filesystem::path& root) { return root / "predictions.csv"; }
inline std::filesystem::path evaluation(const std::filesystem::path& root) { return root / "evaluation"; }
inline std::filesystem::path ablation(const std::filesystem::path& root) { return root / "ablation"; }
inline std::filesystem::path report(const std::filesystem::path& root) { return root / "report"; }
}  // namespace paths

}  // namespace cda
