#pragma once
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cda/features.hpp"
#include "cda/models.hpp"

namespace cda {

struct SimulationSettings {
  int markets = 20;
  int buyers = 5;
  int sellers = 5;
  int rounds = 10;
  int actions_per_round = 100;
  int value_min = 1;
  int value_max = 200;
  // Adds large-market treatments (8 buyers and 8 sellers) to the rotation.
  bool include_large = false;
};

struct RunConfig {
  std::uint64_t seed = 0;
  int n_splits = 50;
  std::vector<ModelKind> models{ModelKind::EMH,   ModelKind::CEMH,          ModelKind::OBRLM,
                                ModelKind::GBT,   ModelKind::TreatmentMean, ModelKind::BookMidpoint};
  std::vector<TargetKind> targets{TargetKind::AE, TargetKind::CEP};
  GbtConfig gbt_cep = GbtConfig::default_for(TargetKind::CEP);
  GbtConfig gbt_ae = GbtConfig::default_for(TargetKind::AE);
  Cadence cadence = Cadence::PerAction;
  PoolPolicy pool = PoolPolicy::PerTraderLatest;
  FeatureMask feature_mask;
  CemhGrouping cemh_grouping = CemhGrouping::TreatmentNRound;
  std::string output_dir = "out";
  SimulationSettings simulation;

  // Throws ConfigError on any inconsistent field.
  void validate() const;
  // Hex FNV-1a 64 of the canonical JSON without the output directory.
  std::string hash() const;
  std::string to_json() const;  // canonical, pretty-printed
  static RunConfig from_json(const std::string& text);
  static RunConfig load(const std::filesystem::path& path);

  FitOptions fit_options(TargetKind target) const;
};

std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace cda
