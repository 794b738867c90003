#include <CLI11.hpp>
#include <cstdlib>
#include <iostream>
#include <optional>

#include "cda/errors.hpp"
#include "cda/pipeline.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kDataError = 2;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Continuous double auction efficiency toolkit"};
  app.require_subcommand(1);
  app.fallthrough();

  std::optional<std::uint64_t> seed;
  std::optional<int> splits;
  std::string config_path, out;
  int jobs = 1;
  bool strict = false;
  app.add_option("--seed", seed, "Master seed");
  app.add_option("--splits", splits, "Number of train/test splits");
  app.add_option("--jobs", jobs, "Worker threads for split-parallel stages")->check(CLI::PositiveNumber);
  app.add_flag("--strict", strict, "Fail on any skipped input row");
  app.add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--out", out, "Output root (default: $CDA_OUTPUT_ROOT, then the config's output_dir)");

  auto* simulate = app.add_subcommand("simulate", "Simulate a zero-intelligence corpus");
  std::optional<int> markets, rounds, buyers, sellers, actions;
  bool large = false;
  simulate->add_option("--markets", markets, "Number of markets")->check(CLI::PositiveNumber);
  simulate->add_option("--rounds", rounds, "Rounds per market")->check(CLI::PositiveNumber);
  simulate->add_option("--buyers", buyers, "Buyers per small market")->check(CLI::PositiveNumber);
  simulate->add_option("--sellers", sellers, "Sellers per small market")->check(CLI::PositiveNumber);
  simulate->add_option("--actions", actions, "Quote actions per round")->check(CLI::PositiveNumber);
  simulate->add_flag("--large", large, "Include large-market treatments");

  auto* ingest = app.add_subcommand("ingest", "Validate and import corpus CSV files");
  std::string events, deals, valuations, treatments;
  ingest->add_option("--events", events, "events.csv")->required()->check(CLI::ExistingFile);
  ingest->add_option("--deals", deals, "deals.csv")->required()->check(CLI::ExistingFile);
  ingest->add_option("--valuations", valuations, "valuations.csv")->check(CLI::ExistingFile);
  ingest->add_option("--treatments", treatments, "treatments.csv")->required()->check(CLI::ExistingFile);

  auto* featurize = app.add_subcommand("featurize", "Build orderbook feature rows from the corpus");
  auto* fit = app.add_subcommand("fit", "Draw splits and fit every model per split");
  auto* predict = app.add_subcommand("predict", "Score test markets with the fitted models");
  auto* evaluate = app.add_subcommand("evaluate", "Bucketed median APE tables and paired tests");
  auto* ablate = app.add_subcommand("ablate", "Refit models with input families removed");
  std::vector<std::string> kinds{"orderbook_only", "no_deal_price"};
  ablate->add_option("--kind", kinds, "Ablations to run")->check(CLI::IsMember({"orderbook_only", "no_deal_price"}));
  auto* report = app.add_subcommand("report", "CEMH coefficients, treatment-mean baselines and diagnostics");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  cda::StageContext ctx;
  try {
    if (!config_path.empty()) ctx.config = cda::RunConfig::load(config_path);
    if (seed) ctx.config.seed = *seed;
    if (splits) ctx.config.n_splits = *splits;
    auto& sim = ctx.config.simulation;
    if (markets) sim.markets = *markets;
    if (rounds) sim.rounds = *rounds;
    if (buyers) sim.buyers = *buyers;
    if (sellers) sim.sellers = *sellers;
    if (actions) sim.actions_per_round = *actions;
    if (large) sim.include_large = true;
    if (out.empty())
      if (const char* env = std::getenv("CDA_OUTPUT_ROOT"); env && *env) out = env;
    if (!out.empty()) ctx.config.output_dir = out;
    ctx.config.validate();
  } catch (const cda::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  ctx.root = ctx.config.output_dir;
  ctx.jobs = jobs;
  ctx.strict = strict;

  try {
    if (simulate->parsed()) {
      cda::stage_simulate(ctx);
    } else if (ingest->parsed()) {
      const auto rep = cda::stage_ingest(ctx, {events, deals, valuations, treatments});
      std::cerr << "ingested; skipped rows: " << rep.skipped_rows << "\n";
      for (const auto& n : rep.notes) std::cerr << "  " << n << "\n";
    } else if (featurize->parsed()) {
      cda::stage_featurize(ctx);
    } else if (fit->parsed()) {
      cda::stage_fit(ctx);
    } else if (predict->parsed()) {
      cda::stage_predict(ctx);
    } else if (evaluate->parsed()) {
      cda::stage_evaluate(ctx);
    } else if (ablate->parsed()) {
      std::vector<cda::AblationKind> parsed;
      for (const auto& k : kinds) parsed.push_back(cda::parse_ablation_kind(k));
      cda::stage_ablate(ctx, parsed);
    } else if (report->parsed()) {
      cda::stage_report(ctx);
    }
  } catch (const cda::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDataError;
  }
  return kOk;
}
