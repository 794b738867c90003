#pragma once
#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cda/types.hpp"

namespace cda {

inline constexpr std::size_t kDeciles = 11;
inline constexpr std::size_t kBookEntries = 2 * kDeciles;

// q(x; pi) for pi = 0.0, 0.1, ..., 1.0 over a set of standing prices.
struct DecileVector {
  std::array<double, kDeciles> values{};
  std::size_t count = 0;
};

DecileVector decile_vector(std::span<const Money> prices);  // throws EmptySide

// Per-row location/scale of the 22 concatenated bid and ask deciles.
struct NormalizationConstants {
  double center = 0;
  double scale = 1;
};

NormalizationConstants make_norm(const DecileVector& bids, const DecileVector& asks);

inline double normalize(double value, const NormalizationConstants& norm) {
  return (value - norm.center) / norm.scale;
}
inline double denormalize(double value, const NormalizationConstants& norm) {
  return value * norm.scale + norm.center;
}

enum class Cadence { PerAction, PerDeal };

// Which submitted quotes feed the decile pool at time tau.
enum class PoolPolicy {
  PerTraderLatest,  // each trader's most recent quote in the round
  AllSubmissions,   // every quote submitted so far in the round
};

std::string_view to_string(Cadence c);
std::string_view to_string(PoolPolicy p);
Cadence parse_cadence(std::string_view s);
PoolPolicy parse_pool_policy(std::string_view s);

struct FeatureRow {
  std::string market_id;
  std::size_t row_index = 0;  // position in the market's snapshot stream
  int round = 1;
  double time = 0;
  Treatment treatment;

  std::optional<DecileVector> bids;
  std::optional<DecileVector> asks;
  std::optional<NormalizationConstants> norm;  // present iff both sides are
  std::optional<Money> last_deal_price;
  int n_deals = 0;

  // Round-level targets, known only when the market carries a profile.
  std::optional<double> ae_round;
  std::optional<Money> cep_mid;

  bool has_book() const noexcept { return bids.has_value() && asks.has_value(); }

  // bid deciles followed by ask deciles, raw and normalized. Throw
  // MissingInput when a side is absent.
  std::array<double, kBookEntries> raw_book() const;
  std::array<double, kBookEntries> normalized_book() const;
  // Normalized last deal price, 0 before the first deal of the round.
  double normalized_deal_price() const;
};

struct SnapshotOptions {
  Cadence cadence = Cadence::PerAction;
  PoolPolicy pool = PoolPolicy::PerTraderLatest;
};

std::vector<FeatureRow> snapshot_stream(const MarketLog& market, SnapshotOptions options = {});

// Snapshot every market of a corpus, in order.
std::vector<FeatureRow> snapshot_corpus(std::span<const MarketLog> markets, SnapshotOptions options = {});

}  // namespace cda
