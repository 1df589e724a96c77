#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "airfed/channel.hpp"
#include "airfed/fl_core.hpp"

namespace airfed {

struct LedgerEntry {
  std::size_t round = 0;
  TransportKind scheme = TransportKind::ideal_digital;
  std::uint64_t uplink_uses = 0;
  std::uint64_t uplink_bits = 0;
  std::uint64_t downlink_bits = 0;
};

struct LedgerTotals {
  std::uint64_t uplink_uses = 0;
  std::uint64_t uplink_bits = 0;
  std::uint64_t downlink_bits = 0;

  bool operator==(const LedgerTotals&) const = default;
};

/// Append-only per-round communication ledger.
class BudgetLedger {
 public:
  /// Throws InternalError on negative counts.
  void record(std::size_t round, TransportKind scheme, std::int64_t uplink_uses, std::int64_t uplink_bits,
              std::int64_t downlink_bits);

  const std::vector<LedgerEntry>& entries() const { return entries_; }
  const LedgerTotals& totals() const { return totals_; }

  /// Columns: round,scheme,uplink_uses,uplink_bits,downlink_bits
  void write_csv(std::ostream& out) const;

 private:
  std::vector<LedgerEntry> entries_;
  LedgerTotals totals_;
};

/// Exact non-negative rational in lowest terms.
struct Ratio {
  std::uint64_t num = 0;
  std::uint64_t den = 1;

  static Ratio of(std::uint64_t num, std::uint64_t den);
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  std::string str() const;
  bool operator==(const Ratio&) const = default;
};

/// Baseline uplink uses / scheme uplink uses; nullopt when the scheme used no
/// channel at all. Throws ConfigError when the ledgers cover different rounds.
std::optional<Ratio> communication_gain(const BudgetLedger& baseline, const BudgetLedger& scheme);

BudgetLedger ledger_from_records(std::span<const RoundRecord> records);

/// What an uncompressed ideal-digital transport would have spent on the same
/// rounds: every participant sends d symbols per aggregation round.
BudgetLedger baseline_ledger(std::span<const RoundRecord> records, std::size_t dimension);

}  // namespace airfed
