#include "airfed/budget.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>

#include <fmt/format.h>

#include "airfed/error.hpp"

namespace airfed {

void BudgetLedger::record(std::size_t round, TransportKind scheme, std::int64_t uplink_uses,
                          std::int64_t uplink_bits, std::int64_t downlink_bits) {
  if (uplink_uses < 0 || uplink_bits < 0 || downlink_bits < 0)
    throw InternalError("budget ledger received a negative count");
  LedgerEntry e{round, scheme, static_cast<std::uint64_t>(uplink_uses), static_cast<std::uint64_t>(uplink_bits),
                static_cast<std::uint64_t>(downlink_bits)};
  entries_.push_back(e);
  totals_.uplink_uses += e.uplink_uses;
  totals_.uplink_bits += e.uplink_bits;
  totals_.downlink_bits += e.downlink_bits;

  LedgerTotals check;
  for (const auto& x : entries_) {
    check.uplink_uses += x.uplink_uses;
    check.uplink_bits += x.uplink_bits;
    check.downlink_bits += x.downlink_bits;
  }
  if (!(check == totals_)) throw InternalError("budget ledger totals diverged from its entries");
}

void BudgetLedger::write_csv(std::ostream& out) const {
  out << "round,scheme,uplink_uses,uplink_bits,downlink_bits\n";
  for (const auto& e : entries_)
    out << fmt::format("{},{},{},{},{}\n", e.round, transport_name(e.scheme), e.uplink_uses, e.uplink_bits,
                       e.downlink_bits);
}

Ratio Ratio::of(std::uint64_t num, std::uint64_t den) {
  if (den == 0) throw InternalError("ratio with zero denominator");
  const std::uint64_t g = std::gcd(num, den);
  return g ? Ratio{num / g, den / g} : Ratio{0, 1};
}

std::string Ratio::str() const { return den == 1 ? fmt::format("{}", num) : fmt::format("{}/{}", num, den); }

std::optional<Ratio> communication_gain(const BudgetLedger& baseline, const BudgetLedger& scheme) {
  auto rounds = [](const BudgetLedger& l) {
    std::vector<std::size_t> r;
    for (const auto& e : l.entries()) r.push_back(e.round);
    std::sort(r.begin(), r.end());
    return r;
  };
  if (rounds(baseline) != rounds(scheme)) throw ConfigError("ledgers cover different rounds");
  if (scheme.totals().uplink_uses == 0) return std::nullopt;
  return Ratio::of(baseline.totals().uplink_uses, scheme.totals().uplink_uses);
}

BudgetLedger ledger_from_records(std::span<const RoundRecord> records) {
  BudgetLedger l;
  for (const auto& r : records)
    l.record(r.round, r.scheme, static_cast<std::int64_t>(r.uplink_uses), static_cast<std::int64_t>(r.uplink_bits),
             static_cast<std::int64_t>(r.downlink_bits));
  return l;
}

BudgetLedger baseline_ledger(std::span<const RoundRecord> records, std::size_t dimension) {
  BudgetLedger l;
  const auto d = static_cast<std::int64_t>(dimension);
  for (const auto& r : records) {
    const auto k = static_cast<std::int64_t>(r.aggregated ? r.participants.size() : 0);
    l.record(r.round, TransportKind::ideal_digital, k * d,
             k * (d * static_cast<std::int64_t>(kFullPrecisionBits) + static_cast<std::int64_t>(kHeaderBits)),
             static_cast<std::int64_t>(r.downlink_bits));
  }
  return l;
}

}  // namespace airfed
