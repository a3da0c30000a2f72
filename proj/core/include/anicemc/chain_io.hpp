#pragma once

#include "anicemc/samplers.hpp"

#include <filesystem>
#include <string>

namespace anicemc {

/// CSV body: header `chain,step,x0,...,x{d-1}`, then one row per (chain, step)
/// in chain-major order. Numbers use the shortest round-trip representation.
std::string chain_dump_csv(const ChainDump& dump);
/// JSON sidecar with target, kernel, sizes, acceptance and timing fields.
std::string chain_dump_json(const ChainDump& dump);

/// Writes `<stem>.csv` and `<stem>.json` atomically.
void write_chain_dump(const std::filesystem::path& stem, const ChainDump& dump);

/// Parses a CSV written by chain_dump_csv. Throws IngestionError with the
/// 1-based line number on malformed rows or an incomplete (chain, step) grid.
ChainDump parse_chain_csv(const std::string& text);
ChainDump read_chain_dump(const std::filesystem::path& csv_path);

/// Shortest decimal string that parses back to exactly `v`.
std::string format_double(double v);

}  // namespace anicemc
