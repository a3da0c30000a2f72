#include "anicemc/chain_io.hpp"

#include "anicemc/checkpoint.hpp"
#include "anicemc/errors.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <sstream>

namespace anicemc {

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) return "nan";
  return std::string(buf, ptr);
}

std::string chain_dump_csv(const ChainDump& dump) {
  std::string out = "chain,step";
  for (std::size_t j = 0; j < dump.dim; ++j) out += ",x" + std::to_string(j);
  out += '\n';
  for (std::size_t c = 0; c < dump.n_chains; ++c) {
    for (std::size_t t = 0; t < dump.n_steps; ++t) {
      out += std::to_string(c);
      out += ',';
      out += std::to_string(t);
      for (double x : dump.state(c, t)) {
        out += ',';
        out += format_double(x);
      }
      out += '\n';
    }
  }
  return out;
}

std::string chain_dump_json(const ChainDump& dump) {
  nlohmann::ordered_json j;
  j["target"] = dump.target_name;
  j["kernel"] = dump.kernel;
  j["n_chains"] = dump.n_chains;
  j["n_steps"] = dump.n_steps;
  j["dim"] = dump.dim;
  j["mean_acceptance"] = dump.mean_acceptance();
  j["acceptance_rate"] = dump.acceptance_rate;
  j["nonfinite_rejections"] = dump.nonfinite_rejections;
  j["wall_time_seconds"] = dump.wall_time_seconds;
  j["burn_in_seconds"] = dump.burn_in_seconds;
  j["failed_chains"] = dump.failed_chains;
  if (!dump.failure.empty()) j["failure"] = dump.failure;
  return j.dump(2) + "\n";
}

void write_chain_dump(const std::filesystem::path& stem, const ChainDump& dump) {
  auto csv = stem;
  csv += ".csv";
  auto json = stem;
  json += ".json";
  write_file_atomic(csv, chain_dump_csv(dump));
  write_file_atomic(json, chain_dump_json(dump));
}

namespace {

double parse_cell(std::string_view s, std::size_t line) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw IngestionError("malformed number '" + std::string(s) + "'", line);
  }
  return v;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto stop = line.find(',', start);
    out.push_back(line.substr(start, stop == std::string_view::npos ? std::string_view::npos : stop - start));
    if (stop == std::string_view::npos) break;
    start = stop + 1;
  }
  return out;
}

}  // namespace

ChainDump parse_chain_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(is, line)) throw IngestionError("empty chain file", 1);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_commas(line);
  if (header.size() < 2 || header[0] != "chain" || header[1] != "step") {
    throw IngestionError("header must start with chain,step", 1);
  }
  ChainDump dump;
  dump.dim = header.size() - 2;

  struct Row {
    std::size_t chain, step;
    std::vector<double> x;
  };
  std::vector<Row> rows;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_commas(line);
    if (cells.size() != header.size()) {
      throw IngestionError("expected " + std::to_string(header.size()) + " fields, found " +
                               std::to_string(cells.size()),
                           line_no);
    }
    const double c = parse_cell(cells[0], line_no);
    const double s = parse_cell(cells[1], line_no);
    if (c < 0 || s < 0 || c != std::floor(c) || s != std::floor(s)) {
      throw IngestionError("chain and step must be non-negative integers", line_no);
    }
    Row r{static_cast<std::size_t>(c), static_cast<std::size_t>(s), {}};
    for (std::size_t j = 2; j < cells.size(); ++j) r.x.push_back(parse_cell(cells[j], line_no));
    rows.push_back(std::move(r));
  }
  for (const auto& r : rows) {
    dump.n_chains = std::max(dump.n_chains, r.chain + 1);
    dump.n_steps = std::max(dump.n_steps, r.step + 1);
  }
  if (rows.size() != dump.n_chains * dump.n_steps) {
    throw IngestionError("incomplete chain/step grid: " + std::to_string(rows.size()) + " rows for " +
                             std::to_string(dump.n_chains) + " chains x " +
                             std::to_string(dump.n_steps) + " steps",
                         line_no);
  }
  dump.samples.assign(rows.size() * dump.dim, 0.0);
  std::vector<char> seen(rows.size(), 0);
  std::size_t k = 1;
  for (const auto& r : rows) {
    ++k;
    const auto slot = r.chain * dump.n_steps + r.step;
    if (seen[slot]) throw IngestionError("duplicate (chain, step) entry", k);
    seen[slot] = 1;
    std::copy(r.x.begin(), r.x.end(), dump.samples.begin() + slot * dump.dim);
  }
  dump.acceptance_rate.assign(dump.n_chains, 0.0);
  dump.nonfinite_rejections.assign(dump.n_chains, 0);
  return dump;
}

ChainDump read_chain_dump(const std::filesystem::path& csv_path) {
  ChainDump dump = parse_chain_csv(read_file(csv_path));
  auto sidecar = csv_path;
  sidecar.replace_extension(".json");
  if (std::filesystem::exists(sidecar)) {
    const auto j = nlohmann::json::parse(read_file(sidecar), nullptr, false);
    if (!j.is_discarded()) {
      dump.target_name = j.value("target", "");
      dump.kernel = j.value("kernel", "");
      dump.wall_time_seconds = j.value("wall_time_seconds", 0.0);
      dump.burn_in_seconds = j.value("burn_in_seconds", 0.0);
      if (j.contains("acceptance_rate") && j["acceptance_rate"].size() == dump.n_chains) {
        dump.acceptance_rate = j["acceptance_rate"].get<std::vector<double>>();
      }
    }
  }
  return dump;
}

}  // namespace anicemc
