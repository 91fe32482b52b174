#include "run_store.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <stdexcept>

namespace fluxcz::cli {

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex64(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string num(double v) {
  char buf[32];
  // Shortest of 15-17 significant digits that reads back to the same value.
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v || std::isnan(v)) break;
  }
  return buf;
}

Csv::Csv(std::vector<std::string> header) : width_(header.size()) { append(header); }

Csv& Csv::row(const std::vector<std::string>& cells) {
  if (cells.size() != width_) throw std::logic_error("csv row width mismatch");
  append(cells);
  return *this;
}

void Csv::append(const std::vector<std::string>& cells) {
  for (std::size_t k = 0; k < cells.size(); ++k) {
    if (k) text_ += ',';
    const std::string& c = cells[k];
    if (c.find_first_of(",\"\n") == std::string::npos) {
      text_ += c;
      continue;
    }
    text_ += '"';
    for (char ch : c) {
      if (ch == '"') text_ += '"';
      text_ += ch;
    }
    text_ += '"';
  }
  text_ += '\n';
}

RunStore::RunStore(std::filesystem::path dir, std::string command, bool resume)
    : dir_(std::move(dir)), command_(std::move(command)), resume_(resume) {
  std::filesystem::create_directories(dir_);
  const auto cache_path = dir_ / (command_ + ".points.jsonl");
  if (resume) {
    std::ifstream in(cache_path);
    for (std::string line; std::getline(in, line);) {
      // A torn last line from an interrupted run is ignored.
      const json j = json::parse(line, nullptr, false);
      if (j.is_discarded() || !j.contains("key") || !j.contains("data")) continue;
      cache_[j["key"].get<std::string>()] = j["data"];
    }
  }
}

std::optional<json> RunStore::cached(const std::string& key) const {
  std::lock_guard lock(mutex_);
  const auto it = cache_.find(key);
  if (it == cache_.end()) return std::nullopt;
  ++reused_;
  return it->second;
}

void RunStore::complete(const std::string& key, const json& data) {
  std::lock_guard lock(mutex_);
  cache_[key] = data;
  if (!points_.is_open()) {
    // Opened on first use so commands without grid points leave no cache file.
    const auto cache_path = dir_ / (command_ + ".points.jsonl");
    points_.open(cache_path, resume_ ? std::ios::app : std::ios::trunc);
    if (!points_) throw std::runtime_error("cannot write " + cache_path.string());
  }
  points_ << json{{"key", key}, {"data", data}}.dump() << '\n';
  points_.flush();
}

void RunStore::write_text(const std::string& file, const std::string& content) const {
  const auto path = dir_ / file;
  const auto tmp = dir_ / (file + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << content;
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void RunStore::write_csv(const std::string& file, const Csv& csv) {
  write_text(file, csv.text());
  std::lock_guard lock(mutex_);
  files_.push_back(file);
}

void RunStore::write_sidecar(const json& parameters, const json& summary, const json& failures) {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm utc{};
  gmtime_r(&now, &utc);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &utc);

  json j;
  j["schema"] = "fluxcz-run";
  j["schema_version"] = kSidecarSchemaVersion;
  j["command"] = command_;
  j["parameter_hash"] = hex64(fnv1a(parameters.dump()));
  j["created"] = stamp;
  j["parameters"] = parameters;
  j["summary"] = summary;
  j["failures"] = failures;
  j["files"] = files_;
  j["units"] = {{"frequency", "GHz"}, {"time", "ns"}, {"flux", "flux quantum"}};
  write_text(command_ + ".json", j.dump(2) + "\n");
}

}  // namespace fluxcz::cli
