#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace fluxcz::cli {

using nlohmann::json;

inline constexpr int kSidecarSchemaVersion = 1;

std::uint64_t fnv1a(const std::string& text);
std::string hex64(std::uint64_t h);

// Round-trip decimal text for hashing and CSV cells.
std::string num(double v);

// Minimal CSV builder; cells containing separators or quotes are quoted.
class Csv {
 public:
  explicit Csv(std::vector<std::string> header);
  Csv& row(const std::vector<std::string>& cells);
  const std::string& text() const { return text_; }

 private:
  void append(const std::vector<std::string>& cells);
  std::size_t width_;
  std::string text_;
};

// Output sink for one command run. Completed points are appended to a JSON
// lines cache keyed by a parameter hash; `resume` reloads it so finished
// points are skipped. Writes are serialized.
class RunStore {
 public:
  RunStore(std::filesystem::path dir, std::string command, bool resume);

  std::optional<json> cached(const std::string& key) const;
  void complete(const std::string& key, const json& data);

  void write_text(const std::string& file, const std::string& content) const;
  void write_csv(const std::string& file, const Csv& csv);
  // Versioned sidecar; `created` is the only field that differs between reruns.
  void write_sidecar(const json& parameters, const json& summary, const json& failures);

  const std::string& command() const { return command_; }
  int reused() const { return reused_; }

 private:
  std::filesystem::path dir_;
  std::string command_;
  bool resume_;
  std::map<std::string, json> cache_;
  std::vector<std::string> files_;
  std::ofstream points_;
  mutable std::mutex mutex_;
  mutable int reused_ = 0;
};

}  // namespace fluxcz::cli
