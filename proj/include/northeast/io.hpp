#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <initializer_list>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace ne::io {

std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

/// RFC 4180 field: quoted when it holds a comma, quote or line break.
std::string csv_field(std::string_view s);
std::string csv_number(double v);

class CsvWriter {
 public:
  CsvWriter(std::ostream& out, std::initializer_list<std::string_view> header);
  CsvWriter(std::ostream& out, const std::vector<std::string>& header);

  /// Fields already formatted (use csv_number / std::to_string).
  void row(const std::vector<std::string>& fields);

 private:
  std::ostream& out_;
  std::size_t columns_;
};

struct OutputFile {
  std::string name;  // relative to the run directory
  std::string sha256;
  std::uintmax_t bytes = 0;
};

/// A run's output directory. Every write goes through it, and names that
/// would escape the directory are rejected.
class RunDirectory {
 public:
  /// Creates <root>/<experiment>/<stamp>-<seed>[-k]/.
  RunDirectory(const std::filesystem::path& root, std::string_view experiment, std::uint64_t seed);

  const std::filesystem::path& path() const { return dir_; }

  /// Writes via `fill` and records the file's digest.
  const OutputFile& write(std::string_view name, const std::function<void(std::ostream&)>& fill);

  const std::vector<OutputFile>& files() const { return files_; }

 private:
  std::filesystem::path resolve(std::string_view name) const;

  std::filesystem::path dir_;
  std::vector<OutputFile> files_;
};

/// UTC time as 2026-01-31T12:00:00Z.
std::string utc_timestamp();

}  // namespace ne::io
