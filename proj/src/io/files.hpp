#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lnm {

// Write to <path>.tmp, then rename over path.
void write_file_atomic(const std::filesystem::path &path, std::span<const std::uint8_t> bytes);
void write_file_atomic(const std::filesystem::path &path, std::string_view text);
std::vector<std::uint8_t> read_file(const std::filesystem::path &path);

// RFC-4180 table builder. Doubles print with 17 significant digits so the
// text round-trips and is stable across runs.
class CsvWriter {
public:
  explicit CsvWriter(const std::vector<std::string> &header);

  CsvWriter &cell(std::string_view text);
  CsvWriter &cell(double v);
  CsvWriter &cell(std::int64_t v);
  CsvWriter &cell(std::size_t v) { return cell(static_cast<std::int64_t>(v)); }
  CsvWriter &cell(int v) { return cell(static_cast<std::int64_t>(v)); }
  void end_row();

  const std::string &text() const { return out_; }
  void save(const std::filesystem::path &path) const { write_file_atomic(path, out_); }

private:
  void separator();

  std::string out_;
  std::size_t columns_;
  std::size_t in_row_ = 0;
};

std::string format_double(double v);

} // namespace lnm
