#include "io/files.hpp"

#include <cstdio>
#include <fstream>
#include <iterator>

#include "core/error.hpp"

namespace lnm {

void write_file_atomic(const std::filesystem::path &path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out)
      throw IoError("cannot write " + tmp.string());
    out.write(reinterpret_cast<const char *>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out)
      throw IoError("short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec)
    throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

void write_file_atomic(const std::filesystem::path &path, std::string_view text) {
  write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t *>(text.data()),
                                    text.size()));
}

std::vector<std::uint8_t> read_file(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

CsvWriter::CsvWriter(const std::vector<std::string> &header) : columns_(header.size()) {
  for (const auto &h : header)
    cell(h);
  end_row();
}

void CsvWriter::separator() {
  if (in_row_++)
    out_ += ',';
}

CsvWriter &CsvWriter::cell(std::string_view text) {
  separator();
  if (text.find_first_of(",\"\r\n") == std::string_view::npos) {
    out_ += text;
    return *this;
  }
  out_ += '"';
  for (char c : text) {
    if (c == '"')
      out_ += '"';
    out_ += c;
  }
  out_ += '"';
  return *this;
}

CsvWriter &CsvWriter::cell(double v) {
  separator();
  out_ += format_double(v);
  return *this;
}

CsvWriter &CsvWriter::cell(std::int64_t v) {
  separator();
  out_ += std::to_string(v);
  return *this;
}

void CsvWriter::end_row() {
  if (in_row_ != columns_)
    throw InternalError("CSV row has " + std::to_string(in_row_) + " cells, header has " +
                        std::to_string(columns_));
  out_ += "\r\n";
  in_row_ = 0;
}

} // namespace lnm
