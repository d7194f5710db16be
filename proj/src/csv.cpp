#include "mjpde/csv.hpp"

#include <cstdio>
#include <cstdlib>
#include <sstream>

#include "mjpde/errors.hpp"

namespace mjpde {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

CsvWriter::CsvWriter(std::filesystem::path path, const std::vector<std::string>& header)
    : final_(std::move(path)), tmp_(final_.string() + ".tmp") {
  if (final_.has_parent_path())
    std::filesystem::create_directories(final_.parent_path());
  out_.open(tmp_, std::ios::trunc);
  if (!out_) throw ValidationError("cannot open output file: " + tmp_.string());
  for (size_t i = 0; i < header.size(); ++i) {
    if (i) out_ << ',';
    out_ << header[i];
  }
  out_ << '\n';
}

CsvWriter::~CsvWriter() {
  if (!committed_) {
    out_.close();
    std::error_code ec;
    std::filesystem::remove(tmp_, ec);
  }
}

void CsvWriter::sep() {
  if (row_open_) out_ << ',';
  row_open_ = true;
}

void CsvWriter::add(double v) {
  sep();
  out_ << format_double(v);
}

void CsvWriter::add(int v) {
  sep();
  out_ << v;
}

void CsvWriter::add(long long v) {
  sep();
  out_ << v;
}

void CsvWriter::end_row() {
  out_ << '\n';
  row_open_ = false;
}

void CsvWriter::commit() {
  out_.flush();
  if (!out_) throw ValidationError("write failed for " + tmp_.string());
  out_.close();
  std::filesystem::rename(tmp_, final_);
  committed_ = true;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open CSV file: " + path.string());
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("empty CSV file: " + path.string());
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) table.header.push_back(cell);
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    row.reserve(table.header.size());
    const char* p = line.c_str();
    char* end = nullptr;
    while (*p) {
      row.push_back(std::strtod(p, &end));
      if (end == p) throw ValidationError("malformed CSV row in " + path.string());
      p = (*end == ',') ? end + 1 : end;
    }
    if (row.size() != table.header.size())
      throw ValidationError("CSV row width mismatch in " + path.string());
    table.rows.push_back(std::move(row));
  }
  return table;
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw ValidationError("cannot open output file: " + tmp.string());
    out << text;
    out.flush();
    if (!out) throw ValidationError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace mjpde
