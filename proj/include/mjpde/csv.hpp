#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace mjpde {

// %.17g — enough digits for an exact double round trip.
std::string format_double(double v);

// CSV writer with atomic commit: rows go to <path>.tmp and the file is
// renamed into place on commit(). An uncommitted writer removes the temp
// file, so readers never observe partial artifacts.
class CsvWriter {
 public:
  CsvWriter(std::filesystem::path path, const std::vector<std::string>& header);
  ~CsvWriter();

  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;

  void add(double v);
  void add(int v);
  void add(long long v);
  void end_row();
  void commit();

 private:
  void sep();

  std::filesystem::path final_;
  std::filesystem::path tmp_;
  std::ofstream out_;
  bool committed_ = false;
  bool row_open_ = false;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

CsvTable read_csv(const std::filesystem::path& path);

void write_text_atomic(const std::filesystem::path& path, const std::string& text);

}  // namespace mjpde
