#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace cgp {

// Shortest decimal that parses back to the same double.
std::string format_double(double v);

std::string hex64(std::uint64_t v);

// 64-bit FNV-1a of a byte string.
std::uint64_t fnv1a64(const std::string& bytes);

// Writes via a temporary file in the same directory followed by a rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

std::string read_file(const std::filesystem::path& path);

// Minimal CSV builder: one header row, comma separated, no quoting needed
// for the numeric/identifier payloads the tools emit.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);

  CsvTable& add(double v);
  CsvTable& add(long long v);
  CsvTable& add(int v) { return add(static_cast<long long>(v)); }
  CsvTable& add(long v) { return add(static_cast<long long>(v)); }
  CsvTable& add(bool v);
  CsvTable& add(const std::string& v);
  CsvTable& add(const char* v) { return add(std::string(v)); }
  // Closes the current row; throws if its width differs from the header.
  void end_row();

  std::string str() const;

 private:
  std::size_t width_;
  std::vector<std::string> current_;
  std::string body_;
};

// Matrix as CSV with header c0..c{n-1}.
std::string matrix_to_csv(const Eigen::Ref<const Eigen::MatrixXd>& m, const std::string& column_prefix = "c");

}  // namespace cgp
