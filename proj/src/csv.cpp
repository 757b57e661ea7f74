#include "cgp/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>

#include "cgp/errors.hpp"

namespace cgp {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  if (res.ec != std::errc()) throw Error("format_double: conversion failed");
  return std::string(buf, res.ptr);
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  const auto res = std::to_chars(buf, buf + 16, v, 16);
  std::string s(buf, res.ptr);
  return std::string(16 - s.size(), '0') + s;
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string() + " for writing");
    out << content;
    out.flush();
    if (!out) throw Error("write to " + tmp.string() + " failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CsvTable::CsvTable(std::vector<std::string> header) : width_(header.size()) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) body_ += ',';
    body_ += header[i];
  }
  body_ += '\n';
}

CsvTable& CsvTable::add(double v) {
  current_.push_back(format_double(v));
  return *this;
}

CsvTable& CsvTable::add(long long v) {
  current_.push_back(std::to_string(v));
  return *this;
}

CsvTable& CsvTable::add(bool v) {
  current_.emplace_back(v ? "true" : "false");
  return *this;
}

CsvTable& CsvTable::add(const std::string& v) {
  current_.push_back(v);
  return *this;
}

void CsvTable::end_row() {
  if (current_.size() != width_) {
    throw Error("CSV row has " + std::to_string(current_.size()) + " fields, header has " + std::to_string(width_));
  }
  for (std::size_t i = 0; i < current_.size(); ++i) {
    if (i) body_ += ',';
    body_ += current_[i];
  }
  body_ += '\n';
  current_.clear();
}

std::string CsvTable::str() const { return body_; }

std::string matrix_to_csv(const Eigen::Ref<const Eigen::MatrixXd>& m, const std::string& column_prefix) {
  std::vector<std::string> header;
  for (Eigen::Index j = 0; j < m.cols(); ++j) header.push_back(column_prefix + std::to_string(j));
  CsvTable t(header);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) t.add(m(i, j));
    t.end_row();
  }
  return t.str();
}

}  // namespace cgp
