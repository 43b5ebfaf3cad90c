#include "acre/metrics.hpp"

#include <charconv>
#include <filesystem>
#include <sstream>
#include <stdexcept>

namespace acre {
namespace {

void ensure_parent_dir(const std::string& path) {
  const std::filesystem::path parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
}

}  // namespace

std::string format_double(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  if (ec != std::errc()) throw std::runtime_error("format_double: conversion failed");
  return std::string(buf, ptr);
}

void MetricsWriter::open_fresh(const std::string& path) {
  ensure_parent_dir(path);
  out_.open(path, std::ios::out | std::ios::trunc);
  if (!out_) throw std::runtime_error("metrics: cannot open " + path);
  out_ << kMetricsVersionLine << "\n" << kMetricsHeader << "\n";
}

void MetricsWriter::open_append(const std::string& path) {
  ensure_parent_dir(path);
  out_.open(path, std::ios::out | std::ios::app);
  if (!out_) throw std::runtime_error("metrics: cannot open " + path);
}

void MetricsWriter::write_row(const MetricsRow& r) {
  out_ << r.step << ',' << r.episodes << ',' << format_double(r.mean_return) << ','
       << format_double(r.success_rate) << ',' << format_double(r.policy_loss) << ','
       << format_double(r.value_loss) << ',' << format_double(r.entropy) << ','
       << format_double(r.ratio_epoch0) << ',' << format_double(r.clip_fraction) << ','
       << format_double(r.approx_kl) << ',' << format_double(r.grad_norm) << '\n';
  if (!out_) throw std::runtime_error("metrics: write failed");
}

void MetricsWriter::flush() { out_.flush(); }

namespace {

double parse_field(const std::string& s, int line_no) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw std::invalid_argument("metrics: line " + std::to_string(line_no) +
                                ": bad numeric field \"" + s + "\"");
  }
  return v;
}

}  // namespace

std::vector<MetricsRow> parse_metrics_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("metrics: cannot open " + path);
  std::string line;
  int line_no = 0;

  if (!std::getline(in, line) || line != kMetricsVersionLine)
    throw std::invalid_argument("metrics: line 1: expected \"" +
                                std::string(kMetricsVersionLine) + "\"");
  ++line_no;
  if (!std::getline(in, line) || line != kMetricsHeader)
    throw std::invalid_argument("metrics: line 2: header mismatch");
  ++line_no;

  std::vector<MetricsRow> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) f.push_back(field);
    if (f.size() != 11) {
      throw std::invalid_argument("metrics: line " + std::to_string(line_no) + ": expected 11 fields, got " +
                                  std::to_string(f.size()));
    }
    MetricsRow r;
    r.step = static_cast<long>(parse_field(f[0], line_no));
    r.episodes = static_cast<long>(parse_field(f[1], line_no));
    r.mean_return = parse_field(f[2], line_no);
    r.success_rate = parse_field(f[3], line_no);
    r.policy_loss = parse_field(f[4], line_no);
    r.value_loss = parse_field(f[5], line_no);
    r.entropy = parse_field(f[6], line_no);
    r.ratio_epoch0 = parse_field(f[7], line_no);
    r.clip_fraction = parse_field(f[8], line_no);
    r.approx_kl = parse_field(f[9], line_no);
    r.grad_norm = parse_field(f[10], line_no);
    rows.push_back(r);
  }
  return rows;
}

}  // namespace acre
