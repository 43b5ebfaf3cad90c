#pragma once

#include <fstream>
#include <string>
#include <vector>

namespace acre {

// One row per update cycle. Losses and diagnostics come from the last
// completed epoch; ratio_epoch0 is the mean importance ratio of epoch 0.
struct MetricsRow {
  long step = 0;
  long episodes = 0;
  double mean_return = 0.0;   // last <=100 finished episodes
  double success_rate = 0.0;  // same window
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double ratio_epoch0 = 0.0;
  double clip_fraction = 0.0;
  double approx_kl = 0.0;
  double grad_norm = 0.0;
};

inline constexpr const char* kMetricsVersionLine = "# acre-metrics v1";
inline constexpr const char* kMetricsHeader =
    "step,episodes,mean_return,success_rate,policy_loss,value_loss,entropy,"
    "ratio_epoch0,clip_fraction,approx_kl,grad_norm";

// Shortest round-trip decimal form, identical bytes for identical doubles.
std::string format_double(double x);

class MetricsWriter {
 public:
  // truncate: start a fresh file with the version line and header.
  // append: continue an existing file (resume) without rewriting them.
  void open_fresh(const std::string& path);
  void open_append(const std::string& path);
  void write_row(const MetricsRow& row);
  void flush();

 private:
  std::ofstream out_;
};

// Strict parse of the format above; errors name the offending line (1-based).
std::vector<MetricsRow> parse_metrics_csv(const std::string& path);

}  // namespace acre
