#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gve/vocab.hpp"

namespace gve::eval {

struct EpisodeRecord {
  bool success = false;
  int steps = 0;    // P, actions taken including the terminal one
  int optimal = 0;  // L, BFS-optimal action count
  kg::RoomType room = kg::RoomType::Kitchen;
  int target = -1;
  std::vector<double> values;   // V(x_t) along the realized trajectory
  std::vector<double> rewards;  // r_t
};

double success_rate(const std::vector<EpisodeRecord>& records);

// Anderson-style SPL: mean over episodes of success * L / max(P, L).
double spl(const std::vector<EpisodeRecord>& records);

struct MetricsReport {
  int episodes = 0;
  double sr = 0.0;
  double spl = 0.0;
  // Over episodes whose optimal length exceeds 5; absent when none qualify.
  std::optional<double> sr_gt5;
  std::optional<double> spl_gt5;
  int episodes_gt5 = 0;
  std::map<std::string, std::pair<double, double>> per_room;  // room -> (spl, sr)
};

MetricsReport compute_metrics(const std::vector<EpisodeRecord>& records);

// Subset with BFS-optimal length strictly greater than min_len.
std::vector<EpisodeRecord> filter_longer_than(const std::vector<EpisodeRecord>& records,
                                              int min_len);

// Discounted suffix sums; the ground-truth value proxy for the error curves.
std::vector<double> return_to_go(const std::vector<double>& rewards, double gamma);

struct ValueErrorCurve {
  std::vector<double> mean;  // per timestep |V_t - G_t| (or squared, below)
  std::vector<double> stddev;
  std::vector<int> count;
};

// Truncated at the first timestep with fewer than min_samples surviving
// episodes. squared selects (V-G)^2 instead of |V-G|.
ValueErrorCurve value_error_curve(const std::vector<EpisodeRecord>& records, double gamma,
                                  int min_samples = 30, bool squared = false);

// episode-record JSON lines
std::string record_to_json(const EpisodeRecord& r);
EpisodeRecord record_from_json(const std::string& line);
void save_records(const std::string& path, const std::vector<EpisodeRecord>& records);
std::vector<EpisodeRecord> load_records(const std::string& path);

// metrics.csv rows: one per variant x split
void write_metrics_csv(const std::string& path,
                       const std::vector<std::pair<std::string, MetricsReport>>& rows);
// value_error.csv: t, mean, std, n
void write_value_error_csv(const std::string& path, const ValueErrorCurve& curve);
ValueErrorCurve read_value_error_csv(const std::string& path);

}  // namespace gve::eval
