#include "gve/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace gve::eval {

using nlohmann::json;

double success_rate(const std::vector<EpisodeRecord>& records) {
  if (records.empty()) return 0.0;
  long wins = 0;
  for (const auto& r : records) wins += r.success ? 1 : 0;
  return static_cast<double>(wins) / static_cast<double>(records.size());
}

double spl(const std::vector<EpisodeRecord>& records) {
  if (records.empty()) return 0.0;
  double acc = 0.0;
  for (const auto& r : records) {
    if (!r.success) continue;
    acc += static_cast<double>(r.optimal) / std::max(r.steps, r.optimal);
  }
  return acc / static_cast<double>(records.size());
}

std::vector<EpisodeRecord> filter_longer_than(const std::vector<EpisodeRecord>& records,
                                              int min_len) {
  std::vector<EpisodeRecord> out;
  for (const auto& r : records)
    if (r.optimal > min_len) out.push_back(r);
  return out;
}

MetricsReport compute_metrics(const std::vector<EpisodeRecord>& records) {
  MetricsReport report;
  report.episodes = static_cast<int>(records.size());
  report.sr = success_rate(records);
  report.spl = spl(records);

  const auto longer = filter_longer_than(records, 5);
  report.episodes_gt5 = static_cast<int>(longer.size());
  if (!longer.empty()) {
    report.sr_gt5 = success_rate(longer);
    report.spl_gt5 = spl(longer);
  }

  for (kg::RoomType room : kg::kAllRooms) {
    std::vector<EpisodeRecord> subset;
    for (const auto& r : records)
      if (r.room == room) subset.push_back(r);
    if (!subset.empty())
      report.per_room[kg::room_name(room)] = {spl(subset), success_rate(subset)};
  }
  return report;
}

std::vector<double> return_to_go(const std::vector<double>& rewards, double gamma) {
  std::vector<double> g(rewards.size());
  double acc = 0.0;
  for (size_t i = rewards.size(); i-- > 0;) {
    acc = rewards[i] + gamma * acc;
    g[i] = acc;
  }
  return g;
}

ValueErrorCurve value_error_curve(const std::vector<EpisodeRecord>& records, double gamma,
                                  int min_samples, bool squared) {
  size_t max_len = 0;
  for (const auto& r : records) max_len = std::max(max_len, r.values.size());

  ValueErrorCurve curve;
  for (size_t t = 0; t < max_len; ++t) {
    double sum = 0.0, sumsq = 0.0;
    int n = 0;
    for (const auto& r : records) {
      if (t >= r.values.size()) continue;
      const auto g = return_to_go(r.rewards, gamma);
      const double err = squared ? (r.values[t] - g[t]) * (r.values[t] - g[t])
                                 : std::fabs(r.values[t] - g[t]);
      sum += err;
      sumsq += err * err;
      ++n;
    }
    if (n < min_samples) break;
    const double mean = sum / n;
    const double var = std::max(0.0, sumsq / n - mean * mean);
    curve.mean.push_back(mean);
    curve.stddev.push_back(std::sqrt(var));
    curve.count.push_back(n);
  }
  return curve;
}

std::string record_to_json(const EpisodeRecord& r) {
  json doc;
  doc["success"] = r.success;
  doc["steps"] = r.steps;
  doc["optimal"] = r.optimal;
  doc["room"] = kg::room_name(r.room);
  doc["target"] = r.target;
  doc["values"] = r.values;
  doc["rewards"] = r.rewards;
  return doc.dump();
}

EpisodeRecord record_from_json(const std::string& line) {
  json doc = json::parse(line);
  EpisodeRecord r;
  r.success = doc.at("success").get<bool>();
  r.steps = doc.at("steps").get<int>();
  r.optimal = doc.at("optimal").get<int>();
  r.room = kg::parse_room(doc.at("room").get<std::string>());
  r.target = doc.at("target").get<int>();
  r.values = doc.at("values").get<std::vector<double>>();
  r.rewards = doc.at("rewards").get<std::vector<double>>();
  return r;
}

void save_records(const std::string& path, const std::vector<EpisodeRecord>& records) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write records file " + path);
  for (const auto& r : records) out << record_to_json(r) << "\n";
}

std::vector<EpisodeRecord> load_records(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read records file " + path);
  std::vector<EpisodeRecord> records;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) records.push_back(record_from_json(line));
  return records;
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace

void write_metrics_csv(const std::string& path,
                       const std::vector<std::pair<std::string, MetricsReport>>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write metrics file " + path);
  out << "label,episodes,SPL,SR,SPL_gt5,SR_gt5\n";
  for (const auto& [label, m] : rows) {
    out << label << "," << m.episodes << "," << fmt(m.spl) << "," << fmt(m.sr) << ",";
    out << (m.spl_gt5 ? fmt(*m.spl_gt5) : "") << ",";
    out << (m.sr_gt5 ? fmt(*m.sr_gt5) : "") << "\n";
  }
}

void write_value_error_csv(const std::string& path, const ValueErrorCurve& curve) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write value-error file " + path);
  out << "t,mean,std,n\n";
  for (size_t t = 0; t < curve.mean.size(); ++t)
    out << t << "," << fmt(curve.mean[t]) << "," << fmt(curve.stddev[t]) << ","
        << curve.count[t] << "\n";
}

ValueErrorCurve read_value_error_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read value-error file " + path);
  ValueErrorCurve curve;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::getline(ss, cell, ',');  // t
    std::getline(ss, cell, ',');
    curve.mean.push_back(std::stod(cell));
    std::getline(ss, cell, ',');
    curve.stddev.push_back(std::stod(cell));
    std::getline(ss, cell, ',');
    curve.count.push_back(std::stoi(cell));
  }
  return curve;
}

}  // namespace gve::eval
