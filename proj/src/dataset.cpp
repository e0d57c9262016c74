#include "rdhaz/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "rdhaz/errors.hpp"

#include <json.hpp>

namespace rdhaz {

SurvivalDataset::SurvivalDataset(std::vector<SurvivalRecord> records, double cutoff,
                                 double horizon)
    : records_(std::move(records)), cutoff_(cutoff), horizon_(horizon) {
  if (!(horizon_ > 0.0)) throw ValidationError("horizon must be positive");
  if (!std::isfinite(cutoff_)) throw ValidationError("cutoff must be finite");
  for (std::size_t i = 0; i < records_.size(); ++i) {
    SurvivalRecord& r = records_[i];
    if (!std::isfinite(r.forcing))
      throw ValidationError("record " + std::to_string(i + 1) + ": forcing is not finite");
    if (std::isnan(r.time) || r.time < 0.0)
      throw ValidationError("record " + std::to_string(i + 1) + ": negative or missing time");
    if (r.time > horizon_) {  // outside the observation window
      r.time = horizon_;
      r.event = false;
    }
  }
}

std::size_t EventSchedule::total_events() const {
  std::size_t n = 0;
  for (const auto& v : treated) n += v.size();
  for (const auto& v : control) n += v.size();
  return n;
}

EventSchedule event_schedule(const SurvivalDataset& ds) {
  std::map<double, std::pair<std::vector<int>, std::vector<int>>> groups;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const SurvivalRecord& r = ds.records()[i];
    if (!r.event) continue;
    auto& g = groups[r.time];
    if (ds.side(i) == 1)
      g.first.push_back(static_cast<int>(i));
    else
      g.second.push_back(static_cast<int>(i));
  }
  EventSchedule s;
  s.times.reserve(groups.size());
  for (auto& [t, g] : groups) {
    s.times.push_back(t);
    s.treated.push_back(std::move(g.first));
    s.control.push_back(std::move(g.second));
  }
  return s;
}

double at_risk_count(const SurvivalDataset& ds, double t, int side, double h,
                     const KernelSpec& kernel) {
  if (t < 0.0 || t > ds.horizon()) throw ValidationError("at_risk_count: t outside [0, horizon]");
  double sum = 0.0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const SurvivalRecord& r = ds.records()[i];
    if (ds.side(i) != side || r.time < t) continue;
    sum += kernel.scaled(r.forcing - ds.cutoff(), h);
  }
  return sum;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  return out;
}

double parse_double(const std::string& s, std::size_t row, const char* col) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    if (pos != s.size()) throw std::invalid_argument("trailing");
    if (std::isnan(v)) throw std::invalid_argument("nan");
    return v;
  } catch (const std::exception&) {
    throw ValidationError("row " + std::to_string(row) + ": cannot parse " + col + " value '" +
                          s + "'");
  }
}

}  // namespace

SurvivalDataset read_csv_stream(std::istream& in, double cutoff, double horizon,
                                const std::string& label) {
  std::string line;
  std::size_t row = 0;
  // Header row is required, comment lines starting with '#' are skipped.
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line[0] == '#') continue;
    break;
  }
  if (line.empty() && row == 0) throw ValidationError(label + ": empty file");
  auto header = split_line(line);
  for (auto& hfield : header) {
    hfield.erase(std::remove_if(hfield.begin(), hfield.end(),
                                [](unsigned char c) { return std::isspace(c); }),
                 hfield.end());
  }
  int time_col = -1, event_col = -1, forcing_col = -1;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (header[j] == "time") time_col = static_cast<int>(j);
    if (header[j] == "event") event_col = static_cast<int>(j);
    if (header[j] == "forcing") forcing_col = static_cast<int>(j);
  }
  if (time_col < 0 || event_col < 0 || forcing_col < 0)
    throw ValidationError(label + ": header must contain columns time,event,forcing");

  std::vector<SurvivalRecord> records;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line[0] == '#') continue;
    const auto fields = split_line(line);
    const std::size_t needed =
        static_cast<std::size_t>(std::max({time_col, event_col, forcing_col})) + 1;
    if (fields.size() < needed)
      throw ValidationError("row " + std::to_string(row) + ": expected at least " +
                            std::to_string(needed) + " fields");
    SurvivalRecord r;
    r.time = parse_double(fields[time_col], row, "time");
    const double ev = parse_double(fields[event_col], row, "event");
    if (ev != 0.0 && ev != 1.0)
      throw ValidationError("row " + std::to_string(row) + ": event must be 0 or 1");
    r.event = ev == 1.0;
    r.forcing = parse_double(fields[forcing_col], row, "forcing");
    if (r.time < 0.0)
      throw ValidationError("row " + std::to_string(row) + ": negative time");
    records.push_back(r);
  }
  return SurvivalDataset(std::move(records), cutoff, horizon);
}

SurvivalDataset read_csv(const std::string& path, double cutoff, double horizon) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open input file '" + path + "'");
  return read_csv_stream(in, cutoff, horizon, path);
}

void write_csv(const SurvivalDataset& ds, std::ostream& out) {
  out << "time,event,forcing\n";
  char buf[128];
  for (const SurvivalRecord& r : ds.records()) {
    std::snprintf(buf, sizeof(buf), "%.12g,%d,%.12g\n", r.time, r.event ? 1 : 0, r.forcing);
    out << buf;
  }
}

void write_csv_file(const SurvivalDataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open output file '" + path + "'");
  write_csv(ds, out);
}

std::string schedule_to_json(const EventSchedule& schedule) {
  nlohmann::json j;
  j["times"] = schedule.times;
  j["treated"] = schedule.treated;
  j["control"] = schedule.control;
  return j.dump(2);
}

}  // namespace rdhaz
