#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "rdhaz/kernel.hpp"

namespace rdhaz {

struct SurvivalRecord {
  double time = 0.0;    // observed time T_i, truncated at the horizon
  bool event = false;   // delta_i
  double forcing = 0.0; // Z_i
};

// Right-censored RDD survival sample on the observation window [0, horizon].
// The treatment indicator is derived: X_i = 1{Z_i >= cutoff}.
class SurvivalDataset {
 public:
  SurvivalDataset(std::vector<SurvivalRecord> records, double cutoff, double horizon);

  const std::vector<SurvivalRecord>& records() const { return records_; }
  double cutoff() const { return cutoff_; }
  double horizon() const { return horizon_; }
  std::size_t size() const { return records_.size(); }

  int side(std::size_t i) const { return records_[i].forcing >= cutoff_ ? 1 : 0; }

 private:
  std::vector<SurvivalRecord> records_;
  double cutoff_;
  double horizon_;
};

// Distinct ordered event times with the indices of records that have an
// observed event there, partitioned by treatment side.
struct EventSchedule {
  std::vector<double> times;
  std::vector<std::vector<int>> treated;  // per time, side g = 1
  std::vector<std::vector<int>> control;  // per time, side g = 0

  std::size_t total_events() const;
};

EventSchedule event_schedule(const SurvivalDataset& ds);

// Kernel-weighted at-risk count: sum_i 1{X_i = g} K_h(Z_i - z0) 1{T_i >= t}.
double at_risk_count(const SurvivalDataset& ds, double t, int side, double h,
                     const KernelSpec& kernel);

// CSV with header time,event,forcing; event in {0,1}. Rows with missing or
// non-numeric fields are rejected with their row number.
SurvivalDataset read_csv(const std::string& path, double cutoff, double horizon);
SurvivalDataset read_csv_stream(std::istream& in, double cutoff, double horizon,
                                const std::string& label);
void write_csv(const SurvivalDataset& ds, std::ostream& out);
void write_csv_file(const SurvivalDataset& ds, const std::string& path);

std::string schedule_to_json(const EventSchedule& schedule);

}  // namespace rdhaz
