#pragma once
// Structured pass/fail result shared by every numerical check. A report
// always carries the worst margin and where it occurred, so a failure can
// be reproduced directly from its JSON form.

#include <json.hpp>

#include <string>
#include <vector>

namespace hjb {

struct CheckReport {
  std::string test;                  // machine-readable check name
  bool pass = false;
  // Signed slack of the worst-satisfied inequality; negative means violated.
  double worst_margin = 0.0;
  std::vector<double> point;         // (t, x...) of the worst location
  std::vector<double> candidate;     // candidate under test, when applicable
  std::vector<double> witness;       // violating direction/probe, when failing
  std::string stability;             // plateau flag: "stable", "unstable", ""
  std::string note;

  std::string verdict() const { return pass ? "PASS" : "FAIL"; }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["test"] = test;
    j["point"] = point;
    j["candidate"] = candidate;
    j["verdict"] = verdict();
    j["worst_margin"] = worst_margin;
    j["witness"] = witness;
    j["stability"] = stability;
    if (!note.empty()) j["note"] = note;
    return j;
  }
};

}  // namespace hjb
