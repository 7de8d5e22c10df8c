#pragma once
// On-disk form of a trajectory: CSV probes and scri trace, binary snapshot and
// near-scri records ("TAILSLAB1" container), plus a key=value meta file.

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "tailslab/evolution.hpp"

namespace tailslab {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Binary container: magic "TAILSLAB1", u32 header length, header text
// (key=value lines), then records of f64 t followed by `record_width` f64.
struct SlabFile {
  std::map<std::string, std::string> header;
  int record_width = 0;
  std::vector<double> times;
  std::vector<std::vector<double>> records;
};
void write_slab(const std::filesystem::path& path, const SlabFile& f);
SlabFile read_slab(const std::filesystem::path& path);

// Files written into `dir`; returns their names.
std::vector<std::string> write_trajectory(const Trajectory& traj,
                                          const std::filesystem::path& dir);
// Reads a trajectory back; `spec` must be the problem it was produced from
// (its hash is checked against the stored one).
Trajectory read_trajectory(const std::filesystem::path& dir, const ProblemSpec& spec);

// Formatting helper used by all CSV writers.
std::string fmt_double(double v);

}  // namespace tailslab
