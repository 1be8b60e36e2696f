#pragma once

#include "rcgs/driver_systems.hpp"
#include "rcgs/lyapunov.hpp"
#include "rcgs/reservoir.hpp"
#include "rcgs/training.hpp"

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace rcgs::io {

namespace fs = std::filesystem;

inline constexpr int kFormatVersion = 1;

void write_f64_le(const fs::path& path, std::span<const double> values);
std::vector<double> read_f64_le(const fs::path& path);
void write_i64_le(std::ostream& out, std::span<const std::int64_t> values);

/// Header `t,u0,u1,...`; values printed with round-trip precision.
void write_trajectory_csv(const fs::path& path, const Trajectory& traj);
Trajectory read_trajectory_csv(const fs::path& path);

/// Directory with meta.json and states.bin (row-major float64, little-endian).
void write_trajectory_bundle(const fs::path& dir, const Trajectory& traj);
Trajectory read_trajectory_bundle(const fs::path& dir);

/// Directory with meta.json, adjacency.bin and input_matrix.bin.
void write_reservoir_bundle(const fs::path& dir, const Reservoir& res);
Reservoir read_reservoir_bundle(const fs::path& dir);

/// readout.json and wout.bin inside `dir`.
void write_readout(const fs::path& dir, const Readout& readout);
Readout read_readout(const fs::path& dir);

std::string spectrum_to_json(const LyapunovSpectrum& spec, int indent = 2);
/// Reads `exponents` and the scalar fields; the convergence history is optional.
LyapunovSpectrum spectrum_from_json(const std::string& text);

std::string standardization_to_json(const Standardization& s, int indent = 2);
Standardization standardization_from_json(const std::string& text);

/// Missing files raise ErrorKind::kPrerequisite, unreadable or malformed ones ErrorKind::kIo.
void write_text(const fs::path& path, const std::string& text);
std::string read_text(const fs::path& path);

/// Hex SHA-256 of a file's bytes.
std::string sha256_file(const fs::path& path);

}  // namespace rcgs::io
