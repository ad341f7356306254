#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "orc/dynamics.hpp"
#include "orc/geometry.hpp"
#include "orc/reservoir.hpp"

// File formats. Everything on disk is CSV or JSON; doubles are written with
// 17 significant digits so export -> ingest round-trips bit-exactly.

namespace orc {

// 16 lowercase hex digits, zero padded. Hashes and seeds cross JSON as hex
// strings because 64-bit integers do not survive JSON number parsing.
std::string hex64(std::uint64_t v);
std::uint64_t parse_hex64(const std::string& text);

// Shortest text that parses back to exactly the same double.
std::string format_double(double v);

// FNV over the raw file bytes; manifests store this to detect tampering.
std::uint64_t file_hash(const std::filesystem::path& path);

// Trajectory CSV: header `t,node_00,node_01,...` (row-major node naming,
// grid_cols names per row), one row per sample, times in s, displacements
// in mm. The sidecar JSON carries sample rate, model hash, payload,
// excitation segments, and seed.
void write_trajectory(const std::filesystem::path& csv_path,
                      const std::filesystem::path& meta_path,
                      const Trajectory& traj, int grid_cols = 7);

// Parses and validates a trajectory CSV + metadata pair. This is the
// ingestion contract for externally measured displacement data as well as
// the reload path for simulated runs; downstream code cannot tell them
// apart. Throws FormatError (with 1-based line/column) on any structural
// defect, and RateMismatch when expected_rate_hz is given and the metadata
// declares a different sample rate.
Trajectory ingest_external(const std::filesystem::path& csv_path,
                           const std::filesystem::path& meta_path,
                           std::optional<double> expected_rate_hz = {});

// Contiguous frame range of a trajectory as a reservoir state matrix, all
// channels, origin recorded. Together with the CSV round-trip this lets a
// state matrix be rebuilt from files alone.
StateMatrix state_matrix_slice(const Trajectory& traj, int first_frame,
                               int frame_count);

// {nodes: [[x,y,z]...] in mm, bars: [[i,j]...],
//  hinges: [[i,j,k,l,rest_angle_deg]...], clamped: [i...]}
std::string mesh_json(const FoldedMesh& mesh, const std::vector<int>& clamped);

// {tasks: [name...], bias: [...], weights: [[...]...], channel_map: [...],
//  lambda} with one weight row per task.
std::string readout_json(const ReadoutWeights& readout);
ReadoutWeights readout_from_json(const std::string& text);
void save_readout(const std::filesystem::path& path,
                  const ReadoutWeights& readout);
ReadoutWeights load_readout(const std::filesystem::path& path);

}  // namespace orc
