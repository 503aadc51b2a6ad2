#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "coach/behavior_model.hpp"
#include "coach/trajectory.hpp"

namespace coach {

inline constexpr int kDatasetFormatVersion = 1;
inline constexpr int kModelFormatVersion = 1;

/// Shortest text form that parses back to the same double.
std::string format_double(double value);
double parse_double(std::string_view text);

/// Line-delimited dataset: a header line, then one trajectory per line with
/// tab-separated fields `seed`, `states`, `actions`, `latents`. Lists are
/// comma-separated; latents hold one list per agent joined by ';' or '-' when
/// the trajectory is unlabeled.
void write_dataset(std::ostream& out, const LabeledDataset& dataset);
LabeledDataset read_dataset(std::istream& in);
void save_dataset(const std::filesystem::path& path, const LabeledDataset& dataset);
LabeledDataset load_dataset(const std::filesystem::path& path);

/// Versioned text format for a team of behavior models. Table rows equal to
/// the uniform row are omitted and restored on load.
void write_models(std::ostream& out, std::span<const AgentBehaviorModel> models);
std::vector<AgentBehaviorModel> read_models(std::istream& in);
void save_models(const std::filesystem::path& path, std::span<const AgentBehaviorModel> models);
std::vector<AgentBehaviorModel> load_models(const std::filesystem::path& path);

/// Hex SHA-256 digests used for content addressing.
std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

/// Writes via a temporary file and rename so readers never see partial output.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);
std::string read_file(const std::filesystem::path& path);

}  // namespace coach
