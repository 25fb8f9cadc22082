#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "chaos_spde/chaos.hpp"
#include "chaos_spde/wick.hpp"

namespace chaos_spde {

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view text);
std::string hex64(std::uint64_t value);

/// Shortest decimal text that reads back to the same double.
std::string format_double(double value);

/// Flat "key = value" text; '#' starts a comment. Throws ConfigError on malformed lines
/// and duplicate keys.
std::map<std::string, std::string> parse_key_values(const std::string& text);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& content);

void save_model(const std::filesystem::path& path, const ChaosModel& model);
ChaosModel load_model(const std::filesystem::path& path);
std::string model_to_string(const ChaosModel& model);
ChaosModel model_from_string(const std::string& text);

/// Panel descriptor: seed, I, J and scenario count only; draws are regenerated on load.
void save_panel(const std::filesystem::path& path, const GaussianPanel& panel);
GaussianPanel load_panel(const std::filesystem::path& path);

/// Grid (times, points, weights, splits) as JSON; the panel is stored separately.
void save_grid(const std::filesystem::path& path, const TrainingGrid& grid);
TrainingGrid load_grid(const std::filesystem::path& path, GaussianPanel panel, double horizon);

/// Targets as raw little-endian doubles (values then standard errors, column-major) next to a
/// JSON descriptor `<stem>.json` describing the shape.
void save_targets(const std::filesystem::path& stem, const SupervisedTargets& targets, const std::string& config_hash);
SupervisedTargets load_targets(const std::filesystem::path& stem);

/// CSV table with a mandatory header and a leading config_hash column.
class CsvTable {
public:
    CsvTable(std::vector<std::string> header, std::string config_hash);

    void add_row(std::vector<std::string> cells);
    std::size_t rows() const { return rows_.size(); }
    std::string str() const;
    void save(const std::filesystem::path& path) const;

private:
    std::vector<std::string> header_;
    std::string hash_;
    std::vector<std::vector<std::string>> rows_;
};

}  // namespace chaos_spde
