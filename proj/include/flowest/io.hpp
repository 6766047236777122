#pragma once

#include "flowest/core.hpp"
#include "flowest/trajectory.hpp"

#include <optional>

namespace flowest {

enum class FileFormat { TextTable, RawBinary };

FileFormat format_from_name(const std::string& name);
std::string format_name(FileFormat f);

/// Snapshot file layout (both variants share the logical order):
///   header {n_axes, dims..., n_components, n_snapshots, has_reference},
///   per-axis coordinate arrays, times, then fields (reference first when
///   has_reference is set). Each field is stored component-major with axis 0
///   fastest. Text variant is whitespace-delimited with '#' comments; binary
///   variant is a magic tag, int64 header words and little-endian doubles.
void save_snapshots(const SnapshotSet& set, const std::string& path, FileFormat format,
                    bool with_reference = true,
                    const std::vector<std::string>& header_comments = {});
SnapshotSet load_snapshots(const std::string& path, FileFormat format);
SnapshotSet load_snapshots(const std::string& path);  // format sniffed from the magic tag

struct RomRecord {
    int n_modes = 0;
    VectorXd constant;          // A_r
    MatrixXd linear;            // C(k,r)
    std::vector<double> quad;   // B(k,s,r), k-major then s then r
};

void save_rom_record(const RomRecord& rec, const std::string& path, FileFormat format,
                     const std::vector<std::string>& header_comments = {});
RomRecord load_rom_record(const std::string& path);

/// Text-table with a first column of times; used for trajectories,
/// measurement records and ground-truth sidecars.
void save_time_table(const VectorXd& times, const MatrixXd& values, const std::string& path,
                     const std::vector<std::string>& header_comments = {});
std::pair<VectorXd, MatrixXd> load_time_table(const std::string& path);

void write_text_file(const std::string& path, const std::string& contents);

/// FNV-1a 64-bit hash of a file's bytes, for provenance headers.
std::string file_hash_hex(const std::string& path);

}  // namespace flowest
