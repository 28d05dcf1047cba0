#pragma once

#include "mmflow/flow.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace mmflow {

/// Text serialization of label fields:
///   MMLF <dim> <shape...> <h> <N>
/// followed by the labels in row-major order, one line per run of the last
/// axis.  Scalar fields use the MMSF tag and no N.  Numbers use the shortest
/// decimal form that round-trips, so every field re-reads to identical bits.
std::string format_label_field(const LabelField& f);
std::string format_scalar_field(const ScalarField& f);
LabelField parse_label_field(std::istream& in);
ScalarField parse_scalar_field(std::istream& in);

LabelField read_label_field(const std::filesystem::path& path);
ScalarField read_scalar_field(const std::filesystem::path& path);
void write_label_field(const std::filesystem::path& path, const LabelField& f);
void write_scalar_field(const std::filesystem::path& path, const ScalarField& f);

/// Writes to a sibling temporary file, then renames it over `path`.
void write_atomic(const std::filesystem::path& path, const std::string& content);
std::string read_text(const std::filesystem::path& path);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(const std::string& bytes);
std::string hex64(std::uint64_t v);

/// Shortest round-tripping decimal form.
std::string format_double(double v);
/// Directory and file stems: "1024", "t0.045".
std::string lambda_name(double lambda);
std::string time_name(double t);

/// "# config <hex hash>" line that opens every CSV written for a run.
std::string hash_line(std::uint64_t config_hash);

/// k, per_phi, force, dissipation, gap, accepted, repaired
std::string series_csv(const FlowTrace& trace, std::optional<std::uint64_t> config_hash = {});
/// k, total, sym_diff, displacement, iterations, converged, repair_limit
std::string steps_csv(const FlowTrace& trace, std::optional<std::uint64_t> config_hash = {});

/// "k<step>.mmlf"
std::string step_name(Index k);

/// Writes <dir>/t<time>.mmlf per checkpoint, series.csv and steps.csv; frames
/// kept between checkpoints (every_step runs) go to <dir>/frames/k<step>.mmlf.
void write_trace(const std::filesystem::path& dir, const FlowTrace& trace,
                 std::optional<std::uint64_t> config_hash = {});

/// Reads back a trace directory: checkpoint and step frames merged by step,
/// frame times k / lambda with lambda taken from the directory name or its
/// parent's (1 when neither is a number); series rows are re-read from series.csv.
FlowTrace read_trace(const std::filesystem::path& dir);

}  // namespace mmflow
