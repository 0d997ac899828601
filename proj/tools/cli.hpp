#pragma once

#include <cstddef>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "topoattn/attention.hpp"

namespace topoattn::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,  // bad flags, validation failures and unparseable input files
  kIo = 2,
  kInternal = 3,
};

enum class OutputFormat { kTensor, kPgm };

/// `.pgm` selects PGM, anything else TNSR.
OutputFormat format_for(const std::filesystem::path& path);

/// Serialized attention map: TNSR float32 (height, width) or 8-bit P5.
std::string encode_attention(const AttentionMap& map, OutputFormat format);

struct BatchOptions {
  std::filesystem::path input_dir;
  std::filesystem::path output_dir;
  std::size_t jobs = 1;
  OutputFormat format = OutputFormat::kTensor;
  AttnConfig config;
};

struct BatchReport {
  std::size_t images = 0;
  double mean_ms = 0.0;   // mean per-image wall time (load, compute, write)
  double total_ms = 0.0;  // wall time of the whole batch
};

/// Processes every `*.pgm` in `input_dir` (sorted by name) and writes
/// `<stem>.tnsr` or `<stem>.pgm` into `output_dir`.
BatchReport run_batch(const BatchOptions& options);

/// Entry point; `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace topoattn::cli
